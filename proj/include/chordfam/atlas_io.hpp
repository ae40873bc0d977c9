#pragma once

#include <string>
#include <vector>

#include "chordfam/chord.hpp"
#include "chordfam/continuation.hpp"
#include "chordfam/gradient_flow.hpp"

namespace chordfam {

/// Plain-text atlas, one `row`/`event` line per entry, numbers printed with
/// 17 significant digits so read_atlas(write_atlas(a)) reproduces the rows
/// bit for bit.
void write_atlas(const std::string& path, const FamilyAtlas& atlas);
FamilyAtlas read_atlas(const std::string& path);

/// CSV with header mu,start_coordinate,tau,action,sigma_min; the start
/// coordinate is the first component of u.
void write_family_csv(const std::string& path, const FamilyAtlas& atlas);

/// gnuplot script that rebuilds the family figures from the CSV files alone
/// (paths are taken relative to the script's directory).
void write_gnuplot_script(const std::string& path, const std::vector<std::string>& csv_files);

void write_chord_json(const std::string& path, const std::string& system_id, const Chord& chord,
                      bool with_samples = true);

/// Reads a chord record; throws InvalidArgument when the file belongs to a
/// different system.  Samples are optional in the file.
Chord read_chord_json(const std::string& path, const std::string& expect_system_id);

void write_stretch_csv(const std::string& path, const StretchReport& report);

void write_descent_csv(const std::string& path, const DescentRun& run);

}  // namespace chordfam
