#pragma once

#include <filesystem>
#include <functional>
#include <istream>
#include <ostream>
#include <string>

#include "levylse/sde_sim.hpp"

namespace levylse {

/// Header "k,t,x_1..x_d"; numbers with 17 significant digits.
void write_observations_csv(std::ostream& out, const ObservationSet& obs);

/// Parses the format above. Rows must be numbered 0..n and t_k must equal
/// k / n to within a few ulps. The result is marked as external data.
ObservationSet read_observations_csv(std::istream& in, const std::string& source = "<csv>");
ObservationSet read_observations_csv(const std::filesystem::path& path);

/// Writes through a temporary file in the same directory, then renames it
/// over `path`. Throws IoError.
void write_file_atomic(const std::filesystem::path& path, const std::function<void(std::ostream&)>& writer);

}  // namespace levylse
