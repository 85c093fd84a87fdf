#include "levylse/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <vector>

#include <unistd.h>

#include "levylse/errors.hpp"

namespace levylse {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    const auto a = field.find_first_not_of(" \t\r");
    const auto b = field.find_last_not_of(" \t\r");
    out.push_back(a == std::string::npos ? std::string() : field.substr(a, b - a + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, const std::string& where) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v)) {
    throw ValidationError(where + ": expected a finite number, got '" + s + "'");
  }
  return v;
}

}  // namespace

void write_observations_csv(std::ostream& out, const ObservationSet& obs) {
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::setprecision(17);
  out << "k,t";
  for (std::size_t i = 0; i < obs.dim(); ++i) out << ",x_" << (i + 1);
  out << '\n';
  for (std::size_t k = 0; k <= obs.n(); ++k) {
    out << k << ',' << obs.times[k];
    for (const double v : obs.at(k)) out << ',' << v;
    out << '\n';
  }
  out.flags(flags);
  out.precision(precision);
}

ObservationSet read_observations_csv(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ValidationError(source + ": empty file");
  ++line_no;
  const auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "k" || header[1] != "t") {
    throw ValidationError(source + ":1: header must be 'k,t,x_1,...,x_d'");
  }
  const std::size_t d = header.size() - 2;
  for (std::size_t i = 0; i < d; ++i) {
    if (header[i + 2] != "x_" + std::to_string(i + 1)) {
      throw ValidationError(source + ":1: column " + std::to_string(i + 3) + " must be named x_" +
                            std::to_string(i + 1));
    }
  }

  std::vector<double> times;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    const auto fields = split_csv_line(line);
    if (fields.size() != d + 2) {
      throw ValidationError(where + ": expected " + std::to_string(d + 2) + " columns, got " +
                            std::to_string(fields.size()));
    }
    const double k = parse_number(fields[0], where);
    if (k != static_cast<double>(times.size())) {
      throw ValidationError(where + ": row index must be " + std::to_string(times.size()));
    }
    times.push_back(parse_number(fields[1], where));
    for (std::size_t i = 0; i < d; ++i) values.push_back(parse_number(fields[i + 2], where));
  }
  if (in.bad()) throw IoError(source + ": read error");
  if (times.size() < 2) throw ValidationError(source + ": need at least two observation rows");

  const std::size_t n = times.size() - 1;
  for (std::size_t k = 0; k <= n; ++k) {
    const double expected = static_cast<double>(k) / static_cast<double>(n);
    if (std::abs(times[k] - expected) > 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, expected)) {
      throw ValidationError(source + ": observation times are not the uniform grid k/n (row " +
                            std::to_string(k) + " has t = " + std::to_string(times[k]) + ")");
    }
  }
  RowMatrix m = Eigen::Map<const RowMatrix>(values.data(), static_cast<Eigen::Index>(n + 1),
                                            static_cast<Eigen::Index>(d));
  return ObservationSet::from_values(std::move(m));
}

ObservationSet read_observations_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read observations file '" + path.string() + "'");
  return read_observations_csv(in, path.string());
}

void write_file_atomic(const std::filesystem::path& path, const std::function<void(std::ostream&)>& writer) {
  const auto dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
  const auto tmp = dir / ("." + path.filename().string() + ".tmp" + std::to_string(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    writer(out);
    out.flush();
    if (!out) {
      std::filesystem::remove(tmp, ec);
      throw IoError("write to '" + tmp.string() + "' failed");
    }
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignore;
    std::filesystem::remove(tmp, ignore);
    throw IoError("cannot move '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
  }
}

}  // namespace levylse
