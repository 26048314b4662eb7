#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace schoenbat::harness {

// One CSV row. `value` holds the deterministic quantity of a row; anything
// derived from a clock goes in `wall_time_s`.
struct ResultRecord {
  std::string experiment;
  std::string kernel;
  std::size_t n = 0;
  std::size_t d = 0;
  std::size_t features = 0;  // D
  std::size_t trial = 0;
  std::string metric;
  double value = 0.0;
  double wall_time_s = 0.0;
  std::size_t degeneracies = 0;
};

inline constexpr std::string_view kCsvHeader =
    "experiment,kernel,n,d,D,trial,metric,value,wall_time_s,degeneracies";

// Field-wise equality with NaN == NaN.
bool same_record(const ResultRecord& a, const ResultRecord& b);

// Shortest round-trip decimal form ("nan", "inf" for non-finite values).
std::string format_double(double x);

// `metadata` lines are written first, each prefixed with "# ".
void write_csv(std::ostream& out, const std::vector<ResultRecord>& records,
               const std::vector<std::string>& metadata = {});
void emit_csv(const std::vector<ResultRecord>& records, const std::filesystem::path& path,
              const std::vector<std::string>& metadata = {});

// Skips '#' lines; throws IoError on a bad header or row.
std::vector<ResultRecord> read_csv(std::istream& in);
std::vector<ResultRecord> read_csv(const std::filesystem::path& path);

void write_json(std::ostream& out, const std::vector<ResultRecord>& records,
                const std::vector<std::string>& metadata = {});

// CSV text with the wall_time_s field blanked on every data row, for
// determinism comparisons.
std::string without_wall_time(std::string_view csv);

}  // namespace schoenbat::harness
