#include "schoenbat/harness/records.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "schoenbat/error.hpp"

namespace schoenbat::harness {

namespace {

bool same_double(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::size_t parse_size(std::string_view s, std::size_t line) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw IoError("csv line " + std::to_string(line) + ": bad integer '" + std::string(s) + "'");
  return v;
}

double parse_double(std::string_view s, std::size_t line) {
  if (s == "nan" || s == "-nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw IoError("csv line " + std::to_string(line) + ": bad number '" + std::string(s) + "'");
  return v;
}

}  // namespace

bool same_record(const ResultRecord& a, const ResultRecord& b) {
  return a.experiment == b.experiment && a.kernel == b.kernel && a.n == b.n && a.d == b.d &&
         a.features == b.features && a.trial == b.trial && a.metric == b.metric &&
         same_double(a.value, b.value) && same_double(a.wall_time_s, b.wall_time_s) &&
         a.degeneracies == b.degeneracies;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

void write_csv(std::ostream& out, const std::vector<ResultRecord>& records,
               const std::vector<std::string>& metadata) {
  for (const auto& m : metadata) out << "# " << m << '\n';
  out << kCsvHeader << '\n';
  for (const auto& r : records) {
    out << r.experiment << ',' << r.kernel << ',' << r.n << ',' << r.d << ',' << r.features << ','
        << r.trial << ',' << r.metric << ',' << format_double(r.value) << ','
        << format_double(r.wall_time_s) << ',' << r.degeneracies << '\n';
  }
}

void emit_csv(const std::vector<ResultRecord>& records, const std::filesystem::path& path,
              const std::vector<std::string>& metadata) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_csv(out, records, metadata);
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<ResultRecord> read_csv(std::istream& in) {
  std::vector<ResultRecord> records;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    if (!header) {
      if (line != kCsvHeader) throw IoError("csv line " + std::to_string(line_no) + ": bad header");
      header = true;
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != 10) throw IoError("csv line " + std::to_string(line_no) + ": expected 10 fields");
    ResultRecord r;
    r.experiment = f[0];
    r.kernel = f[1];
    r.n = parse_size(f[2], line_no);
    r.d = parse_size(f[3], line_no);
    r.features = parse_size(f[4], line_no);
    r.trial = parse_size(f[5], line_no);
    r.metric = f[6];
    r.value = parse_double(f[7], line_no);
    r.wall_time_s = parse_double(f[8], line_no);
    r.degeneracies = parse_size(f[9], line_no);
    records.push_back(std::move(r));
  }
  if (!header) throw IoError("csv: missing header");
  return records;
}

std::vector<ResultRecord> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_csv(in);
}

void write_json(std::ostream& out, const std::vector<ResultRecord>& records,
                const std::vector<std::string>& metadata) {
  // Non-finite numbers become null.
  auto num = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(); };
  nlohmann::json doc;
  doc["metadata"] = metadata;
  doc["records"] = nlohmann::json::array();
  for (const auto& r : records) {
    doc["records"].push_back({{"experiment", r.experiment},
                              {"kernel", r.kernel},
                              {"n", r.n},
                              {"d", r.d},
                              {"D", r.features},
                              {"trial", r.trial},
                              {"metric", r.metric},
                              {"value", num(r.value)},
                              {"wall_time_s", num(r.wall_time_s)},
                              {"degeneracies", r.degeneracies}});
  }
  out << doc.dump(2) << '\n';
}

std::string without_wall_time(std::string_view csv) {
  std::ostringstream out;
  bool header_seen = false;
  for (std::string_view line : split(csv, '\n')) {
    if (line.empty() || line.front() == '#' || !header_seen) {
      header_seen = header_seen || (!line.empty() && line.front() != '#');
      out << line << '\n';
      continue;
    }
    auto f = split(line, ',');
    if (f.size() == 10) f[8] = "";
    for (std::size_t i = 0; i < f.size(); ++i) out << (i ? "," : "") << f[i];
    out << '\n';
  }
  return out.str();
}

}  // namespace schoenbat::harness
