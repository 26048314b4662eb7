#include "schoenbat/rmf.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include <json.hpp>

#include "schoenbat/error.hpp"

namespace schoenbat {

void RmfParams::validate() const {
  if (features == 0) throw InvalidArgument("feature count D must be >= 1");
  if (input_dim == 0) throw InvalidArgument("input dimension d must be >= 1");
  if (!(base > 1.0) || !std::isfinite(base)) throw InvalidArgument("sampling base p must be > 1");
}

double degree_probability(double base, std::size_t n) {
  return (1.0 - 1.0 / base) * std::pow(base, -static_cast<double>(n));
}

RmfFeatureMap::RmfFeatureMap(RmfParams params, std::vector<std::size_t> degrees, Matrix omegas,
                             std::size_t resampled_degrees)
    : params_(params),
      degrees_(std::move(degrees)),
      omegas_(std::move(omegas)),
      resampled_(resampled_degrees) {
  params_.validate();
  if (degrees_.size() != params_.features) {
    throw ShapeError("feature map: expected " + std::to_string(params_.features) +
                     " degrees, got " + std::to_string(degrees_.size()));
  }
  offsets_.resize(degrees_.size() + 1, 0);
  for (std::size_t t = 0; t < degrees_.size(); ++t) {
    if (degrees_[t] > kMaxDegree) throw InvalidArgument("feature degree exceeds cap");
    offsets_[t + 1] = offsets_[t] + degrees_[t];
  }
  if (omegas_.rows() != offsets_.back() || (omegas_.rows() > 0 && omegas_.cols() != params_.input_dim)) {
    throw ShapeError("feature map: Rademacher block has the wrong shape");
  }
  for (double s : omegas_.values())
    if (s != 1.0 && s != -1.0) throw InvalidArgument("feature map: Rademacher entries must be +-1");

  const MaclaurinKernel& k = kernel(params_.kernel);
  scale_.resize(degrees_.size());
  for (std::size_t t = 0; t < degrees_.size(); ++t) {
    const double weight = 1.0 / degree_probability(params_.base, degrees_[t]);
    scale_[t] = std::sqrt(k.coefficient(degrees_[t]) * weight);
    if (!std::isfinite(scale_[t])) throw NumericalError("feature map: scale coefficient overflow");
  }
}

double RmfFeatureMap::mean_degree() const {
  return static_cast<double>(offsets_.back()) / static_cast<double>(degrees_.size());
}

RmfFeatureMap sample_feature_map(const RmfParams& params, RngStream& rng) {
  params.validate();
  const double success = 1.0 - 1.0 / params.base;
  std::vector<std::size_t> degrees(params.features);
  std::size_t resampled = 0;
  std::size_t total = 0;
  for (std::size_t& n : degrees) {
    n = rng.geometric(success);
    while (n > kMaxDegree) {
      ++resampled;
      n = rng.geometric(success);
    }
    total += n;
  }
  Matrix omegas(total, params.input_dim);
  for (std::size_t r = 0; r < total; ++r) {
    const auto signs = sample_rademacher(rng, params.input_dim);
    std::copy(signs.begin(), signs.end(), omegas.row(r).begin());
  }
  return RmfFeatureMap(params, std::move(degrees), std::move(omegas), resampled);
}

RmfFeatureMap sample_feature_map(const RmfParams& params) {
  RngStream rng(params.seed);
  return sample_feature_map(params, rng);
}

namespace {

void map_row(const RmfFeatureMap& map, std::span<const double> x, std::span<double> proj,
             std::span<double> out) {
  const Matrix& w = map.omegas();
  for (std::size_t r = 0; r < w.rows(); ++r) proj[r] = dot(w.row(r), x);
  const double norm = 1.0 / std::sqrt(static_cast<double>(map.features()));
  const auto scale = map.scale_coeffs();
  for (std::size_t t = 0; t < map.features(); ++t) {
    double prod = scale[t] * norm;
    const std::size_t begin = map.offset(t);
    const std::size_t end = begin + map.degree(t);
    for (std::size_t r = begin; r < end; ++r) prod *= proj[r];
    out[t] = prod;
  }
}

}  // namespace

Matrix apply_feature_map(const RmfFeatureMap& map, const Matrix& x) {
  if (x.cols() != map.input_dim()) {
    throw ShapeError("apply_feature_map: input has " + std::to_string(x.cols()) +
                     " columns, map expects " + std::to_string(map.input_dim()));
  }
  Matrix out(x.rows(), map.features());
  std::vector<double> proj(map.total_omegas());
  for (std::size_t i = 0; i < x.rows(); ++i) map_row(map, x.row(i), proj, out.row(i));
  return out;
}

std::vector<double> apply_feature_map(const RmfFeatureMap& map, std::span<const double> x) {
  if (x.size() != map.input_dim()) throw ShapeError("apply_feature_map: dimension mismatch");
  std::vector<double> out(map.features());
  std::vector<double> proj(map.total_omegas());
  map_row(map, x, proj, out);
  return out;
}

double kernel_estimate(const RmfFeatureMap& map, std::span<const double> x,
                       std::span<const double> y, std::size_t* outside_unit_ball) {
  if (x.size() != map.input_dim() || y.size() != map.input_dim())
    throw ShapeError("kernel_estimate: dimension mismatch");
  if (outside_unit_ball && domain_radius(map.params().kernel) &&
      (l2_norm(x) > 1.0 || l2_norm(y) > 1.0)) {
    ++*outside_unit_ball;
  }
  const auto fx = apply_feature_map(map, x);
  const auto fy = apply_feature_map(map, y);
  return dot(fx, fy);
}

namespace {

constexpr std::string_view kFormat = "schoenbat-rmf";
constexpr int kVersion = 1;

std::string pack_signs(const Matrix& omegas) {
  static constexpr char kHex[] = "0123456789abcdef";
  const auto values = omegas.values();
  std::string hex;
  hex.reserve((values.size() + 7) / 8 * 2);
  for (std::size_t byte = 0; byte * 8 < values.size(); ++byte) {
    unsigned bits = 0;
    for (std::size_t b = 0; b < 8 && byte * 8 + b < values.size(); ++b)
      if (values[byte * 8 + b] < 0.0) bits |= 1U << b;
    hex.push_back(kHex[bits >> 4]);
    hex.push_back(kHex[bits & 0xF]);
  }
  return hex;
}

unsigned hex_digit(char c) {
  if (c >= '0' && c <= '9') return static_cast<unsigned>(c - '0');
  if (c >= 'a' && c <= 'f') return static_cast<unsigned>(c - 'a' + 10);
  if (c >= 'A' && c <= 'F') return static_cast<unsigned>(c - 'A' + 10);
  throw InvalidArgument("feature map: bad hex digit in sign block");
}

}  // namespace

std::string feature_map_to_json(const RmfFeatureMap& map) {
  const RmfParams& p = map.params();
  nlohmann::json doc;
  doc["format"] = kFormat;
  doc["version"] = kVersion;
  doc["kernel"] = kernel_name(p.kernel);
  doc["features"] = p.features;
  doc["input_dim"] = p.input_dim;
  doc["base"] = p.base;
  doc["seed"] = p.seed;
  doc["resampled_degrees"] = map.resampled_degrees();
  doc["degrees"] = std::vector<std::size_t>(map.degrees().begin(), map.degrees().end());
  doc["signs"] = pack_signs(map.omegas());
  return doc.dump();
}

RmfFeatureMap feature_map_from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("feature map: malformed JSON: ") + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != kFormat || doc.at("version").get<int>() != kVersion)
      throw InvalidArgument("feature map: unsupported format or version");
    RmfParams p;
    p.kernel = parse_kernel(doc.at("kernel").get<std::string>());
    p.features = doc.at("features").get<std::size_t>();
    p.input_dim = doc.at("input_dim").get<std::size_t>();
    p.base = doc.at("base").get<double>();
    p.seed = doc.at("seed").get<std::uint64_t>();
    auto degrees = doc.at("degrees").get<std::vector<std::size_t>>();
    const auto hex = doc.at("signs").get<std::string>();
    const std::size_t total = std::accumulate(degrees.begin(), degrees.end(), std::size_t{0});
    const std::size_t entries = total * p.input_dim;
    if (hex.size() != (entries + 7) / 8 * 2) throw InvalidArgument("feature map: sign block length");
    std::vector<double> signs(entries);
    for (std::size_t k = 0; k < entries; ++k) {
      const std::size_t byte = k / 8;
      const unsigned bits = hex_digit(hex[2 * byte]) << 4 | hex_digit(hex[2 * byte + 1]);
      signs[k] = (bits >> (k % 8)) & 1U ? -1.0 : 1.0;
    }
    return RmfFeatureMap(p, std::move(degrees), Matrix(total, p.input_dim, std::move(signs)),
                         doc.value("resampled_degrees", std::size_t{0}));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("feature map: ") + e.what());
  }
}

}  // namespace schoenbat
