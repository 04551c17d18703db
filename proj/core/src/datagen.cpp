#include "groupdir/datagen.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

#include "groupdir/errors.hpp"

namespace groupdir {

namespace {

// Frequency range of the sinusoidal components, in radians per unit of the
// normalized label. Several periods across the range keep the map smooth yet
// hard enough that nearby labels are not trivially separable.
constexpr double kFreqMin = 0.5;
constexpr double kFreqMax = 8.0 * std::numbers::pi;

// Inverse CDF of the tilted density exp(-rate * u) on [0, 1].
double tilted_label(double v, double rate) {
  if (rate == 0.0) return v;
  return -std::log1p(-v * (1.0 - std::exp(-rate))) / rate;
}

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

FourierFeatureMap::FourierFeatureMap(const SynthConfig& config, rng::Engine& eng)
    : feature_dim_(config.feature_dim) {
  const auto components = static_cast<std::size_t>(config.num_fourier);
  amplitude_.reserve(components);
  frequency_.reserve(components);
  phase_.reserve(components);
  for (std::size_t j = 0; j < components; ++j) {
    amplitude_.push_back(rng::uniform(eng, 0.5, 1.5));
    frequency_.push_back(rng::uniform(eng, kFreqMin, kFreqMax));
    phase_.push_back(rng::uniform(eng, 0.0, 2.0 * std::numbers::pi));
  }
}

std::vector<double> FourierFeatureMap::operator()(double u) const {
  std::vector<double> x(static_cast<std::size_t>(feature_dim_));
  for (int k = 0; k < feature_dim_; ++k) {
    const auto j = static_cast<std::size_t>(k) % amplitude_.size();
    x[static_cast<std::size_t>(k)] =
        amplitude_[j] * std::sin(frequency_[j] * u + phase_[j]);
  }
  return x;
}

double FourierFeatureMap::lipschitz_bound(double label_range) const {
  double sum_sq = 0.0;
  for (int k = 0; k < feature_dim_; ++k) {
    const auto j = static_cast<std::size_t>(k) % amplitude_.size();
    const double slope = amplitude_[j] * frequency_[j];
    sum_sq += slope * slope;
  }
  return std::sqrt(sum_sq) / label_range;
}

void validate(const SynthConfig& config) {
  if (!(config.y_min < config.y_max)) {
    throw ConfigError("config-invalid: y_min must be strictly below y_max");
  }
  if (config.skew_rate < 0.0) throw ConfigError("config-invalid: skew_rate must be >= 0");
  if (config.feature_dim < 1) throw ConfigError("config-invalid: feature_dim must be >= 1");
  if (config.num_fourier < 1) throw ConfigError("config-invalid: num_fourier must be >= 1");
  if (config.noise_sigma < 0.0) {
    throw ConfigError("config-invalid: noise_sigma must be >= 0");
  }
  if (config.n_train < 0 || config.n_val < 0 || config.n_test < 0) {
    throw ConfigError("config-invalid: split sizes must be >= 0");
  }
}

SynthSplits generate(const SynthConfig& config) {
  validate(config);
  rng::Engine eng(config.seed);
  const FourierFeatureMap features(config, eng);
  const double range = config.y_max - config.y_min;

  auto sample_split = [&](int n, bool skewed) {
    Dataset split;
    split.labels.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const double v = rng::uniform_unit(eng);
      const double u = skewed ? tilted_label(v, config.skew_rate) : v;
      split.labels.push_back(config.y_min + range * u);
    }
    split.features = Matrix(static_cast<std::size_t>(n),
                            static_cast<std::size_t>(config.feature_dim));
    for (int i = 0; i < n; ++i) {
      const double u = (split.labels[static_cast<std::size_t>(i)] - config.y_min) / range;
      const auto x = features(u);
      auto row = split.features.row(static_cast<std::size_t>(i));
      for (std::size_t k = 0; k < row.size(); ++k) {
        row[k] = x[k] + config.noise_sigma * rng::normal(eng);
      }
    }
    return split;
  };

  SynthSplits splits;
  splits.train = sample_split(config.n_train, true);
  splits.val = sample_split(config.n_val, false);
  splits.test = sample_split(config.n_test, false);
  return splits;
}

void save_csv(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("io-error: cannot open " + path.string() + " for writing");
  const std::size_t d = dataset.features.cols();
  for (std::size_t k = 0; k < d; ++k) out << 'x' << k << ',';
  out << "y\n";
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto row = dataset.features.row(i);
    for (double v : row) out << format_value(v) << ',';
    out << format_value(dataset.labels[i]) << '\n';
  }
  if (!out) throw IoError("io-error: short write to " + path.string());
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("io-error: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) {
    throw IoError("io-error: " + path.string() + " is empty (missing header)");
  }
  std::size_t columns = 1;
  for (char c : line) {
    if (c == ',') ++columns;
  }
  if (columns < 2) {
    throw IoError("malformed-row: header on line 1 of " + path.string() +
                  " needs at least one feature column and y");
  }
  const std::size_t d = columns - 1;

  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> values;
    values.reserve(columns);
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
      const char* begin = field.c_str();
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin || *end != '\0') {
        throw IoError("malformed-row: line " + std::to_string(line_no) + " of " +
                      path.string() + " has a non-numeric field '" + field + "'");
      }
      values.push_back(v);
    }
    if (values.size() != columns) {
      throw IoError("malformed-row: line " + std::to_string(line_no) + " of " +
                    path.string() + " has " + std::to_string(values.size()) +
                    " fields, expected " + std::to_string(columns));
    }
    rows.push_back(std::move(values));
  }

  Dataset dataset;
  dataset.features = Matrix(rows.size(), d);
  dataset.labels.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < d; ++k) dataset.features(i, k) = rows[i][k];
    dataset.labels[i] = rows[i][d];
  }
  return dataset;
}

std::string synth_config_to_json(const SynthConfig& config) {
  nlohmann::json j{
      {"y_min", config.y_min},
      {"y_max", config.y_max},
      {"skew_rate", config.skew_rate},
      {"feature_dim", config.feature_dim},
      {"num_fourier", config.num_fourier},
      {"noise_sigma", config.noise_sigma},
      {"n_train", config.n_train},
      {"n_val", config.n_val},
      {"n_test", config.n_test},
      {"seed", config.seed},
  };
  return j.dump(2) + "\n";
}

SynthConfig synth_config_from_json(const std::string& text) {
  SynthConfig config;
  try {
    const auto j = nlohmann::json::parse(text);
    config.y_min = j.at("y_min").get<double>();
    config.y_max = j.at("y_max").get<double>();
    config.skew_rate = j.at("skew_rate").get<double>();
    config.feature_dim = j.at("feature_dim").get<int>();
    config.num_fourier = j.at("num_fourier").get<int>();
    config.noise_sigma = j.at("noise_sigma").get<double>();
    config.n_train = j.at("n_train").get<int>();
    config.n_val = j.at("n_val").get<int>();
    config.n_test = j.at("n_test").get<int>();
    config.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("io-error: bad synth config JSON: ") + e.what());
  }
  validate(config);
  return config;
}

}  // namespace groupdir
