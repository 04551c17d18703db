#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "groupdir/matrix.hpp"
#include "groupdir/rng.hpp"

namespace groupdir {

// Synthetic task: train labels are exponentially tilted toward y_min
// (density proportional to exp(-skew_rate * normalized_label)), validation
// and test labels are uniform. Features are sines of the normalized label
// plus per-feature Gaussian noise of scale noise_sigma.
struct SynthConfig {
  double y_min = 0.0;
  double y_max = 100.0;
  double skew_rate = 4.0;
  int feature_dim = 16;
  int num_fourier = 16;
  double noise_sigma = 0.2;
  int n_train = 2000;
  int n_val = 1000;
  int n_test = 1000;
  std::uint64_t seed = 1;
};

struct Dataset {
  Matrix features;             // n x feature_dim
  std::vector<double> labels;  // n

  std::size_t size() const { return labels.size(); }
};

struct SynthSplits {
  Dataset train;
  Dataset val;
  Dataset test;
};

// Smooth label-to-feature map: component j is a_j * sin(w_j * u + p_j) on
// the normalized label u in [0, 1]; feature k uses component k mod
// num_fourier. Coefficients are drawn once per engine state.
class FourierFeatureMap {
 public:
  FourierFeatureMap(const SynthConfig& config, rng::Engine& eng);

  // Noise-free features for the normalized label u.
  std::vector<double> operator()(double u) const;

  // sqrt(sum of (a_k w_k)^2) over the per-feature components, divided by the
  // label range: |x(y1) - x(y2)| <= bound * |y1 - y2| without noise.
  double lipschitz_bound(double label_range) const;

 private:
  int feature_dim_;
  std::vector<double> amplitude_, frequency_, phase_;
};

void validate(const SynthConfig& config);

SynthSplits generate(const SynthConfig& config);

// CSV with header x0,...,x{d-1},y and one row per sample, 17 significant
// digits so a round trip is bit-exact.
void save_csv(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_csv(const std::filesystem::path& path);

std::string synth_config_to_json(const SynthConfig& config);
SynthConfig synth_config_from_json(const std::string& text);

}  // namespace groupdir
