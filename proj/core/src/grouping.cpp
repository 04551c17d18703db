#include "groupdir/grouping.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "groupdir/errors.hpp"

namespace groupdir {

namespace {
constexpr double kDensityEps = 1e-12;
}

GroupingScheme make_grouping(double y_min, double y_max, int num_groups) {
  if (!(y_min < y_max)) {
    throw ConfigError("invalid-range: y_min (" + std::to_string(y_min) +
                      ") must be strictly below y_max (" + std::to_string(y_max) + ")");
  }
  if (num_groups < 2) {
    throw ConfigError("invalid-groups: num_groups must be >= 2, got " +
                      std::to_string(num_groups));
  }
  GroupingScheme scheme;
  scheme.y_min = y_min;
  scheme.y_max = y_max;
  scheme.num_groups = num_groups;
  scheme.width = (y_max - y_min) / num_groups;
  return scheme;
}

int group_of(const GroupingScheme& scheme, double y) {
  if (!(y >= scheme.y_min && y <= scheme.y_max)) {
    throw DataError("out-of-range: label " + std::to_string(y) + " outside [" +
                    std::to_string(scheme.y_min) + ", " + std::to_string(scheme.y_max) +
                    "]");
  }
  const int g = static_cast<int>(std::floor((y - scheme.y_min) / scheme.width));
  return std::clamp(g, 0, scheme.num_groups - 1);
}

int group_distance(int g1, int g2) { return std::abs(g1 - g2); }

GroupHistogram group_counts(std::span<const double> labels, const GroupingScheme& scheme) {
  GroupHistogram counts(static_cast<std::size_t>(scheme.num_groups), 0);
  for (double y : labels) {
    ++counts[static_cast<std::size_t>(group_of(scheme, y))];
  }
  return counts;
}

std::vector<Shot> shot_categories(const GroupHistogram& counts,
                                  const ShotThresholds& thresholds) {
  if (thresholds.few_max >= thresholds.many_min) {
    throw ConfigError("invalid shot thresholds: few_max must be below many_min");
  }
  std::vector<Shot> shots;
  shots.reserve(counts.size());
  for (std::size_t c : counts) {
    if (c > thresholds.many_min) {
      shots.push_back(Shot::kMany);
    } else if (c < thresholds.few_max) {
      shots.push_back(Shot::kFew);
    } else {
      shots.push_back(Shot::kMedian);
    }
  }
  return shots;
}

std::vector<double> gaussian_kernel(int radius, double sigma) {
  if (radius < 0) throw ConfigError("kernel radius must be >= 0");
  if (!(sigma > 0.0)) throw ConfigError("kernel sigma must be positive");
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
    kernel[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (double& v : kernel) v /= sum;
  return kernel;
}

std::vector<double> lds_weights(const GroupHistogram& counts,
                                std::span<const double> kernel) {
  if (kernel.empty() || kernel.size() % 2 == 0) {
    throw ConfigError("smoothing kernel length must be odd");
  }
  const int radius = static_cast<int>(kernel.size() / 2);
  const int n = static_cast<int>(counts.size());

  // Zero-padded convolution of the histogram with the kernel.
  std::vector<double> smoothed(counts.size(), 0.0);
  for (int g = 0; g < n; ++g) {
    double acc = 0.0;
    for (int k = -radius; k <= radius; ++k) {
      const int j = g + k;
      if (j < 0 || j >= n) continue;
      acc += kernel[static_cast<std::size_t>(k + radius)] *
             static_cast<double>(counts[static_cast<std::size_t>(j)]);
    }
    smoothed[static_cast<std::size_t>(g)] = acc;
  }

  const bool all_zero =
      std::all_of(smoothed.begin(), smoothed.end(), [](double v) { return v <= 0.0; });
  if (all_zero) {
    throw DataError("degenerate-density: smoothed label density is zero everywhere");
  }

  std::vector<double> weights(smoothed.size());
  double total = 0.0;
  for (std::size_t g = 0; g < smoothed.size(); ++g) {
    weights[g] = 1.0 / std::max(smoothed[g], kDensityEps);
    total += weights[g];
  }
  const double mean = total / static_cast<double>(weights.size());
  for (double& w : weights) w /= mean;
  return weights;
}

std::vector<double> lds_weights(const GroupHistogram& counts, int kernel_radius,
                                double sigma) {
  const auto kernel = gaussian_kernel(kernel_radius, sigma);
  return lds_weights(counts, kernel);
}

const char* shot_name(Shot shot) {
  switch (shot) {
    case Shot::kMany:
      return "many";
    case Shot::kMedian:
      return "median";
    case Shot::kFew:
      return "few";
  }
  return "unknown";
}

}  // namespace groupdir
