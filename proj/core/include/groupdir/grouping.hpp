#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace groupdir {

// Partition of a continuous label range [y_min, y_max] into num_groups
// contiguous ordinal bins of equal width.
struct GroupingScheme {
  double y_min = 0.0;
  double y_max = 0.0;
  int num_groups = 0;
  double width = 0.0;
};

// Per-group sample counts.
using GroupHistogram = std::vector<std::size_t>;

enum class Shot { kMany, kMedian, kFew };

// Bins with count > many_min are Many, count < few_max are Few.
struct ShotThresholds {
  std::size_t many_min = 100;
  std::size_t few_max = 20;
};

// Throws ConfigError unless y_min < y_max and num_groups >= 2.
GroupingScheme make_grouping(double y_min, double y_max, int num_groups);

// Group index of y; bins are half-open except the top one, which absorbs
// y == y_max. Throws DataError for y outside [y_min, y_max].
int group_of(const GroupingScheme& scheme, double y);

// L1 distance between two group indices.
int group_distance(int g1, int g2);

GroupHistogram group_counts(std::span<const double> labels, const GroupingScheme& scheme);

std::vector<Shot> shot_categories(const GroupHistogram& counts,
                                  const ShotThresholds& thresholds);

// Symmetric Gaussian kernel of length 2*radius + 1, normalized to sum 1.
std::vector<double> gaussian_kernel(int radius, double sigma);

// Label-distribution-smoothing weights: smooth the histogram with the given
// kernel (zero padding at the edges), invert the smoothed density, and
// rescale so the weights have mean 1. Throws DataError when the smoothed
// density is zero everywhere.
std::vector<double> lds_weights(const GroupHistogram& counts,
                                std::span<const double> kernel);
std::vector<double> lds_weights(const GroupHistogram& counts, int kernel_radius,
                                double sigma);

const char* shot_name(Shot shot);

}  // namespace groupdir
