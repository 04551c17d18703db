#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "groupdir/datagen.hpp"
#include "groupdir/grouping.hpp"
#include "groupdir/model.hpp"

namespace groupdir {

struct ShotMetrics {
  double mae = 0.0;
  double gm = 0.0;
  std::size_t count = 0;
};

// Everything the benchmark tables and diagnostic figures report for one
// evaluation pass. pearson is empty when either side has zero variance.
struct MetricsReport {
  double mae = 0.0;
  double gm = 0.0;
  double bmae = 0.0;
  std::optional<double> pearson;
  double group_accuracy = 0.0;
  std::vector<std::size_t> absdiff_histogram;
  std::array<ShotMetrics, 3> per_shot;  // indexed by Shot

  double mean_absdiff() const;
};

double mae(std::span<const double> preds, std::span<const double> targets);

// Geometric mean of |error| clamped below at eps, accumulated in log space.
double gm(std::span<const double> preds, std::span<const double> targets,
          double eps = 1e-6);

// Unweighted mean over non-empty label bins of the per-bin MAE; bins come
// from the given scheme (pass a finer scheme for finer bins).
double bmae(std::span<const double> preds, std::span<const double> targets,
            const GroupingScheme& bins);

// Sample Pearson correlation. Throws DataError on zero variance.
double pearson(std::span<const double> a, std::span<const double> b);

struct GroupDiagnostics {
  double accuracy = 0.0;
  std::vector<std::size_t> absdiff_histogram;  // indexed by |pred - true|
  std::vector<std::size_t> per_group_counts;   // confusion row sums (true group)
};

GroupDiagnostics group_diagnostics(std::span<const int> pred_groups,
                                   std::span<const int> true_groups, int num_groups);

// Runs the classification-guided prediction path over the test set and
// assembles every metric. Shot categories come from the train-set counts
// (imbalance is a training-set property) and attach to test samples through
// their label's group.
MetricsReport full_report(const ModelParams& params, const GroupingScheme& scheme,
                          const Dataset& test_set, const ShotThresholds& thresholds,
                          const GroupHistogram& train_counts);

// Fixed-field JSON document for machine comparison.
std::string report_to_json(const MetricsReport& report);
MetricsReport report_from_json(const std::string& text);

// Aligned-column rendering for humans.
std::string report_to_text(const MetricsReport& report);

}  // namespace groupdir
