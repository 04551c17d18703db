#include "groupdir/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "groupdir/errors.hpp"
#include "groupdir/training.hpp"

namespace groupdir {

namespace {

void check_pair(std::span<const double> preds, std::span<const double> targets) {
  if (preds.size() != targets.size()) throw DataError("length-mismatch");
  if (preds.empty()) throw DataError("empty-input");
}

}  // namespace

double MetricsReport::mean_absdiff() const {
  std::size_t total = 0;
  double weighted = 0.0;
  for (std::size_t d = 0; d < absdiff_histogram.size(); ++d) {
    total += absdiff_histogram[d];
    weighted += static_cast<double>(d) * static_cast<double>(absdiff_histogram[d]);
  }
  return total == 0 ? 0.0 : weighted / static_cast<double>(total);
}

double mae(std::span<const double> preds, std::span<const double> targets) {
  check_pair(preds, targets);
  double sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) sum += std::fabs(preds[i] - targets[i]);
  return sum / static_cast<double>(preds.size());
}

double gm(std::span<const double> preds, std::span<const double> targets, double eps) {
  check_pair(preds, targets);
  if (eps <= 0.0) throw ConfigError("invalid-eps");
  double log_sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    log_sum += std::log(std::max(std::fabs(preds[i] - targets[i]), eps));
  }
  return std::exp(log_sum / static_cast<double>(preds.size()));
}

double bmae(std::span<const double> preds, std::span<const double> targets,
            const GroupingScheme& bins) {
  check_pair(preds, targets);
  std::vector<double> bin_sum(static_cast<std::size_t>(bins.num_groups), 0.0);
  std::vector<std::size_t> bin_count(static_cast<std::size_t>(bins.num_groups), 0);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto b = static_cast<std::size_t>(group_of(bins, targets[i]));
    bin_sum[b] += std::fabs(preds[i] - targets[i]);
    ++bin_count[b];
  }
  double total = 0.0;
  std::size_t non_empty = 0;
  for (std::size_t b = 0; b < bin_sum.size(); ++b) {
    if (bin_count[b] == 0) continue;
    total += bin_sum[b] / static_cast<double>(bin_count[b]);
    ++non_empty;
  }
  if (non_empty == 0) throw DataError("empty-input");
  return total / static_cast<double>(non_empty);
}

double pearson(std::span<const double> a, std::span<const double> b) {
  check_pair(a, b);
  const auto n = static_cast<double>(a.size());
  double mean_a = 0.0, mean_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    mean_a += a[i];
    mean_b += b[i];
  }
  mean_a /= n;
  mean_b /= n;
  double var_a = 0.0, var_b = 0.0, cov = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - mean_a;
    const double db = b[i] - mean_b;
    var_a += da * da;
    var_b += db * db;
    cov += da * db;
  }
  // Relative floor: a numerically constant sequence should register as zero
  // variance even when cancellation leaves it slightly above exact zero.
  const double floor_a = 1e-12 * (std::fabs(mean_a) + 1.0);
  const double floor_b = 1e-12 * (std::fabs(mean_b) + 1.0);
  if (var_a <= floor_a * floor_a * n || var_b <= floor_b * floor_b * n) {
    throw DataError("zero-variance");
  }
  return cov / std::sqrt(var_a * var_b);
}

GroupDiagnostics group_diagnostics(std::span<const int> pred_groups,
                                   std::span<const int> true_groups, int num_groups) {
  if (pred_groups.size() != true_groups.size()) throw DataError("length-mismatch");
  if (pred_groups.empty()) throw DataError("empty-input");
  if (num_groups <= 0) throw ConfigError("invalid-groups");
  GroupDiagnostics diag;
  diag.absdiff_histogram.assign(static_cast<std::size_t>(num_groups), 0);
  diag.per_group_counts.assign(static_cast<std::size_t>(num_groups), 0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred_groups.size(); ++i) {
    const int p = pred_groups[i];
    const int g = true_groups[i];
    if (p < 0 || p >= num_groups || g < 0 || g >= num_groups) {
      throw DataError("invalid-group");
    }
    if (p == g) ++correct;
    ++diag.absdiff_histogram[static_cast<std::size_t>(std::abs(p - g))];
    ++diag.per_group_counts[static_cast<std::size_t>(g)];
  }
  diag.accuracy = static_cast<double>(correct) / static_cast<double>(pred_groups.size());
  return diag;
}

MetricsReport full_report(const ModelParams& params, const GroupingScheme& scheme,
                          const Dataset& test_set, const ShotThresholds& thresholds,
                          const GroupHistogram& train_counts) {
  const std::size_t n = test_set.size();
  if (n == 0) throw DataError("empty-input");
  const auto predictions = predict_batch(params, test_set.features);
  std::vector<double> preds(n);
  std::vector<int> pred_groups(n);
  std::vector<int> true_groups(n);
  for (std::size_t i = 0; i < n; ++i) {
    preds[i] = predictions[i].value;
    pred_groups[i] = predictions[i].group;
    true_groups[i] = group_of(scheme, test_set.labels[i]);
  }

  MetricsReport report;
  report.mae = mae(preds, test_set.labels);
  report.gm = gm(preds, test_set.labels);
  report.bmae = bmae(preds, test_set.labels, scheme);
  try {
    report.pearson = pearson(preds, test_set.labels);
  } catch (const DataError&) {
    report.pearson.reset();
  }
  // The vanilla baseline's single-expert predictor has no group structure to
  // diagnose against a multi-group scheme, so skip the confusion stats there.
  const bool groups_comparable =
      params.num_groups() == scheme.num_groups && scheme.num_groups > 0;
  if (groups_comparable) {
    const auto diag = group_diagnostics(pred_groups, true_groups, scheme.num_groups);
    report.group_accuracy = diag.accuracy;
    report.absdiff_histogram = diag.absdiff_histogram;
  } else {
    report.group_accuracy = 0.0;
    report.absdiff_histogram.assign(static_cast<std::size_t>(scheme.num_groups), 0);
  }

  const auto shots = shot_categories(train_counts, thresholds);
  if (shots.size() != static_cast<std::size_t>(scheme.num_groups)) {
    throw DataError("length-mismatch");
  }
  std::array<std::vector<std::size_t>, 3> members;
  for (std::size_t i = 0; i < n; ++i) {
    const auto shot = shots[static_cast<std::size_t>(true_groups[i])];
    members[static_cast<std::size_t>(shot)].push_back(i);
  }
  for (std::size_t s = 0; s < members.size(); ++s) {
    auto& metrics = report.per_shot[s];
    metrics.count = members[s].size();
    if (members[s].empty()) continue;
    std::vector<double> p, t;
    p.reserve(members[s].size());
    t.reserve(members[s].size());
    for (const auto idx : members[s]) {
      p.push_back(preds[idx]);
      t.push_back(test_set.labels[idx]);
    }
    metrics.mae = mae(p, t);
    metrics.gm = gm(p, t);
  }
  return report;
}

namespace {

nlohmann::ordered_json shot_to_json(const ShotMetrics& metrics) {
  return {{"mae", metrics.mae}, {"gm", metrics.gm}, {"count", metrics.count}};
}

ShotMetrics shot_from_json(const nlohmann::json& node) {
  ShotMetrics metrics;
  metrics.mae = node.at("mae").get<double>();
  metrics.gm = node.at("gm").get<double>();
  metrics.count = node.at("count").get<std::size_t>();
  return metrics;
}

}  // namespace

std::string report_to_json(const MetricsReport& report) {
  nlohmann::ordered_json doc;
  doc["mae"] = report.mae;
  doc["gm"] = report.gm;
  doc["bmae"] = report.bmae;
  if (report.pearson.has_value()) {
    doc["pearson"] = *report.pearson;
  } else {
    doc["pearson"] = nullptr;
  }
  doc["group_accuracy"] = report.group_accuracy;
  doc["mean_absdiff"] = report.mean_absdiff();
  doc["absdiff_histogram"] = report.absdiff_histogram;
  nlohmann::ordered_json shots;
  for (std::size_t s = 0; s < report.per_shot.size(); ++s) {
    shots[shot_name(static_cast<Shot>(s))] = shot_to_json(report.per_shot[s]);
  }
  doc["per_shot"] = shots;
  return doc.dump(2) + "\n";
}

MetricsReport report_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
    MetricsReport report;
    report.mae = doc.at("mae").get<double>();
    report.gm = doc.at("gm").get<double>();
    report.bmae = doc.at("bmae").get<double>();
    if (!doc.at("pearson").is_null()) report.pearson = doc.at("pearson").get<double>();
    report.group_accuracy = doc.at("group_accuracy").get<double>();
    report.absdiff_histogram = doc.at("absdiff_histogram").get<std::vector<std::size_t>>();
    const auto& shots = doc.at("per_shot");
    for (std::size_t s = 0; s < report.per_shot.size(); ++s) {
      report.per_shot[s] = shot_from_json(shots.at(shot_name(static_cast<Shot>(s))));
    }
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed-report: ") + e.what());
  }
}

std::string report_to_text(const MetricsReport& report) {
  std::ostringstream out;
  char line[128];
  std::snprintf(line, sizeof(line), "%-16s %12.6f\n", "mae", report.mae);
  out << line;
  std::snprintf(line, sizeof(line), "%-16s %12.6f\n", "gm", report.gm);
  out << line;
  std::snprintf(line, sizeof(line), "%-16s %12.6f\n", "bmae", report.bmae);
  out << line;
  if (report.pearson.has_value()) {
    std::snprintf(line, sizeof(line), "%-16s %12.6f\n", "pearson", *report.pearson);
  } else {
    std::snprintf(line, sizeof(line), "%-16s %12s\n", "pearson", "undefined");
  }
  out << line;
  std::snprintf(line, sizeof(line), "%-16s %12.6f\n", "group_accuracy",
                report.group_accuracy);
  out << line;
  std::snprintf(line, sizeof(line), "%-16s %12.6f\n", "mean_absdiff",
                report.mean_absdiff());
  out << line;
  out << "\n";
  std::snprintf(line, sizeof(line), "%-8s %8s %12s %12s\n", "shot", "count", "mae", "gm");
  out << line;
  for (std::size_t s = 0; s < report.per_shot.size(); ++s) {
    const auto& metrics = report.per_shot[s];
    std::snprintf(line, sizeof(line), "%-8s %8zu %12.6f %12.6f\n",
                  shot_name(static_cast<Shot>(s)), metrics.count, metrics.mae,
                  metrics.gm);
    out << line;
  }
  out << "\nabsdiff_histogram:";
  for (const auto count : report.absdiff_histogram) out << ' ' << count;
  out << "\n";
  return out.str();
}

}  // namespace groupdir
