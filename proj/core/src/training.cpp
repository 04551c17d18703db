#include "groupdir/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numeric>
#include <sstream>
#include <utility>

#include "groupdir/contrastive.hpp"
#include "groupdir/errors.hpp"
#include "groupdir/eval.hpp"
#include "groupdir/rng.hpp"
#include "groupdir/softlabel.hpp"

namespace groupdir {

namespace {

constexpr double kPriorFloor = 1e-12;

constexpr char kHistoryHeader[] =
    "epoch,l_grc,l_mse,l_soft,l_final,train_mae,val_mae_cls,val_mae_gt";

double cls_guided_mae(const ModelParams& params, const Dataset& dataset) {
  const auto predictions = predict_batch(params, dataset.features);
  std::vector<double> values(predictions.size());
  for (std::size_t i = 0; i < predictions.size(); ++i) values[i] = predictions[i].value;
  return mae(values, dataset.labels);
}

}  // namespace

const char* criterion_name(Criterion criterion) {
  switch (criterion) {
    case Criterion::kSoft: return "soft";
    case Criterion::kCe: return "ce";
    case Criterion::kLa: return "la";
  }
  throw ConfigError("invalid-criterion");
}

Criterion criterion_from_name(const std::string& name) {
  if (name == "soft") return Criterion::kSoft;
  if (name == "ce") return Criterion::kCe;
  if (name == "la") return Criterion::kLa;
  throw ConfigError("invalid-criterion: " + name);
}

void validate(const TrainConfig& config) {
  if (config.lambda1 < 0.0 || config.lambda2 < 0.0) throw ConfigError("invalid-lambda");
  if (config.temperature <= 0.0) throw ConfigError("invalid-temperature");
  if (config.beta <= 0.0) throw ConfigError("invalid-beta");
  if (config.learning_rate <= 0.0) throw ConfigError("invalid-learning-rate");
  if (config.epochs < 0) throw ConfigError("invalid-epochs");
  if (config.batch_size < 2) throw ConfigError("invalid-batch-size");
  if (config.stage2_epochs < 0) throw ConfigError("invalid-stage2-epochs");
  if (config.num_groups < 2) throw ConfigError("invalid-groups");
  for (const int h : config.hidden_dims) {
    if (h < 1) throw ConfigError("invalid-hidden-dims");
  }
  if (config.embed_dim < 1) throw ConfigError("invalid-embed-dim");
  if (config.la_tau < 0.0) throw ConfigError("invalid-la-tau");
  if (config.lds_kernel_radius < 0) throw ConfigError("invalid-lds-radius");
  if (config.lds_sigma <= 0.0) throw ConfigError("invalid-lds-sigma");
  if (config.lds_intra_bins < 1) throw ConfigError("invalid-lds-bins");
  if (config.adam.beta1 < 0.0 || config.adam.beta1 >= 1.0 || config.adam.beta2 < 0.0 ||
      config.adam.beta2 >= 1.0) {
    throw ConfigError("invalid-adam-beta");
  }
  if (config.adam.eps <= 0.0) throw ConfigError("invalid-adam-eps");
  if (config.adam.weight_decay < 0.0) throw ConfigError("invalid-weight-decay");
}

AdamState make_adam_state(const ModelParams& params) {
  AdamState state;
  state.m = zeros_like(params);
  state.v = zeros_like(params);
  return state;
}

void adam_step(AdamState& state, ModelParams& params, const ModelParams& grads,
               const TrainConfig& config, bool heads_only) {
  ++state.step;
  const auto& adam = config.adam;
  const double bc1 = 1.0 - std::pow(adam.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(adam.beta2, static_cast<double>(state.step));
  const auto p_views = param_views(params);
  const auto g_views = param_views(grads);
  const auto m_views = param_views(state.m);
  const auto v_views = param_views(state.v);
  if (g_views.size() != p_views.size() || m_views.size() != p_views.size()) {
    throw DataError("shape-mismatch");
  }
  // Frozen tensors are skipped outright, so neither weight decay nor stale
  // moments can drift them.
  const std::size_t first = heads_only ? params.encoder.size() * 2 : 0;
  for (std::size_t t = first; t < p_views.size(); ++t) {
    const auto p = p_views[t];
    const auto g = g_views[t];
    const auto m = m_views[t];
    const auto v = v_views[t];
    if (g.size() != p.size()) throw DataError("shape-mismatch");
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double grad = g[i] + adam.weight_decay * p[i];
      m[i] = adam.beta1 * m[i] + (1.0 - adam.beta1) * grad;
      v[i] = adam.beta2 * v[i] + (1.0 - adam.beta2) * grad * grad;
      p[i] -= config.learning_rate * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + adam.eps);
    }
  }
}

MseResult multi_expert_mse(std::span<const double> preds, std::span<const double> targets,
                           std::span<const int> groups, std::span<const double> weights) {
  const std::size_t n = preds.size();
  if (n == 0) throw DataError("empty-input");
  if (targets.size() != n || groups.size() != n || weights.size() != n) {
    throw DataError("length-mismatch");
  }
  MseResult result;
  result.grad_pred.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (weights[i] < 0.0) throw DataError("invalid-weight");
    const double err = preds[i] - targets[i];
    result.value += weights[i] * err * err;
    result.grad_pred[i] = 2.0 * weights[i] * err;
  }
  const auto scale = static_cast<double>(n);
  result.value /= scale;
  for (auto& g : result.grad_pred) g /= scale;
  return result;
}

LossComponents final_loss(const ModelParams& params, const Batch& batch,
                          const TrainConfig& config, std::span<const double> prior,
                          ModelParams* grads, bool stage2) {
  const std::size_t b = batch.x.rows();
  if (b == 0) throw DataError("empty-input");
  if (batch.y.size() != b || batch.groups.size() != b || batch.weights.size() != b) {
    throw DataError("length-mismatch");
  }

  ForwardCache cache;
  const Matrix z = encode(params, batch.x, &cache);

  UpstreamGrads upstream;
  LossComponents components;

  // Contrastive term. Stage 2 freezes the encoder, making it a constant, so
  // it drops out of the objective there.
  if (!config.vanilla && !stage2) {
    Matrix d_z;
    components.grc =
        grc_eval(z, batch.groups, config.temperature, grads ? &d_z : nullptr);
    if (grads) upstream.d_embeddings = std::move(d_z);
  }

  // Every sample goes through its ground-truth expert (the lone expert in
  // the vanilla baseline).
  std::vector<int> route(b);
  std::vector<double> preds(b);
  for (std::size_t i = 0; i < b; ++i) {
    route[i] = config.vanilla ? 0 : batch.groups[i];
    preds[i] = regress(params, z.row(i), route[i]);
  }
  const auto mse = multi_expert_mse(preds, batch.y, route, batch.weights);
  components.mse = mse.value;

  if (!config.vanilla) {
    const Matrix logits = classify(params, z);
    Matrix d_logits;
    if (grads) d_logits = Matrix(b, logits.cols());
    SoftLabelCodec codec;
    if (config.criterion == Criterion::kSoft) {
      codec = make_codec(config.num_groups, config.beta);
    }
    double crit_sum = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
      LossWithGrad sample;
      switch (config.criterion) {
        case Criterion::kSoft:
          sample = soft_ce_loss(logits.row(i), soft_target(codec, batch.groups[i]));
          break;
        case Criterion::kCe:
          sample = hard_ce_loss(logits.row(i), batch.groups[i]);
          break;
        case Criterion::kLa:
          sample = la_ce_loss(logits.row(i), batch.groups[i], prior, config.la_tau);
          break;
      }
      crit_sum += sample.value;
      if (grads) {
        for (std::size_t j = 0; j < sample.grad_logits.size(); ++j) {
          d_logits(i, j) = config.lambda2 * sample.grad_logits[j] /
                           static_cast<double>(b);
        }
      }
    }
    components.crit = crit_sum / static_cast<double>(b);
    if (grads) upstream.d_logits = std::move(d_logits);
  }

  // The baseline minimizes the regression loss alone, unscaled.
  const double mse_weight = config.vanilla ? 1.0 : config.lambda1;
  const double crit_weight = config.vanilla ? 0.0 : config.lambda2;
  components.total =
      components.grc + mse_weight * components.mse + crit_weight * components.crit;

  if (grads) {
    upstream.d_expert_out.resize(b);
    for (std::size_t i = 0; i < b; ++i) {
      upstream.d_expert_out[i] = mse_weight * mse.grad_pred[i];
    }
    upstream.expert_route = route;
    backward(params, cache, upstream, *grads);
  }
  return components;
}

std::vector<Prediction> predict_batch(const ModelParams& params, const Matrix& x) {
  const Matrix z = encode(params, x);
  const Matrix logits = classify(params, z);
  std::vector<Prediction> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = logits.row(r);
    std::size_t best = 0;  // lowest index wins ties
    for (std::size_t j = 1; j < row.size(); ++j) {
      if (row[j] > row[best]) best = j;
    }
    out[r].group = static_cast<int>(best);
    out[r].value = regress(params, z.row(r), out[r].group);
  }
  return out;
}

Prediction predict(const ModelParams& params, std::span<const double> x_row) {
  Matrix x(1, x_row.size());
  std::copy(x_row.begin(), x_row.end(), x.row(0).begin());
  return predict_batch(params, x).front();
}

std::vector<double> predict_gt_guided_batch(const ModelParams& params, const Matrix& x,
                                            std::span<const int> groups) {
  if (groups.size() != x.rows()) throw DataError("length-mismatch");
  const Matrix z = encode(params, x);
  std::vector<double> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    out[r] = regress(params, z.row(r), groups[r]);
  }
  return out;
}

double predict_gt_guided(const ModelParams& params, std::span<const double> x_row,
                         int g) {
  Matrix x(1, x_row.size());
  std::copy(x_row.begin(), x_row.end(), x.row(0).begin());
  return predict_gt_guided_batch(params, x, std::span<const int>(&g, 1)).front();
}

std::vector<double> class_prior(const GroupHistogram& counts) {
  if (counts.empty()) throw DataError("empty-input");
  double total = 0.0;
  for (const auto count : counts) total += static_cast<double>(count);
  if (total <= 0.0) throw DataError("empty-input");
  std::vector<double> prior(counts.size());
  double sum = 0.0;
  for (std::size_t g = 0; g < counts.size(); ++g) {
    prior[g] = std::max(static_cast<double>(counts[g]) / total, kPriorFloor);
    sum += prior[g];
  }
  for (auto& p : prior) p /= sum;
  return prior;
}

std::vector<double> sample_lds_weights(const Dataset& train_set,
                                       const GroupingScheme& scheme,
                                       const TrainConfig& config) {
  const auto fine = make_grouping(scheme.y_min, scheme.y_max,
                                  scheme.num_groups * config.lds_intra_bins);
  const auto counts = group_counts(train_set.labels, fine);
  const auto bin_weights =
      lds_weights(counts, config.lds_kernel_radius, config.lds_sigma);
  std::vector<double> weights(train_set.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    weights[i] = bin_weights[static_cast<std::size_t>(group_of(fine, train_set.labels[i]))];
  }
  return weights;
}

TrainResult train(const TrainConfig& config, const GroupingScheme& scheme,
                  const Dataset& train_set, const Dataset& val_set) {
  validate(config);
  if (scheme.num_groups != config.num_groups) throw ConfigError("groups-mismatch");
  if (train_set.size() == 0 || val_set.size() == 0) throw DataError("empty-input");
  if (train_set.features.cols() != val_set.features.cols()) {
    throw DataError("shape-mismatch");
  }
  if (train_set.features.rows() != train_set.size() ||
      val_set.features.rows() != val_set.size()) {
    throw DataError("length-mismatch");
  }

  const auto input_dim = static_cast<int>(train_set.features.cols());
  const int model_groups = config.vanilla ? 1 : config.num_groups;
  ModelParams params = init_params(config.seed, input_dim, config.hidden_dims,
                                   config.embed_dim, model_groups);

  const std::size_t n = train_set.size();
  std::vector<int> train_groups(n);
  for (std::size_t i = 0; i < n; ++i) {
    train_groups[i] = group_of(scheme, train_set.labels[i]);
  }
  std::vector<int> val_groups(val_set.size());
  for (std::size_t i = 0; i < val_set.size(); ++i) {
    val_groups[i] = group_of(scheme, val_set.labels[i]);
  }

  const std::vector<double> weights = config.use_lds
                                          ? sample_lds_weights(train_set, scheme, config)
                                          : std::vector<double>(n, 1.0);
  std::vector<double> prior;
  if (!config.vanilla && config.criterion == Criterion::kLa) {
    prior = class_prior(group_counts(train_set.labels, scheme));
  }

  AdamState adam = make_adam_state(params);
  // Decorrelated from the Glorot stream, which also starts at config.seed.
  rng::Engine order_eng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainHistory history;
  const int total_epochs = config.epochs + config.stage2_epochs;
  const auto batch_size = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 1; epoch <= total_epochs; ++epoch) {
    const bool stage2 = epoch > config.epochs;
    rng::shuffle(order, order_eng);

    EpochRecord record;
    record.epoch = epoch;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += batch_size) {
      const std::size_t stop = std::min(n, start + batch_size);
      const std::size_t b = stop - start;
      Batch batch;
      batch.x = Matrix(b, static_cast<std::size_t>(input_dim));
      batch.y.resize(b);
      batch.groups.resize(b);
      batch.weights.resize(b);
      for (std::size_t r = 0; r < b; ++r) {
        const std::size_t src = order[start + r];
        const auto src_row = train_set.features.row(src);
        std::copy(src_row.begin(), src_row.end(), batch.x.row(r).begin());
        batch.y[r] = train_set.labels[src];
        batch.groups[r] = train_groups[src];
        batch.weights[r] = weights[src];
      }
      ModelParams grads = zeros_like(params);
      const auto components = final_loss(params, batch, config, prior, &grads, stage2);
      adam_step(adam, params, grads, config, /*heads_only=*/stage2);
      record.l_grc += components.grc;
      record.l_mse += components.mse;
      record.l_soft += components.crit;
      record.l_final += components.total;
      ++batches;
    }
    const auto scale = static_cast<double>(batches);
    record.l_grc /= scale;
    record.l_mse /= scale;
    record.l_soft /= scale;
    record.l_final /= scale;

    record.train_mae = cls_guided_mae(params, train_set);
    record.val_mae_cls = cls_guided_mae(params, val_set);
    if (config.vanilla) {
      record.val_mae_gt = record.val_mae_cls;
    } else {
      const auto gt_preds = predict_gt_guided_batch(params, val_set.features, val_groups);
      record.val_mae_gt = mae(gt_preds, val_set.labels);
    }
    history.push_back(record);
  }
  return {std::move(params), std::move(history)};
}

std::string history_to_csv(const TrainHistory& history) {
  std::ostringstream out;
  out << kHistoryHeader << '\n';
  char buf[64];
  for (const auto& r : history) {
    out << r.epoch;
    for (const double v : {r.l_grc, r.l_mse, r.l_soft, r.l_final, r.train_mae,
                           r.val_mae_cls, r.val_mae_gt}) {
      std::snprintf(buf, sizeof(buf), ",%.17g", v);
      out << buf;
    }
    out << '\n';
  }
  return out.str();
}

TrainHistory history_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw IoError("malformed-history: empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHistoryHeader) throw IoError("malformed-history: header");
  TrainHistory history;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fail = [line_no] {
      return IoError("malformed-history: line " + std::to_string(line_no));
    };
    EpochRecord r;
    const char* p = line.c_str();
    char* end = nullptr;
    r.epoch = static_cast<int>(std::strtol(p, &end, 10));
    if (end == p) throw fail();
    p = end;
    double* const fields[] = {&r.l_grc,      &r.l_mse,       &r.l_soft,
                              &r.l_final,    &r.train_mae,   &r.val_mae_cls,
                              &r.val_mae_gt};
    for (double* const field : fields) {
      if (*p != ',') throw fail();
      ++p;
      *field = std::strtod(p, &end);
      if (end == p) throw fail();
      p = end;
    }
    if (*p != '\0') throw fail();
    history.push_back(r);
  }
  return history;
}

}  // namespace groupdir
