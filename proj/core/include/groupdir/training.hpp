#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "groupdir/datagen.hpp"
#include "groupdir/grouping.hpp"
#include "groupdir/matrix.hpp"
#include "groupdir/model.hpp"

namespace groupdir {

enum class Criterion { kSoft, kCe, kLa };

const char* criterion_name(Criterion criterion);
Criterion criterion_from_name(const std::string& name);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
};

// All training hyperparameters. `vanilla` switches to the MSE-only baseline:
// a single expert fed by the same encoder, no contrastive or classification
// terms (the grouping scheme is still used for evaluation).
struct TrainConfig {
  double lambda1 = 0.5;        // weight of the multi-expert MSE loss
  double lambda2 = 1.0;        // weight of the classification loss
  double temperature = 2.5;    // contrastive temperature
  double beta = 1.0;           // soft-label descent step
  Criterion criterion = Criterion::kSoft;
  bool use_lds = false;
  double learning_rate = 2e-3;
  int epochs = 60;
  int batch_size = 64;
  std::uint64_t seed = 1;
  int stage2_epochs = 0;       // encoder-frozen head fine-tuning epochs
  AdamConfig adam;

  int num_groups = 20;
  std::vector<int> hidden_dims = {64, 64};
  int embed_dim = 16;
  bool vanilla = false;
  double la_tau = 1.0;
  int lds_kernel_radius = 2;
  double lds_sigma = 2.0;
  int lds_intra_bins = 1;      // label bins per group for the LDS histogram
};

void validate(const TrainConfig& config);

// First/second Adam moments shaped like the parameters, plus the step count.
struct AdamState {
  ModelParams m;
  ModelParams v;
  std::int64_t step = 0;
};

AdamState make_adam_state(const ModelParams& params);

// Bias-corrected Adam with L2-coupled weight decay (grad += wd * param
// before the moment updates). With heads_only the encoder tensors are left
// untouched, moments included.
void adam_step(AdamState& state, ModelParams& params, const ModelParams& grads,
               const TrainConfig& config, bool heads_only = false);

struct EpochRecord {
  int epoch = 0;
  double l_grc = 0.0;
  double l_mse = 0.0;
  double l_soft = 0.0;  // the active classification criterion's loss
  double l_final = 0.0;
  double train_mae = 0.0;
  double val_mae_cls = 0.0;
  double val_mae_gt = 0.0;
};

using TrainHistory = std::vector<EpochRecord>;

struct MseResult {
  double value = 0.0;
  std::vector<double> grad_pred;  // d value / d pred, per sample
};

// Multi-expert regression loss: weighted squared errors accumulated over the
// per-group routing, divided by the batch size.
MseResult multi_expert_mse(std::span<const double> preds, std::span<const double> targets,
                           std::span<const int> groups, std::span<const double> weights);

struct Batch {
  Matrix x;
  std::vector<double> y;
  std::vector<int> groups;      // ground-truth groups (training-time routing)
  std::vector<double> weights;  // LDS weights, all 1 when disabled
};

struct LossComponents {
  double grc = 0.0;
  double mse = 0.0;
  double crit = 0.0;
  double total = 0.0;
};

// Final objective L_grc + lambda1 * L_mse + lambda2 * L_crit on one batch,
// with exact parameter gradients accumulated into *grads when non-null.
// Every sample is routed through its ground-truth expert. stage2 drops the
// contrastive term and the encoder gradients.
LossComponents final_loss(const ModelParams& params, const Batch& batch,
                          const TrainConfig& config, std::span<const double> prior,
                          ModelParams* grads, bool stage2 = false);

struct Prediction {
  int group = 0;
  double value = 0.0;
};

// Classification-guided path: argmax logits (lowest index wins ties) picks
// the expert. The vanilla baseline always routes to its single expert.
Prediction predict(const ModelParams& params, std::span<const double> x_row);
std::vector<Prediction> predict_batch(const ModelParams& params, const Matrix& x);

// Ground-truth-guided path, bypassing the classifier.
double predict_gt_guided(const ModelParams& params, std::span<const double> x_row, int g);
std::vector<double> predict_gt_guided_batch(const ModelParams& params, const Matrix& x,
                                            std::span<const int> groups);

struct TrainResult {
  ModelParams params;
  TrainHistory history;
};

// Mini-batch training of the full objective under Adam, followed by
// stage2_epochs of encoder-frozen head fine-tuning. Deterministic per seed.
TrainResult train(const TrainConfig& config, const GroupingScheme& scheme,
                  const Dataset& train_set, const Dataset& val_set);

// Empirical group frequencies with an additive floor, normalized to sum 1.
std::vector<double> class_prior(const GroupHistogram& counts);

// Per-sample LDS weights from the smoothed fine-bin label histogram.
std::vector<double> sample_lds_weights(const Dataset& train_set,
                                       const GroupingScheme& scheme,
                                       const TrainConfig& config);

std::string history_to_csv(const TrainHistory& history);
TrainHistory history_from_csv(const std::string& text);

}  // namespace groupdir
