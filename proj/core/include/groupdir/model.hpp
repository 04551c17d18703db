#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "groupdir/matrix.hpp"

namespace groupdir {

// One dense layer; weight is out x in, row-major.
struct DenseLayer {
  Matrix weight;
  std::vector<double> bias;

  std::size_t in_dim() const { return weight.cols(); }
  std::size_t out_dim() const { return weight.rows(); }
};

// Full parameter set: shared encoder, linear classifier head mapping the
// embedding to group logits, and one scalar-output expert regressor per
// group. Gradient buffers and Adam moments reuse this layout.
struct ModelParams {
  std::vector<DenseLayer> encoder;
  DenseLayer classifier;
  std::vector<DenseLayer> experts;

  int input_dim() const { return static_cast<int>(encoder.front().in_dim()); }
  int embed_dim() const { return static_cast<int>(encoder.back().out_dim()); }
  int num_groups() const { return static_cast<int>(experts.size()); }
};

// Activations retained by encode() for the backward pass.
struct ForwardCache {
  std::vector<Matrix> layer_inputs;  // input to encoder layer l
  std::vector<Matrix> preacts;       // pre-activation output of layer l
  const Matrix& embeddings() const { return preacts.back(); }
};

// Upstream gradients feeding backward(): a direct d/dz term, classifier
// logit gradients, and per-sample expert-output gradients with the group
// each sample was routed through.
struct UpstreamGrads {
  Matrix d_embeddings;               // B x embed, may be empty
  Matrix d_logits;                   // B x G, may be empty
  std::vector<double> d_expert_out;  // per sample, may be empty
  std::vector<int> expert_route;     // parallel to d_expert_out
};

// Glorot-uniform weights (bound sqrt(6 / (fan_in + fan_out))), zero biases.
// Deterministic per seed. hidden_dims may be empty, giving a single dense
// encoder layer input_dim -> embed_dim.
ModelParams init_params(std::uint64_t seed, int input_dim,
                        std::span<const int> hidden_dims, int embed_dim,
                        int num_groups);

ModelParams zeros_like(const ModelParams& params);

// Flat views over every parameter tensor in a fixed order (encoder layers,
// classifier, experts; weight before bias). Adam, serialization, and the
// finite-difference tests all iterate through this.
std::vector<std::span<double>> param_views(ModelParams& params);
std::vector<std::span<const double>> param_views(const ModelParams& params);

// Encoder forward pass with rectifier activations between layers (the final
// layer output is linear). Returns the B x embed_dim embeddings.
Matrix encode(const ModelParams& params, const Matrix& x, ForwardCache* cache = nullptr);

// Classifier head: B x G logits.
Matrix classify(const ModelParams& params, const Matrix& z);

// Output of expert g on a single embedding row; other experts are untouched.
double regress(const ModelParams& params, std::span<const double> z_row, int g);

// Exact backward pass for the composite objective. Accumulates parameter
// gradients into `grads` (expert g only receives contributions from samples
// routed to g) and returns the gradient with respect to the input batch.
Matrix backward(const ModelParams& params, const ForwardCache& cache,
                const UpstreamGrads& upstream, ModelParams& grads);

}  // namespace groupdir
