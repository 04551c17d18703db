#include "groupdir/model.hpp"

#include <cmath>
#include <string>

#include "groupdir/errors.hpp"
#include "groupdir/rng.hpp"

namespace groupdir {

namespace {

DenseLayer glorot_layer(rng::Engine& eng, int in_dim, int out_dim) {
  DenseLayer layer;
  layer.weight = Matrix(static_cast<std::size_t>(out_dim), static_cast<std::size_t>(in_dim));
  layer.bias.assign(static_cast<std::size_t>(out_dim), 0.0);
  const double bound = std::sqrt(6.0 / static_cast<double>(in_dim + out_dim));
  for (double& w : layer.weight.flat()) w = rng::uniform(eng, -bound, bound);
  return layer;
}

// y = x W^T + b, row per sample.
Matrix affine(const DenseLayer& layer, const Matrix& x) {
  if (x.cols() != layer.in_dim()) {
    throw DataError("shape-mismatch: layer expects input dim " +
                    std::to_string(layer.in_dim()) + ", got " + std::to_string(x.cols()));
  }
  Matrix y(x.rows(), layer.out_dim());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t o = 0; o < layer.out_dim(); ++o) {
      double acc = layer.bias[o];
      const auto w = layer.weight.row(o);
      const auto in = x.row(r);
      for (std::size_t c = 0; c < w.size(); ++c) acc += w[c] * in[c];
      y(r, o) = acc;
    }
  }
  return y;
}

// Accumulates dW += g^T x, db += sum_rows(g) and returns g W (dL/dx).
Matrix affine_backward(const DenseLayer& layer, const Matrix& x, const Matrix& g,
                       DenseLayer& grad) {
  for (std::size_t r = 0; r < g.rows(); ++r) {
    for (std::size_t o = 0; o < g.cols(); ++o) {
      const double gv = g(r, o);
      if (gv == 0.0) continue;
      grad.bias[o] += gv;
      auto gw = grad.weight.row(o);
      const auto in = x.row(r);
      for (std::size_t c = 0; c < gw.size(); ++c) gw[c] += gv * in[c];
    }
  }
  Matrix dx(x.rows(), x.cols(), 0.0);
  for (std::size_t r = 0; r < g.rows(); ++r) {
    for (std::size_t o = 0; o < g.cols(); ++o) {
      const double gv = g(r, o);
      if (gv == 0.0) continue;
      const auto w = layer.weight.row(o);
      auto dxr = dx.row(r);
      for (std::size_t c = 0; c < w.size(); ++c) dxr[c] += gv * w[c];
    }
  }
  return dx;
}

}  // namespace

ModelParams init_params(std::uint64_t seed, int input_dim,
                        std::span<const int> hidden_dims, int embed_dim,
                        int num_groups) {
  if (input_dim < 1 || embed_dim < 1 || num_groups < 1) {
    throw ConfigError("invalid-dims: input_dim, embed_dim and num_groups must be >= 1");
  }
  for (int h : hidden_dims) {
    if (h < 1) throw ConfigError("invalid-dims: hidden dims must be >= 1");
  }
  rng::Engine eng(seed);
  ModelParams params;
  int in_dim = input_dim;
  for (int h : hidden_dims) {
    params.encoder.push_back(glorot_layer(eng, in_dim, h));
    in_dim = h;
  }
  params.encoder.push_back(glorot_layer(eng, in_dim, embed_dim));
  params.classifier = glorot_layer(eng, embed_dim, num_groups);
  params.experts.reserve(static_cast<std::size_t>(num_groups));
  for (int g = 0; g < num_groups; ++g) {
    params.experts.push_back(glorot_layer(eng, embed_dim, 1));
  }
  return params;
}

ModelParams zeros_like(const ModelParams& params) {
  ModelParams zeros = params;
  for (auto view : param_views(zeros)) {
    std::fill(view.begin(), view.end(), 0.0);
  }
  return zeros;
}

namespace {

template <typename Params, typename Span>
std::vector<Span> views_impl(Params& params) {
  std::vector<Span> views;
  views.reserve(2 * (params.encoder.size() + 1 + params.experts.size()));
  auto add = [&views](auto& layer) {
    views.push_back(layer.weight.flat());
    views.push_back(Span(layer.bias));
  };
  for (auto& layer : params.encoder) add(layer);
  add(params.classifier);
  for (auto& layer : params.experts) add(layer);
  return views;
}

}  // namespace

std::vector<std::span<double>> param_views(ModelParams& params) {
  return views_impl<ModelParams, std::span<double>>(params);
}

std::vector<std::span<const double>> param_views(const ModelParams& params) {
  return views_impl<const ModelParams, std::span<const double>>(params);
}

Matrix encode(const ModelParams& params, const Matrix& x, ForwardCache* cache) {
  if (cache) {
    cache->layer_inputs.clear();
    cache->preacts.clear();
  }
  Matrix h = x;
  const std::size_t layers = params.encoder.size();
  for (std::size_t l = 0; l < layers; ++l) {
    Matrix pre = affine(params.encoder[l], h);
    if (cache) {
      cache->layer_inputs.push_back(std::move(h));
      cache->preacts.push_back(pre);
    }
    if (l + 1 < layers) {
      for (double& v : pre.flat()) v = v > 0.0 ? v : 0.0;
    }
    h = std::move(pre);
  }
  return h;
}

Matrix classify(const ModelParams& params, const Matrix& z) {
  return affine(params.classifier, z);
}

double regress(const ModelParams& params, std::span<const double> z_row, int g) {
  if (g < 0 || g >= params.num_groups()) {
    throw ConfigError("invalid-group: expert index " + std::to_string(g) +
                      " outside {0.." + std::to_string(params.num_groups() - 1) + "}");
  }
  const DenseLayer& expert = params.experts[static_cast<std::size_t>(g)];
  if (z_row.size() != expert.in_dim()) {
    throw DataError("shape-mismatch: embedding dim " + std::to_string(z_row.size()) +
                    " does not match expert input " + std::to_string(expert.in_dim()));
  }
  double acc = expert.bias[0];
  const auto w = expert.weight.row(0);
  for (std::size_t c = 0; c < w.size(); ++c) acc += w[c] * z_row[c];
  return acc;
}

Matrix backward(const ModelParams& params, const ForwardCache& cache,
                const UpstreamGrads& upstream, ModelParams& grads) {
  if (cache.preacts.size() != params.encoder.size() ||
      cache.layer_inputs.size() != params.encoder.size()) {
    throw DataError("stale-cache: cache does not match the encoder architecture");
  }
  const Matrix& z = cache.embeddings();
  const std::size_t batch = z.rows();
  const std::size_t embed = z.cols();

  Matrix dz(batch, embed, 0.0);
  if (!upstream.d_embeddings.empty()) {
    if (upstream.d_embeddings.rows() != batch || upstream.d_embeddings.cols() != embed) {
      throw DataError("stale-cache: d_embeddings shape mismatch");
    }
    dz = upstream.d_embeddings;
  }

  if (!upstream.d_logits.empty()) {
    if (upstream.d_logits.rows() != batch ||
        upstream.d_logits.cols() != params.classifier.out_dim()) {
      throw DataError("stale-cache: d_logits shape mismatch");
    }
    Matrix dz_cls =
        affine_backward(params.classifier, z, upstream.d_logits, grads.classifier);
    for (std::size_t i = 0; i < dz.flat().size(); ++i) dz.flat()[i] += dz_cls.flat()[i];
  }

  if (!upstream.d_expert_out.empty()) {
    if (upstream.d_expert_out.size() != batch ||
        upstream.expert_route.size() != batch) {
      throw DataError("stale-cache: expert gradient vectors must cover the batch");
    }
    for (std::size_t r = 0; r < batch; ++r) {
      const double gv = upstream.d_expert_out[r];
      const int route = upstream.expert_route[r];
      if (route < 0 || route >= params.num_groups()) {
        throw DataError("invalid-group: routed expert " + std::to_string(route));
      }
      if (gv == 0.0) continue;
      const auto g_idx = static_cast<std::size_t>(route);
      const auto w = params.experts[g_idx].weight.row(0);
      auto gw = grads.experts[g_idx].weight.row(0);
      grads.experts[g_idx].bias[0] += gv;
      auto zr = z.row(r);
      auto dzr = dz.row(r);
      for (std::size_t c = 0; c < embed; ++c) {
        gw[c] += gv * zr[c];
        dzr[c] += gv * w[c];
      }
    }
  }

  // Encoder: rectifier derivative masks every pre-activation except the
  // final linear layer's.
  Matrix g = std::move(dz);
  for (std::size_t l = params.encoder.size(); l-- > 0;) {
    if (l + 1 < params.encoder.size()) {
      // g holds dL/d h_{l+1} with h_{l+1} = relu(preacts[l]).
      const Matrix& pre = cache.preacts[l];
      for (std::size_t i = 0; i < g.flat().size(); ++i) {
        if (pre.flat()[i] <= 0.0) g.flat()[i] = 0.0;
      }
    }
    g = affine_backward(params.encoder[l], cache.layer_inputs[l], g, grads.encoder[l]);
  }
  return g;
}

}  // namespace groupdir
