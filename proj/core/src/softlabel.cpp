#include "groupdir/softlabel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "groupdir/errors.hpp"

namespace groupdir {

namespace {

void check_group(int g, int num_groups) {
  if (g < 0 || g >= num_groups) {
    throw ConfigError("invalid-group: index " + std::to_string(g) +
                      " outside {0.." + std::to_string(num_groups - 1) + "}");
  }
}

void check_finite(std::span<const double> logits) {
  for (double v : logits) {
    if (!std::isfinite(v)) throw DataError("non-finite-input: logits contain NaN or inf");
  }
}

}  // namespace

SoftLabelCodec make_codec(int num_groups, double beta) {
  if (num_groups < 2) {
    throw ConfigError("invalid-groups: codec needs num_groups >= 2, got " +
                      std::to_string(num_groups));
  }
  if (!(beta > 0.0)) throw ConfigError("beta must be positive");
  return SoftLabelCodec{num_groups, beta};
}

std::vector<double> encode_soft_logits(const SoftLabelCodec& codec, int g) {
  check_group(g, codec.num_groups);
  std::vector<double> logits(static_cast<std::size_t>(codec.num_groups));
  for (int j = 0; j < codec.num_groups; ++j) {
    logits[static_cast<std::size_t>(j)] =
        static_cast<double>(codec.num_groups) - codec.beta * std::abs(j - g);
  }
  return logits;
}

SoftTarget soft_target(const SoftLabelCodec& codec, int g) {
  const auto logits = encode_soft_logits(codec, g);
  const auto logp = log_softmax(logits);
  SoftTarget target;
  target.group = g;
  target.probs.resize(logp.size());
  std::transform(logp.begin(), logp.end(), target.probs.begin(),
                 [](double lp) { return std::exp(lp); });
  return target;
}

std::vector<double> log_softmax(std::span<const double> logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - mx);
  const double log_sum = std::log(sum) + mx;
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - log_sum;
  return out;
}

LossWithGrad soft_ce_loss(std::span<const double> logits, const SoftTarget& target) {
  check_finite(logits);
  if (logits.size() != target.probs.size()) {
    throw DataError("soft_ce_loss: logits length " + std::to_string(logits.size()) +
                    " does not match target length " + std::to_string(target.probs.size()));
  }
  const auto logp = log_softmax(logits);
  LossWithGrad result;
  result.grad_logits.resize(logits.size());
  for (std::size_t j = 0; j < logits.size(); ++j) {
    result.value -= target.probs[j] * logp[j];
    result.grad_logits[j] = std::exp(logp[j]) - target.probs[j];
  }
  return result;
}

LossWithGrad hard_ce_loss(std::span<const double> logits, int g) {
  check_finite(logits);
  check_group(g, static_cast<int>(logits.size()));
  const auto logp = log_softmax(logits);
  LossWithGrad result;
  result.value = -logp[static_cast<std::size_t>(g)];
  result.grad_logits.resize(logits.size());
  for (std::size_t j = 0; j < logits.size(); ++j) {
    result.grad_logits[j] = std::exp(logp[j]);
  }
  result.grad_logits[static_cast<std::size_t>(g)] -= 1.0;
  return result;
}

LossWithGrad la_ce_loss(std::span<const double> logits, int g,
                        std::span<const double> prior, double tau) {
  check_finite(logits);
  check_group(g, static_cast<int>(logits.size()));
  if (prior.size() != logits.size()) {
    throw ConfigError("invalid-prior: prior length does not match logits");
  }
  double prior_sum = 0.0;
  for (double p : prior) {
    if (!(p > 0.0)) throw ConfigError("invalid-prior: entries must be strictly positive");
    prior_sum += p;
  }
  if (std::abs(prior_sum - 1.0) > 1e-9) {
    throw ConfigError("invalid-prior: entries must sum to 1, got " +
                      std::to_string(prior_sum));
  }
  std::vector<double> adjusted(logits.size());
  for (std::size_t j = 0; j < logits.size(); ++j) {
    adjusted[j] = logits[j] + tau * std::log(prior[j]);
  }
  // d(adjusted)/d(logits) is the identity, so the hard-CE gradient on the
  // adjusted logits is already the gradient with respect to the originals.
  return hard_ce_loss(adjusted, g);
}

}  // namespace groupdir
