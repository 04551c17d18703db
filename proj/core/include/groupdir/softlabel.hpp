#pragma once

#include <span>
#include <vector>

namespace groupdir {

// Symmetric descending soft-label codec: group g is encoded with peak value
// num_groups at index g, descending by beta per step of group distance.
struct SoftLabelCodec {
  int num_groups = 0;
  double beta = 1.0;
};

// Probability target over groups. probs is positive, sums to 1, peaks at
// `group` and strictly decreases with distance from it.
struct SoftTarget {
  std::vector<double> probs;
  int group = 0;
};

// Scalar loss together with its exact gradient with respect to the logits.
struct LossWithGrad {
  double value = 0.0;
  std::vector<double> grad_logits;
};

SoftLabelCodec make_codec(int num_groups, double beta);

// l[j] = num_groups - beta * |j - g|.
std::vector<double> encode_soft_logits(const SoftLabelCodec& codec, int g);

// softmax(encode_soft_logits(codec, g)).
SoftTarget soft_target(const SoftLabelCodec& codec, int g);

// value = -sum_j q_j log softmax(logits)_j, grad = softmax(logits) - q.
LossWithGrad soft_ce_loss(std::span<const double> logits, const SoftTarget& target);

// Standard cross-entropy against the one-hot target g.
LossWithGrad hard_ce_loss(std::span<const double> logits, int g);

// Logit-adjusted cross-entropy: hard CE on logits + tau * log(prior), with
// the gradient taken with respect to the original logits.
LossWithGrad la_ce_loss(std::span<const double> logits, int g,
                        std::span<const double> prior, double tau);

// log softmax(x), shift-stable.
std::vector<double> log_softmax(std::span<const double> logits);

}  // namespace groupdir
