#pragma once

#include <span>
#include <vector>

#include "groupdir/matrix.hpp"

namespace groupdir {

// One batch of feature representations with their group labels.
struct EmbeddingBatch {
  Matrix z;                  // B x D embeddings
  std::vector<int> groups;   // B group indices
  double temperature = 2.5;
};

// cos(a, b), clamped to [-1, 1]. Throws DataError on (near-)zero vectors.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

// Ordinal group-aware contrastive loss: for every ordered pair (i, j), the
// pair similarity is normalized against all samples k != i whose group
// distance from i is at least d(g_i, g_j). Returns 0 for batches below two
// samples. Always >= 0 and finite, since k = j itself is in every
// denominator.
double grc_loss(const EmbeddingBatch& batch);

// Exact gradient of grc_loss with respect to every embedding coordinate,
// including the cosine-normalization Jacobian.
Matrix grc_loss_backward(const EmbeddingBatch& batch);

// Fused forward/backward used by the training loop; grad may be null.
double grc_eval(const Matrix& z, std::span<const int> groups, double temperature,
                Matrix* grad);

}  // namespace groupdir
