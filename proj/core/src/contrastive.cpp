#include "groupdir/contrastive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "groupdir/errors.hpp"
#include "groupdir/grouping.hpp"

namespace groupdir {

namespace {

constexpr double kNormEps = 1e-12;

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DataError("cosine_similarity: dimension mismatch");
  }
  const double na = std::sqrt(dot(a, a));
  const double nb = std::sqrt(dot(b, b));
  if (na <= kNormEps || nb <= kNormEps) {
    throw DataError("zero-vector: cosine similarity of a (near-)zero vector");
  }
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

// Denominators depend on (i, d(g_i, g_j)) only, so per anchor we bucket the
// exp-similarities by group distance and take suffix sums: one O(B + G) pass
// per anchor instead of an O(B) scan per pair. The gradient reuses the same
// buckets through prefix sums of 1/denominator.
double grc_eval(const Matrix& z, std::span<const int> groups, double temperature,
                Matrix* grad) {
  const std::size_t b = z.rows();
  const std::size_t dim = z.cols();
  if (grad) *grad = Matrix(b, dim, 0.0);
  if (b < 2) return 0.0;

  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
  if (groups.size() != b) {
    throw DataError("grc_loss: groups length " + std::to_string(groups.size()) +
                    " does not match batch size " + std::to_string(b));
  }

  // Row norms and unit rows.
  std::vector<double> norms(b);
  Matrix unit(b, dim);
  for (std::size_t i = 0; i < b; ++i) {
    const double n = std::sqrt(dot(z.row(i), z.row(i)));
    if (n <= kNormEps) {
      throw DataError("zero-vector: embedding row " + std::to_string(i) +
                      " has (near-)zero norm");
    }
    norms[i] = n;
    for (std::size_t c = 0; c < dim; ++c) unit(i, c) = z(i, c) / n;
  }

  // cos(i,j) and a = cos/t; symmetric.
  Matrix cosine(b, b, 1.0);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = i + 1; j < b; ++j) {
      const double c = std::clamp(dot(unit.row(i), unit.row(j)), -1.0, 1.0);
      cosine(i, j) = c;
      cosine(j, i) = c;
    }
  }

  int max_dist = 0;
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      max_dist = std::max(max_dist, group_distance(groups[i], groups[j]));
    }
  }
  const std::size_t buckets = static_cast<std::size_t>(max_dist) + 1;

  double sum_logs = 0.0;
  Matrix d_a;  // dL/d(a_ij), scaled by B(B-1) until the end
  if (grad) d_a = Matrix(b, b, 0.0);

  std::vector<double> exp_sim(b);
  std::vector<double> tail(buckets + 1);
  std::vector<double> inv_tail_prefix(buckets);
  for (std::size_t i = 0; i < b; ++i) {
    // Shift by the row max before exponentiating; the shift cancels in every
    // ratio below and keeps tiny temperatures from overflowing.
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < b; ++k) {
      if (k != i) mx = std::max(mx, cosine(i, k) / temperature);
    }
    std::fill(tail.begin(), tail.end(), 0.0);
    for (std::size_t k = 0; k < b; ++k) {
      if (k == i) continue;
      exp_sim[k] = std::exp(cosine(i, k) / temperature - mx);
      tail[static_cast<std::size_t>(group_distance(groups[i], groups[k]))] += exp_sim[k];
    }
    for (std::size_t d = buckets; d-- > 0;) tail[d] += tail[d + 1];

    for (std::size_t j = 0; j < b; ++j) {
      if (j == i) continue;
      const auto d_ij = static_cast<std::size_t>(group_distance(groups[i], groups[j]));
      sum_logs += (cosine(i, j) / temperature - mx) - std::log(tail[d_ij]);
    }

    if (grad) {
      // inv_tail_prefix[d] = sum over j != i with d_ij <= d of 1 / tail[d_ij].
      std::fill(inv_tail_prefix.begin(), inv_tail_prefix.end(), 0.0);
      for (std::size_t j = 0; j < b; ++j) {
        if (j == i) continue;
        const auto d_ij = static_cast<std::size_t>(group_distance(groups[i], groups[j]));
        inv_tail_prefix[d_ij] += 1.0 / tail[d_ij];
      }
      for (std::size_t d = 1; d < buckets; ++d) {
        inv_tail_prefix[d] += inv_tail_prefix[d - 1];
      }
      for (std::size_t m = 0; m < b; ++m) {
        if (m == i) continue;
        const auto d_im = static_cast<std::size_t>(group_distance(groups[i], groups[m]));
        d_a(i, m) = -1.0 + exp_sim[m] * inv_tail_prefix[d_im];
      }
    }
  }

  const double pair_count = static_cast<double>(b) * static_cast<double>(b - 1);
  const double loss = -sum_logs / pair_count;

  if (grad) {
    // a_ij = cos(z_i, z_j) / t with d cos / d z_i = (u_j - cos * u_i) / |z_i|;
    // entries (i,m) and (m,i) both touch the same cosine.
    for (std::size_t p = 0; p < b; ++p) {
      for (std::size_t q = 0; q < b; ++q) {
        if (q == p) continue;
        const double w =
            (d_a(p, q) + d_a(q, p)) / (pair_count * temperature * norms[p]);
        const double c = cosine(p, q);
        for (std::size_t k = 0; k < dim; ++k) {
          (*grad)(p, k) += w * (unit(q, k) - c * unit(p, k));
        }
      }
    }
  }
  return loss;
}

double grc_loss(const EmbeddingBatch& batch) {
  return grc_eval(batch.z, batch.groups, batch.temperature, nullptr);
}

Matrix grc_loss_backward(const EmbeddingBatch& batch) {
  Matrix grad;
  grc_eval(batch.z, batch.groups, batch.temperature, &grad);
  return grad;
}

}  // namespace groupdir
