#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "kgd/tape.hpp"

// Differentiable primitives. Shapes are checked eagerly; a mismatch throws
// ShapeError naming the op and both shapes. Broadcasting exists only where an
// op says so (add_bias, scale_rows).
namespace kgd::ad {

Var matmul(Var a, Var b);  // [n x k] * [k x m]
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);  // elementwise
Var div(Var a, Var b);  // elementwise
Var add_bias(Var a, Var bias);     // [n x m] + [1 x m] on every row
Var scale_rows(Var a, Var w);      // [n x m] * [n x 1] per row
Var scale(Var a, double factor);
Var add_scalar(Var a, double c);

Var sigmoid(Var a);
Var relu(Var a);
Var log(Var a);
Var exp(Var a);
// Zero-subgradient convention: no gradient flows where the bound is active.
Var clamp_min(Var a, double lo);
Var clamp(Var a, double lo, double hi);

Var concat_cols(const std::vector<Var>& parts);
Var slice_rows(Var a, std::size_t begin, std::size_t end);
// Multiplies by a pre-sampled mask (0 or 1/(1-p) entries for inverted dropout).
Var dropout(Var a, const Tensor& mask);

Var gather_rows(Var a, std::span<const std::size_t> index);
// out[index[i]] += a[i]; rows not indexed stay zero.
Var scatter_add_rows(Var a, std::span<const std::size_t> index, std::size_t out_rows);

Var reduce_sum(Var a);   // -> 1x1
Var reduce_mean(Var a);  // -> 1x1
Var row_sum(Var a);      // [n x m] -> [n x 1]

// x [n x d] times a block-diagonal matrix given as blocks [B x k x k], d = B*k.
Var block_diag_matmul(Var x, Var blocks);

// Fused message passing: out[targets[e]] += coef[e] * x[sources[e]], with
// out of shape [out_rows x cols(x)] and coef [E x 1]. Same result as
// scatter_add_rows(scale_rows(gather_rows(x, sources), coef), targets, out_rows)
// without the E-row intermediates.
Var edge_aggregate(Var x, std::span<const std::size_t> sources,
                   std::span<const std::size_t> targets, Var coef, std::size_t out_rows);

// Fused sum of gathers: out[i] = sum_p parts[p][index[p][i]].
Var gather_add(const std::vector<Var>& parts,
               const std::vector<std::span<const std::size_t>>& index);

// Fused trilinear product per row i: sum_k a[ia[i], k] * b[ib[i], k] * c[ic[i], k],
// returned as [n x 1]. a and c may be the same Var.
Var gathered_triple_product(Var a, std::span<const std::size_t> ia, Var b,
                            std::span<const std::size_t> ib, Var c,
                            std::span<const std::size_t> ic);

// Elementwise map with an explicit derivative, for penalties and other
// scalar functions that have no dedicated primitive.
Var elementwise(Var a, std::string_view op, const std::function<double(double)>& f,
                const std::function<double(double)>& df);

// Dropout mask for a tensor of the given shape; entries 0 or 1/(1-rate).
template <class Rng>
Tensor dropout_mask(const Shape& shape, double rate, Rng& rng);

}  // namespace kgd::ad

#include <random>

namespace kgd::ad {

template <class Rng>
Tensor dropout_mask(const Shape& shape, double rate, Rng& rng) {
  Tensor m(shape, 1.0);
  if (rate <= 0.0) return m;
  std::bernoulli_distribution keep(1.0 - rate);
  const double s = 1.0 / (1.0 - rate);
  for (double& v : m.values()) v = keep(rng) ? s : 0.0;
  return m;
}

}  // namespace kgd::ad
