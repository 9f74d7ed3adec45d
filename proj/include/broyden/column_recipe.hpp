#pragma once

// Column layout of the compact factors. The tall factor is never stored;
// each column is a combination a*s_j + b*y_j of one stored pair, which is
// enough to apply it, its transpose, and to assemble its Gram matrix from
// the cached inner products.

#include <vector>

#include "broyden/pair_store.hpp"

namespace broyden {

enum class ColumnKind { RankTwoS, RankTwoY, Sr1Combined };

struct Column {
  ColumnKind kind;
  std::size_t pair;

  friend bool operator==(const Column&, const Column&) = default;
};

/// Interleaved per-step blocks in step order: (S(j), Y(j)) for rank-two
/// steps and a single Sr1Combined(j) for rank-one steps.
using ColumnRecipe = std::vector<Column>;

/// Scales attached to s and y columns. The forward factor uses
/// (gamma, 1), giving columns gamma*s, y and y - gamma*s; the inverse factor
/// uses (1, 1/gamma), giving s, y/gamma and y/gamma - s.
template <typename Scalar>
struct ColumnScales {
  Scalar s;
  Scalar y;
};

template <typename Scalar>
struct ColumnCoeffs {
  Scalar on_s;
  Scalar on_y;
};

template <typename Scalar>
ColumnCoeffs<Scalar> coeffs(const Column& c, const ColumnScales<Scalar>& scales) {
  switch (c.kind) {
    case ColumnKind::RankTwoS: return {scales.s, Scalar(0)};
    case ColumnKind::RankTwoY: return {Scalar(0), scales.y};
    case ColumnKind::Sr1Combined: return {-scales.s, scales.y};
  }
  return {Scalar(0), Scalar(0)};
}

template <typename Scalar>
void append_step_columns(ColumnRecipe& recipe, std::size_t step, bool sr1) {
  if (sr1) {
    recipe.push_back({ColumnKind::Sr1Combined, step});
  } else {
    recipe.push_back({ColumnKind::RankTwoS, step});
    recipe.push_back({ColumnKind::RankTwoY, step});
  }
}

/// Psi' s_j from the caches (columns restricted to the current recipe).
template <typename Scalar>
Vector<Scalar> psi_t_s(const ColumnRecipe& recipe, const ColumnScales<Scalar>& scales,
                       const GramCache<Scalar>& g, std::size_t j) {
  Vector<Scalar> out(static_cast<Eigen::Index>(recipe.size()));
  const auto jj = static_cast<Eigen::Index>(j);
  for (std::size_t c = 0; c < recipe.size(); ++c) {
    const auto w = coeffs(recipe[c], scales);
    const auto i = static_cast<Eigen::Index>(recipe[c].pair);
    out(static_cast<Eigen::Index>(c)) = w.on_s * g.StS(i, jj) + w.on_y * g.StY(jj, i);
  }
  return out;
}

/// Psi' y_j from the caches.
template <typename Scalar>
Vector<Scalar> psi_t_y(const ColumnRecipe& recipe, const ColumnScales<Scalar>& scales,
                       const GramCache<Scalar>& g, std::size_t j) {
  Vector<Scalar> out(static_cast<Eigen::Index>(recipe.size()));
  const auto jj = static_cast<Eigen::Index>(j);
  for (std::size_t c = 0; c < recipe.size(); ++c) {
    const auto w = coeffs(recipe[c], scales);
    const auto i = static_cast<Eigen::Index>(recipe[c].pair);
    out(static_cast<Eigen::Index>(c)) = w.on_s * g.StY(i, jj) + w.on_y * g.YtY(i, jj);
  }
  return out;
}

/// Psi' Psi assembled from the caches in O(l^2).
template <typename Scalar>
Matrix<Scalar> psi_gram(const ColumnRecipe& recipe, const ColumnScales<Scalar>& scales,
                        const GramCache<Scalar>& g) {
  const auto l = static_cast<Eigen::Index>(recipe.size());
  Matrix<Scalar> G(l, l);
  for (Eigen::Index a = 0; a < l; ++a) {
    const auto wa = coeffs(recipe[a], scales);
    const auto ia = static_cast<Eigen::Index>(recipe[a].pair);
    for (Eigen::Index b = 0; b <= a; ++b) {
      const auto wb = coeffs(recipe[b], scales);
      const auto ib = static_cast<Eigen::Index>(recipe[b].pair);
      G(a, b) = G(b, a) = wa.on_s * wb.on_s * g.StS(ia, ib) + wa.on_s * wb.on_y * g.StY(ia, ib) +
                          wa.on_y * wb.on_s * g.StY(ib, ia) + wa.on_y * wb.on_y * g.YtY(ia, ib);
    }
  }
  return G;
}

/// Psi * coeffs, O(n l). Coefficients are gathered per pair first so each
/// pair costs a single pass over the output.
template <typename Scalar>
Vector<Scalar> apply_columns(const ColumnRecipe& recipe, const ColumnScales<Scalar>& scales,
                             const PairSequence<Scalar>& seq, const Vector<Scalar>& c) {
  if (c.size() != static_cast<Eigen::Index>(recipe.size()))
    throw Error(ErrorKind::DimensionMismatch, "coefficient length differs from column count");
  Vector<Scalar> out = Vector<Scalar>::Zero(seq.n);
  std::size_t k = 0;
  while (k < recipe.size()) {
    const std::size_t j = recipe[k].pair;
    Scalar on_s(0);
    Scalar on_y(0);
    for (; k < recipe.size() && recipe[k].pair == j; ++k) {
      const auto w = coeffs(recipe[k], scales);
      on_s += c(static_cast<Eigen::Index>(k)) * w.on_s;
      on_y += c(static_cast<Eigen::Index>(k)) * w.on_y;
    }
    out.noalias() += on_s * seq.S[j] + on_y * seq.Y[j];
  }
  return out;
}

/// Psi' x, O(n l).
template <typename Scalar>
Vector<Scalar> apply_columns_t(const ColumnRecipe& recipe, const ColumnScales<Scalar>& scales,
                               const PairSequence<Scalar>& seq, const Vector<Scalar>& x) {
  if (x.size() != seq.n) throw Error(ErrorKind::DimensionMismatch, "vector length differs from n");
  // Each pair contributes s'x and y'x at most once even if it owns two columns.
  Vector<Scalar> out(static_cast<Eigen::Index>(recipe.size()));
  std::size_t k = 0;
  while (k < recipe.size()) {
    const std::size_t j = recipe[k].pair;
    const Scalar sx = seq.S[j].dot(x);
    const Scalar yx = seq.Y[j].dot(x);
    for (; k < recipe.size() && recipe[k].pair == j; ++k) {
      const auto w = coeffs(recipe[k], scales);
      out(static_cast<Eigen::Index>(k)) = w.on_s * sx + w.on_y * yx;
    }
  }
  return out;
}

/// Explicit n x l matrix of the columns (tests, eigenvectors).
template <typename Scalar>
Matrix<Scalar> materialize_columns(const ColumnRecipe& recipe,
                                   const ColumnScales<Scalar>& scales,
                                   const PairSequence<Scalar>& seq) {
  Matrix<Scalar> P(seq.n, static_cast<Eigen::Index>(recipe.size()));
  for (std::size_t k = 0; k < recipe.size(); ++k) {
    const auto w = coeffs(recipe[k], scales);
    P.col(static_cast<Eigen::Index>(k)) = w.on_s * seq.S[recipe[k].pair] + w.on_y * seq.Y[recipe[k].pair];
  }
  return P;
}

}  // namespace broyden
