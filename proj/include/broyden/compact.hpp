#pragma once

#include <cmath>
#include <algorithm>

#include "broyden/column_recipe.hpp"
#include "broyden/pair_store.hpp"

namespace broyden {

/// Scalars of one forward step. For rank-two steps the 2x2 update block is
/// [alpha beta; beta delta]; for SR1 steps only beta is used and
/// alpha == -beta holds up to rounding.
template <typename Scalar>
struct StepScalars {
  bool sr1 = false;
  Scalar phi{};
  Scalar sBs{};      // s_j' B_j s_j
  Scalar yts{};      // y_j' s_j
  Scalar alpha{};
  Scalar beta{};
  Scalar delta{};
  Scalar gamma_j{};  // phi / (alpha + beta); zero at SR1 steps
};

/// B = gamma I + Psi M Psi' with Psi described by `recipe` over the stored
/// pairs (columns gamma*s_j, y_j, or y_j - gamma*s_j).
template <typename Scalar>
struct CompactFactor {
  Scalar gamma{1};
  ColumnRecipe recipe;
  Matrix<Scalar> Mhat;
  Vector<Scalar> GammaDiag;
  std::vector<StepScalars<Scalar>> steps;
  SharedPairs<Scalar> pairs;

  Eigen::Index n() const { return pairs ? pairs->n : 0; }
  Eigen::Index cols() const { return static_cast<Eigen::Index>(recipe.size()); }
  ColumnScales<Scalar> scales() const { return {gamma, Scalar(1)}; }
};

/// phi giving the SR1 update: y's / (y's - s'Bs).
template <typename Scalar>
Scalar phi_sr1(Scalar sBs, Scalar yts) {
  using std::abs;
  const Scalar den = yts - sBs;
  if (!(abs(den) > Scalar(kCurvatureFloor) * std::max(abs(yts), abs(sBs))))
    throw Error(ErrorKind::Sr1Undefined, "y's equals s'Bs to within the floor");
  return yts / den;
}

namespace detail {

template <typename Scalar>
bool near_sr1(Scalar phi, Scalar sBs, Scalar yts) {
  using std::abs;
  const Scalar den = yts - sBs;
  if (!(abs(den) > Scalar(kCurvatureFloor) * std::max(abs(yts), abs(sBs)))) return false;
  const Scalar target = yts / den;
  return abs(phi - target) <= Scalar(kSr1DetectTol) * std::max(Scalar(1), abs(target));
}

template <typename Scalar>
bool tiny_relative(Scalar value, Scalar scale) {
  using std::abs;
  return !(abs(value) > Scalar(kCurvatureFloor) * scale);
}

// Symmetric bordering of M by one (SR1) or two (rank-two) rows/columns.
//   SR1:      [M + c pp',  u p ;  u p',  c]
//   rank-two: [M + w pp',  a p, b p ;  a p', a1, b1 ;  b p', b1, d1]
// M += c pp', written entry by entry so the result stays exactly symmetric
// (a fused scale-and-outer-product may round (c p_i) p_j and (c p_j) p_i
// differently).
template <typename Scalar>
void add_symmetric_outer(Eigen::Ref<Matrix<Scalar>> M, const Vector<Scalar>& p, Scalar c) {
  const Eigen::Index l = p.size();
  for (Eigen::Index j = 0; j < l; ++j)
    for (Eigen::Index i = j; i < l; ++i) {
      const Scalar v = M(i, j) + c * (p(i) * p(j));
      M(i, j) = v;
      M(j, i) = v;
    }
}

template <typename Scalar>
Matrix<Scalar> border_one(const Matrix<Scalar>& M, const Vector<Scalar>& p, Scalar corner,
                          Scalar cross, Scalar outer) {
  const Eigen::Index l = M.rows();
  Matrix<Scalar> out(l + 1, l + 1);
  out.topLeftCorner(l, l) = M;
  add_symmetric_outer<Scalar>(out.topLeftCorner(l, l), p, outer);
  out.col(l).head(l) = cross * p;
  out.row(l).head(l) = cross * p.transpose();
  out(l, l) = corner;
  return out;
}

template <typename Scalar>
Matrix<Scalar> border_two(const Matrix<Scalar>& M, const Vector<Scalar>& p, Scalar outer,
                          Scalar cross1, Scalar cross2, Scalar a, Scalar b, Scalar d) {
  const Eigen::Index l = M.rows();
  Matrix<Scalar> out(l + 2, l + 2);
  out.topLeftCorner(l, l) = M;
  add_symmetric_outer<Scalar>(out.topLeftCorner(l, l), p, outer);
  out.col(l).head(l) = cross1 * p;
  out.row(l).head(l) = cross1 * p.transpose();
  out.col(l + 1).head(l) = cross2 * p;
  out.row(l + 1).head(l) = cross2 * p.transpose();
  out(l, l) = a;
  out(l, l + 1) = out(l + 1, l) = b;
  out(l + 1, l + 1) = d;
  return out;
}

}  // namespace detail

/// Forward recursion for the middle matrix: for each step, p = M (Psi' s_j),
/// s'B_j s = gamma s's + (Psi' s)'p, then border M with the 2x2 (or 1x1 for
/// SR1) update block. Nothing is inverted.
template <typename Scalar>
CompactFactor<Scalar> build_compact(SharedPairs<Scalar> pairs, const GramCache<Scalar>& cache,
                                    const PhiSchedule<Scalar>& schedule) {
  using std::abs;
  if (!pairs) throw Error(ErrorKind::InvalidArgument, "null pair sequence");
  const std::size_t m = pairs->size();
  if (m == 0) throw Error(ErrorKind::InvalidArgument, "at least one pair is required");
  if (schedule.size() != m)
    throw Error(ErrorKind::InvalidArgument, "schedule length differs from pair count");
  if (cache.size() != static_cast<Eigen::Index>(m))
    throw Error(ErrorKind::InvalidArgument, "cache out of sync with pair sequence");

  CompactFactor<Scalar> f;
  f.gamma = pairs->gamma;
  f.pairs = std::move(pairs);
  f.GammaDiag = Vector<Scalar>::Zero(static_cast<Eigen::Index>(m));
  f.steps.reserve(m);
  const auto scales = f.scales();

  for (std::size_t j = 0; j < m; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    const Vector<Scalar> ps = psi_t_s(f.recipe, scales, cache, j);
    const Vector<Scalar> p = f.Mhat.rows() ? Vector<Scalar>(f.Mhat * ps) : Vector<Scalar>(0);
    const Scalar sB0s = f.gamma * cache.StS(jj, jj);
    const Scalar correction = ps.dot(p);

    StepScalars<Scalar> st;
    st.sr1 = is_sr1(schedule[j]);
    st.sBs = sB0s + correction;
    st.yts = cache.StY(jj, jj);
    if (detail::tiny_relative(st.yts, std::sqrt(cache.StS(jj, jj) * cache.YtY(jj, jj))))
      throw Error(ErrorKind::DegenerateDenominator, "|y's| below floor", j);
    if (detail::tiny_relative(st.sBs, abs(sB0s) + abs(correction)))
      throw Error(ErrorKind::DegenerateDenominator, "|s'B_j s| below floor", j);

    if (st.sr1) {
      try {
        st.phi = phi_sr1(st.sBs, st.yts);
      } catch (const Error& e) {
        throw e.at_step(j);
      }
    } else {
      st.phi = std::get<Scalar>(schedule[j]);
      if (detail::near_sr1(st.phi, st.sBs, st.yts))
        throw Error(ErrorKind::NearSingularUpdate,
                    "numeric phi is within tolerance of the SR1 value; mark the step sr1", j);
    }
    st.alpha = -(Scalar(1) - st.phi) / st.sBs;
    st.beta = -st.phi / st.yts;
    st.delta = (Scalar(1) + st.phi * st.sBs / st.yts) / st.yts;

    if (st.sr1) {
      st.gamma_j = Scalar(0);
      f.Mhat = detail::border_one<Scalar>(f.Mhat, p, -st.beta, st.beta, -st.beta);
    } else {
      st.gamma_j = st.phi / (st.alpha + st.beta);
      f.Mhat = detail::border_two<Scalar>(f.Mhat, p, st.alpha, st.alpha, st.beta, st.alpha,
                                          st.beta, st.delta);
    }
    f.GammaDiag(jj) = st.gamma_j;
    append_step_columns<Scalar>(f.recipe, j, st.sr1);
    f.steps.push_back(st);
  }
  return f;
}

template <typename Scalar>
CompactFactor<Scalar> build_compact(const PairSequence<Scalar>& seq,
                                    const GramCache<Scalar>& cache,
                                    const PhiSchedule<Scalar>& schedule) {
  return build_compact(snapshot(seq), cache, schedule);
}

template <typename Scalar>
Vector<Scalar> apply_psi_hat(const CompactFactor<Scalar>& f, const Vector<Scalar>& coeffs) {
  return apply_columns(f.recipe, f.scales(), *f.pairs, coeffs);
}

template <typename Scalar>
Vector<Scalar> apply_psi_hat_T(const CompactFactor<Scalar>& f, const Vector<Scalar>& x) {
  return apply_columns_t(f.recipe, f.scales(), *f.pairs, x);
}

/// B x = gamma x + Psi (M (Psi' x)), O(n l).
template <typename Scalar>
Vector<Scalar> matvec_B(const CompactFactor<Scalar>& f, const Vector<Scalar>& x) {
  if (x.size() != f.n()) throw Error(ErrorKind::DimensionMismatch, "vector length differs from n");
  const Vector<Scalar> inner = f.Mhat * apply_psi_hat_T(f, x);
  Vector<Scalar> out = apply_psi_hat(f, inner);
  out.noalias() += f.gamma * x;
  return out;
}

template <typename Scalar>
Matrix<Scalar> materialize_dense(const CompactFactor<Scalar>& f) {
  const Matrix<Scalar> P = materialize_columns(f.recipe, f.scales(), *f.pairs);
  Matrix<Scalar> B = P * f.Mhat * P.transpose();
  B.diagonal().array() += f.gamma;
  return B;
}

namespace detail {

template <typename Scalar>
Matrix<Scalar> checked_inverse(const Matrix<Scalar>& A) {
  Eigen::JacobiSVD<Matrix<Scalar>> svd(A);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) return A;
  const Scalar smax = sv(0);
  const Scalar smin = sv(sv.size() - 1);
  if (!(smin > smax * Scalar(kEpsFloor)))
    throw Error(ErrorKind::SingularMiddleMatrix, "closed-form middle matrix is numerically singular");
  Matrix<Scalar> inv = A.fullPivLu().inverse();
  return (inv + inv.transpose()) / Scalar(2);
}

// Restricted-class middle matrix over the first k pairs in block order
// (gamma S, Y) before inversion.
template <typename Scalar>
Matrix<Scalar> restricted_block(const GramCache<Scalar>& g, Scalar gamma, Scalar phi,
                                const Vector<Scalar>& lambda, Eigen::Index k) {
  const Matrix<Scalar> StY = g.StY.topLeftCorner(k, k);
  const Matrix<Scalar> L = StY.template triangularView<Eigen::StrictlyLower>();
  const Matrix<Scalar> PL = (phi * lambda.head(k)).asDiagonal();
  Matrix<Scalar> block(2 * k, 2 * k);
  block.topLeftCorner(k, k) = -gamma * g.StS.topLeftCorner(k, k) + PL;
  block.topRightCorner(k, k) = -L + PL;
  block.bottomLeftCorner(k, k) = -L.transpose() + PL;
  block.bottomRightCorner(k, k) = PL;
  block.bottomRightCorner(k, k).diagonal() += StY.diagonal();
  return block;
}

// Block order (gamma S, Y) -> interleaved (gamma s_0, y_0, gamma s_1, ...).
template <typename Scalar>
Matrix<Scalar> interleave(const Matrix<Scalar>& block) {
  const Eigen::Index k = block.rows() / 2;
  Eigen::VectorXi idx(2 * k);
  for (Eigen::Index i = 0; i < k; ++i) {
    idx(2 * i) = static_cast<int>(i);
    idx(2 * i + 1) = static_cast<int>(k + i);
  }
  Matrix<Scalar> out(2 * k, 2 * k);
  for (Eigen::Index a = 0; a < 2 * k; ++a)
    for (Eigen::Index b = 0; b < 2 * k; ++b) out(a, b) = block(idx(a), idx(b));
  return out;
}

}  // namespace detail

/// Closed-form middle matrix of a constant-phi restricted-class update
/// (phi in [0, 1]), returned in the interleaved column order used by
/// build_compact. The s_i'B_i s_i entering Lambda are recomputed from the
/// closed form of each prefix, so the result is independent of the
/// bordering recursion.
template <typename Scalar>
Matrix<Scalar> restricted_class_Mmatrix(const PairSequence<Scalar>& seq,
                                        const GramCache<Scalar>& g, Scalar phi) {
  if (!(phi >= Scalar(0) && phi <= Scalar(1)))
    throw Error(ErrorKind::InvalidArgument, "restricted class requires phi in [0, 1]");
  const auto m = static_cast<Eigen::Index>(seq.size());
  if (m == 0 || g.size() != m) throw Error(ErrorKind::InvalidArgument, "empty or stale cache");
  const Scalar gamma = seq.gamma;

  Vector<Scalar> lambda(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    Scalar sBs = gamma * g.StS(i, i);
    if (i > 0) {
      const Matrix<Scalar> M = detail::checked_inverse<Scalar>(
          detail::restricted_block<Scalar>(g, gamma, phi, lambda, i));
      Vector<Scalar> v(2 * i);
      v.head(i) = gamma * g.StS.col(i).head(i);
      v.tail(i) = g.StY.row(i).head(i).transpose();
      sBs += v.dot(M * v);
    }
    const Scalar yts = g.StY(i, i);
    lambda(i) = Scalar(1) / (-(Scalar(1) - phi) / sBs - phi / yts);
  }
  return detail::interleave<Scalar>(detail::checked_inverse<Scalar>(
      detail::restricted_block<Scalar>(g, gamma, phi, lambda, m)));
}

/// Closed-form SR1 middle matrix (D + L + L' - gamma S'S)^{-1} for columns
/// y_i - gamma s_i.
template <typename Scalar>
Matrix<Scalar> byrd_sr1_Mmatrix(const PairSequence<Scalar>& seq, const GramCache<Scalar>& g) {
  const auto m = static_cast<Eigen::Index>(seq.size());
  if (m == 0 || g.size() != m) throw Error(ErrorKind::InvalidArgument, "empty or stale cache");
  const Matrix<Scalar> L = g.StY.template triangularView<Eigen::StrictlyLower>();
  Matrix<Scalar> A = L + L.transpose() - seq.gamma * g.StS;
  A.diagonal() += g.StY.diagonal();
  return detail::checked_inverse<Scalar>(A);
}

}  // namespace broyden
