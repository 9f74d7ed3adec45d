#pragma once

// Spectrum of B = gamma I + Psi M Psi'. With Psi = Q R (Q orthonormal),
// B = gamma I + Q (R M R') Q', so the nontrivial eigenvalues are gamma + d_i
// for the eigenvalues d_i of the small symmetric R M R'; gamma itself has
// multiplicity n - rank(Psi).

#include <cmath>
#include <algorithm>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "broyden/compact.hpp"

namespace broyden {

template <typename Scalar>
struct SpectralSummary {
  Eigen::Index n = 0;
  Scalar gamma{};
  Eigen::Index trivial_multiplicity = 0;
  Vector<Scalar> shifted;  // gamma + d_i, ascending
  Eigen::Index rank = 0;
  Scalar cond{};
  bool cond_infinite = false;

  /// All n eigenvalues, ascending (O(n) memory).
  Vector<Scalar> full_spectrum() const {
    Vector<Scalar> all(n);
    all.head(trivial_multiplicity).setConstant(gamma);
    all.tail(shifted.size()) = shifted;
    std::sort(all.data(), all.data() + all.size());
    return all;
  }
};

template <typename Scalar>
struct NontrivialEigenpairs {
  Vector<Scalar> values;   // gamma + d_i, ascending
  Matrix<Scalar> vectors;  // n x rank, orthonormal columns
};

namespace detail {

// Diagonally pivoted Cholesky G ~= R'R. R is rank x l with columns in the
// original order; pivots stop once the largest remaining diagonal falls
// below tol * max(diag(G)).
template <typename Scalar>
std::optional<Matrix<Scalar>> pivoted_cholesky(const Matrix<Scalar>& G, Scalar tol) {
  using std::sqrt;
  const Eigen::Index l = G.rows();
  Matrix<Scalar> A = G;
  Matrix<Scalar> R = Matrix<Scalar>::Zero(l, l);
  std::vector<Eigen::Index> remaining(static_cast<std::size_t>(l));
  for (Eigen::Index i = 0; i < l; ++i) remaining[static_cast<std::size_t>(i)] = i;
  if (!G.allFinite()) return std::nullopt;
  const Scalar limit = l ? tol * G.diagonal().maxCoeff() : Scalar(0);

  Eigen::Index rank = 0;
  while (!remaining.empty()) {
    auto best = remaining.begin();
    for (auto it = remaining.begin(); it != remaining.end(); ++it)
      if (A(*it, *it) > A(*best, *best)) best = it;
    const Eigen::Index piv = *best;
    if (!(A(piv, piv) > limit)) break;
    remaining.erase(best);
    const Scalar r = sqrt(A(piv, piv));
    R(rank, piv) = r;
    for (Eigen::Index c : remaining) R(rank, c) = A(piv, c) / r;
    for (Eigen::Index c : remaining)
      for (Eigen::Index d : remaining) A(c, d) -= R(rank, c) * R(rank, d);
    ++rank;
  }
  Matrix<Scalar> out = R.topRows(rank);
  if (!out.allFinite()) return std::nullopt;
  return out;
}

// Thin QR of the explicit columns; returns (Q, R) with Psi ~= Q R, R in
// the original column order.
template <typename Scalar>
std::pair<Matrix<Scalar>, Matrix<Scalar>> thin_qr(const Matrix<Scalar>& P) {
  using std::sqrt;
  Eigen::ColPivHouseholderQR<Matrix<Scalar>> qr(P);
  qr.setThreshold(sqrt(Scalar(kRankDropTol)));
  const Eigen::Index rank = qr.rank();
  Matrix<Scalar> Rp = qr.matrixR().topRows(rank).template triangularView<Eigen::Upper>();
  Matrix<Scalar> R = Rp * qr.colsPermutation().transpose();
  Matrix<Scalar> Q = qr.householderQ() * Matrix<Scalar>::Identity(P.rows(), rank);
  return {std::move(Q), std::move(R)};
}

template <typename Scalar>
void fill_condition(SpectralSummary<Scalar>& s) {
  using std::abs;
  Scalar lo = std::numeric_limits<Scalar>::infinity();
  Scalar hi = Scalar(0);
  if (s.trivial_multiplicity > 0) lo = hi = abs(s.gamma);
  for (Eigen::Index i = 0; i < s.shifted.size(); ++i) {
    lo = std::min(lo, abs(s.shifted(i)));
    hi = std::max(hi, abs(s.shifted(i)));
  }
  s.cond_infinite = !(lo > Scalar(kEpsFloor) * hi);
  s.cond = s.cond_infinite ? std::numeric_limits<Scalar>::infinity() : hi / lo;
}

template <typename Scalar>
Vector<Scalar> small_eigenvalues(const Matrix<Scalar>& R, const Matrix<Scalar>& M) {
  Matrix<Scalar> T = R * M * R.transpose();
  T = (T + T.transpose()).eval() / Scalar(2);
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(T, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw Error(ErrorKind::NumericalBreakdown, "small symmetric eigensolver failed");
  return es.eigenvalues();
}

}  // namespace detail

/// Eigenvalues via the Gram route: R from a pivoted Cholesky of Psi'Psi
/// (assembled from the caches), then the eigenvalues of R M R'. Falls back
/// to an explicit thin QR if the Cholesky breaks down.
template <typename Scalar>
SpectralSummary<Scalar> eigenvalues(const CompactFactor<Scalar>& f, const GramCache<Scalar>& cache) {
  if (f.n() < f.cols()) throw Error(ErrorKind::InvalidArgument, "factor has more columns than n");
  const Matrix<Scalar> G = psi_gram(f.recipe, f.scales(), cache);
  auto R = detail::pivoted_cholesky<Scalar>(G, Scalar(kRankDropTol));
  if (!R) {
    auto [Q, Rq] = detail::thin_qr<Scalar>(materialize_columns(f.recipe, f.scales(), *f.pairs));
    if (!Rq.allFinite())
      throw Error(ErrorKind::NumericalBreakdown, "Gram Cholesky and thin QR both failed");
    R = std::move(Rq);
  }
  SpectralSummary<Scalar> s;
  s.n = f.n();
  s.gamma = f.gamma;
  s.rank = R->rows();
  s.trivial_multiplicity = s.n - s.rank;
  s.shifted = detail::small_eigenvalues<Scalar>(*R, f.Mhat).array() + f.gamma;
  detail::fill_condition(s);
  return s;
}

template <typename Scalar>
SpectralSummary<Scalar> eigenvalues(const CompactFactor<Scalar>& f) {
  return eigenvalues(f, rebuild_gram(*f.pairs));
}

/// Eigenvectors for the gamma + d_i eigenvalues: columns of Q V where
/// Psi = Q R is an explicit thin QR and R M R' = V D V'.
template <typename Scalar>
NontrivialEigenpairs<Scalar> eigenvectors_nontrivial(const CompactFactor<Scalar>& f) {
  auto [Q, R] = detail::thin_qr<Scalar>(materialize_columns(f.recipe, f.scales(), *f.pairs));
  Matrix<Scalar> T = R * f.Mhat * R.transpose();
  T = (T + T.transpose()).eval() / Scalar(2);
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(T);
  if (es.info() != Eigen::Success)
    throw Error(ErrorKind::NumericalBreakdown, "small symmetric eigensolver failed");
  NontrivialEigenpairs<Scalar> out;
  out.values = es.eigenvalues().array() + f.gamma;
  out.vectors = Q * es.eigenvectors();
  return out;
}

template <typename Scalar>
Scalar condition_number(const SpectralSummary<Scalar>& s) {
  return s.cond;
}

template <typename Scalar>
Scalar condition_number(const CompactFactor<Scalar>& f) {
  return eigenvalues(f).cond;
}

}  // namespace broyden
