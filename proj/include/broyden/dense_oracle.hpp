#pragma once

// Naive O(n^2)-per-step reference recursions. Used as ground truth by the
// tests and the experiment harness; not meant to be fast.

#include <algorithm>
#include <cmath>

#include "broyden/pair_store.hpp"

namespace broyden::dense {

namespace detail {

template <typename Scalar>
bool below_floor(Scalar value, Scalar scale) {
  using std::abs;
  return !(abs(value) > Scalar(kCurvatureFloor) * scale);
}

// B <- (B + B') / 2 without materializing a transposed copy.
template <typename Scalar>
void symmetrize(Matrix<Scalar>& B) {
  const Eigen::Index n = B.rows();
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const Scalar avg = (B(i, j) + B(j, i)) / Scalar(2);
      B(i, j) = avg;
      B(j, i) = avg;
    }
}

}  // namespace detail

/// One Broyden-class step: B - Bss'B/(s'Bs) + yy'/(y's) + phi (s'Bs) ww'.
/// The SR1 marker uses the rank-one form B + rr'/(r's), r = y - Bs.
template <typename Scalar>
Matrix<Scalar> broyden_update(const Matrix<Scalar>& B, const Vector<Scalar>& s,
                              const Vector<Scalar>& y, const PhiStep<Scalar>& step) {
  if (s.size() != B.rows() || y.size() != B.rows())
    throw Error(ErrorKind::DimensionMismatch, "pair length differs from matrix size");
  const Vector<Scalar> Bs = B * s;
  const Scalar sBs = s.dot(Bs);
  const Scalar yts = y.dot(s);
  if (detail::below_floor(yts, y.norm() * s.norm()))
    throw Error(ErrorKind::DegenerateDenominator, "|y's| below floor");
  if (detail::below_floor(sBs, s.norm() * Bs.norm()))
    throw Error(ErrorKind::DegenerateDenominator, "|s'Bs| below floor");

  Matrix<Scalar> out = B;
  if (is_sr1(step)) {
    const Vector<Scalar> r = y - Bs;
    const Scalar rts = yts - sBs;
    if (detail::below_floor(rts, std::max(std::abs(yts), std::abs(sBs))))
      throw Error(ErrorKind::Sr1Undefined, "y's - s'Bs below floor");
    out.noalias() += (r / rts) * r.transpose();
  } else {
    const Scalar phi = std::get<Scalar>(step);
    const Vector<Scalar> w = y / yts - Bs / sBs;
    out.noalias() -= (Bs / sBs) * Bs.transpose();
    out.noalias() += (y / yts) * y.transpose();
    out.noalias() += ((phi * sBs) * w) * w.transpose();
  }
  detail::symmetrize(out);
  return out;
}

/// Same step through the phi form with phi = y's / (y's - s'Bs); used to
/// check that the SR1 marker and its phi value coincide.
template <typename Scalar>
Matrix<Scalar> broyden_update_sr1_via_phi(const Matrix<Scalar>& B, const Vector<Scalar>& s,
                                          const Vector<Scalar>& y) {
  const Scalar sBs = s.dot(B * s);
  const Scalar yts = y.dot(s);
  if (detail::below_floor(yts - sBs, std::max(std::abs(yts), std::abs(sBs))))
    throw Error(ErrorKind::Sr1Undefined, "y's - s'Bs below floor");
  return broyden_update<Scalar>(B, s, y, PhiStep<Scalar>(yts / (yts - sBs)));
}

/// Inverse recursion: H + ss'/(s'y) - Hyy'H/(y'Hy) + Phi (y'Hy) vv',
/// v = s/(y's) - Hy/(y'Hy).
template <typename Scalar>
Matrix<Scalar> inverse_update(const Matrix<Scalar>& H, const Vector<Scalar>& s,
                              const Vector<Scalar>& y, Scalar Phi) {
  if (s.size() != H.rows() || y.size() != H.rows())
    throw Error(ErrorKind::DimensionMismatch, "pair length differs from matrix size");
  const Vector<Scalar> Hy = H * y;
  const Scalar yHy = y.dot(Hy);
  const Scalar yts = y.dot(s);
  if (detail::below_floor(yts, y.norm() * s.norm()))
    throw Error(ErrorKind::DegenerateDenominator, "|y's| below floor");
  if (detail::below_floor(yHy, y.norm() * Hy.norm()))
    throw Error(ErrorKind::DegenerateDenominator, "|y'Hy| below floor");

  const Vector<Scalar> v = s / yts - Hy / yHy;
  Matrix<Scalar> out = H;
  out.noalias() += (s / yts) * s.transpose();
  out.noalias() -= (Hy / yHy) * Hy.transpose();
  out.noalias() += ((Phi * yHy) * v) * v.transpose();
  detail::symmetrize(out);
  return out;
}

/// B_m from gamma*I by folding broyden_update over the pairs.
template <typename Scalar>
Matrix<Scalar> build(const PairSequence<Scalar>& seq, const PhiSchedule<Scalar>& schedule) {
  if (schedule.size() != seq.size())
    throw Error(ErrorKind::InvalidArgument, "schedule length differs from pair count");
  Matrix<Scalar> B = Matrix<Scalar>::Identity(seq.n, seq.n) * seq.gamma;
  for (std::size_t j = 0; j < seq.size(); ++j) {
    try {
      B = broyden_update<Scalar>(B, seq.S[j], seq.Y[j], schedule[j]);
    } catch (const Error& e) {
      throw e.at_step(j);
    }
  }
  return B;
}

}  // namespace broyden::dense
