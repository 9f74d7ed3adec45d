#pragma once

#include <optional>

#include "broyden/compact.hpp"

namespace broyden {

template <typename Scalar>
struct InverseStepScalars {
  bool sr1 = false;
  Scalar Phi{};
  Scalar yHy{};  // y_j' H_j y_j
  Scalar alpha{};
  Scalar beta{};
  Scalar delta{};
};

/// H = B^{-1} = gamma^{-1} I + Psi M Psi' with columns s_j, y_j/gamma, or
/// y_j/gamma - s_j (the image of the forward columns under H_0).
template <typename Scalar>
struct InverseCompactFactor {
  Scalar gamma{1};
  ColumnRecipe recipe;
  Matrix<Scalar> Mtilde;
  std::vector<InverseStepScalars<Scalar>> steps;
  SharedPairs<Scalar> pairs;

  Eigen::Index n() const { return pairs ? pairs->n : 0; }
  Eigen::Index cols() const { return static_cast<Eigen::Index>(recipe.size()); }
  ColumnScales<Scalar> scales() const { return {Scalar(1), Scalar(1) / gamma}; }
};

/// Inverse-recursion parameter dual to phi:
///   (1-phi)(y's)^2 / ((1-phi)(y's)^2 + phi (y'Hy)(s'Bs)).
template <typename Scalar>
Scalar phi_cap(Scalar phi, Scalar yHy, Scalar sBs, Scalar yts) {
  using std::abs;
  const Scalar num = (Scalar(1) - phi) * yts * yts;
  const Scalar other = phi * yHy * sBs;
  const Scalar den = num + other;
  if (!(abs(den) > Scalar(kCurvatureFloor) * (abs(num) + abs(other))))
    throw Error(ErrorKind::DegenerateDenominator, "Phi denominator below floor");
  return num / den;
}

/// Inverse-recursion parameter at the SR1 step: y's / (y's - y'Hy).
template <typename Scalar>
Scalar phi_cap_sr1(Scalar yHy, Scalar yts) {
  using std::abs;
  const Scalar den = yts - yHy;
  if (!(abs(den) > Scalar(kCurvatureFloor) * std::max(abs(yts), abs(yHy))))
    throw Error(ErrorKind::Sr1Undefined, "y's equals y'Hy to within the floor");
  return yts / den;
}

/// Inverse middle matrix by the same bordering scheme as build_compact,
/// driven by p~ = M~ (Psi~' y_j). The s'B_j s values come from `forward`,
/// which is built here when not supplied.
template <typename Scalar>
InverseCompactFactor<Scalar> build_inverse_compact(
    SharedPairs<Scalar> pairs, const GramCache<Scalar>& cache,
    const PhiSchedule<Scalar>& schedule,
    const CompactFactor<Scalar>* forward = nullptr) {
  using std::abs;
  std::optional<CompactFactor<Scalar>> own;
  if (!forward) {
    own = build_compact<Scalar>(pairs, cache, schedule);
    forward = &*own;
  } else if (forward->steps.size() != schedule.size() || forward->pairs != pairs) {
    throw Error(ErrorKind::InvalidArgument, "forward factor does not match the pairs");
  }
  const std::size_t m = pairs->size();

  InverseCompactFactor<Scalar> f;
  f.gamma = pairs->gamma;
  f.pairs = std::move(pairs);
  f.steps.reserve(m);
  const auto scales = f.scales();
  const Scalar inv_gamma = Scalar(1) / f.gamma;

  for (std::size_t j = 0; j < m; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    const auto& fw = forward->steps[j];
    const Vector<Scalar> py = psi_t_y(f.recipe, scales, cache, j);
    const Vector<Scalar> p = f.Mtilde.rows() ? Vector<Scalar>(f.Mtilde * py) : Vector<Scalar>(0);
    const Scalar yH0y = inv_gamma * cache.YtY(jj, jj);
    const Scalar correction = py.dot(p);

    InverseStepScalars<Scalar> st;
    st.sr1 = fw.sr1;
    st.yHy = yH0y + correction;
    if (detail::tiny_relative(st.yHy, abs(yH0y) + abs(correction)))
      throw Error(ErrorKind::DegenerateDenominator, "|y'H_j y| below floor", j);
    const Scalar yts = fw.yts;
    try {
      st.Phi = st.sr1 ? phi_cap_sr1(st.yHy, yts) : phi_cap(fw.phi, st.yHy, fw.sBs, yts);
    } catch (const Error& e) {
      throw e.at_step(j);
    }
    st.alpha = (Scalar(1) + st.Phi * st.yHy / yts) / yts;
    st.beta = -st.Phi / yts;
    st.delta = -(Scalar(1) - st.Phi) / st.yHy;

    if (st.sr1) {
      f.Mtilde = detail::border_one<Scalar>(f.Mtilde, p, -st.beta, -st.beta, -st.beta);
    } else {
      f.Mtilde = detail::border_two<Scalar>(f.Mtilde, p, st.delta, st.beta, st.delta, st.alpha,
                                            st.beta, st.delta);
    }
    append_step_columns<Scalar>(f.recipe, j, st.sr1);
    f.steps.push_back(st);
  }
  return f;
}

template <typename Scalar>
InverseCompactFactor<Scalar> build_inverse_compact(const PairSequence<Scalar>& seq,
                                                   const GramCache<Scalar>& cache,
                                                   const PhiSchedule<Scalar>& schedule) {
  return build_inverse_compact(snapshot(seq), cache, schedule);
}

template <typename Scalar>
InverseCompactFactor<Scalar> build_inverse_compact(const CompactFactor<Scalar>& forward,
                                                   const GramCache<Scalar>& cache,
                                                   const PhiSchedule<Scalar>& schedule) {
  return build_inverse_compact(forward.pairs, cache, schedule, &forward);
}

template <typename Scalar>
Vector<Scalar> apply_psi_tilde(const InverseCompactFactor<Scalar>& f, const Vector<Scalar>& c) {
  return apply_columns(f.recipe, f.scales(), *f.pairs, c);
}

template <typename Scalar>
Vector<Scalar> apply_psi_tilde_T(const InverseCompactFactor<Scalar>& f, const Vector<Scalar>& z) {
  return apply_columns_t(f.recipe, f.scales(), *f.pairs, z);
}

/// r = H z = z/gamma + Psi (M (Psi' z)); solves B r = z in O(n l + l^2).
template <typename Scalar>
Vector<Scalar> solve(const InverseCompactFactor<Scalar>& f, const Vector<Scalar>& z) {
  if (z.size() != f.n()) throw Error(ErrorKind::DimensionMismatch, "vector length differs from n");
  const Vector<Scalar> inner = f.Mtilde * apply_psi_tilde_T(f, z);
  Vector<Scalar> out = apply_psi_tilde(f, inner);
  out.noalias() += z / f.gamma;
  return out;
}

template <typename Scalar>
Vector<Scalar> matvec_H(const InverseCompactFactor<Scalar>& f, const Vector<Scalar>& z) {
  return solve(f, z);
}

template <typename Scalar>
Matrix<Scalar> materialize_dense(const InverseCompactFactor<Scalar>& f) {
  const Matrix<Scalar> P = materialize_columns(f.recipe, f.scales(), *f.pairs);
  Matrix<Scalar> H = P * f.Mtilde * P.transpose();
  H.diagonal().array() += Scalar(1) / f.gamma;
  return H;
}

}  // namespace broyden
