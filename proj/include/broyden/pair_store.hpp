#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "broyden/errors.hpp"
#include "broyden/tolerances.hpp"

namespace broyden {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Per-step update parameter: either an explicit phi or the SR1 marker, whose
// phi is only known once s'B_j s is available during a build.
struct Sr1 {
  friend bool operator==(Sr1, Sr1) { return true; }
};

template <typename Scalar>
using PhiStep = std::variant<Scalar, Sr1>;

template <typename Scalar>
using PhiSchedule = std::vector<PhiStep<Scalar>>;

template <typename Scalar>
bool is_sr1(const PhiStep<Scalar>& step) {
  return std::holds_alternative<Sr1>(step);
}

template <typename Scalar>
std::size_t count_sr1(const PhiSchedule<Scalar>& schedule) {
  std::size_t count = 0;
  for (const auto& step : schedule) count += is_sr1(step) ? 1 : 0;
  return count;
}

/// History of quasi-Newton pairs (s_i, y_i) with B_0 = gamma * I.
template <typename Scalar>
struct PairSequence {
  Eigen::Index n = 0;
  Scalar gamma = Scalar(1);
  std::vector<Vector<Scalar>> S;
  std::vector<Vector<Scalar>> Y;

  PairSequence() = default;
  PairSequence(Eigen::Index dim, Scalar gamma_) : n(dim), gamma(gamma_) {
    if (dim <= 0) throw Error(ErrorKind::InvalidArgument, "dimension must be positive");
    if (!(gamma_ > Scalar(0)))
      throw Error(ErrorKind::InvalidArgument, "gamma must be positive");
  }

  std::size_t size() const { return S.size(); }
  bool empty() const { return S.empty(); }
};

/// Inner products among the stored pairs: StS(i,j) = s_i's_j,
/// StY(i,j) = s_i'y_j, YtY(i,j) = y_i'y_j.
template <typename Scalar>
struct GramCache {
  Matrix<Scalar> StS;
  Matrix<Scalar> StY;
  Matrix<Scalar> YtY;

  Eigen::Index size() const { return StY.rows(); }
};

template <typename Scalar>
void check_curvature(const Vector<Scalar>& s, const Vector<Scalar>& y) {
  using std::abs;
  const Scalar yts = y.dot(s);
  if (!(abs(yts) > Scalar(kCurvatureFloor) * y.norm() * s.norm()))
    throw Error(ErrorKind::CurvatureTooSmall,
                "|y's| is below the relative curvature floor");
}

/// Appends (s, y) and borders each Gram cache by one row/column
/// (3m + 3 inner products). Existing entries are left untouched.
template <typename Scalar>
void append_pair(PairSequence<Scalar>& seq, GramCache<Scalar>& cache,
                 const Vector<Scalar>& s, const Vector<Scalar>& y) {
  if (s.size() != seq.n || y.size() != seq.n)
    throw Error(ErrorKind::DimensionMismatch, "pair length differs from n");
  if (cache.size() != static_cast<Eigen::Index>(seq.size()))
    throw Error(ErrorKind::InvalidArgument, "cache out of sync with pair sequence");
  check_curvature<Scalar>(s, y);

  const Eigen::Index m = cache.size();
  cache.StS.conservativeResize(m + 1, m + 1);
  cache.StY.conservativeResize(m + 1, m + 1);
  cache.YtY.conservativeResize(m + 1, m + 1);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& si = seq.S[i];
    const auto& yi = seq.Y[i];
    cache.StS(i, m) = cache.StS(m, i) = si.dot(s);
    cache.YtY(i, m) = cache.YtY(m, i) = yi.dot(y);
    cache.StY(i, m) = si.dot(y);
    cache.StY(m, i) = s.dot(yi);
  }
  cache.StS(m, m) = s.squaredNorm();
  cache.YtY(m, m) = y.squaredNorm();
  cache.StY(m, m) = s.dot(y);

  seq.S.push_back(s);
  seq.Y.push_back(y);
}

/// Gram caches recomputed from the stored vectors, O(m^2 n).
template <typename Scalar>
GramCache<Scalar> rebuild_gram(const PairSequence<Scalar>& seq) {
  const auto m = static_cast<Eigen::Index>(seq.size());
  GramCache<Scalar> cache;
  cache.StS.resize(m, m);
  cache.StY.resize(m, m);
  cache.YtY.resize(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      cache.StS(i, j) = cache.StS(j, i) = seq.S[i].dot(seq.S[j]);
      cache.YtY(i, j) = cache.YtY(j, i) = seq.Y[i].dot(seq.Y[j]);
    }
    for (Eigen::Index j = 0; j < m; ++j) cache.StY(i, j) = seq.S[i].dot(seq.Y[j]);
  }
  return cache;
}

/// Limited-memory window: drop the oldest pair and rebuild the caches.
template <typename Scalar>
void drop_oldest(PairSequence<Scalar>& seq, GramCache<Scalar>& cache) {
  if (seq.empty()) return;
  seq.S.erase(seq.S.begin());
  seq.Y.erase(seq.Y.begin());
  cache = rebuild_gram(seq);
}

template <typename Scalar>
struct LdrSplit {
  Matrix<Scalar> L;  // strictly lower
  Vector<Scalar> D;  // diagonal
  Matrix<Scalar> R;  // strictly upper
};

/// S'Y = L + D + R.
template <typename Scalar>
LdrSplit<Scalar> ldr_split(const GramCache<Scalar>& cache) {
  if (cache.size() == 0) throw Error(ErrorKind::InvalidArgument, "empty Gram cache");
  LdrSplit<Scalar> out;
  out.L = cache.StY.template triangularView<Eigen::StrictlyLower>();
  out.R = cache.StY.template triangularView<Eigen::StrictlyUpper>();
  out.D = cache.StY.diagonal();
  return out;
}

template <typename Scalar>
using SharedPairs = std::shared_ptr<const PairSequence<Scalar>>;

// Immutable snapshot handed to the builders; factors keep it alive.
template <typename Scalar>
SharedPairs<Scalar> snapshot(PairSequence<Scalar> seq) {
  return std::make_shared<const PairSequence<Scalar>>(std::move(seq));
}

}  // namespace broyden
