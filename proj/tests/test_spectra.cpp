#include <doctest.h>

#include <algorithm>

#include "broyden/spectra.hpp"
#include "test_support.hpp"

using namespace broyden;
using testing::Problem;
using testing::unit;

namespace {

Problem mixed_problem(Rng& rng) {
  const auto n = static_cast<Eigen::Index>(rng.uniform(12, 80));
  const auto m = static_cast<std::size_t>(rng.uniform(1, 7));
  return testing::random_problem(rng, n, m, testing::random_schedule(rng, m, 0.35));
}

Eigen::VectorXd dense_spectrum(const Eigen::MatrixXd& B) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

CompactFactor<double> diag_example() {
  PairSequence<double> seq(3, 1.0);
  GramCache<double> gram;
  append_pair<double>(seq, gram, unit(3, 0), 2 * unit(3, 0));
  return build_compact(seq, gram, {Sr1{}});
}

}  // namespace

TEST_CASE("spectrum of diag(2, 1, 1)") {
  const auto f = diag_example();
  const auto s = eigenvalues(f);
  CHECK(s.gamma == 1.0);
  CHECK(s.trivial_multiplicity == 2);
  REQUIRE(s.shifted.size() == 1);
  CHECK(s.shifted(0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(s.cond == doctest::Approx(2.0).epsilon(1e-15));
  CHECK_FALSE(s.cond_infinite);
  CHECK(s.full_spectrum() == Eigen::VectorXd(Eigen::Vector3d(1, 1, 2)));

  const auto pairs = eigenvectors_nontrivial(f);
  REQUIRE(pairs.vectors.cols() == 1);
  CHECK(std::abs(pairs.vectors(0, 0)) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(pairs.vectors.col(0).tail(2).norm() <= 1e-15);
}

TEST_CASE("condition number uses absolute values") {
  // One SR1 pair (e1, -3 e1) from the identity gives diag(-3, 1, 1).
  PairSequence<double> seq(3, 1.0);
  GramCache<double> gram;
  append_pair<double>(seq, gram, unit(3, 0), -3 * unit(3, 0));
  const auto f = build_compact(seq, gram, {Sr1{}});
  const auto s = eigenvalues(f);
  CHECK(s.shifted(0) == doctest::Approx(-3.0).epsilon(1e-14));
  CHECK(condition_number(s) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(condition_number(f) == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("spectrum matches a dense eigensolver") {
  const auto checked = testing::for_random_problems(51, 100, mixed_problem, [](const Problem& p) {
    const auto f = build_compact(p.seq, p.gram, p.schedule);
    const auto s = eigenvalues(f, p.gram);
    const Eigen::MatrixXd B = materialize_dense(f);
    const Eigen::VectorXd dense = dense_spectrum(B);
    const Eigen::VectorXd ours = s.full_spectrum();

    CHECK(s.trivial_multiplicity + s.shifted.size() == p.seq.n);
    CHECK(std::is_sorted(s.shifted.data(), s.shifted.data() + s.shifted.size()));
    CHECK(s.rank == f.cols());
    const double scale = dense.cwiseAbs().maxCoeff();
    CHECK((ours - dense).cwiseAbs().maxCoeff() <= 1e-10 * scale);

    const double trace = s.gamma * static_cast<double>(s.trivial_multiplicity) + s.shifted.sum();
    CHECK(std::abs(trace - B.trace()) <= 1e-9 * B.diagonal().cwiseAbs().sum());

    const double lo = dense.cwiseAbs().minCoeff();
    const double cond = scale / lo;
    CHECK(s.cond == doctest::Approx(cond).epsilon(1e-6));
  });
  CHECK(checked >= 80);
}

TEST_CASE("eigenvectors are orthonormal and satisfy the eigen-equation") {
  testing::for_random_problems(52, 40, mixed_problem, [](const Problem& p) {
    const auto f = build_compact(p.seq, p.gram, p.schedule);
    const auto ep = eigenvectors_nontrivial(f);
    const Eigen::Index r = ep.vectors.cols();
    CHECK((ep.vectors.transpose() * ep.vectors - Eigen::MatrixXd::Identity(r, r)).norm() <= 1e-10);
    const double scale = std::max(ep.values.cwiseAbs().maxCoeff(), std::abs(f.gamma));
    for (Eigen::Index i = 0; i < r; ++i) {
      const Eigen::VectorXd q = ep.vectors.col(i);
      const double lambda = ep.values(i);
      CHECK((matvec_B(f, q) - lambda * q).norm() <= 1e-8 * std::max(std::abs(lambda), 1e-3 * scale));
    }
  });
}

TEST_CASE("rank-deficient columns fold into the trivial eigenvalue") {
  // The SR1 column of the second pair, y1 - s1 = 2 y0, repeats a direction
  // already present, so three stored columns span only two dimensions.
  PairSequence<double> seq(6, 1.0);
  GramCache<double> gram;
  const Eigen::VectorXd s0 = unit(6, 0);
  const Eigen::VectorXd y0 = 2 * unit(6, 0) + unit(6, 1);
  const Eigen::VectorXd s1 = unit(6, 0) + unit(6, 2);
  append_pair(seq, gram, s0, y0);
  append_pair<double>(seq, gram, s1, s1 + 2 * y0);
  const auto f = build_compact(seq, gram, {0.0, Sr1{}});
  REQUIRE(f.cols() == 3);
  const auto s = eigenvalues(f);
  CHECK(s.rank == 2);
  CHECK(s.trivial_multiplicity == 4);
  const Eigen::VectorXd dense = dense_spectrum(materialize_dense(f));
  CHECK((s.full_spectrum() - dense).cwiseAbs().maxCoeff() <= 1e-10 * dense.cwiseAbs().maxCoeff());
}

TEST_CASE("indefinite matrices appear for negative phi") {
  std::size_t negative = 0;
  testing::for_random_problems(53, 30, [](Rng& rng) {
    return testing::random_problem(rng, 40, 5, {-1.5, 1.0, 0.5, 0.0, 2.0});
  }, [&](const Problem& p) {
    const auto s = eigenvalues(build_compact(p.seq, p.gram, p.schedule));
    if (s.shifted.minCoeff() < 0.0) ++negative;
  });
  MESSAGE("factors with a negative eigenvalue: " << negative << " of 30");
}
