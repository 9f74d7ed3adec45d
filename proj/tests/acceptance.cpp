// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Tolerances are fixed here and not configurable.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "broyden/compact.hpp"
#include "broyden/harness.hpp"
#include "broyden/inverse.hpp"
#include "broyden/random.hpp"
#include "broyden/spectra.hpp"

using namespace broyden;
using namespace broyden::harness;

namespace {

constexpr double kTable2Tol = 1e-8;
constexpr double kTable3Tol = 1e-8;
constexpr double kMinSpeedup = 50.0;
constexpr double kMaxCompactGrowth = 5.0;
constexpr double kSpectrumTol = 1e-8;
constexpr double kClosedFormTol = 1e-10;
constexpr double kRoundTripTol = 1e-9;
constexpr double kSingularBlockTol = 1e-12;
constexpr double kBlockInverseTol = 1e-10;
constexpr double kSecantTol = 1e-9;

const ScheduleId kSchedules[] = {ScheduleId::Exp1, ScheduleId::Exp2, ScheduleId::Exp3,
                                 ScheduleId::Exp4};

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(int id, const char* name, const Outcome& o) {
  std::printf("[%s] criterion %d: %s -- %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

ExperimentConfig config(ScheduleId id, Eigen::Index n, std::size_t trials, std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.n = n;
  cfg.m = 5;
  cfg.schedule = id;
  cfg.trials = trials;
  cfg.seed = seed;
  cfg.time_solves = false;
  return cfg;
}

ExperimentConfig custom_config(PhiSchedule<double> schedule, Eigen::Index n, std::uint64_t seed) {
  ExperimentConfig cfg = config(ScheduleId::Custom, n, 1, seed);
  cfg.custom = std::move(schedule);
  return cfg;
}

// Independent random pairs (y = c s + noise) under a schedule pattern. Unlike
// the line-search pairs, whose columns span at most m + 2 dimensions, these
// give a full-rank column set, so the middle matrix is determined by B.
GeneratedTrial independent_pairs(PhiSchedule<double> schedule, Eigen::Index n, std::uint64_t seed) {
  Rng rng(stream_seed(seed, 0, 11));
  GeneratedTrial out;
  out.schedule = std::move(schedule);
  out.pairs = PairSequence<double>(n, rng.uniform(0.5, 2.0));
  for (std::size_t j = 0; j < out.schedule.size(); ++j) {
    for (;;) {
      const Eigen::VectorXd s = rng.normal_vector(n);
      const Eigen::VectorXd y = rng.uniform(0.5, 2.0) * s + 0.5 * rng.normal_vector(n);
      auto pairs = out.pairs;
      auto gram = out.gram;
      try {
        append_pair(pairs, gram, s, y);
        const PhiSchedule<double> prefix(out.schedule.begin(),
                                         out.schedule.begin() + static_cast<std::ptrdiff_t>(j + 1));
        build_compact(pairs, gram, prefix);
      } catch (const Error& e) {
        if (!e.is_numerical()) throw;
        ++out.resamples;
        continue;
      }
      out.pairs = std::move(pairs);
      out.gram = std::move(gram);
      break;
    }
  }
  return out;
}

PhiSchedule<double> pattern(ScheduleId id, std::uint64_t seed) {
  Rng rng(stream_seed(seed, 0, 12));
  PhiDraws d{};
  d.phi0 = rng.uniform(-2.0, -0.1);
  d.phi2 = rng.uniform(0.01, 0.99);
  d.phi4 = rng.uniform(1.01, 3.0);
  return make_schedule(id, 5, d);
}

double rel(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).norm() / b.norm(); }

double rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).norm() / b.norm(); }

// Criteria 1 and 2 share the same experiment grid.
void table_accuracy() {
  Outcome frob;
  Outcome resid;
  double worst_frob = 0.0;
  double worst_resid = 0.0;
  for (auto id : kSchedules) {
    for (Eigen::Index n : {100, 1000}) {
      const auto r = run_experiment(config(id, n, 10, 2024));
      const std::string tag = to_string(id) + "/n=" + std::to_string(n);
      if (r.failed > 0) {
        frob.pass = resid.pass = false;
        frob.detail += tag + " had " + std::to_string(r.failed) + " failed trials; ";
        resid.detail += tag + " had " + std::to_string(r.failed) + " failed trials; ";
        continue;
      }
      worst_frob = std::max(worst_frob, r.mean_frob_rel_err);
      worst_resid = std::max(worst_resid, r.mean_solve_rel_resid);
      if (!(r.mean_frob_rel_err <= kTable2Tol)) {
        frob.pass = false;
        frob.detail += tag + " mean " + sci(r.mean_frob_rel_err) + "; ";
      }
      if (!(r.mean_solve_rel_resid <= kTable3Tol)) {
        resid.pass = false;
        resid.detail += tag + " mean " + sci(r.mean_solve_rel_resid) + "; ";
      }
    }
  }
  frob.detail += "worst mean relative Frobenius error " + sci(worst_frob) + " (limit " +
                 sci(kTable2Tol) + ", 4 schedules x n in {100, 1000} x 10 trials)";
  resid.detail += "worst mean relative solve residual " + sci(worst_resid) + " (limit " +
                  sci(kTable3Tol) + ", same grid)";
  report(1, "compact vs dense matrix accuracy", frob);
  report(2, "compact inverse solve accuracy", resid);
}

void spectra_oracle() {
  Outcome o;
  double worst = 0.0;
  std::size_t checked = 0;
  std::size_t full_rank = 0;
  std::size_t deficient = 0;
  auto check = [&](const std::string& tag, const GeneratedTrial& g) {
    const Eigen::Index n = g.pairs.n;
    const auto f = build_compact(g.pairs, g.gram, g.schedule);
    const auto s = eigenvalues(f, g.gram);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(materialize_dense(f), Eigen::EigenvaluesOnly);
    const Eigen::VectorXd dense = es.eigenvalues();
    const Eigen::VectorXd ours = s.full_spectrum();
    for (Eigen::Index i = 0; i < dense.size(); ++i) {
      const double e = std::abs(ours(i) - dense(i)) / std::abs(dense(i));
      worst = std::max(worst, e);
      if (!(e <= kSpectrumTol)) {
        o.pass = false;
        o.detail += tag + " eigenvalue " + std::to_string(i) + " rel err " + sci(e) + "; ";
      }
    }
    if (s.trivial_multiplicity + s.shifted.size() != n) {
      o.pass = false;
      o.detail += tag + " eigenvalue count; ";
    }
    if (s.rank == f.cols()) {
      ++full_rank;
      if (s.trivial_multiplicity != n - f.cols()) {
        o.pass = false;
        o.detail += tag + " multiplicity " + std::to_string(s.trivial_multiplicity) + "; ";
      }
    } else {
      ++deficient;
    }
    ++checked;
  };
  for (auto id : kSchedules) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const std::string tag = to_string(id) + "/seed=" + std::to_string(seed);
      check("line-search " + tag, generate_experiment(config(id, 200, 1, seed), 0));
      check("independent " + tag, independent_pairs(pattern(id, seed), 200, seed));
    }
  }
  if (full_rank < 20) {
    o.pass = false;
    o.detail += "only " + std::to_string(full_rank) + " full-rank factors; ";
  }
  o.detail += std::to_string(checked) + " factors at n=200 (line-search and independent pairs), worst "
              "elementwise relative error " + sci(worst) + " (limit " + sci(kSpectrumTol) +
              "); multiplicity n - l verified on " + std::to_string(full_rank) +
              " full-rank factors; " + std::to_string(deficient) +
              " line-search factors have rank < l (columns span at most m + 2 dimensions)";
  report(4, "spectrum vs dense eigensolver", o);
}

void closed_forms() {
  Outcome o;
  double worst = 0.0;
  double worst_line_search = 0.0;
  std::size_t checked = 0;
  auto compare = [](const GeneratedTrial& g, const std::optional<double>& phi) {
    const auto f = build_compact(g.pairs, g.gram, g.schedule);
    const Eigen::MatrixXd closed =
        phi ? restricted_class_Mmatrix(g.pairs, g.gram, *phi) : byrd_sr1_Mmatrix(g.pairs, g.gram);
    return rel(f.Mhat, closed);
  };
  for (std::optional<double> phi : {std::optional<double>(0.0), std::optional<double>(0.25),
                                    std::optional<double>(1.0), std::optional<double>()}) {
    const PhiSchedule<double> schedule =
        phi ? PhiSchedule<double>(5, *phi) : PhiSchedule<double>(5, Sr1{});
    const std::string name = phi ? "phi=" + sci(*phi) : std::string("sr1");
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const double e = compare(independent_pairs(schedule, 100, seed), phi);
      worst = std::max(worst, e);
      ++checked;
      if (!(e <= kClosedFormTol)) {
        o.pass = false;
        o.detail += name + "/seed=" + std::to_string(seed) + " " + sci(e) + "; ";
      }
      // Line-search pairs leave part of the middle matrix undetermined by B;
      // their discrepancy is reported but not gated.
      worst_line_search = std::max(
          worst_line_search, compare(generate_experiment(custom_config(schedule, 100, seed), 0), phi));
    }
  }
  o.detail += std::to_string(checked) + " factors on independent pairs (phi in {0, 0.25, 1} and "
              "all-SR1), worst relative difference " + sci(worst) + " (limit " +
              sci(kClosedFormTol) + "); line-search pairs, not gated: worst " +
              sci(worst_line_search);
  report(5, "middle matrix vs closed forms", o);
}

void round_trip() {
  Outcome o;
  double worst = 0.0;
  for (auto id : kSchedules) {
    for (std::size_t trial = 0; trial < 3; ++trial) {
      const auto cfg = config(id, 1000, 3, 77);
      const auto g = generate_experiment(cfg, trial);
      const auto forward = build_compact(g.pairs, g.gram, g.schedule);
      const auto inverse = build_inverse_compact(forward, g.gram, g.schedule);
      Rng rng(stream_seed(cfg.seed, trial, 7));
      const Eigen::VectorXd x = rng.normal_vector(cfg.n);
      const double e = rel(Eigen::VectorXd(matvec_H(inverse, matvec_B(forward, x))), x);
      worst = std::max(worst, e);
      if (!(e <= kRoundTripTol)) {
        o.pass = false;
        o.detail += to_string(id) + "/trial=" + std::to_string(trial) + " " + sci(e) + "; ";
      }
    }
  }
  o.detail += "12 builds at n=1000, worst ||H B x - x||/||x|| " + sci(worst) + " (limit " +
              sci(kRoundTripTol) + ")";
  report(6, "inverse times forward is the identity", o);
}

// 100 generated builds: 25 trials of each schedule at n=50.
void for_each_build(const std::function<void(const std::string&, const GeneratedTrial&)>& body) {
  for (auto id : kSchedules)
    for (std::size_t t = 0; t < 25; ++t)
      body(to_string(id) + "/trial=" + std::to_string(t), generate_experiment(config(id, 50, 25, 99), t));
}

void block_identities() {
  Outcome o;
  double worst1 = 0.0;
  double worst2 = 0.0;
  std::size_t steps = 0;
  std::size_t builds = 0;
  for_each_build([&](const std::string& tag, const GeneratedTrial& g) {
    const auto f = build_compact(g.pairs, g.gram, g.schedule);
    ++builds;
    for (std::size_t j = 0; j < f.steps.size(); ++j) {
      const auto& st = f.steps[j];
      ++steps;
      auto det = [&](double phi) { return (-(1 - phi) / st.sBs - phi / st.yts) / st.yts; };
      const double e1 = std::abs(det(phi_sr1(st.sBs, st.yts))) / std::abs(det(0.0));
      worst1 = std::max(worst1, e1);
      if (!(e1 <= kSingularBlockTol)) {
        o.pass = false;
        o.detail += tag + "/step=" + std::to_string(j) + " determinant " + sci(e1) + "; ";
      }
      if (st.sr1) continue;
      Eigen::Matrix2d block;
      block << st.alpha, st.beta, st.beta, st.delta;
      Eigen::Matrix2d expected;
      expected << -st.sBs + st.gamma_j, st.gamma_j, st.gamma_j, st.yts + st.gamma_j;
      const double e2 = (block.inverse() - expected).norm() / expected.norm();
      worst2 = std::max(worst2, e2);
      if (!(e2 <= kBlockInverseTol)) {
        o.pass = false;
        o.detail += tag + "/step=" + std::to_string(j) + " 2x2 inverse " + sci(e2) + "; ";
      }
    }
  });
  o.detail += std::to_string(builds) + " builds, " + std::to_string(steps) +
              " steps; worst relative determinant at the SR1 value " + sci(worst1) + " (limit " +
              sci(kSingularBlockTol) + "), worst 2x2 inverse mismatch " + sci(worst2) + " (limit " +
              sci(kBlockInverseTol) + ")";
  report(7, "singular SR1 block and 2x2 inverse identity", o);
}

void secant_suite() {
  Outcome o;
  double worst_b = 0.0;
  double worst_h = 0.0;
  std::size_t builds = 0;
  std::size_t sr1_steps = 0;
  for_each_build([&](const std::string& tag, const GeneratedTrial& g) {
    const auto forward = build_compact(g.pairs, g.gram, g.schedule);
    const auto inverse = build_inverse_compact(forward, g.gram, g.schedule);
    ++builds;
    sr1_steps += count_sr1(g.schedule);
    const double eb = rel(matvec_B(forward, g.pairs.S.back()), g.pairs.Y.back());
    const double eh = rel(solve(inverse, g.pairs.Y.back()), g.pairs.S.back());
    worst_b = std::max(worst_b, eb);
    worst_h = std::max(worst_h, eh);
    if (!(eb <= kSecantTol && eh <= kSecantTol)) {
      o.pass = false;
      o.detail += tag + " B " + sci(eb) + " H " + sci(eh) + "; ";
    }
  });
  o.detail += std::to_string(builds) + " builds (" + std::to_string(sr1_steps) +
              " SR1 steps among them), worst ||B s - y||/||y|| " + sci(worst_b) +
              ", worst ||H y - s||/||s|| " + sci(worst_h) + " (limit " + sci(kSecantTol) + ")";
  report(8, "secant conditions on the newest pair", o);
}

void timing_trend() {
  Outcome o;
  const auto started = std::chrono::steady_clock::now();
  auto timed = [](Eigen::Index n, std::size_t trials) {
    ExperimentConfig cfg = config(ScheduleId::Exp1, n, trials, 4242);
    cfg.time_solves = true;
    cfg.min_timing_s = 0.25;
    return run_experiment(cfg);
  };
  const auto small = timed(1000, 2);
  const auto large = timed(10000, 1);
  if (small.failed > 0 || large.failed > 0) {
    o.pass = false;
    o.detail = "timing trials failed; ";
  }
  const double speedup = large.mean_t_dense_s / large.mean_t_compact_s;
  const double growth = large.mean_t_compact_s / small.mean_t_compact_s;
  if (!(speedup >= kMinSpeedup)) o.pass = false;
  if (!(growth <= kMaxCompactGrowth)) o.pass = false;
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  o.detail += "n=10000: compact " + sci(large.mean_t_compact_s) + " s, dense " +
              sci(large.mean_t_dense_s) + " s, speedup " + sci(speedup) + " (min " +
              sci(kMinSpeedup) + "); compact n=1000 " + sci(small.mean_t_compact_s) +
              " s, growth for 10x n " + sci(growth) + " (max " + sci(kMaxCompactGrowth) +
              "); residual at n=10000 " + sci(large.mean_solve_rel_resid) + "; wall " +
              sci(elapsed) + " s";
  report(3, "compact solve speed and scaling", o);
}

}  // namespace

int main() {
  auto guarded = [](int id, const char* name, void (*fn)()) {
    try {
      fn();
    } catch (const std::exception& e) {
      report(id, name, {false, std::string("exception: ") + e.what()});
    }
  };
  guarded(1, "compact vs dense accuracy (with 2)", table_accuracy);
  guarded(4, "spectrum vs dense eigensolver", spectra_oracle);
  guarded(5, "middle matrix vs closed forms", closed_forms);
  guarded(6, "inverse times forward is the identity", round_trip);
  guarded(7, "singular SR1 block and 2x2 inverse identity", block_identities);
  guarded(8, "secant conditions on the newest pair", secant_suite);
  guarded(3, "compact solve speed and scaling", timing_trend);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
