#include "broyden/harness.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "broyden/dense_oracle.hpp"
#include "broyden/inverse.hpp"
#include "broyden/pair_io.hpp"
#include "broyden/random.hpp"

namespace broyden::harness {

namespace {

constexpr std::size_t kMaxResamples = 100;
constexpr std::uint64_t kRhsSubstream = 1;

using Clock = std::chrono::steady_clock;

// Mean wall time of `work`, repeated until `min_seconds` have elapsed.
template <typename Work>
double time_repeated(Work&& work, double min_seconds) {
  std::size_t reps = 0;
  const auto start = Clock::now();
  double elapsed = 0.0;
  do {
    work();
    ++reps;
    elapsed = std::chrono::duration<double>(Clock::now() - start).count();
  } while (elapsed < min_seconds);
  return elapsed / static_cast<double>(reps);
}

PhiSchedule<double> prefix(const PhiSchedule<double>& schedule, std::size_t count) {
  return PhiSchedule<double>(schedule.begin(), schedule.begin() + static_cast<std::ptrdiff_t>(count));
}

double mean_of(const std::vector<TrialResult>& trials, double TrialResult::*field) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& t : trials) {
    if (!t.ok) continue;
    sum += t.*field;
    ++count;
  }
  return count ? sum / static_cast<double>(count) : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

std::string to_string(ScheduleId id) {
  switch (id) {
    case ScheduleId::Exp1: return "exp1";
    case ScheduleId::Exp2: return "exp2";
    case ScheduleId::Exp3: return "exp3";
    case ScheduleId::Exp4: return "exp4";
    case ScheduleId::Custom: return "custom";
  }
  return "unknown";
}

ScheduleId parse_schedule_id(const std::string& name) {
  if (name == "exp1") return ScheduleId::Exp1;
  if (name == "exp2") return ScheduleId::Exp2;
  if (name == "exp3") return ScheduleId::Exp3;
  if (name == "exp4") return ScheduleId::Exp4;
  if (name == "custom") return ScheduleId::Custom;
  throw Error(ErrorKind::InvalidArgument, "unknown schedule id: " + name);
}

void ExperimentConfig::validate() const {
  if (m < 1) throw Error(ErrorKind::InvalidArgument, "m must be at least 1");
  if (n < static_cast<Eigen::Index>(2 * m)) throw Error(ErrorKind::InvalidArgument, "n must be >= 2m");
  if (trials < 1) throw Error(ErrorKind::InvalidArgument, "trials must be >= 1");
  if (!(gamma_lo > 0.0 && gamma_hi >= gamma_lo))
    throw Error(ErrorKind::InvalidArgument, "gamma range must be a positive interval");
  if (schedule == ScheduleId::Custom && custom.size() != m)
    throw Error(ErrorKind::InvalidArgument, "custom schedule length differs from m");
}

PhiSchedule<double> make_schedule(ScheduleId id, std::size_t m, const PhiDraws& d) {
  using Step = PhiStep<double>;
  std::array<Step, 5> row{};
  switch (id) {
    case ScheduleId::Exp1: row = {Step(d.phi0), Step(1.0), Step(d.phi2), Step(0.0), Step(d.phi4)}; break;
    case ScheduleId::Exp2: row = {Step(d.phi0), Step(1.0), Step(Sr1{}), Step(0.0), Step(d.phi4)}; break;
    case ScheduleId::Exp3: row = {Step(d.phi0), Step(1.0), Step(Sr1{}), Step(Sr1{}), Step(d.phi4)}; break;
    case ScheduleId::Exp4: row = {Step(Sr1{}), Step(1.0), Step(Sr1{}), Step(0.0), Step(d.phi4)}; break;
    case ScheduleId::Custom:
      throw Error(ErrorKind::InvalidArgument, "custom schedules are supplied, not generated");
  }
  // Rows longer than five steps repeat the pattern.
  PhiSchedule<double> schedule;
  for (std::size_t i = 0; i < m; ++i) schedule.push_back(row[i % row.size()]);
  return schedule;
}

GeneratedTrial generate_experiment(const ExperimentConfig& cfg, std::size_t trial) {
  cfg.validate();
  Rng rng(stream_seed(cfg.seed, trial));
  const Eigen::Index n = cfg.n;

  const double gamma = rng.uniform(cfg.gamma_lo, cfg.gamma_hi);
  PhiDraws draws{};
  draws.phi0 = rng.uniform(-2.0, -0.1);
  do {
    draws.phi2 = rng.uniform();
  } while (draws.phi2 <= 0.0);
  draws.phi4 = 3.0 - 2.0 * rng.uniform();

  GeneratedTrial out;
  out.schedule = cfg.schedule == ScheduleId::Custom ? cfg.custom
                                                     : make_schedule(cfg.schedule, cfg.m, draws);
  out.pairs = PairSequence<double>(n, gamma);

  Eigen::VectorXd x = rng.normal_vector(n);
  Eigen::VectorXd x_next = rng.normal_vector(n);
  Eigen::VectorXd g = rng.normal_vector(n);

  for (std::size_t j = 0; j < cfg.m; ++j) {
    if (j > 0) {
      const auto inv = build_inverse_compact<double>(snapshot(out.pairs), out.gram,
                                                     prefix(out.schedule, j));
      const Eigen::VectorXd r = solve(inv, g);
      const double step = rng.uniform();
      x_next = x - step * r;
    }
    const Eigen::VectorXd s = x_next - x;

    // Redraw the new gradient until the pair passes the curvature floor and
    // the updated factors can be built.
    for (std::size_t attempt = 0;; ++attempt) {
      if (attempt > kMaxResamples)
        throw Error(ErrorKind::ResampleLimitExceeded,
                    "no admissible gradient after " + std::to_string(kMaxResamples) + " redraws", j);
      Eigen::VectorXd g_next = rng.normal_vector(n);
      const Eigen::VectorXd y = g_next - g;
      PairSequence<double> pairs = out.pairs;
      GramCache<double> gram = out.gram;
      try {
        append_pair(pairs, gram, s, y);
        build_inverse_compact<double>(snapshot(pairs), gram, prefix(out.schedule, j + 1));
      } catch (const Error& e) {
        if (!e.is_numerical()) throw;
        ++out.resamples;
        continue;
      }
      out.pairs = std::move(pairs);
      out.gram = std::move(gram);
      g = std::move(g_next);
      break;
    }
    x = x_next;
  }
  return out;
}

double relative_frobenius_error(const Matrix<double>& dense, const CompactFactor<double>& f) {
  const Eigen::Index n = f.n();
  const Matrix<double> P = materialize_columns(f.recipe, f.scales(), *f.pairs);
  const Matrix<double> MPt = f.Mhat * P.transpose();
  constexpr Eigen::Index kBlock = 256;
  double diff2 = 0.0;
  for (Eigen::Index c0 = 0; c0 < n; c0 += kBlock) {
    const Eigen::Index w = std::min(kBlock, n - c0);
    Matrix<double> block = P * MPt.middleCols(c0, w);
    block.block(c0, 0, w, w).diagonal().array() += f.gamma;
    diff2 += (dense.middleCols(c0, w) - block).squaredNorm();
  }
  return std::sqrt(diff2) / dense.norm();
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentReport report;
  report.config = cfg;

  for (std::size_t t = 0; t < cfg.trials; ++t) {
    TrialResult res;
    res.trial = t;
    try {
      GeneratedTrial gen = generate_experiment(cfg, t);
      res.resamples = gen.resamples;
      const auto pairs = snapshot(gen.pairs);

      Matrix<double> B = dense::build(*pairs, gen.schedule);
      const auto forward = build_compact<double>(pairs, gen.gram, gen.schedule);
      res.frob_rel_err = relative_frobenius_error(B, forward);

      Rng rhs_rng(stream_seed(cfg.seed, t, kRhsSubstream));
      const Eigen::VectorXd z = rhs_rng.normal_vector(cfg.n);
      const auto inverse = build_inverse_compact<double>(forward, gen.gram, gen.schedule);
      const Eigen::VectorXd r = solve(inverse, z);
      res.solve_rel_resid = (B * r - z).norm() / z.norm();

      if (cfg.time_solves) {
        // Compact: full build of both middle matrices from the maintained
        // caches, then the O(n l) apply. Dense: factorization and solve of the
        // already formed matrix.
        Eigen::VectorXd sink;
        res.t_compact_s = time_repeated(
            [&] {
              const auto f = build_inverse_compact<double>(pairs, gen.gram, gen.schedule);
              sink = solve(f, z);
            },
            cfg.min_timing_s);
        res.t_dense_s = time_repeated(
            [&] {
              Eigen::LDLT<Matrix<double>> ldlt(B);
              sink = ldlt.solve(z);
            },
            cfg.min_timing_s);
      }
      res.ok = true;
    } catch (const Error& e) {
      res.ok = false;
      res.error = e.what();
    }
    report.trials.push_back(std::move(res));
  }

  for (const auto& t : report.trials) (t.ok ? report.succeeded : report.failed) += 1;
  report.mean_frob_rel_err = mean_of(report.trials, &TrialResult::frob_rel_err);
  report.mean_solve_rel_resid = mean_of(report.trials, &TrialResult::solve_rel_resid);
  report.mean_t_compact_s = mean_of(report.trials, &TrialResult::t_compact_s);
  report.mean_t_dense_s = mean_of(report.trials, &TrialResult::t_dense_s);
  return report;
}

std::string to_csv(const ExperimentReport& report) {
  std::ostringstream out;
  out << "trial,frob_rel_err,solve_rel_resid,t_compact_s,t_dense_s,resamples,status\n";
  for (const auto& t : report.trials) {
    out << t.trial << ',' << format_double(t.frob_rel_err) << ','
        << format_double(t.solve_rel_resid) << ',' << format_double(t.t_compact_s) << ','
        << format_double(t.t_dense_s) << ',' << t.resamples << ',' << t.status() << '\n';
  }
  return out.str();
}

nlohmann::json to_json(const ExperimentReport& report) {
  const auto& cfg = report.config;
  nlohmann::json config = {
      {"n", cfg.n},
      {"m", cfg.m},
      {"schedule", to_string(cfg.schedule)},
      {"trials", cfg.trials},
      {"seed", cfg.seed},
      {"gamma_range", {cfg.gamma_lo, cfg.gamma_hi}},
      {"time_solves", cfg.time_solves},
  };
  nlohmann::json rows = nlohmann::json::array();
  std::vector<double> frob, resid, tc, td;
  std::vector<std::size_t> resamples;
  std::vector<std::string> status;
  for (const auto& t : report.trials) {
    nlohmann::json row = {
        {"trial", t.trial},
        {"frob_rel_err", t.frob_rel_err},
        {"solve_rel_resid", t.solve_rel_resid},
        {"t_compact_s", t.t_compact_s},
        {"t_dense_s", t.t_dense_s},
        {"resamples", t.resamples},
        {"status", t.status()},
    };
    if (!t.ok) row["error"] = t.error;
    rows.push_back(std::move(row));
    frob.push_back(t.frob_rel_err);
    resid.push_back(t.solve_rel_resid);
    tc.push_back(t.t_compact_s);
    td.push_back(t.t_dense_s);
    resamples.push_back(t.resamples);
    status.push_back(t.status());
  }
  // NaN means (no successful trial) serialize as null.
  return {
      {"config", config},
      {"attempted", report.trials.size()},
      {"succeeded", report.succeeded},
      {"failed", report.failed},
      {"mean",
       {{"frob_rel_err", report.mean_frob_rel_err},
        {"solve_rel_resid", report.mean_solve_rel_resid},
        {"t_compact_s", report.mean_t_compact_s},
        {"t_dense_s", report.mean_t_dense_s}}},
      {"per_trial",
       {{"frob_rel_err", frob},
        {"solve_rel_resid", resid},
        {"t_compact_s", tc},
        {"t_dense_s", td},
        {"resamples", resamples},
        {"status", status}}},
      {"trials", rows},
  };
}

}  // namespace broyden::harness
