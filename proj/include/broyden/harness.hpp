#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "broyden/compact.hpp"
#include "broyden/pair_store.hpp"

namespace broyden::harness {

/// The four phi patterns of the line-search experiments:
///   exp1: phi0<0, 1, 0<phi2<1, 0,   phi4>1
///   exp2: phi0<0, 1, sr1,      0,   phi4>1
///   exp3: phi0<0, 1, sr1,      sr1, phi4>1
///   exp4: sr1,    1, sr1,      0,   phi4>1
enum class ScheduleId { Exp1, Exp2, Exp3, Exp4, Custom };

std::string to_string(ScheduleId id);
ScheduleId parse_schedule_id(const std::string& name);

struct ExperimentConfig {
  Eigen::Index n = 100;
  std::size_t m = 5;
  ScheduleId schedule = ScheduleId::Exp1;
  PhiSchedule<double> custom;  // used when schedule == Custom
  std::size_t trials = 10;
  std::uint64_t seed = 1;
  double gamma_lo = 0.5;
  double gamma_hi = 2.0;
  bool time_solves = true;
  double min_timing_s = 0.02;  // repeat timed work until this much time elapsed

  void validate() const;
};

/// Random phi values drawn once per trial: phi0 in [-2, -0.1],
/// phi2 in (0, 1), phi4 in (1, 3].
struct PhiDraws {
  double phi0;
  double phi2;
  double phi4;
};

PhiSchedule<double> make_schedule(ScheduleId id, std::size_t m, const PhiDraws& draws);

struct GeneratedTrial {
  PairSequence<double> pairs;
  GramCache<double> gram;
  PhiSchedule<double> schedule;
  std::size_t resamples = 0;
};

/// Simulated line search: x_{j+1} = x_j - a_j B_j^{-1} g_j with random x0,
/// x1, gradients and step lengths. Deterministic in (seed, trial).
GeneratedTrial generate_experiment(const ExperimentConfig& cfg, std::size_t trial);

struct TrialResult {
  std::size_t trial = 0;
  double frob_rel_err = 0.0;
  double solve_rel_resid = 0.0;
  double t_compact_s = 0.0;
  double t_dense_s = 0.0;
  std::size_t resamples = 0;
  bool ok = false;
  std::string error;

  std::string status() const { return ok ? "ok" : "failed"; }
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<TrialResult> trials;
  std::size_t succeeded = 0;
  std::size_t failed = 0;
  // Arithmetic means over the succeeded trials.
  double mean_frob_rel_err = 0.0;
  double mean_solve_rel_resid = 0.0;
  double mean_t_compact_s = 0.0;
  double mean_t_dense_s = 0.0;
};

ExperimentReport run_experiment(const ExperimentConfig& cfg);

/// ||B - B_compact||_F / ||B||_F without forming B_compact (column blocks).
double relative_frobenius_error(const Matrix<double>& dense, const CompactFactor<double>& f);

std::string to_csv(const ExperimentReport& report);
nlohmann::json to_json(const ExperimentReport& report);

}  // namespace broyden::harness
