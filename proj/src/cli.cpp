#include "broyden/cli.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "broyden/compact.hpp"
#include "broyden/harness.hpp"
#include "broyden/inverse.hpp"
#include "broyden/pair_io.hpp"
#include "broyden/spectra.hpp"

namespace broyden {

namespace {

constexpr int kUsageError = 1;
constexpr int kNumericalError = 2;

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

void print_build(const PairFile& file, std::ostream& out) {
  const auto pairs = snapshot(file.pairs);
  const auto f = build_compact<double>(pairs, file.gram, file.schedule);
  Eigen::JacobiSVD<Matrix<double>> svd(f.Mhat);
  const auto& sv = svd.singularValues();
  const double cond = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1)
                                              : std::numeric_limits<double>::infinity();
  out << "n=" << f.n() << " m=" << f.steps.size() << " l=" << f.cols()
      << " sr1_steps=" << count_sr1(file.schedule) << " gamma=" << fmt(f.gamma) << '\n';
  out << "Mhat_cond=" << fmt(cond) << '\n';
  out << "Gamma=[";
  for (Eigen::Index j = 0; j < f.GammaDiag.size(); ++j)
    out << (j ? ", " : "") << fmt(f.GammaDiag(j));
  out << "]\n";
  out << "step phi sBs yts alpha beta delta\n";
  for (std::size_t j = 0; j < f.steps.size(); ++j) {
    const auto& s = f.steps[j];
    out << j << ' ' << (s.sr1 ? "sr1(" + fmt(s.phi) + ")" : fmt(s.phi)) << ' ' << fmt(s.sBs) << ' '
        << fmt(s.yts) << ' ' << fmt(s.alpha) << ' ' << fmt(s.beta) << ' ' << fmt(s.delta) << '\n';
  }
}

void print_eig(const PairFile& file, std::ostream& out) {
  const auto f = build_compact<double>(snapshot(file.pairs), file.gram, file.schedule);
  const auto summary = eigenvalues(f, file.gram);
  out << "gamma=" << fmt(summary.gamma) << " multiplicity=" << summary.trivial_multiplicity
      << "; shifted=[";
  for (Eigen::Index i = 0; i < summary.shifted.size(); ++i)
    out << (i ? ", " : "") << fmt(summary.shifted(i));
  out << "]; cond=" << fmt(summary.cond) << '\n';
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Compact representations of Broyden-class quasi-Newton matrices"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a pair file from a simulated line search");
  harness::ExperimentConfig gen_cfg;
  std::string gen_schedule = "exp1";
  std::string gen_schedule_file;
  std::string gen_out;
  std::size_t gen_trial = 0;
  gen->add_option("--n", gen_cfg.n, "Dimension")->check(CLI::PositiveNumber);
  gen->add_option("--m", gen_cfg.m, "Number of pairs")->check(CLI::PositiveNumber);
  gen->add_option("--schedule", gen_schedule, "exp1|exp2|exp3|exp4");
  gen->add_option("--schedule-file", gen_schedule_file, "Custom phi schedule (floats or sr1)");
  gen->add_option("--seed", gen_cfg.seed, "RNG seed");
  gen->add_option("--trial", gen_trial, "Trial index (selects the RNG stream)");
  gen->add_option("--gamma-lo", gen_cfg.gamma_lo);
  gen->add_option("--gamma-hi", gen_cfg.gamma_hi);
  gen->add_option("--out,-o", gen_out, "Output pair file")->required();

  // build
  auto* build = app.add_subcommand("build", "Build the compact factor and print diagnostics");
  std::string build_in;
  build->add_option("pairs", build_in, "Pair file")->required();

  // solve
  auto* solve_cmd = app.add_subcommand("solve", "Solve B r = z with the inverse compact factor");
  std::string solve_in;
  std::string solve_rhs;
  std::string solve_out;
  solve_cmd->add_option("pairs", solve_in, "Pair file")->required();
  solve_cmd->add_option("--rhs", solve_rhs, "Right-hand side file (n floats)")->required();
  solve_cmd->add_option("--out,-o", solve_out, "Write the solution here instead of stdout");

  // eig
  auto* eig = app.add_subcommand("eig", "Eigenvalues and condition number of B");
  std::string eig_in;
  eig->add_option("pairs", eig_in, "Pair file")->required();

  // experiment
  auto* exp = app.add_subcommand("experiment", "Run an accuracy/timing campaign");
  harness::ExperimentConfig exp_cfg;
  std::string exp_schedule = "exp1";
  std::string exp_schedule_file;
  std::string exp_format = "json";
  std::string exp_out;
  bool no_timing = false;
  exp->add_option("--n", exp_cfg.n, "Dimension")->check(CLI::PositiveNumber);
  exp->add_option("--m", exp_cfg.m, "Number of pairs")->check(CLI::PositiveNumber);
  exp->add_option("--schedule", exp_schedule, "exp1|exp2|exp3|exp4");
  exp->add_option("--schedule-file", exp_schedule_file, "Custom phi schedule (floats or sr1)");
  exp->add_option("--trials", exp_cfg.trials, "Trials")->check(CLI::PositiveNumber);
  exp->add_option("--seed", exp_cfg.seed, "RNG seed");
  exp->add_option("--gamma-lo", exp_cfg.gamma_lo);
  exp->add_option("--gamma-hi", exp_cfg.gamma_hi);
  exp->add_option("--format", exp_format, "json|csv")->check(CLI::IsMember({"json", "csv"}));
  exp->add_option("--out,-o", exp_out, "Write the report here instead of stdout");
  exp->add_flag("--no-timing", no_timing, "Skip the solve timings");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kUsageError;
  }

  auto configure = [](harness::ExperimentConfig& cfg, const std::string& id,
                      const std::string& schedule_file) {
    if (!schedule_file.empty()) {
      cfg.schedule = harness::ScheduleId::Custom;
      cfg.custom = load_schedule(schedule_file);
    } else {
      cfg.schedule = harness::parse_schedule_id(id);
    }
  };

  try {
    if (*gen) {
      configure(gen_cfg, gen_schedule, gen_schedule_file);
      const auto trial = harness::generate_experiment(gen_cfg, gen_trial);
      save_pairs(trial.pairs, trial.schedule, gen_out);
      out << "wrote " << trial.pairs.size() << " pairs (n=" << trial.pairs.n
          << ", resamples=" << trial.resamples << ") to " << gen_out << '\n';
    } else if (*build) {
      print_build(load_pairs(build_in), out);
    } else if (*solve_cmd) {
      const auto file = load_pairs(solve_in);
      const Vector<double> z = load_vector(solve_rhs);
      const auto forward = build_compact<double>(snapshot(file.pairs), file.gram, file.schedule);
      const auto inverse = build_inverse_compact<double>(forward, file.gram, file.schedule);
      const Vector<double> r = solve(inverse, z);
      const double resid = (matvec_B(forward, r) - z).norm() / z.norm();
      out << "residual=" << fmt(resid) << '\n';
      if (!solve_out.empty()) {
        save_vector(r, solve_out);
      } else {
        for (Eigen::Index i = 0; i < r.size(); ++i) out << format_double(r(i)) << '\n';
      }
    } else if (*eig) {
      print_eig(load_pairs(eig_in), out);
    } else if (*exp) {
      configure(exp_cfg, exp_schedule, exp_schedule_file);
      exp_cfg.time_solves = !no_timing;
      const auto report = harness::run_experiment(exp_cfg);
      const std::string text =
          exp_format == "csv" ? harness::to_csv(report) : harness::to_json(report).dump(2) + "\n";
      if (exp_out.empty()) {
        out << text;
      } else {
        std::ofstream file(exp_out);
        if (!file) throw Error(ErrorKind::IoError, "cannot open for writing: " + exp_out);
        file << text;
      }
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.is_numerical() ? kNumericalError : kUsageError;
  }
  return 0;
}

}  // namespace broyden
