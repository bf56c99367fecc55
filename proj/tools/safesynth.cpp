// safesynth: data-driven safe controller synthesis from the command line.
//
//   safesynth synthesize --config configs/room-temp.cfg --out runs
//   safesynth bounds kappa --N 140000 --N0 70000 --Nstar 1 --R 0 --beta 0.05

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "safesynth/bounds.hpp"
#include "safesynth/config.hpp"
#include "safesynth/errors.hpp"
#include "safesynth/io.hpp"
#include "safesynth/pipeline.hpp"
#include "safesynth/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace safesynth;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInconclusive = 2;
constexpr int kExitConfig = 3;
constexpr int kExitRuntime = 4;

struct Common {
  std::string config_path;
  std::string out = "runs";
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> seed_validation;
  std::optional<int> retries;
  std::optional<long> N;
  std::optional<long> N0;
  std::optional<double> eps;
  bool no_tighten = false;
};

void AddCommon(CLI::App* cmd, Common& c, bool config_required = true) {
  auto* opt = cmd->add_option("--config", c.config_path, "Configuration file");
  if (config_required) opt->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", c.out, "Base output directory")->capture_default_str();
  cmd->add_option("--seed", c.seed, "Scenario sampling seed");
  cmd->add_option("--seed-validation", c.seed_validation, "Validation sampling seed");
  cmd->add_option("--retries", c.retries, "Fresh-seed retries on an inconclusive result");
  cmd->add_option("--N", c.N, "Scenario sample count");
  cmd->add_option("--N0", c.N0, "Validation sample count");
  cmd->add_option("--eps", c.eps, "Violation level for the prior method");
  cmd->add_flag("--no-tighten", c.no_tighten,
                "Skip grid tightening (fast, never certifies)");
}

SynthesisConfig Resolve(const Common& c) {
  SynthesisConfig config = c.config_path.empty() ? RoomTemperatureConfig() : LoadConfig(c.config_path);
  if (c.seed) config.seed = *c.seed;
  if (c.seed_validation) config.seed_validation = *c.seed_validation;
  if (c.retries) config.retries = *c.retries;
  if (c.N) {
    config.samples.N = *c.N;
    config.samples.N_auto = false;
    if (!c.N0 && config.samples.N0 < 1) config.samples.N0 = *c.N / 2;
  }
  if (c.N0) config.samples.N0 = *c.N0;
  if (c.eps) config.samples.eps = *c.eps;
  if (c.no_tighten) config.grid.tighten = false;
  config.Validate();
  return config;
}

std::string UtcStamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

// Run-scoped output directory and the files written into it.
class RunDir {
 public:
  RunDir(const std::string& base, const std::string& command, const SynthesisConfig* config,
         std::vector<std::string> argv)
      : command_(command), argv_(std::move(argv)), stamp_(UtcStamp()) {
    hash_ = config ? ConfigHash(*config) : std::string(64, '0');
    fs::path dir = fs::path(base) / (stamp_ + "-" + hash_.substr(0, 12));
    for (int k = 1; fs::exists(dir); ++k) {
      dir = fs::path(base) / (stamp_ + "-" + hash_.substr(0, 12) + "-" + std::to_string(k));
    }
    fs::create_directories(dir);
    path_ = dir;
    if (config) {
      config_ = ConfigToJson(*config);
      Write("config.json", config_.dump(2) + "\n");
    }
  }

  const fs::path& path() const { return path_; }

  void Write(const std::string& name, const std::string& content) {
    WriteFileAtomic(path_ / name, content);
    files_.push_back(name);
  }

  void Record(const fs::path& file) { files_.push_back(fs::relative(file, path_).string()); }

  void SetSeeds(json seeds) { seeds_ = std::move(seeds); }

  void Finish(int exit_code) {
    json manifest{{"tool_version", kToolVersion},
                  {"command", command_},
                  {"argv", argv_},
                  {"timestamp", stamp_},
                  {"config_hash", hash_},
                  {"seeds", seeds_},
                  {"exit_code", exit_code},
                  {"files", files_}};
    WriteFileAtomic(path_ / "manifest.json", manifest.dump(2) + "\n");
  }

 private:
  std::string command_;
  std::vector<std::string> argv_;
  std::string stamp_;
  std::string hash_;
  fs::path path_;
  json config_;
  json seeds_ = json::object();
  std::vector<std::string> files_;
};

int VerdictExit(const CertificateReport& r) { return r.certified() ? kExitOk : kExitInconclusive; }

void PrintReport(const CertificateReport& r, const fs::path& dir) {
  std::printf("verdict     %s%s%s\n", r.verdict.c_str(), r.failure_cause.empty() ? "" : " (",
              r.failure_cause.empty() ? "" : (r.failure_cause + ")").c_str());
  std::printf("N, N0       %ld, %ld\n", r.N, r.N0);
  std::printf("K*          %.6f\n", r.K);
  std::printf("lambda*     %.6f\n", r.lambda);
  std::printf("gamma*      %.6f\n", r.gamma);
  std::printf("c*          %.6f\n", r.c);
  std::printf("N*          %ld\n", r.Nstar);
  if (r.R) std::printf("R           %ld\n", *r.R);
  if (r.kappa) std::printf("kappa*      %.8f\n", *r.kappa);
  std::printf("eps         %.6g\n", r.eps);
  std::printf("L*U^-1(eps) %.6f\n", r.lipschitz_term);
  std::printf("margin      %.6f\n", r.margin);
  for (const auto& w : r.warnings) std::printf("warning     %s\n", w.c_str());
  if (!r.failure_detail.empty()) std::printf("detail      %s\n", r.failure_detail.c_str());
  std::printf("output      %s\n", dir.string().c_str());
}

void SaveArtifacts(RunDir& run, const RunArtifacts& art) {
  if (art.scenario) {
    SaveDataset(*art.scenario, run.path() / "scenario.csv");
    run.Record(run.path() / "scenario.csv");
  }
  if (art.validation) {
    SaveDataset(*art.validation, run.path() / "validation.csv");
    run.Record(run.path() / "validation.csv");
  }
}

json ConditionsJson(const ConditionReport& rep) {
  json out = json::array();
  for (const auto& c : rep.conditions) {
    json point = json::array();
    for (Eigen::Index i = 0; i < c.worst_point.size(); ++i) point.push_back(c.worst_point[i]);
    out.push_back({{"name", c.name},
                   {"worst_residual", c.worst_residual},
                   {"worst_point", point},
                   {"strict", c.strict},
                   {"passed", c.passed},
                   {"points", c.points}});
  }
  return out;
}

// Ground-truth checks of a report's certificate; returns true when all pass.
bool VerifyInto(RunDir& run, const SynthesisConfig& config, const CertificateReport& report) {
  std::unique_ptr<System> truth = MakeSystem(config.plant);
  const DecisionLayout layout = config.tmpl.layout();
  const VectorXd core = report.DecisionVector();
  if (core.size() != layout.core_size()) {
    throw ConfigError("report", "decision vector does not match the configured template");
  }
  VectorXd d = VectorXd::Zero(layout.size());
  d.head(layout.core_size()) = core;

  const ConditionReport cond = CheckCbfConditions(config.tmpl, d, *truth, config.check);
  const MatrixXd x0 = TensorGrid(config.tmpl.initial_set, 401);
  const SafetySummary safety = EmpiricalSafety(*truth, ControllerOf(config.tmpl, d), config.tmpl,
                                               x0, config.tmpl.horizon);
  const PlotFiles plots = EmitPlotData(config.tmpl, d, *truth, run.path());
  run.Record(plots.barrier);
  run.Record(plots.controller);
  run.Record(plots.g3_surface);

  json failing = json::array();
  for (const auto& x : safety.failing_initial_states) {
    failing.push_back(std::vector<double>(x.data(), x.data() + x.size()));
  }
  const json out{{"conditions", ConditionsJson(cond)},
                 {"all_conditions_passed", cond.all_passed},
                 {"safety",
                  {{"fraction_safe", safety.fraction_safe},
                   {"min_distance_to_unsafe", safety.min_distance_to_unsafe},
                   {"trajectories", safety.trajectories},
                   {"clamp_events", safety.clamp_events},
                   {"failing_initial_states", failing}}}};
  run.Write("verify.json", out.dump(2) + "\n");

  for (const auto& c : cond.conditions) {
    std::printf("condition   %-9s worst %+.6e  %s\n", c.name.c_str(), c.worst_residual,
                c.passed ? "pass" : "FAIL");
  }
  std::printf("safety      %.4f of %ld trajectories safe, %ld clamp events\n",
              safety.fraction_safe, safety.trajectories, safety.clamp_events);
  return cond.all_passed && safety.fraction_safe == 1.0;
}

int CmdSynthesize(const Common& c, const std::vector<std::string>& argv, bool prior,
                  bool verify) {
  const SynthesisConfig config = Resolve(c);
  RunDir run(c.out, prior ? "prior-synthesize" : "synthesize", &config, argv);
  RunArtifacts art;
  const CertificateReport report = prior ? PriorSynthesize(config, &art) : Synthesize(config, &art);
  run.SetSeeds({{"scenario", report.seed},
                {"validation", report.seed_validation ? json(*report.seed_validation) : json(nullptr)}});
  if (!prior) SaveArtifacts(run, art);
  run.Write("report.json", json(report).dump(2) + "\n");
  PrintReport(report, run.path());
  int code = VerdictExit(report);
  if (verify && art.solution) {
    if (!VerifyInto(run, config, report) && report.certified()) {
      std::fprintf(stderr, "error: certified controller failed the ground-truth checks\n");
      code = kExitRuntime;
    }
  }
  run.Finish(code);
  return code;
}

int CmdVerify(const Common& c, const std::string& report_path,
              const std::vector<std::string>& argv) {
  const SynthesisConfig config = Resolve(c);
  std::ifstream in(report_path);
  if (!in) throw ConfigError("--report", "cannot open " + report_path);
  CertificateReport report;
  try {
    report = json::parse(in).get<CertificateReport>();
  } catch (const json::exception& e) {
    throw ConfigError("--report", std::string("malformed report: ") + e.what());
  }
  RunDir run(c.out, "verify", &config, argv);
  const bool ok = VerifyInto(run, config, report);
  const int code = ok ? kExitOk : kExitInconclusive;
  run.Finish(code);
  return code;
}

int CmdCollect(const Common& c, const std::string& role_text, std::optional<long> count,
               const std::vector<std::string>& argv) {
  const SynthesisConfig config = Resolve(c);
  DatasetRole role;
  try {
    role = ParseDatasetRole(role_text);
  } catch (const std::exception& e) {
    throw ConfigError("--role", e.what());
  }
  const bool scenario = role == DatasetRole::kScenario;
  const long n = count.value_or(scenario ? config.samples.N : config.samples.N0);
  if (n < 1) throw ConfigError("--count", "sample count must be >= 1");
  const std::uint64_t seed = scenario ? config.seed : config.seed_validation;
  std::unique_ptr<System> system = MakeSystem(config.plant);
  RunDir run(c.out, "collect", &config, argv);
  run.SetSeeds({{role_text, seed}});
  const Dataset data = Collect(*system, config.tmpl.sample_space(), static_cast<int>(n), seed, role);
  const fs::path file = run.path() / (role_text + ".csv");
  SaveDataset(data, file);
  run.Record(file);
  std::printf("%ld %s samples (seed %llu) -> %s\n", n, role_text.c_str(),
              static_cast<unsigned long long>(seed), file.string().c_str());
  run.Finish(kExitOk);
  return kExitOk;
}

int CmdPlan(const Common& c, std::optional<double> K_hat, std::optional<long> Nstar_hat,
            const std::vector<std::string>& argv) {
  SynthesisConfig config = Resolve(c);
  if (K_hat) config.planner.K_hat = K_hat;
  if (Nstar_hat) config.planner.Nstar_hat = Nstar_hat;
  std::unique_ptr<System> system = MakeSystem(config.plant);
  const SampleSizePlan plan = PlanFor(config, *system);
  RunDir run(c.out, "plan", &config, argv);
  json steps = json::array();
  std::printf("%12s %12s %6s %14s %s\n", "N", "N0", "R_hat", "kappa_thr", "pass");
  for (const auto& s : plan.steps) {
    std::printf("%12ld %12ld %6ld %14.10f %s\n", s.N, s.N0, s.R_hat, s.kappa_threshold,
                s.passed ? "yes" : "no");
    steps.push_back({{"N", s.N},
                     {"N0", s.N0},
                     {"R_hat", s.R_hat},
                     {"kappa_threshold", s.kappa_threshold},
                     {"passed", s.passed}});
  }
  run.Write("plan.json", json{{"N", plan.N}, {"N0", plan.N0}, {"steps", steps}}.dump(2) + "\n");
  run.Finish(kExitOk);
  return kExitOk;
}

int CmdRepeat(const Common& c, int runs, const std::vector<std::string>& argv) {
  const SynthesisConfig config = Resolve(c);
  RunDir run(c.out, "repeat", &config, argv);
  run.SetSeeds({{"scenario", config.seed}, {"validation", config.seed_validation}});
  const RepeatSummary summary = RepeatExperiment(config, runs, [](const RunRecord& r) {
    std::printf("run %3d  R=%s  N*=%ld  K=%+.5f  margin=%+.5f  %s\n", r.index,
                r.R ? std::to_string(*r.R).c_str() : "-", r.Nstar, r.K, r.margin,
                r.verdict.c_str());
    std::fflush(stdout);
  });
  std::ostringstream hist;
  hist << "R,frequency\n";
  for (const auto& [R, count] : summary.histogram) hist << R << ',' << count << '\n';
  run.Write("histogram.csv", hist.str());
  run.Write("repeat.json", json(summary).dump(2) + "\n");
  std::printf("certified %d of %d\n", summary.certified, runs);
  if (summary.expected_samples) {
    std::printf("N_e       %.1f\n", *summary.expected_samples);
  } else {
    std::printf("N_e       undefined (no run certified)\n");
  }
  run.Finish(kExitOk);
  return kExitOk;
}

SampleSpace SpaceFor(const std::string& config_path) {
  if (config_path.empty()) return RoomTemperatureConfig().tmpl.sample_space();
  return LoadConfig(config_path).tmpl.sample_space();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data-driven safe controller synthesis with posterior confidence bounds"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));
  const std::vector<std::string> args(argv, argv + argc);

  Common common;
  auto* plan = app.add_subcommand("plan", "Choose N and N0 by the posterior planner");
  AddCommon(plan, common);
  std::optional<double> plan_K;
  std::optional<long> plan_Nstar;
  plan->add_option("--K-hat", plan_K, "Estimated optimum (otherwise a pilot run)");
  plan->add_option("--Nstar-hat", plan_Nstar, "Estimated support count");

  auto* collect = app.add_subcommand("collect", "Sample the plant into a dataset CSV");
  AddCommon(collect, common);
  std::string role = "scenario";
  std::optional<long> count;
  collect->add_option("--role", role, "scenario or validation")->capture_default_str();
  collect->add_option("--count", count, "Number of samples");

  auto* synth = app.add_subcommand("synthesize", "Posterior synthesis");
  AddCommon(synth, common);
  bool synth_verify = false;
  synth->add_flag("--verify", synth_verify, "Also run the ground-truth checks");

  auto* prior = app.add_subcommand("prior-synthesize", "Prior-bound synthesis baseline");
  AddCommon(prior, common);

  auto* verify = app.add_subcommand("verify", "Ground-truth checks of a report");
  AddCommon(verify, common);
  std::string report_path;
  verify->add_option("--report", report_path, "report.json to verify")->required();

  auto* repeat = app.add_subcommand("repeat", "Repeated posterior runs and R histogram");
  AddCommon(repeat, common);
  int runs = 100;
  repeat->add_option("--runs", runs, "Number of runs")->capture_default_str()->check(
      CLI::PositiveNumber);

  auto* casestudy = app.add_subcommand("casestudy", "Room-temperature case study");
  AddCommon(casestudy, common, false);
  std::string mode = "posterior";
  casestudy->add_option("--mode", mode, "prior or posterior")
      ->capture_default_str()
      ->check(CLI::IsMember({"prior", "posterior"}));

  auto* bounds = app.add_subcommand("bounds", "Sample-complexity and confidence bounds");
  bounds->require_subcommand(1);
  bool as_json = false;
  bounds->add_flag("--json", as_json, "Print JSON");
  auto* b_prior = bounds->add_subcommand("prior", "N(eps, beta)");
  PriorInputs prior_in;
  b_prior->add_option("--eps", prior_in.eps)->required();
  b_prior->add_option("--beta", prior_in.beta)->capture_default_str();
  b_prior->add_option("--dim", prior_in.dim, "Q + P + 3")->required();
  auto* b_kappa = bounds->add_subcommand("kappa", "Posterior root kappa*");
  PosteriorInputs post_in;
  b_kappa->add_option("--N", post_in.N)->required();
  b_kappa->add_option("--N0", post_in.N0)->required();
  b_kappa->add_option("--Nstar", post_in.Nstar)->required();
  b_kappa->add_option("--R", post_in.R)->required();
  b_kappa->add_option("--beta", post_in.beta)->capture_default_str();
  double kappa_L = 0.0;
  std::string kappa_config;
  b_kappa->add_option("--L", kappa_L, "Also print L*U^-1(1 - kappa*)");
  b_kappa->add_option("--config", kappa_config, "Sampling space (default: room-temp)");
  auto* b_plan = bounds->add_subcommand("plan", "Planner table");
  double K_hat = 0.0, L = 11.63, plan_beta = 0.05;
  long Nstar_hat = 1, start_N = 1000, start_N0 = 500;
  std::string plan_config, rounding = "nearest";
  double growth = 1.5;
  b_plan->add_option("--K-hat", K_hat)->required();
  b_plan->add_option("--Nstar-hat", Nstar_hat)->capture_default_str();
  b_plan->add_option("--L", L)->capture_default_str();
  b_plan->add_option("--beta", plan_beta)->capture_default_str();
  b_plan->add_option("--N", start_N)->capture_default_str();
  b_plan->add_option("--N0", start_N0)->capture_default_str();
  b_plan->add_option("--growth", growth)->capture_default_str();
  b_plan->add_option("--rounding", rounding)->capture_default_str()->check(
      CLI::IsMember({"nearest", "floor"}));
  b_plan->add_option("--config", plan_config, "Sampling space (default: room-temp)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*plan) return CmdPlan(common, plan_K, plan_Nstar, args);
    if (*collect) return CmdCollect(common, role, count, args);
    if (*synth) return CmdSynthesize(common, args, false, synth_verify);
    if (*prior) return CmdSynthesize(common, args, true, false);
    if (*verify) return CmdVerify(common, report_path, args);
    if (*repeat) return CmdRepeat(common, runs, args);
    if (*casestudy) return CmdSynthesize(common, args, mode == "prior", true);
    if (*b_prior) {
      prior_in.Validate();
      const long n = PriorSampleSize(prior_in);
      if (as_json) {
        std::printf("%s\n", json{{"N", n}, {"eps", prior_in.eps}, {"beta", prior_in.beta},
                                 {"dim", prior_in.dim}}.dump().c_str());
      } else {
        std::printf("%ld\n", n);
      }
      return kExitOk;
    }
    if (*b_kappa) {
      const KappaSolution k = SolveKappa(post_in);
      json out{{"kappa", k.kappa}, {"iterations", k.iterations}, {"bracket_width", k.bracket_width}};
      std::optional<double> term;
      if (kappa_L > 0.0) {
        term = kappa_L * UInverse(1.0 - k.kappa, SpaceFor(kappa_config));
        out["lipschitz_term"] = *term;
      }
      if (as_json) {
        std::printf("%s\n", out.dump().c_str());
      } else {
        std::printf("%.7f\n", k.kappa);
        if (term) std::printf("L*U^-1(1-kappa) %.6f\n", *term);
      }
      return kExitOk;
    }
    if (*b_plan) {
      PlannerSettings settings;
      settings.growth = growth;
      settings.rounding = rounding == "floor" ? ViolationRounding::kFloor : ViolationRounding::kNearestUp;
      const SampleSizePlan p = PlanSampleSizes(K_hat, Nstar_hat, L, SpaceFor(plan_config),
                                               plan_beta, start_N, start_N0, settings);
      if (as_json) {
        json steps = json::array();
        for (const auto& s : p.steps) {
          steps.push_back({{"N", s.N}, {"N0", s.N0}, {"R_hat", s.R_hat},
                           {"kappa_threshold", s.kappa_threshold}, {"passed", s.passed}});
        }
        std::printf("%s\n", json{{"N", p.N}, {"N0", p.N0}, {"steps", steps}}.dump().c_str());
      } else {
        std::printf("%12s %12s %6s %14s %s\n", "N", "N0", "R_hat", "kappa_thr", "pass");
        for (const auto& s : p.steps) {
          std::printf("%12ld %12ld %6ld %14.10f %s\n", s.N, s.N0, s.R_hat, s.kappa_threshold,
                      s.passed ? "yes" : "no");
        }
      }
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return kExitConfig;
  } catch (const VacuousBoundError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kExitInconclusive;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitRuntime;
}
