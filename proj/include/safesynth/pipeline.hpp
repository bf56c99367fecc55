#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "safesynth/bounds.hpp"
#include "safesynth/plant.hpp"
#include "safesynth/scp.hpp"
#include "safesynth/verify.hpp"

namespace safesynth {

inline constexpr const char* kToolVersion = "0.1.0";

struct PlantSettings {
  std::string kind = "room-temp";  // room-temp | external
  std::string command;             // external only
  int state_dim = 1;
  int input_dim = 1;
  RoomParameters room;
};

std::unique_ptr<System> MakeSystem(const PlantSettings& plant);

struct SampleSettings {
  long N = 0;
  long N0 = 0;
  bool N_auto = false;
  double eps = 0.0;  // prior mode only; 0 when unset
};

struct PlannerConfig {
  PlannerSettings settings;
  long start_N = 1000;
  long start_N0 = 500;
  /// Estimates for the planner. When absent a pilot run at start_N supplies them.
  std::optional<double> K_hat;
  std::optional<long> Nstar_hat;
};

struct SynthesisConfig {
  CbfTemplate tmpl;
  int barrier_degree = 4;
  std::vector<int> controller_degrees{4};
  PlantSettings plant;
  double beta = 0.05;
  double lipschitz = 11.63;
  SampleSettings samples;
  PlannerConfig planner;
  GridSettings grid;
  ScpTolerances tolerances;
  CheckGrids check;
  std::uint64_t seed = 1;
  std::uint64_t seed_validation = 2;
  int retries = 0;

  /// Throws ConfigError naming the offending key.
  void Validate() const;
};

/// The room-temperature case study.
SynthesisConfig RoomTemperatureConfig();

/// Seed for stream `stream` of run/attempt `index` derived from `base`;
/// index 0 returns `base` unchanged.
std::uint64_t DeriveSeed(std::uint64_t base, std::uint64_t stream, std::uint64_t index);

struct AttemptRecord {
  int attempt = 0;
  std::uint64_t seed = 0;
  std::uint64_t seed_validation = 0;
  std::string verdict;
  std::string failure_cause;
  double margin = 0.0;
};

struct CertificateReport {
  std::string tool_version = kToolVersion;
  std::string mode = "posterior";  // posterior | prior
  std::string verdict = "inconclusive";
  /// Empty when certified; otherwise one of lp_infeasible, lp_unbounded,
  /// lp_iteration_limit, kappa_vacuous, margin_positive, dataset_error,
  /// planner_error, tightening_disabled, config_error.
  std::string failure_cause;
  std::string failure_detail;

  double K = 0.0;
  double lambda = 0.0;
  double gamma = 0.0;
  double c = 0.0;
  std::vector<double> q;
  std::vector<std::vector<double>> p;
  int state_dim = 1;
  int barrier_degree = 0;
  std::vector<int> controller_degrees;

  long N = 0;
  long N0 = 0;
  long Nstar = 0;
  std::optional<long> R;
  std::optional<double> kappa;
  double eps = 0.0;               // 1 - κ* (posterior) or ε (prior)
  double beta = 0.0;
  double lipschitz = 0.0;
  double lipschitz_term = 0.0;    // L·U⁻¹(eps)
  double margin = 0.0;            // K + lipschitz_term
  std::optional<double> lipschitz_estimate;

  std::uint64_t seed = 0;
  std::optional<std::uint64_t> seed_validation;
  bool tightened = true;
  double strict_margin = 0.0;
  double g1_tightening = 0.0;
  double g2_tightening = 0.0;
  double g4_tightening = 0.0;
  ScpTolerances tolerances;
  int lp_rows = 0;
  int lp_iterations = 0;
  int tie_break_stages = 0;
  double lp_max_violation = 0.0;
  long knife_edges = 0;

  std::vector<std::string> warnings;
  std::map<std::string, double> timings;
  std::vector<AttemptRecord> attempts;

  bool certified() const { return verdict == "certified"; }
  /// Scenario solution as a decision vector (core part).
  VectorXd DecisionVector() const;
};

void to_json(nlohmann::json& j, const CertificateReport& r);
void from_json(const nlohmann::json& j, CertificateReport& r);

/// Data produced alongside a report, for the CLI to persist.
struct RunArtifacts {
  std::optional<Dataset> scenario;
  std::optional<Dataset> validation;
  std::optional<LpSolution> solution;
};

/// One posterior attempt with the given seeds; no retries.
CertificateReport SynthesizeOnce(const SynthesisConfig& config, System& system,
                                 std::uint64_t seed, std::uint64_t seed_validation,
                                 RunArtifacts* artifacts = nullptr);

/// Posterior synthesis with up to config.retries fresh-seed retries.
CertificateReport Synthesize(const SynthesisConfig& config, RunArtifacts* artifacts = nullptr);

/// Prior baseline: N >= N(ε, β) and margin K + L·U⁻¹(ε).
CertificateReport PriorSynthesize(const SynthesisConfig& config, RunArtifacts* artifacts = nullptr);

/// Resolves N: auto through the planner (pilot run when no estimates are set).
SampleSizePlan PlanFor(const SynthesisConfig& config, System& system);

struct RunRecord {
  int index = 0;
  std::uint64_t seed = 0;
  std::uint64_t seed_validation = 0;
  std::string verdict;
  std::string failure_cause;
  std::optional<long> R;
  long Nstar = 0;
  double K = 0.0;
  std::optional<double> kappa;
  double margin = 0.0;
};

struct RepeatSummary {
  std::vector<RunRecord> runs;
  std::map<long, int> histogram;  // R -> count
  int certified = 0;
  std::optional<double> expected_samples;  // (N + N0) / certified fraction
  long N = 0;
  long N0 = 0;
};

/// `runs` independent posterior runs, seeds derived from (base seed, run index).
RepeatSummary RepeatExperiment(const SynthesisConfig& config, int runs,
                               const std::function<void(const RunRecord&)>& progress = {});

void to_json(nlohmann::json& j, const RepeatSummary& s);

/// Lower bound on the Lipschitz constant of g3(·, d) over X×U from
/// difference quotients between nearby samples.
double EstimateLipschitz(const CbfTemplate& tmpl, const Eigen::Ref<const VectorXd>& d,
                         const Dataset& data);

}  // namespace safesynth
