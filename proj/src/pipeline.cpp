#include "safesynth/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <numeric>
#include <thread>

#include "safesynth/errors.hpp"

namespace safesynth {

namespace {

using Clock = std::chrono::steady_clock;

double SecondsSince(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Box Interval(double lo, double hi) {
  VectorXd l(1), h(1);
  l << lo;
  h << hi;
  return Box(l, h);
}

void Fail(CertificateReport& r, const std::string& cause, const std::string& detail) {
  r.verdict = "inconclusive";
  r.failure_cause = cause;
  r.failure_detail = detail;
}

void FillSolution(CertificateReport& r, const LpProblem& problem, const LpSolution& sol) {
  const DecisionLayout& layout = problem.layout;
  r.K = sol.K();
  r.lambda = sol.lambda();
  r.gamma = sol.gamma();
  r.c = sol.c();
  const VectorXd q = sol.d_star.segment(layout.q_offset(), layout.barrier_terms());
  r.q.assign(q.data(), q.data() + q.size());
  r.p.clear();
  for (int i = 0; i < layout.inputs(); ++i) {
    const VectorXd p = sol.d_star.segment(layout.p_offset(i), layout.controller_terms(i));
    r.p.emplace_back(p.data(), p.data() + p.size());
  }
  r.lp_rows = problem.rows();
  r.lp_iterations = sol.iterations;
  r.tie_break_stages = sol.tie_break_stages;
  r.lp_max_violation = sol.max_violation;
  r.g1_tightening = problem.g1_tightening;
  r.g2_tightening = problem.g2_tightening;
  r.g4_tightening = problem.g4_tightening;
  for (const auto& w : sol.warnings) r.warnings.push_back(w);
}

CertificateReport BaseReport(const SynthesisConfig& config, const char* mode) {
  CertificateReport r;
  r.mode = mode;
  r.state_dim = config.tmpl.state_dim();
  r.barrier_degree = config.barrier_degree;
  r.controller_degrees = config.controller_degrees;
  r.beta = config.beta;
  r.lipschitz = config.lipschitz;
  r.tightened = config.grid.tighten;
  r.strict_margin = config.grid.strict_margin;
  r.tolerances = config.tolerances;
  return r;
}

// Solves the scenario program; returns false with the report marked on failure.
bool SolveInto(CertificateReport& r, const SynthesisConfig& config, const Dataset& scenario,
               std::optional<LpProblem>& problem, LpSolution& sol) {
  auto t0 = Clock::now();
  problem.emplace(BuildScp(config.tmpl, scenario, config.grid));
  r.timings["lp_build"] = SecondsSince(t0);
  t0 = Clock::now();
  sol = SolveScp(*problem, config.tolerances);
  r.timings["lp_solve"] = SecondsSince(t0);
  if (sol.status != LpStatus::kOptimal) {
    r.lp_rows = problem->rows();
    r.lp_iterations = sol.iterations;
    Fail(r, "lp_" + ToString(sol.status), sol.message);
    return false;
  }
  FillSolution(r, *problem, sol);
  r.Nstar = CountActiveG3(*problem, sol, config.tolerances.activity);
  return true;
}

void Decide(CertificateReport& r, const SynthesisConfig& config) {
  if (r.margin > 0.0) {
    Fail(r, "margin_positive", "K + L*U^-1(eps) = " + std::to_string(r.margin) + " > 0");
  } else if (!config.grid.tighten) {
    Fail(r, "tightening_disabled",
         "margin <= 0 but grid tightening was disabled; result is not a certificate");
  } else {
    r.verdict = "certified";
    r.failure_cause.clear();
    r.failure_detail.clear();
  }
}

void CheckLipschitz(CertificateReport& r, const SynthesisConfig& config, const LpSolution& sol,
                    const Dataset& data) {
  const double est = EstimateLipschitz(config.tmpl, sol.d_star, data);
  r.lipschitz_estimate = est;
  if (est > config.lipschitz) {
    r.warnings.push_back("empirical Lipschitz estimate " + std::to_string(est) +
                         " exceeds configured L = " + std::to_string(config.lipschitz));
  }
}

}  // namespace

std::unique_ptr<System> MakeSystem(const PlantSettings& plant) {
  if (plant.kind == "room-temp") return std::make_unique<RoomTemperatureSystem>(plant.room);
  if (plant.kind == "external") {
    return std::make_unique<ExternalProcessSystem>(plant.command, plant.state_dim, plant.input_dim);
  }
  throw ConfigError("plant.kind", "unknown plant '" + plant.kind + "'");
}

void SynthesisConfig::Validate() const {
  try {
    tmpl.Validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("regions", e.what());
  }
  if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("confidence.beta", "must lie in (0, 1)");
  if (!(lipschitz > 0.0)) throw ConfigError("confidence.lipschitz", "must be positive");
  if (!samples.N_auto && samples.N < 1) throw ConfigError("samples.N", "must be >= 1 or auto");
  if (!samples.N_auto && samples.N0 < 1) throw ConfigError("samples.N0", "must be >= 1");
  if (samples.eps != 0.0 && !(samples.eps > 0.0 && samples.eps < 1.0)) {
    throw ConfigError("samples.eps", "must lie in (0, 1)");
  }
  if (seed == seed_validation) {
    throw ConfigError("seeds", "scenario and validation seeds must differ");
  }
  if (retries < 0) throw ConfigError("retries", "must be >= 0");
  if (plant.state_dim != tmpl.state_dim() || plant.input_dim != tmpl.input_dim()) {
    throw ConfigError("plant", "plant dimensions do not match regions");
  }
  if (!(planner.settings.growth > 1.0)) throw ConfigError("planner.growth", "must exceed 1");
}

SynthesisConfig RoomTemperatureConfig() {
  SynthesisConfig config;
  CbfTemplate& t = config.tmpl;
  t.state_box = Interval(22.5, 26.5);
  t.initial_set = RegionUnion(Interval(24.0, 25.0));
  t.unsafe_set = RegionUnion(std::vector<Box>{Interval(22.5, 23.0), Interval(26.0, 26.5)});
  t.input_box = Interval(0.0, 1.0);
  t.input_A = MatrixXd(2, 1);
  t.input_A << 1.0, -1.0;
  t.input_b = VectorXd(2);
  t.input_b << 1.0, 0.0;
  t.horizon = 5;
  t.barrier_basis = PolyBasis(1, 4);
  t.controller_bases = {PolyBasis(1, 4)};
  t.barrier_norm_bound = 0.1;
  t.controller_norm_bound = 0.05;
  config.barrier_degree = 4;
  config.controller_degrees = {4};
  config.samples.N = 140000;
  config.samples.N0 = 70000;
  config.samples.eps = 7.492e-6;
  return config;
}

std::uint64_t DeriveSeed(std::uint64_t base, std::uint64_t stream, std::uint64_t index) {
  if (index == 0) return base;
  // splitmix64 finaliser over the combined words.
  std::uint64_t z = base ^ (stream * 0xD1B54A32D192ED03ULL) ^ (index * 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

VectorXd CertificateReport::DecisionVector() const {
  long total = 4 + static_cast<long>(q.size());
  for (const auto& pi : p) total += static_cast<long>(pi.size());
  VectorXd d(total);
  d[0] = K;
  d[1] = lambda;
  d[2] = gamma;
  d[3] = c;
  long at = 4;
  for (double v : q) d[at++] = v;
  for (const auto& pi : p) {
    for (double v : pi) d[at++] = v;
  }
  return d;
}

CertificateReport SynthesizeOnce(const SynthesisConfig& config, System& system,
                                 std::uint64_t seed, std::uint64_t seed_validation,
                                 RunArtifacts* artifacts) {
  CertificateReport r = BaseReport(config, "posterior");
  r.N = config.samples.N;
  r.N0 = config.samples.N0;
  r.seed = seed;
  r.seed_validation = seed_validation;
  if (seed == seed_validation) {
    Fail(r, "config_error", "scenario and validation seeds must differ");
    return r;
  }
  const SampleSpace space = config.tmpl.sample_space();

  Dataset scenario, validation;
  auto t0 = Clock::now();
  try {
    scenario = Collect(system, space, static_cast<int>(r.N), seed, DatasetRole::kScenario);
    validation =
        Collect(system, space, static_cast<int>(r.N0), seed_validation, DatasetRole::kValidation);
  } catch (const std::exception& e) {
    Fail(r, "dataset_error", e.what());
    return r;
  }
  r.timings["collect"] = SecondsSince(t0);

  std::optional<LpProblem> problem;
  LpSolution sol;
  const bool solved = SolveInto(r, config, scenario, problem, sol);
  if (artifacts != nullptr) {
    artifacts->scenario = scenario;
    artifacts->validation = validation;
    if (solved) artifacts->solution = sol;
  }
  if (!solved) return r;

  t0 = Clock::now();
  const ViolationSummary v = ViolationFrequency(config.tmpl, sol.d_star, validation);
  r.R = v.R;
  r.knife_edges = v.knife_edges;
  if (v.knife_edges > 0) {
    r.warnings.push_back(std::to_string(v.knife_edges) +
                         " validation residuals within 1e-12 of zero counted as non-violations");
  }
  r.timings["validation"] = SecondsSince(t0);

  t0 = Clock::now();
  try {
    const KappaSolution k = SolveKappa({r.N, r.N0, r.Nstar, v.R, config.beta});
    r.kappa = k.kappa;
    r.eps = 1.0 - k.kappa;
  } catch (const VacuousBoundError& e) {
    r.eps = 1.0;
    r.lipschitz_term = config.lipschitz * UInverse(1.0, space);
    r.margin = r.K + r.lipschitz_term;
    Fail(r, "kappa_vacuous", e.what());
    return r;
  }
  r.timings["kappa"] = SecondsSince(t0);

  r.lipschitz_term = config.lipschitz * UInverse(r.eps, space);
  r.margin = r.K + r.lipschitz_term;
  CheckLipschitz(r, config, sol, scenario);
  Decide(r, config);
  return r;
}

SampleSizePlan PlanFor(const SynthesisConfig& config, System& system) {
  double K_hat;
  long Nstar_hat;
  if (config.planner.K_hat && config.planner.Nstar_hat) {
    K_hat = *config.planner.K_hat;
    Nstar_hat = *config.planner.Nstar_hat;
  } else {
    const Dataset pilot = Collect(system, config.tmpl.sample_space(),
                                  static_cast<int>(config.planner.start_N),
                                  DeriveSeed(config.seed, 2, 1), DatasetRole::kScenario);
    const LpProblem problem = BuildScp(config.tmpl, pilot, config.grid);
    const LpSolution sol = SolveScp(problem, config.tolerances);
    if (sol.status != LpStatus::kOptimal) {
      throw PlannerError("pilot scenario program is " + ToString(sol.status));
    }
    K_hat = config.planner.K_hat.value_or(sol.K());
    Nstar_hat = config.planner.Nstar_hat.value_or(
        CountActiveG3(problem, sol, config.tolerances.activity));
  }
  return PlanSampleSizes(K_hat, Nstar_hat, config.lipschitz, config.tmpl.sample_space(),
                         config.beta, config.planner.start_N, config.planner.start_N0,
                         config.planner.settings);
}

CertificateReport Synthesize(const SynthesisConfig& config, RunArtifacts* artifacts) {
  config.Validate();
  std::unique_ptr<System> system = MakeSystem(config.plant);
  SynthesisConfig resolved = config;
  if (config.samples.N_auto) {
    try {
      const SampleSizePlan plan = PlanFor(config, *system);
      resolved.samples.N = plan.N;
      resolved.samples.N0 = plan.N0;
    } catch (const std::exception& e) {
      CertificateReport r = BaseReport(config, "posterior");
      r.seed = config.seed;
      r.seed_validation = config.seed_validation;
      Fail(r, "planner_error", e.what());
      return r;
    }
  }

  std::vector<AttemptRecord> attempts;
  CertificateReport report;
  for (int a = 0; a <= config.retries; ++a) {
    const std::uint64_t s1 = DeriveSeed(config.seed, 0, static_cast<std::uint64_t>(a));
    const std::uint64_t s2 = DeriveSeed(config.seed_validation, 1, static_cast<std::uint64_t>(a));
    report = SynthesizeOnce(resolved, *system, s1, s2, artifacts);
    attempts.push_back({a, s1, s2, report.verdict, report.failure_cause, report.margin});
    const bool statistical =
        report.failure_cause == "margin_positive" || report.failure_cause == "kappa_vacuous";
    if (report.certified() || !statistical) break;
  }
  report.attempts = std::move(attempts);
  return report;
}

CertificateReport PriorSynthesize(const SynthesisConfig& config, RunArtifacts* artifacts) {
  config.Validate();
  if (!(config.samples.eps > 0.0)) throw ConfigError("samples.eps", "prior mode requires eps");
  std::unique_ptr<System> system = MakeSystem(config.plant);
  CertificateReport r = BaseReport(config, "prior");
  const DecisionLayout layout = config.tmpl.layout();
  const int dim = layout.barrier_terms() + layout.controller_terms_total() + 3;
  const long required = PriorSampleSize({config.samples.eps, config.beta, dim});
  r.N = config.samples.N_auto ? required : std::max(config.samples.N, required);
  r.N0 = 0;
  r.eps = config.samples.eps;
  r.seed = config.seed;
  const SampleSpace space = config.tmpl.sample_space();

  Dataset scenario;
  auto t0 = Clock::now();
  try {
    scenario = Collect(*system, space, static_cast<int>(r.N), config.seed, DatasetRole::kScenario);
  } catch (const std::exception& e) {
    Fail(r, "dataset_error", e.what());
    return r;
  }
  r.timings["collect"] = SecondsSince(t0);

  std::optional<LpProblem> problem;
  LpSolution sol;
  const bool solved = SolveInto(r, config, scenario, problem, sol);
  if (artifacts != nullptr) {
    artifacts->solution = solved ? std::optional<LpSolution>(sol) : std::nullopt;
    artifacts->scenario = std::move(scenario);
  }
  if (!solved) return r;
  r.lipschitz_term = config.lipschitz * UInverse(r.eps, space);
  r.margin = r.K + r.lipschitz_term;
  Decide(r, config);
  return r;
}

RepeatSummary RepeatExperiment(const SynthesisConfig& config, int runs,
                               const std::function<void(const RunRecord&)>& progress) {
  if (runs < 1) throw std::invalid_argument("RepeatExperiment: runs must be >= 1");
  config.Validate();
  SynthesisConfig resolved = config;
  if (config.samples.N_auto) {
    std::unique_ptr<System> system = MakeSystem(config.plant);
    const SampleSizePlan plan = PlanFor(config, *system);
    resolved.samples.N = plan.N;
    resolved.samples.N0 = plan.N0;
  }

  RepeatSummary summary;
  summary.N = resolved.samples.N;
  summary.N0 = resolved.samples.N0;
  summary.runs.resize(runs);
  std::mutex mu;
  auto run_one = [&](int i) {
    RunRecord rec;
    rec.index = i;
    rec.seed = DeriveSeed(config.seed, 0, static_cast<std::uint64_t>(i));
    rec.seed_validation = DeriveSeed(config.seed_validation, 1, static_cast<std::uint64_t>(i));
    try {
      std::unique_ptr<System> system = MakeSystem(config.plant);
      const CertificateReport r = SynthesizeOnce(resolved, *system, rec.seed, rec.seed_validation);
      rec.verdict = r.verdict;
      rec.failure_cause = r.failure_cause;
      rec.R = r.R;
      rec.Nstar = r.Nstar;
      rec.K = r.K;
      rec.kappa = r.kappa;
      rec.margin = r.margin;
    } catch (const std::exception& e) {
      rec.verdict = "inconclusive";
      rec.failure_cause = std::string("runtime_error: ") + e.what();
    }
    std::lock_guard<std::mutex> lock(mu);
    summary.runs[i] = rec;
    if (progress) progress(rec);
  };

  const int workers = std::clamp(static_cast<int>(std::thread::hardware_concurrency()), 1, runs);
  if (workers == 1) {
    for (int i = 0; i < runs; ++i) run_one(i);
  } else {
    std::atomic<int> next{0};
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int i = next++; i < runs; i = next++) run_one(i);
      });
    }
  }

  for (const auto& rec : summary.runs) {
    if (rec.R) ++summary.histogram[*rec.R];
    if (rec.verdict == "certified") ++summary.certified;
  }
  if (summary.certified > 0) {
    const double fraction = static_cast<double>(summary.certified) / runs;
    summary.expected_samples = (summary.N + summary.N0) / fraction;
  }
  return summary;
}

double EstimateLipschitz(const CbfTemplate& tmpl, const Eigen::Ref<const VectorXd>& d,
                         const Dataset& data) {
  const DecisionLayout layout = tmpl.layout();
  VectorXd full = VectorXd::Zero(layout.size());
  full.head(layout.core_size()) = d.head(layout.core_size());
  const int n = data.size();
  VectorXd residual(n);
  Eigen::RowVectorXd row(layout.size());
  for (int k = 0; k < n; ++k) {
    double rhs = 0.0;
    AssembleG3(data.sample(k), tmpl.barrier_basis, tmpl.controller_bases, layout, row, &rhs);
    residual[k] = row.dot(full) - rhs;
  }
  MatrixXd z(data.state_dim() + data.input_dim(), n);
  z << data.states, data.inputs;
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return z(0, a) < z(0, b); });
  constexpr int kWindow = 16;
  double best = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < std::min(n, i + 1 + kWindow); ++j) {
      const int a = order[i];
      const int b = order[j];
      const double dist = (z.col(a) - z.col(b)).norm();
      if (dist <= 0.0) continue;
      best = std::max(best, std::abs(residual[a] - residual[b]) / dist);
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

template <typename T>
void PutOptional(nlohmann::json& j, const char* key, const std::optional<T>& v) {
  j[key] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

template <typename T>
void GetOptional(const nlohmann::json& j, const char* key, std::optional<T>& v) {
  if (!j.contains(key) || j.at(key).is_null()) {
    v.reset();
  } else {
    v = j.at(key).get<T>();
  }
}

}  // namespace

void to_json(nlohmann::json& j, const CertificateReport& r) {
  j = nlohmann::json{
      {"tool_version", r.tool_version},
      {"mode", r.mode},
      {"verdict", r.verdict},
      {"failure_cause", r.failure_cause},
      {"failure_detail", r.failure_detail},
      {"solution",
       {{"K", r.K}, {"lambda", r.lambda}, {"gamma", r.gamma}, {"c", r.c}, {"q", r.q}, {"p", r.p}}},
      {"template",
       {{"state_dim", r.state_dim},
        {"barrier_degree", r.barrier_degree},
        {"controller_degrees", r.controller_degrees}}},
      {"N", r.N},
      {"N0", r.N0},
      {"Nstar", r.Nstar},
      {"eps", r.eps},
      {"beta", r.beta},
      {"lipschitz", r.lipschitz},
      {"lipschitz_term", r.lipschitz_term},
      {"margin", r.margin},
      {"seed", r.seed},
      {"tightened", r.tightened},
      {"strict_margin", r.strict_margin},
      {"tightening", {{"g1", r.g1_tightening}, {"g2", r.g2_tightening}, {"g4", r.g4_tightening}}},
      {"tolerances",
       {{"activity", r.tolerances.activity},
        {"feasibility", r.tolerances.feasibility},
        {"optimality", r.tolerances.optimality},
        {"lexicographic", r.tolerances.lexicographic}}},
      {"lp",
       {{"rows", r.lp_rows},
        {"iterations", r.lp_iterations},
        {"tie_break_stages", r.tie_break_stages},
        {"max_violation", r.lp_max_violation}}},
      {"knife_edges", r.knife_edges},
      {"warnings", r.warnings},
      {"timings", r.timings},
  };
  PutOptional(j, "R", r.R);
  PutOptional(j, "kappa", r.kappa);
  PutOptional(j, "seed_validation", r.seed_validation);
  PutOptional(j, "lipschitz_estimate", r.lipschitz_estimate);
  nlohmann::json attempts = nlohmann::json::array();
  for (const auto& a : r.attempts) {
    attempts.push_back({{"attempt", a.attempt},
                        {"seed", a.seed},
                        {"seed_validation", a.seed_validation},
                        {"verdict", a.verdict},
                        {"failure_cause", a.failure_cause},
                        {"margin", a.margin}});
  }
  j["attempts"] = attempts;
}

void from_json(const nlohmann::json& j, CertificateReport& r) {
  j.at("tool_version").get_to(r.tool_version);
  j.at("mode").get_to(r.mode);
  j.at("verdict").get_to(r.verdict);
  j.at("failure_cause").get_to(r.failure_cause);
  j.at("failure_detail").get_to(r.failure_detail);
  const auto& s = j.at("solution");
  s.at("K").get_to(r.K);
  s.at("lambda").get_to(r.lambda);
  s.at("gamma").get_to(r.gamma);
  s.at("c").get_to(r.c);
  s.at("q").get_to(r.q);
  s.at("p").get_to(r.p);
  const auto& t = j.at("template");
  t.at("state_dim").get_to(r.state_dim);
  t.at("barrier_degree").get_to(r.barrier_degree);
  t.at("controller_degrees").get_to(r.controller_degrees);
  j.at("N").get_to(r.N);
  j.at("N0").get_to(r.N0);
  j.at("Nstar").get_to(r.Nstar);
  j.at("eps").get_to(r.eps);
  j.at("beta").get_to(r.beta);
  j.at("lipschitz").get_to(r.lipschitz);
  j.at("lipschitz_term").get_to(r.lipschitz_term);
  j.at("margin").get_to(r.margin);
  j.at("seed").get_to(r.seed);
  j.at("tightened").get_to(r.tightened);
  j.at("strict_margin").get_to(r.strict_margin);
  const auto& tt = j.at("tightening");
  tt.at("g1").get_to(r.g1_tightening);
  tt.at("g2").get_to(r.g2_tightening);
  tt.at("g4").get_to(r.g4_tightening);
  const auto& tol = j.at("tolerances");
  tol.at("activity").get_to(r.tolerances.activity);
  tol.at("feasibility").get_to(r.tolerances.feasibility);
  tol.at("optimality").get_to(r.tolerances.optimality);
  tol.at("lexicographic").get_to(r.tolerances.lexicographic);
  const auto& lp = j.at("lp");
  lp.at("rows").get_to(r.lp_rows);
  lp.at("iterations").get_to(r.lp_iterations);
  lp.at("tie_break_stages").get_to(r.tie_break_stages);
  lp.at("max_violation").get_to(r.lp_max_violation);
  j.at("knife_edges").get_to(r.knife_edges);
  j.at("warnings").get_to(r.warnings);
  j.at("timings").get_to(r.timings);
  GetOptional(j, "R", r.R);
  GetOptional(j, "kappa", r.kappa);
  GetOptional(j, "seed_validation", r.seed_validation);
  GetOptional(j, "lipschitz_estimate", r.lipschitz_estimate);
  r.attempts.clear();
  for (const auto& a : j.at("attempts")) {
    AttemptRecord rec;
    a.at("attempt").get_to(rec.attempt);
    a.at("seed").get_to(rec.seed);
    a.at("seed_validation").get_to(rec.seed_validation);
    a.at("verdict").get_to(rec.verdict);
    a.at("failure_cause").get_to(rec.failure_cause);
    a.at("margin").get_to(rec.margin);
    r.attempts.push_back(rec);
  }
}

void to_json(nlohmann::json& j, const RepeatSummary& s) {
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& r : s.runs) {
    nlohmann::json row{{"index", r.index},
                       {"seed", r.seed},
                       {"seed_validation", r.seed_validation},
                       {"verdict", r.verdict},
                       {"failure_cause", r.failure_cause},
                       {"Nstar", r.Nstar},
                       {"K", r.K},
                       {"margin", r.margin}};
    PutOptional(row, "R", r.R);
    PutOptional(row, "kappa", r.kappa);
    runs.push_back(row);
  }
  nlohmann::json hist = nlohmann::json::object();
  for (const auto& [R, count] : s.histogram) hist[std::to_string(R)] = count;
  j = nlohmann::json{{"N", s.N},
                     {"N0", s.N0},
                     {"runs", runs},
                     {"histogram", hist},
                     {"certified", s.certified}};
  PutOptional(j, "expected_samples", s.expected_samples);
}

}  // namespace safesynth
