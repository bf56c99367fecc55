#include "safesynth/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include "safesynth/errors.hpp"

namespace safesynth {

namespace {

std::string Join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

void RejectUnknown(const YAML::Node& map, const std::string& path,
                   const std::set<std::string>& allowed) {
  if (!map.IsMap()) throw ConfigError(path, "expected a mapping");
  for (const auto& kv : map) {
    const std::string key = kv.first.as<std::string>();
    if (!allowed.count(key)) throw ConfigError(Join(path, key), "unknown key");
  }
}

template <typename T>
T Get(const YAML::Node& node, const std::string& path) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(path, "invalid value '" + YAML::Dump(node) + "'");
  }
}

template <typename T>
void Optional(const YAML::Node& map, const std::string& prefix, const char* key, T& out) {
  if (map[key]) out = Get<T>(map[key], Join(prefix, key));
}

template <typename T>
T Required(const YAML::Node& map, const std::string& prefix, const char* key) {
  if (!map[key]) throw ConfigError(Join(prefix, key), "required key is missing");
  return Get<T>(map[key], Join(prefix, key));
}

YAML::Node Section(const YAML::Node& root, const char* key, bool required) {
  const YAML::Node node = root[key];
  if (!node) {
    if (required) throw ConfigError(key, "required section is missing");
    return YAML::Node(YAML::NodeType::Map);
  }
  return node;
}

bool IsPair(const YAML::Node& node) {
  return node.IsSequence() && node.size() == 2 && node[0].IsScalar() && node[1].IsScalar();
}

// [lo, hi] for one axis, or [[lo, hi], ...] per axis.
Box ParseBox(const YAML::Node& node, const std::string& path, int dim = -1) {
  if (!node.IsSequence() || node.size() == 0) throw ConfigError(path, "expected a box");
  std::vector<std::pair<double, double>> axes;
  if (IsPair(node)) {
    axes.emplace_back(Get<double>(node[0], path), Get<double>(node[1], path));
  } else {
    for (std::size_t i = 0; i < node.size(); ++i) {
      const std::string p = path + "[" + std::to_string(i) + "]";
      if (!IsPair(node[i])) throw ConfigError(p, "expected [lower, upper]");
      axes.emplace_back(Get<double>(node[i][0], p), Get<double>(node[i][1], p));
    }
  }
  if (dim >= 0 && static_cast<int>(axes.size()) != dim) {
    throw ConfigError(path, "box has " + std::to_string(axes.size()) + " axes, expected " +
                                std::to_string(dim));
  }
  VectorXd lo(axes.size()), hi(axes.size());
  for (std::size_t i = 0; i < axes.size(); ++i) {
    lo[i] = axes[i].first;
    hi[i] = axes[i].second;
  }
  try {
    return Box(lo, hi);
  } catch (const std::exception& e) {
    throw ConfigError(path, e.what());
  }
}

RegionUnion ParseUnion(const YAML::Node& node, const std::string& path, int dim) {
  if (!node.IsSequence() || node.size() == 0) {
    throw ConfigError(path, "expected a non-empty list of boxes");
  }
  std::vector<Box> parts;
  for (std::size_t i = 0; i < node.size(); ++i) {
    parts.push_back(ParseBox(node[i], path + "[" + std::to_string(i) + "]", dim));
  }
  return RegionUnion(std::move(parts));
}

MatrixXd ParseMatrix(const YAML::Node& node, const std::string& path) {
  if (!node.IsSequence() || node.size() == 0) throw ConfigError(path, "expected a matrix");
  const std::size_t cols = node[0].size();
  MatrixXd m(node.size(), cols);
  for (std::size_t i = 0; i < node.size(); ++i) {
    if (!node[i].IsSequence() || node[i].size() != cols) {
      throw ConfigError(path, "rows must have equal length");
    }
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = Get<double>(node[i][j], path);
  }
  return m;
}

VectorXd ParseVector(const YAML::Node& node, const std::string& path) {
  if (!node.IsSequence()) throw ConfigError(path, "expected a list");
  VectorXd v(node.size());
  for (std::size_t i = 0; i < node.size(); ++i) v[i] = Get<double>(node[i], path);
  return v;
}

nlohmann::json BoxJson(const Box& b) {
  nlohmann::json axes = nlohmann::json::array();
  for (int i = 0; i < b.dim(); ++i) axes.push_back({b.lower()[i], b.upper()[i]});
  return axes;
}

nlohmann::json UnionJson(const RegionUnion& u) {
  nlohmann::json parts = nlohmann::json::array();
  for (const Box& b : u.parts()) parts.push_back(BoxJson(b));
  return parts;
}

}  // namespace

SynthesisConfig ParseConfig(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError("", std::string("malformed configuration: ") + e.what());
  }
  if (!root.IsMap()) throw ConfigError("", "configuration must be a mapping");
  RejectUnknown(root, "",
                {"plant", "regions", "horizon", "template", "confidence", "samples", "planner",
                 "grid", "tolerances", "check", "seeds", "retries"});

  SynthesisConfig config;

  const YAML::Node plant = Section(root, "plant", false);
  RejectUnknown(plant, "plant", {"kind", "command", "state_dim", "input_dim", "room"});
  Optional(plant, "plant", "kind", config.plant.kind);
  if (config.plant.kind != "room-temp" && config.plant.kind != "external") {
    throw ConfigError("plant.kind", "must be room-temp or external");
  }
  if (config.plant.kind == "external") {
    config.plant.command = Required<std::string>(plant, "plant", "command");
  }
  const YAML::Node room = Section(plant, "room", false);
  RejectUnknown(room, "plant.room",
                {"ambient", "heater", "alpha_ambient", "alpha_heater", "sample_time"});
  Optional(room, "plant.room", "ambient", config.plant.room.ambient);
  Optional(room, "plant.room", "heater", config.plant.room.heater);
  Optional(room, "plant.room", "alpha_ambient", config.plant.room.alpha_ambient);
  Optional(room, "plant.room", "alpha_heater", config.plant.room.alpha_heater);
  Optional(room, "plant.room", "sample_time", config.plant.room.sample_time);

  CbfTemplate& t = config.tmpl;
  const YAML::Node regions = Section(root, "regions", true);
  RejectUnknown(regions, "regions", {"state", "initial", "unsafe", "input", "input_polytope"});
  if (!regions["state"]) throw ConfigError("regions.state", "required key is missing");
  t.state_box = ParseBox(regions["state"], "regions.state");
  const int n = t.state_dim();
  if (!regions["initial"]) throw ConfigError("regions.initial", "required key is missing");
  t.initial_set = ParseUnion(regions["initial"], "regions.initial", n);
  if (!regions["unsafe"]) throw ConfigError("regions.unsafe", "required key is missing");
  t.unsafe_set = ParseUnion(regions["unsafe"], "regions.unsafe", n);
  if (!regions["input"]) throw ConfigError("regions.input", "required key is missing");
  t.input_box = ParseBox(regions["input"], "regions.input");
  const int m = t.input_dim();
  if (regions["input_polytope"]) {
    const YAML::Node poly = regions["input_polytope"];
    RejectUnknown(poly, "regions.input_polytope", {"A", "b"});
    if (!poly["A"] || !poly["b"]) throw ConfigError("regions.input_polytope", "needs A and b");
    t.input_A = ParseMatrix(poly["A"], "regions.input_polytope.A");
    t.input_b = ParseVector(poly["b"], "regions.input_polytope.b");
  } else {
    t.input_A.resize(2 * m, m);
    t.input_A.setZero();
    t.input_b.resize(2 * m);
    for (int j = 0; j < m; ++j) {
      t.input_A(2 * j, j) = 1.0;
      t.input_b[2 * j] = t.input_box.upper()[j];
      t.input_A(2 * j + 1, j) = -1.0;
      t.input_b[2 * j + 1] = -t.input_box.lower()[j];
    }
  }
  t.horizon = Required<int>(root, "", "horizon");
  config.plant.state_dim = n;
  config.plant.input_dim = m;
  if (config.plant.kind == "external") {
    Optional(plant, "plant", "state_dim", config.plant.state_dim);
    Optional(plant, "plant", "input_dim", config.plant.input_dim);
  } else if (plant["state_dim"] || plant["input_dim"]) {
    throw ConfigError("plant", "state_dim/input_dim apply to external plants only");
  }

  const YAML::Node tmpl = Section(root, "template", false);
  RejectUnknown(tmpl, "template",
                {"barrier_degree", "controller_degree", "barrier_norm_bound",
                 "controller_norm_bound"});
  Optional(tmpl, "template", "barrier_degree", config.barrier_degree);
  config.controller_degrees.assign(m, 4);
  if (tmpl["controller_degree"]) {
    const YAML::Node cd = tmpl["controller_degree"];
    if (cd.IsScalar()) {
      config.controller_degrees.assign(m, Get<int>(cd, "template.controller_degree"));
    } else {
      config.controller_degrees = Get<std::vector<int>>(cd, "template.controller_degree");
      if (static_cast<int>(config.controller_degrees.size()) != m) {
        throw ConfigError("template.controller_degree", "need one degree per input");
      }
    }
  }
  Optional(tmpl, "template", "barrier_norm_bound", t.barrier_norm_bound);
  Optional(tmpl, "template", "controller_norm_bound", t.controller_norm_bound);
  if (config.barrier_degree < 1) throw ConfigError("template.barrier_degree", "must be >= 1");
  t.barrier_basis = PolyBasis(n, config.barrier_degree);
  t.controller_bases.clear();
  for (int k : config.controller_degrees) {
    if (k < 0) throw ConfigError("template.controller_degree", "must be >= 0");
    t.controller_bases.emplace_back(n, k);
  }

  const YAML::Node conf = Section(root, "confidence", true);
  RejectUnknown(conf, "confidence", {"beta", "lipschitz"});
  config.beta = Required<double>(conf, "confidence", "beta");
  if (config.plant.kind == "room-temp") {
    Optional(conf, "confidence", "lipschitz", config.lipschitz);
  } else {
    config.lipschitz = Required<double>(conf, "confidence", "lipschitz");
  }

  const YAML::Node samples = Section(root, "samples", true);
  RejectUnknown(samples, "samples", {"N", "N0", "eps"});
  if (!samples["N"]) throw ConfigError("samples.N", "required key is missing");
  if (samples["N"].IsScalar() && samples["N"].Scalar() == "auto") {
    config.samples.N_auto = true;
  } else {
    config.samples.N = Get<long>(samples["N"], "samples.N");
    config.samples.N0 = Required<long>(samples, "samples", "N0");
  }
  Optional(samples, "samples", "eps", config.samples.eps);

  const YAML::Node planner = Section(root, "planner", false);
  RejectUnknown(planner, "planner",
                {"start_N", "start_N0", "growth", "max_N", "rounding", "K_hat", "Nstar_hat"});
  Optional(planner, "planner", "start_N", config.planner.start_N);
  config.planner.start_N0 = config.planner.start_N / 2;
  Optional(planner, "planner", "start_N0", config.planner.start_N0);
  Optional(planner, "planner", "growth", config.planner.settings.growth);
  Optional(planner, "planner", "max_N", config.planner.settings.max_N);
  if (planner["rounding"]) {
    const std::string r = Get<std::string>(planner["rounding"], "planner.rounding");
    if (r == "nearest") {
      config.planner.settings.rounding = ViolationRounding::kNearestUp;
    } else if (r == "floor") {
      config.planner.settings.rounding = ViolationRounding::kFloor;
    } else {
      throw ConfigError("planner.rounding", "must be nearest or floor");
    }
  }
  if (planner["K_hat"] && !planner["K_hat"].IsNull()) config.planner.K_hat = Get<double>(planner["K_hat"], "planner.K_hat");
  if (planner["Nstar_hat"] && !planner["Nstar_hat"].IsNull()) {
    config.planner.Nstar_hat = Get<long>(planner["Nstar_hat"], "planner.Nstar_hat");
  }

  const YAML::Node grid = Section(root, "grid", false);
  RejectUnknown(grid, "grid",
                {"initial_points", "unsafe_points", "state_points", "strict_margin", "tighten"});
  Optional(grid, "grid", "initial_points", config.grid.initial_points);
  Optional(grid, "grid", "unsafe_points", config.grid.unsafe_points);
  Optional(grid, "grid", "state_points", config.grid.state_points);
  Optional(grid, "grid", "strict_margin", config.grid.strict_margin);
  Optional(grid, "grid", "tighten", config.grid.tighten);
  for (int pts : {config.grid.initial_points, config.grid.unsafe_points, config.grid.state_points}) {
    if (pts < 2) throw ConfigError("grid", "point counts must be >= 2");
  }

  const YAML::Node tol = Section(root, "tolerances", false);
  RejectUnknown(tol, "tolerances", {"activity", "feasibility", "optimality", "lexicographic"});
  Optional(tol, "tolerances", "activity", config.tolerances.activity);
  Optional(tol, "tolerances", "feasibility", config.tolerances.feasibility);
  Optional(tol, "tolerances", "optimality", config.tolerances.optimality);
  Optional(tol, "tolerances", "lexicographic", config.tolerances.lexicographic);

  const YAML::Node check = Section(root, "check", false);
  RejectUnknown(check, "check", {"initial_points", "unsafe_points", "state_points", "input_points"});
  Optional(check, "check", "initial_points", config.check.initial_points);
  Optional(check, "check", "unsafe_points", config.check.unsafe_points);
  Optional(check, "check", "state_points", config.check.state_points);
  Optional(check, "check", "input_points", config.check.input_points);

  const YAML::Node seeds = Section(root, "seeds", false);
  RejectUnknown(seeds, "seeds", {"scenario", "validation"});
  Optional(seeds, "seeds", "scenario", config.seed);
  Optional(seeds, "seeds", "validation", config.seed_validation);
  Optional(root, "", "retries", config.retries);

  config.Validate();
  return config;
}

SynthesisConfig LoadConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open configuration " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseConfig(buffer.str());
}

nlohmann::json ConfigToJson(const SynthesisConfig& c) {
  const CbfTemplate& t = c.tmpl;
  nlohmann::json A = nlohmann::json::array();
  for (Eigen::Index i = 0; i < t.input_A.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < t.input_A.cols(); ++j) row.push_back(t.input_A(i, j));
    A.push_back(row);
  }
  nlohmann::json plant{{"kind", c.plant.kind}};
  if (c.plant.kind == "external") {
    plant["command"] = c.plant.command;
    plant["state_dim"] = c.plant.state_dim;
    plant["input_dim"] = c.plant.input_dim;
  } else {
    plant["room"] = {{"ambient", c.plant.room.ambient},
                     {"heater", c.plant.room.heater},
                     {"alpha_ambient", c.plant.room.alpha_ambient},
                     {"alpha_heater", c.plant.room.alpha_heater},
                     {"sample_time", c.plant.room.sample_time}};
  }
  nlohmann::json samples{{"N", c.samples.N_auto ? nlohmann::json("auto") : nlohmann::json(c.samples.N)},
                         {"N0", c.samples.N0},
                         {"eps", c.samples.eps}};
  nlohmann::json planner{
      {"start_N", c.planner.start_N},
      {"start_N0", c.planner.start_N0},
      {"growth", c.planner.settings.growth},
      {"max_N", c.planner.settings.max_N},
      {"rounding",
       c.planner.settings.rounding == ViolationRounding::kFloor ? "floor" : "nearest"}};
  planner["K_hat"] = c.planner.K_hat ? nlohmann::json(*c.planner.K_hat) : nlohmann::json(nullptr);
  planner["Nstar_hat"] =
      c.planner.Nstar_hat ? nlohmann::json(*c.planner.Nstar_hat) : nlohmann::json(nullptr);
  return nlohmann::json{
      {"plant", plant},
      {"regions",
       {{"state", BoxJson(t.state_box)},
        {"initial", UnionJson(t.initial_set)},
        {"unsafe", UnionJson(t.unsafe_set)},
        {"input", BoxJson(t.input_box)},
        {"input_polytope",
         {{"A", A}, {"b", std::vector<double>(t.input_b.data(), t.input_b.data() + t.input_b.size())}}}}},
      {"horizon", t.horizon},
      {"template",
       {{"barrier_degree", c.barrier_degree},
        {"controller_degree", c.controller_degrees},
        {"barrier_norm_bound", t.barrier_norm_bound},
        {"controller_norm_bound", t.controller_norm_bound}}},
      {"confidence", {{"beta", c.beta}, {"lipschitz", c.lipschitz}}},
      {"samples", samples},
      {"planner", planner},
      {"grid",
       {{"initial_points", c.grid.initial_points},
        {"unsafe_points", c.grid.unsafe_points},
        {"state_points", c.grid.state_points},
        {"strict_margin", c.grid.strict_margin},
        {"tighten", c.grid.tighten}}},
      {"tolerances",
       {{"activity", c.tolerances.activity},
        {"feasibility", c.tolerances.feasibility},
        {"optimality", c.tolerances.optimality},
        {"lexicographic", c.tolerances.lexicographic}}},
      {"check",
       {{"initial_points", c.check.initial_points},
        {"unsafe_points", c.check.unsafe_points},
        {"state_points", c.check.state_points},
        {"input_points", c.check.input_points}}},
      {"seeds", {{"scenario", c.seed}, {"validation", c.seed_validation}}},
      {"retries", c.retries},
  };
}

std::string ConfigHash(const SynthesisConfig& config) {
  const std::string text = ConfigToJson(config).dump();
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 15]);
  }
  return out;
}

}  // namespace safesynth
