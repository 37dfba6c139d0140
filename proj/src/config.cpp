#include "kb/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace kb {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::string join_violations(const std::vector<ConfigViolation>& v) {
  std::string out = "configuration rejected:";
  for (const auto& x : v) out += "\n  " + x.where + ": " + x.message;
  return out;
}

}  // namespace

ConfigError::ConfigError(std::vector<ConfigViolation> violations)
    : std::runtime_error(join_violations(violations)),
      v_(std::move(violations)) {}

std::string ConfigError::to_json() const {
  nlohmann::ordered_json j;
  j["error"] = "invalid configuration";
  auto& list = j["violations"];
  list = nlohmann::json::array();
  for (const auto& x : v_)
    list.push_back({{"where", x.where}, {"message", x.message}});
  return j.dump(2);
}

namespace {

class KeyReader {
 public:
  explicit KeyReader(std::map<std::string, std::string> kv)
      : kv_(std::move(kv)) {}

  bool has(const std::string& key) const { return kv_.count(key) != 0; }

  std::string str(const std::string& key, const std::string& fallback) {
    used_.insert(key);
    auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
  }

  double num(const std::string& key, double fallback) {
    used_.insert(key);
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    try {
      std::size_t pos = 0;
      const double v = std::stod(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (...) {
      bad_.push_back({key, "not a number: '" + it->second + "'"});
      return fallback;
    }
  }

  int integer(const std::string& key, int fallback) {
    const double v = num(key, fallback);
    if (v != std::floor(v)) {
      bad_.push_back({key, "expected an integer"});
      return fallback;
    }
    return static_cast<int>(v);
  }

  std::vector<double> list(const std::string& key) {
    used_.insert(key);
    std::vector<double> out;
    auto it = kv_.find(key);
    if (it == kv_.end()) return out;
    std::stringstream ss(it->second);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        out.push_back(std::stod(trim(tok)));
      } catch (...) {
        bad_.push_back({key, "not a number list: '" + it->second + "'"});
        return {};
      }
    }
    return out;
  }

  std::vector<std::string> strings(const std::string& key) {
    used_.insert(key);
    std::vector<std::string> out;
    auto it = kv_.find(key);
    if (it == kv_.end()) return out;
    std::stringstream ss(it->second);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      tok = trim(tok);
      if (!tok.empty()) out.push_back(tok);
    }
    return out;
  }

  void finish(std::vector<ConfigViolation>& sink) {
    for (const auto& [key, value] : kv_)
      if (!used_.count(key))
        sink.push_back({key, "unknown key (value '" + value + "')"});
    for (auto& b : bad_) sink.push_back(std::move(b));
  }

 private:
  std::map<std::string, std::string> kv_;
  std::set<std::string> used_;
  std::vector<ConfigViolation> bad_;
};

MaxwellianSpec read_spec(KeyReader& r, const std::string& prefix,
                         double shift) {
  MaxwellianSpec m;
  m.C = r.num(prefix + ".C", 1.0);
  m.alpha = r.num(prefix + ".alpha", 1.0);
  m.beta = r.num(prefix + ".beta", 1.0);
  m.shift = shift;
  return m;
}

}  // namespace

ScenarioConfig parse_config_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::vector<ConfigViolation> violations;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      violations.push_back({"line " + std::to_string(lineno),
                            "expected 'key = value': '" + line + "'"});
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      violations.push_back(
          {"line " + std::to_string(lineno), "empty key or value"});
      continue;
    }
    if (kv.count(key))
      violations.push_back({key, "duplicate key"});
    kv[key] = value;
  }

  KeyReader r(std::move(kv));
  ScenarioConfig c;
  c.scenario = r.str("scenario", c.scenario);
  c.out_dir = r.str("out", c.out_dir);
  c.output_stride = r.integer("output.stride", 0);

  c.kernel.lambda = r.num("kernel.lambda", c.kernel.lambda);
  c.kernel.dim = r.integer("kernel.dim", c.kernel.dim);
  c.kernel.angular.form = r.str("kernel.angular.form", "constant");
  c.kernel.angular.constant = r.num("kernel.angular.c", 1.0);
  c.kernel.angular.power = r.num("kernel.angular.k", 1.0);
  c.kernel.angular.samples = r.list("kernel.angular.samples");

  const std::string lx = r.str("grid.Lx", "auto");
  const std::string lv = r.str("grid.Lv", "auto");
  c.grid.Lx = lx == "auto" ? 0.0 : std::strtod(lx.c_str(), nullptr);
  c.grid.Lv = lv == "auto" ? 0.0 : std::strtod(lv.c_str(), nullptr);
  c.grid.Nx = r.integer("grid.Nx", c.grid.Nx);
  c.grid.Nv = r.integer("grid.Nv", c.grid.Nv);
  c.grid.Nsigma = r.integer("grid.Nsigma", c.grid.Nsigma);
  c.grid.Nt = r.integer("grid.Nt", c.grid.Nt);
  c.grid.T = r.num("grid.T", c.grid.T);

  c.mode = r.str("regime.mode", c.mode);
  c.vacuum.alpha = r.num("regime.alpha", c.vacuum.alpha);
  c.vacuum.beta = r.num("regime.beta", c.vacuum.beta);
  c.vacuum.amplitude = r.num("regime.amplitude", 0.0);
  c.vacuum.amplitude_rel = r.num("regime.amplitude_rel", 0.0);
  c.maxwellian.M = read_spec(r, "regime.M", 1.0);
  c.maxwellian.M1 = read_spec(r, "regime.M1", 1.0);
  c.maxwellian.M2 = read_spec(r, "regime.M2", 1.0);
  c.maxwellian.eps = r.num("regime.eps", 0.0);

  c.solver.tol_rel = r.num("solver.tol_rel", c.solver.tol_rel);
  c.solver.max_iter = r.integer("solver.max_iter", c.solver.max_iter);
  c.solver.first_link_tol_rel =
      r.num("solver.first_link_tol_rel", c.solver.first_link_tol_rel);
  c.solver.auto_refine_tol =
      r.num("solver.auto_refine_tol", c.solver.auto_refine_tol);

  c.checks.enabled = r.strings("checks");
  c.checks.gronwall_p = r.num("checks.gronwall.p", c.checks.gronwall_p);
  c.checks.velocity_gradient_p =
      r.num("checks.velocity_gradient.p", c.checks.velocity_gradient_p);
  c.checks.stability_delta =
      r.num("checks.stability.delta", c.checks.stability_delta);

  r.finish(violations);
  if (!violations.empty()) throw ConfigError(std::move(violations));
  return c;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError({{path, "cannot open configuration file"}});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

AngularKernel ScenarioConfig::make_angular() const {
  if (kernel.angular.form == "constant")
    return AngularKernel::constant(kernel.angular.constant);
  if (kernel.angular.form == "power")
    return AngularKernel::power(kernel.angular.power);
  return AngularKernel::tabulated(kernel.angular.samples);
}

CollisionKernel ScenarioConfig::make_kernel() const {
  return CollisionKernel(kernel.lambda, make_angular(), kernel.dim,
                         mode == "near_vacuum" ? KernelMode::NearVacuum
                                               : KernelMode::NearMaxwellian);
}

void ScenarioConfig::validate() const {
  std::vector<ConfigViolation> v;

  if (scenario.empty()) v.push_back({"scenario", "must not be empty"});
  if (mode != "near_vacuum" && mode != "near_maxwellian")
    v.push_back({"regime.mode",
                 "must be near_vacuum or near_maxwellian, got '" + mode + "'"});

  if (kernel.dim != 2 && kernel.dim != 3)
    v.push_back({"kernel.dim", "runtime dimension must be 2 or 3"});
  else {
    const double upper = kernel.dim - 1.0;
    if (mode == "near_maxwellian" &&
        !(kernel.lambda >= 0.0 && kernel.lambda < upper))
      v.push_back({"kernel.lambda",
                   "assumption (A.1) requires 0 <= lambda < dim-1 = " +
                       std::to_string(upper) + " in near_maxwellian mode"});
    if (mode == "near_vacuum" &&
        !(kernel.lambda >= -1.0 && kernel.lambda < upper))
      v.push_back({"kernel.lambda",
                   "near_vacuum mode requires -1 <= lambda < dim-1 = " +
                       std::to_string(upper)});
  }

  if (kernel.angular.form == "constant") {
    if (!(kernel.angular.constant >= 0.0))
      v.push_back({"kernel.angular.c", "must be >= 0 (assumption A.2)"});
  } else if (kernel.angular.form == "power") {
    if (!(kernel.angular.power >= 0.0))
      v.push_back({"kernel.angular.k", "must be >= 0"});
  } else if (kernel.angular.form == "tabulated") {
    if (kernel.angular.samples.size() < 2)
      v.push_back({"kernel.angular.samples", "need at least 2 samples"});
    for (double s : kernel.angular.samples)
      if (!(s >= 0.0)) {
        v.push_back({"kernel.angular.samples",
                     "samples must be >= 0 (assumption A.2)"});
        break;
      }
  } else {
    v.push_back({"kernel.angular.form",
                 "must be constant, power or tabulated, got '" +
                     kernel.angular.form + "'"});
  }

  if (grid.Nx < 4) v.push_back({"grid.Nx", "need at least 4 points per axis"});
  if (grid.Nv < 4) v.push_back({"grid.Nv", "need at least 4 points per axis"});
  if (grid.Nsigma < 8) v.push_back({"grid.Nsigma", "need at least 8 nodes"});
  if (grid.Nt < 2) v.push_back({"grid.Nt", "need at least 2 time steps"});
  if (!(grid.T > 0.0)) v.push_back({"grid.T", "horizon must be positive"});
  if (grid.Lx < 0.0) v.push_back({"grid.Lx", "must be positive or auto"});
  if (grid.Lv < 0.0) v.push_back({"grid.Lv", "must be positive or auto"});

  if (mode == "near_vacuum") {
    if (!(vacuum.alpha > 0.0)) v.push_back({"regime.alpha", "must be > 0"});
    if (!(vacuum.beta > 0.0))
      v.push_back({"regime.beta",
                   "must be > 0 (the small-data constant k needs velocity "
                   "decay; beta = 0 belongs to near_maxwellian mode)"});
    const bool has_abs = vacuum.amplitude > 0.0;
    const bool has_rel = vacuum.amplitude_rel > 0.0;
    if (has_abs == has_rel)
      v.push_back({"regime.amplitude",
                   "set exactly one of regime.amplitude (absolute) or "
                   "regime.amplitude_rel (fraction of the 1/(4k) threshold)"});
    if (has_rel && vacuum.amplitude_rel > 1.0)
      v.push_back({"regime.amplitude_rel",
                   "smallness violated: the fraction of the threshold "
                   "1/(4 k_ab) must not exceed 1"});
    if (grid.Lv == 0.0 && !(vacuum.beta > 0.0))
      v.push_back({"grid.Lv", "auto width needs a positive decay rate"});
  } else if (mode == "near_maxwellian") {
    const auto check_spec = [&](const MaxwellianSpec& m, const std::string& k,
                                bool beta_zero_ok) {
      if (!(m.C >= 0.0)) v.push_back({k + ".C", "must be >= 0"});
      if (!(m.alpha > 0.0)) v.push_back({k + ".alpha", "must be > 0"});
      if (!(m.beta >= 0.0) || (!beta_zero_ok && m.beta == 0.0 &&
                               (maxwellian.M1.beta > 0 || maxwellian.M2.beta > 0)))
        v.push_back({k + ".beta", "must be >= 0"});
    };
    check_spec(maxwellian.M, "regime.M", true);
    check_spec(maxwellian.M1, "regime.M1", true);
    check_spec(maxwellian.M2, "regime.M2", true);
    if (!(maxwellian.eps > 0.0)) v.push_back({"regime.eps", "must be > 0"});
    // beta = 0 (infinite mass) is allowed only for all three envelopes
    const bool any_zero = maxwellian.M.beta == 0.0 ||
                          maxwellian.M1.beta == 0.0 ||
                          maxwellian.M2.beta == 0.0;
    const bool all_zero = maxwellian.M.beta == 0.0 &&
                          maxwellian.M1.beta == 0.0 &&
                          maxwellian.M2.beta == 0.0;
    if (any_zero && !all_zero)
      v.push_back({"regime.M.beta",
                   "infinite-mass envelopes need beta = 0 on the target and "
                   "both barriers"});
    if (all_zero && grid.Lv == 0.0)
      v.push_back({"grid.Lv",
                   "beta = 0 envelopes have no velocity decay; give an "
                   "explicit velocity half-width"});
    if (!(maxwellian.M2.alpha <= maxwellian.M.alpha &&
          maxwellian.M.alpha <= maxwellian.M1.alpha))
      v.push_back({"regime.M1.alpha", "need alpha2 <= alpha <= alpha1"});
    if (!(maxwellian.M2.beta <= maxwellian.M.beta &&
          maxwellian.M.beta <= maxwellian.M1.beta))
      v.push_back({"regime.M1.beta", "need beta2 <= beta <= beta1"});
    if (!(maxwellian.M1.C <= maxwellian.M.C &&
          maxwellian.M.C <= maxwellian.M2.C))
      v.push_back({"regime.M1.C", "need C1 <= C <= C2"});
  }

  if (!(solver.tol_rel > 0.0)) v.push_back({"solver.tol_rel", "must be > 0"});
  if (solver.max_iter < 1) v.push_back({"solver.max_iter", "must be >= 1"});

  static const std::vector<std::string> known_checks{
      "gronwall", "velocity_gradient", "lgamma",
      "weighted_gradient", "stability", "residual"};
  for (const auto& name : checks.enabled)
    if (std::find(known_checks.begin(), known_checks.end(), name) ==
        known_checks.end())
      v.push_back({"checks", "unknown check '" + name + "'"});
  if (!(checks.gronwall_p > 1.0) || std::isinf(checks.gronwall_p))
    v.push_back({"checks.gronwall.p", "need 1 < p < inf"});
  if (!(checks.velocity_gradient_p > 1.0) ||
      std::isinf(checks.velocity_gradient_p))
    v.push_back({"checks.velocity_gradient.p", "need 1 < p < inf"});

  if (!v.empty()) throw ConfigError(std::move(v));
}

}  // namespace kb
