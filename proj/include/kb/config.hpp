#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kb/kernel.hpp"
#include "kb/phase.hpp"

namespace kb {

/// One rejected constraint; `where` is the dotted key path.
struct ConfigViolation {
  std::string where;
  std::string message;
};

/// Rejected configuration: carries every violation found.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<ConfigViolation> violations);
  const std::vector<ConfigViolation>& violations() const { return v_; }
  std::string to_json() const;

 private:
  std::vector<ConfigViolation> v_;
};

struct AngularConfig {
  std::string form = "constant";  // constant | power | tabulated
  double constant = 1.0;
  double power = 1.0;
  std::vector<double> samples;
};

struct KernelConfig {
  double lambda = 0.5;
  int dim = 2;
  AngularConfig angular;
};

struct GridConfig {
  double Lx = 0.0;  // 0 = auto from the regime decay rates
  double Lv = 0.0;
  int Nx = 12;
  int Nv = 12;
  int Nsigma = 16;
  int Nt = 64;
  double T = 5.0;
};

struct VacuumRegimeConfig {
  double alpha = 1.0;
  double beta = 1.0;
  double amplitude = 0.0;      // absolute |f0|; exclusive with
  double amplitude_rel = 0.0;  // fraction of the threshold 1/(4k)
};

struct MaxwellianRegimeConfig {
  MaxwellianSpec M{1.0, 1.0, 1.0, 1.0};
  MaxwellianSpec M1{1.0, 1.0, 1.0, 1.0};
  MaxwellianSpec M2{1.0, 1.0, 1.0, 1.0};
  double eps = 0.0;
};

struct SolverConfig {
  double tol_rel = 1e-5;
  int max_iter = 40;
  double first_link_tol_rel = 1e-3;
  double auto_refine_tol = 0.0;
};

struct ChecksConfig {
  std::vector<std::string> enabled;  // gronwall, velocity_gradient, lgamma,
                                     // weighted_gradient, stability, residual
  double gronwall_p = 2.0;
  double velocity_gradient_p = 2.0;
  double stability_delta = 1e-3;
};

struct ScenarioConfig {
  std::string scenario = "scenario";
  std::string out_dir = "out";
  int output_stride = 0;  // 0 = auto (about eight emitted slices)
  KernelConfig kernel;
  GridConfig grid;
  std::string mode = "near_vacuum";  // near_vacuum | near_maxwellian
  VacuumRegimeConfig vacuum;
  MaxwellianRegimeConfig maxwellian;
  SolverConfig solver;
  ChecksConfig checks;

  /// Throws ConfigError listing every violated constraint.
  void validate() const;

  AngularKernel make_angular() const;
  CollisionKernel make_kernel() const;
};

/// Plain-text `dotted.key = value` format, `#` comments.
ScenarioConfig parse_config_text(const std::string& text);
ScenarioConfig load_config(const std::string& path);

}  // namespace kb
