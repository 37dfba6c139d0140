#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "kb/numerics.hpp"

namespace kb {

/// Contract violation between modules (frame mismatch and the like).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Uniform tensor grid on [-Lx,Lx]^n x [-Lv,Lv]^n with cell-centered nodes
/// x_i = -Lx + (i+1/2) hx, so no node sits at the velocity origin.
struct PhaseGrid {
  int n;
  double Lx, Lv;
  int Nx, Nv;
  double hx, hv;

  PhaseGrid(int n_, double Lx_, double Lv_, int Nx_, int Nv_);

  std::size_t x_cells() const { return pow_n(Nx); }
  std::size_t v_cells() const { return pow_n(Nv); }
  std::size_t cells() const { return x_cells() * v_cells(); }

  Vec x_center(std::size_t ix) const { return center(ix, Nx, Lx, hx); }
  Vec v_center(std::size_t iv) const { return center(iv, Nv, Lv, hv); }

  void x_coords(std::size_t ix, int out[3]) const { decode(ix, Nx, out); }
  void v_coords(std::size_t iv, int out[3]) const { decode(iv, Nv, out); }
  std::size_t x_index(const int c[3]) const { return encode(c, Nx); }
  std::size_t v_index(const int c[3]) const { return encode(c, Nv); }

  double x_axis(int i) const { return -Lx + (i + 0.5) * hx; }
  double v_axis(int i) const { return -Lv + (i + 0.5) * hv; }

  /// Smallest half-width L with exp(-rate L^2) < 1e-8.
  static double default_half_width(double rate);

  bool same_as(const PhaseGrid& o) const;

 private:
  std::size_t pow_n(int N) const;
  Vec center(std::size_t flat, int N, double L, double h) const;
  void decode(std::size_t flat, int N, int out[3]) const;
  std::size_t encode(const int c[3], int N) const;
};

enum class Frame { Lab, Trajectory };

/// Maxwellian envelope C exp(-alpha |x - s v|^2 - beta |v|^2). The shift s
/// selects the static (s=0) or traveling frame; beta = 0 is the
/// infinite-mass envelope with no velocity decay.
struct MaxwellianSpec {
  double C = 1.0;
  double alpha = 1.0;
  double beta = 1.0;
  double shift = 0.0;

  void validate() const;
  double operator()(const Vec& x, const Vec& v) const;
};

inline double maxwellian_eval(const MaxwellianSpec& m, const Vec& x,
                              const Vec& v) {
  return m(x, v);
}

/// One time slice of a phase-space field on a shared grid. Values are
/// stored x-major (all velocity cells of one spatial cell contiguous).
/// Signed values are allowed; distribution data additionally satisfies
/// assert_distribution().
class Field {
 public:
  Field(std::shared_ptr<const PhaseGrid> grid, double t, Frame frame);

  static Field zeros(std::shared_ptr<const PhaseGrid> grid, double t,
                     Frame frame);
  static Field sample_maxwellian(std::shared_ptr<const PhaseGrid> grid,
                                 const MaxwellianSpec& m, double t,
                                 Frame frame);

  const PhaseGrid& grid() const { return *grid_; }
  std::shared_ptr<const PhaseGrid> grid_ptr() const { return grid_; }
  double t() const { return t_; }
  void set_t(double t) { t_ = t; }
  Frame frame() const { return frame_; }
  void set_frame(Frame f) { frame_ = f; }

  double operator()(std::size_t ix, std::size_t iv) const {
    return values_[ix * grid_->v_cells() + iv];
  }
  double& at(std::size_t ix, std::size_t iv) {
    return values_[ix * grid_->v_cells() + iv];
  }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }
  const double* slice(std::size_t ix) const {
    return values_.data() + ix * grid_->v_cells();
  }
  double* slice(std::size_t ix) {
    return values_.data() + ix * grid_->v_cells();
  }

  /// Throws if any value is negative or non-finite.
  void assert_distribution(const std::string& who) const;

 private:
  std::shared_ptr<const PhaseGrid> grid_;
  double t_;
  Frame frame_;
  std::vector<double> values_;
};

using DistributionField = Field;

/// max over cells of |f| / M_{alpha,beta} (weighted sup norm of the slice).
double weighted_sup_norm(const Field& f, double alpha, double beta);

/// Same, restricted to cells with alpha|x|^2 + beta|v|^2 <= arg_cap. The
/// envelope weight amplifies quadrature noise beyond meaning at
/// unresolvable tails, so monitored norms cap the envelope argument.
double weighted_sup_norm(const Field& f, double alpha, double beta,
                         double arg_cap);

/// Grid quadrature of the L^p norm over phase space; p may be +infinity.
double lp_norm(const Field& f, double p);

/// Multilinear evaluation of the field at an off-grid position x for a
/// fixed velocity cell; zero outside the truncated box.
double interp_x(const Field& f, const Vec& x, std::size_t iv);

/// Multilinear evaluation in both position and velocity.
double interp_xv(const Field& f, const Vec& x, const Vec& v);

/// f#(x,v) = f(x + t v, v): resample a lab-frame slice onto trajectory
/// coordinates (and back). Multilinear in x, zero outside the box.
Field to_trajectory(const Field& f_lab);
Field from_trajectory(const Field& f_sharp);

/// Time series of slices on a uniform time grid.
struct FieldSeries {
  std::vector<Field> slices;

  std::size_t size() const { return slices.size(); }
  Field& operator[](std::size_t k) { return slices[k]; }
  const Field& operator[](std::size_t k) const { return slices[k]; }
  double t(std::size_t k) const { return slices[k].t(); }
};

/// CSV serialization: header `t,ix0..,iv0..,value`, one row per cell, with
/// a JSON sidecar describing the grid. Doubles are printed with 17
/// significant digits so a write/read round trip is bit-exact.
void write_fields_csv(const FieldSeries& s, const std::string& csv_path,
                      const std::string& sidecar_path);
FieldSeries read_fields_csv(const std::string& csv_path,
                            const std::string& sidecar_path);

std::string format_double(double v);

}  // namespace kb
