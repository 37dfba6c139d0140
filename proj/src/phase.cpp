#include "kb/phase.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace kb {

PhaseGrid::PhaseGrid(int n_, double Lx_, double Lv_, int Nx_, int Nv_)
    : n(n_), Lx(Lx_), Lv(Lv_), Nx(Nx_), Nv(Nv_) {
  if (n != 2 && n != 3)
    throw std::domain_error("PhaseGrid: runtime dimension must be 2 or 3");
  if (!(Lx > 0.0) || !(Lv > 0.0))
    throw std::domain_error("PhaseGrid: half-widths must be positive");
  if (Nx < 4 || Nv < 4)
    throw std::domain_error("PhaseGrid: need at least 4 points per axis");
  hx = 2.0 * Lx / Nx;
  hv = 2.0 * Lv / Nv;
}

std::size_t PhaseGrid::pow_n(int N) const {
  std::size_t r = 1;
  for (int d = 0; d < n; ++d) r *= static_cast<std::size_t>(N);
  return r;
}

Vec PhaseGrid::center(std::size_t flat, int N, double L, double h) const {
  Vec p{0.0, 0.0, 0.0};
  for (int d = 0; d < n; ++d) {
    const auto i = static_cast<int>(flat % static_cast<std::size_t>(N));
    flat /= static_cast<std::size_t>(N);
    p[d] = -L + (i + 0.5) * h;
  }
  return p;
}

void PhaseGrid::decode(std::size_t flat, int N, int out[3]) const {
  out[0] = out[1] = out[2] = 0;
  for (int d = 0; d < n; ++d) {
    out[d] = static_cast<int>(flat % static_cast<std::size_t>(N));
    flat /= static_cast<std::size_t>(N);
  }
}

std::size_t PhaseGrid::encode(const int c[3], int N) const {
  std::size_t flat = 0;
  for (int d = n - 1; d >= 0; --d)
    flat = flat * static_cast<std::size_t>(N) + static_cast<std::size_t>(c[d]);
  return flat;
}

double PhaseGrid::default_half_width(double rate) {
  if (!(rate > 0.0))
    throw std::domain_error("default_half_width: decay rate must be > 0");
  return std::sqrt(std::log(1e8) / rate);
}

bool PhaseGrid::same_as(const PhaseGrid& o) const {
  return n == o.n && Lx == o.Lx && Lv == o.Lv && Nx == o.Nx && Nv == o.Nv;
}

void MaxwellianSpec::validate() const {
  if (!(C >= 0.0)) throw std::domain_error("MaxwellianSpec: C must be >= 0");
  if (!(alpha > 0.0))
    throw std::domain_error("MaxwellianSpec: alpha must be > 0");
  if (!(beta >= 0.0))
    throw std::domain_error("MaxwellianSpec: beta must be >= 0");
  if (!std::isfinite(shift))
    throw std::domain_error("MaxwellianSpec: shift must be finite");
}

double MaxwellianSpec::operator()(const Vec& x, const Vec& v) const {
  const Vec y = x - shift * v;
  return C * std::exp(-alpha * norm2(y) - beta * norm2(v));
}

Field::Field(std::shared_ptr<const PhaseGrid> grid, double t, Frame frame)
    : grid_(std::move(grid)), t_(t), frame_(frame),
      values_(grid_->cells(), 0.0) {}

Field Field::zeros(std::shared_ptr<const PhaseGrid> grid, double t,
                   Frame frame) {
  return Field(std::move(grid), t, frame);
}

Field Field::sample_maxwellian(std::shared_ptr<const PhaseGrid> grid,
                               const MaxwellianSpec& m, double t, Frame frame) {
  m.validate();
  Field f(std::move(grid), t, frame);
  const auto& g = f.grid();
  for (std::size_t ix = 0; ix < g.x_cells(); ++ix) {
    const Vec x = g.x_center(ix);
    double* row = f.slice(ix);
    for (std::size_t iv = 0; iv < g.v_cells(); ++iv)
      row[iv] = m(x, g.v_center(iv));
  }
  return f;
}

void Field::assert_distribution(const std::string& who) const {
  for (double v : values_) {
    if (!std::isfinite(v))
      throw ContractError(who + ": field has non-finite values");
    if (v < 0.0) throw ContractError(who + ": field has negative values");
  }
}

double weighted_sup_norm(const Field& f, double alpha, double beta,
                         double arg_cap) {
  if (!(alpha > 0.0) || !(beta >= 0.0))
    throw std::domain_error("weighted_sup_norm: need alpha > 0, beta >= 0");
  const auto& g = f.grid();
  const MaxwellianSpec unit{1.0, alpha, beta, 0.0};
  double best = 0.0;
  for (std::size_t ix = 0; ix < g.x_cells(); ++ix) {
    const Vec x = g.x_center(ix);
    const double x2 = norm2(x);
    if (alpha * x2 > arg_cap) continue;
    const double* row = f.slice(ix);
    for (std::size_t iv = 0; iv < g.v_cells(); ++iv) {
      if (row[iv] == 0.0) continue;
      const double mag = std::abs(row[iv]);
      const Vec v = g.v_center(iv);
      const double a = alpha * x2 + beta * norm2(v);
      if (a > arg_cap) continue;
      // Dividing by the sampled envelope keeps f = M exactly at norm 1;
      // switch to the product form only where exp(-a) would underflow.
      const double r = a < 700.0 ? mag / unit(x, v) : mag * std::exp(a);
      if (r > best) best = r;
    }
  }
  return best;
}

double weighted_sup_norm(const Field& f, double alpha, double beta) {
  return weighted_sup_norm(f, alpha, beta,
                           std::numeric_limits<double>::infinity());
}

double lp_norm(const Field& f, double p) {
  if (!(p >= 1.0)) throw std::domain_error("lp_norm: need p >= 1");
  const auto& g = f.grid();
  if (std::isinf(p)) {
    double best = 0.0;
    for (double v : f.values()) best = std::max(best, std::abs(v));
    return best;
  }
  const double cell =
      std::pow(g.hx, g.n) * std::pow(g.hv, g.n);
  double sum = 0.0;
  for (double v : f.values()) sum += std::pow(std::abs(v), p);
  return std::pow(sum * cell, 1.0 / p);
}

namespace {

// Multilinear gather over the first `n` axes of a cell-centered grid.
// coords are in cell units (cell i has coordinate i).
double gather_nd(const double* data, int n, int N, const double pos[3]) {
  int base[3];
  double w[3];
  for (int d = 0; d < n; ++d) {
    const double fl = std::floor(pos[d]);
    base[d] = static_cast<int>(fl);
    w[d] = pos[d] - fl;
  }
  const int corners = 1 << n;
  double acc = 0.0;
  for (int c = 0; c < corners; ++c) {
    double weight = 1.0;
    std::size_t flat = 0;
    bool inside = true;
    std::size_t stride = 1;
    for (int d = 0; d < n; ++d) {
      const int bit = (c >> d) & 1;
      const int idx = base[d] + bit;
      if (idx < 0 || idx >= N) {
        inside = false;
        break;
      }
      weight *= bit ? w[d] : 1.0 - w[d];
      flat += static_cast<std::size_t>(idx) * stride;
      stride *= static_cast<std::size_t>(N);
    }
    if (inside && weight != 0.0) acc += weight * data[flat];
  }
  return acc;
}

}  // namespace

double interp_x(const Field& f, const Vec& x, std::size_t iv) {
  const auto& g = f.grid();
  // Gather over x with stride v_cells: copy is avoided by indexing math.
  int base[3];
  double w[3];
  for (int d = 0; d < g.n; ++d) {
    const double pos = (x[d] + g.Lx) / g.hx - 0.5;
    const double fl = std::floor(pos);
    base[d] = static_cast<int>(fl);
    w[d] = pos - fl;
  }
  const int corners = 1 << g.n;
  const std::size_t vc = g.v_cells();
  double acc = 0.0;
  for (int c = 0; c < corners; ++c) {
    double weight = 1.0;
    std::size_t flat = 0;
    bool inside = true;
    std::size_t stride = 1;
    for (int d = 0; d < g.n; ++d) {
      const int bit = (c >> d) & 1;
      const int idx = base[d] + bit;
      if (idx < 0 || idx >= g.Nx) {
        inside = false;
        break;
      }
      weight *= bit ? w[d] : 1.0 - w[d];
      flat += static_cast<std::size_t>(idx) * stride;
      stride *= static_cast<std::size_t>(g.Nx);
    }
    if (inside && weight != 0.0) acc += weight * f.values()[flat * vc + iv];
  }
  return acc;
}

double interp_xv(const Field& f, const Vec& x, const Vec& v) {
  const auto& g = f.grid();
  // Velocity stencil first, then a position gather per corner.
  int base[3];
  double w[3];
  for (int d = 0; d < g.n; ++d) {
    const double pos = (v[d] + g.Lv) / g.hv - 0.5;
    const double fl = std::floor(pos);
    base[d] = static_cast<int>(fl);
    w[d] = pos - fl;
  }
  const int corners = 1 << g.n;
  double acc = 0.0;
  for (int c = 0; c < corners; ++c) {
    double weight = 1.0;
    int idx[3] = {0, 0, 0};
    bool inside = true;
    for (int d = 0; d < g.n; ++d) {
      const int bit = (c >> d) & 1;
      idx[d] = base[d] + bit;
      if (idx[d] < 0 || idx[d] >= g.Nv) {
        inside = false;
        break;
      }
      weight *= bit ? w[d] : 1.0 - w[d];
    }
    if (!inside || weight == 0.0) continue;
    acc += weight * interp_x(f, x, g.v_index(idx));
  }
  return acc;
}

namespace {

Field shift_frame(const Field& in, double sign, Frame out_frame) {
  auto gp = in.grid_ptr();
  const auto& g = *gp;
  Field out(gp, in.t(), out_frame);
  const double t = in.t();
  for (std::size_t iv = 0; iv < g.v_cells(); ++iv) {
    const Vec v = g.v_center(iv);
    int ofs[3] = {0, 0, 0};
    double frac[3] = {0.0, 0.0, 0.0};
    for (int d = 0; d < g.n; ++d) {
      // x + t v in cell units; the integer part is shared by the whole
      // x-row for this velocity cell.
      const double q = sign * t * v[d] / g.hx;
      const double fl = std::floor(q);
      ofs[d] = static_cast<int>(fl);
      frac[d] = q - fl;
    }
    for (std::size_t ix = 0; ix < g.x_cells(); ++ix) {
      int xc[3];
      g.x_coords(ix, xc);
      const int corners = 1 << g.n;
      double acc = 0.0;
      for (int c = 0; c < corners; ++c) {
        double weight = 1.0;
        int idx[3] = {0, 0, 0};
        bool inside = true;
        for (int d = 0; d < g.n; ++d) {
          const int bit = (c >> d) & 1;
          idx[d] = xc[d] + ofs[d] + bit;
          if (idx[d] < 0 || idx[d] >= g.Nx) {
            inside = false;
            break;
          }
          weight *= bit ? frac[d] : 1.0 - frac[d];
        }
        if (!inside || weight == 0.0) continue;
        acc += weight * in(g.x_index(idx), iv);
      }
      out.at(ix, iv) = acc;
    }
  }
  return out;
}

}  // namespace

Field to_trajectory(const Field& f_lab) {
  if (f_lab.frame() != Frame::Lab)
    throw ContractError("to_trajectory: input must be a lab-frame field");
  return shift_frame(f_lab, +1.0, Frame::Trajectory);
}

Field from_trajectory(const Field& f_sharp) {
  if (f_sharp.frame() != Frame::Trajectory)
    throw ContractError("from_trajectory: input must be a trajectory field");
  return shift_frame(f_sharp, -1.0, Frame::Lab);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_fields_csv(const FieldSeries& s, const std::string& csv_path,
                      const std::string& sidecar_path) {
  if (s.slices.empty())
    throw std::invalid_argument("write_fields_csv: empty series");
  const auto& g = s.slices.front().grid();
  std::ofstream csv(csv_path);
  if (!csv) throw std::runtime_error("cannot open " + csv_path);
  csv << "t";
  for (int d = 0; d < g.n; ++d) csv << ",ix" << d;
  for (int d = 0; d < g.n; ++d) csv << ",iv" << d;
  csv << ",value\n";
  for (const auto& f : s.slices) {
    const std::string ts = format_double(f.t());
    for (std::size_t ix = 0; ix < g.x_cells(); ++ix) {
      int xc[3];
      g.x_coords(ix, xc);
      for (std::size_t iv = 0; iv < g.v_cells(); ++iv) {
        int vc[3];
        g.v_coords(iv, vc);
        csv << ts;
        for (int d = 0; d < g.n; ++d) csv << ',' << xc[d];
        for (int d = 0; d < g.n; ++d) csv << ',' << vc[d];
        csv << ',' << format_double(f(ix, iv)) << '\n';
      }
    }
  }
  nlohmann::ordered_json meta;
  meta["dim"] = g.n;
  meta["Lx"] = format_double(g.Lx);
  meta["Lv"] = format_double(g.Lv);
  meta["Nx"] = g.Nx;
  meta["Nv"] = g.Nv;
  meta["frame"] =
      s.slices.front().frame() == Frame::Lab ? "lab" : "trajectory";
  std::vector<std::string> times;
  for (const auto& f : s.slices) times.push_back(format_double(f.t()));
  meta["times"] = times;
  std::ofstream side(sidecar_path);
  if (!side) throw std::runtime_error("cannot open " + sidecar_path);
  side << meta.dump(2) << '\n';
}

FieldSeries read_fields_csv(const std::string& csv_path,
                            const std::string& sidecar_path) {
  std::ifstream side(sidecar_path);
  if (!side) throw std::runtime_error("cannot open " + sidecar_path);
  nlohmann::json meta = nlohmann::json::parse(side);
  const int n = meta.at("dim").get<int>();
  auto grid = std::make_shared<PhaseGrid>(
      n, std::strtod(meta.at("Lx").get<std::string>().c_str(), nullptr),
      std::strtod(meta.at("Lv").get<std::string>().c_str(), nullptr),
      meta.at("Nx").get<int>(), meta.at("Nv").get<int>());
  const Frame frame =
      meta.at("frame").get<std::string>() == "lab" ? Frame::Lab
                                                   : Frame::Trajectory;
  FieldSeries out;
  for (const auto& ts : meta.at("times"))
    out.slices.emplace_back(
        Field::zeros(grid, std::strtod(ts.get<std::string>().c_str(), nullptr),
                     frame));

  std::ifstream csv(csv_path);
  if (!csv) throw std::runtime_error("cannot open " + csv_path);
  std::string line;
  std::getline(csv, line);  // header
  std::size_t slice = 0;
  std::size_t row_in_slice = 0;
  const std::size_t rows_per_slice = grid->cells();
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    const char* p = line.c_str();
    char* end = nullptr;
    std::strtod(p, &end);  // t column; slice index tracks it
    p = end;
    int xc[3] = {0, 0, 0}, vc[3] = {0, 0, 0};
    for (int d = 0; d < n; ++d) {
      xc[d] = static_cast<int>(std::strtol(p + 1, &end, 10));
      p = end;
    }
    for (int d = 0; d < n; ++d) {
      vc[d] = static_cast<int>(std::strtol(p + 1, &end, 10));
      p = end;
    }
    const double value = std::strtod(p + 1, &end);
    if (slice >= out.slices.size())
      throw std::runtime_error("read_fields_csv: more rows than expected");
    out.slices[slice].at(grid->x_index(xc), grid->v_index(vc)) = value;
    if (++row_in_slice == rows_per_slice) {
      row_in_slice = 0;
      ++slice;
    }
  }
  if (slice != out.slices.size() || row_in_slice != 0)
    throw std::runtime_error("read_fields_csv: truncated file");
  return out;
}

}  // namespace kb
