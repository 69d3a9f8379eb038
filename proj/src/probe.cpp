#include "hardening/probe.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include <fmt/format.h>

namespace hardening {

namespace {

int spatial_axis(const Grid& grid, AxisSpec axis) {
  const int d = grid.dim();
  if (axis.kind == AxisKind::normal) return d - 1;
  if (axis.kind == AxisKind::tangential) {
    if (axis.index < 0 || axis.index >= d - 1) {
      throw std::invalid_argument(
          fmt::format("tangential axis {} does not exist for d = {}", axis.index, d));
    }
    return axis.index;
  }
  throw std::invalid_argument("time axis has no spatial direction");
}

std::vector<std::pair<int, int>> shift_pairs(const Grid& grid, int axis, int k) {
  std::vector<std::pair<int, int>> out;
  out.reserve(grid.num_qp());
  for (int qp = 0; qp < grid.num_qp(); ++qp) {
    const int s = shifted_point(grid, qp, axis, k);
    if (s >= 0) out.emplace_back(qp, s);
  }
  return out;
}

double phi_at(std::span<const double> weight, int qp) {
  return weight.empty() ? 1.0 : weight[qp];
}

// int |phi Delta w|^2 over one frame (space axes).
double space_frame_value(std::span<const double> w, int nc,
                         const std::vector<std::pair<int, int>>& pairs,
                         std::span<const double> weight, double qw) {
  double acc = 0.0;
  for (const auto& [qp, s] : pairs) {
    const double* a = w.data() + static_cast<std::size_t>(qp) * nc;
    const double* b = w.data() + static_cast<std::size_t>(s) * nc;
    const double p = phi_at(weight, qp);
    for (int c = 0; c < nc; ++c) {
      const double diff = p * (b[c] - a[c]);
      acc += diff * diff;
    }
  }
  return acc * qw;
}

double time_frame_value(std::span<const double> a, std::span<const double> b,
                        int nc, std::span<const double> weight, double qw) {
  double acc = 0.0;
  const std::size_t np = a.size() / nc;
  for (std::size_t qp = 0; qp < np; ++qp) {
    const double p = phi_at(weight, static_cast<int>(qp));
    for (int c = 0; c < nc; ++c) {
      const double diff = p * (b[qp * nc + c] - a[qp * nc + c]);
      acc += diff * diff;
    }
  }
  return acc * qw;
}

int default_max_multiple(const FieldSeries& series, AxisSpec axis) {
  const Grid& grid = series.grid();
  if (axis.kind == AxisKind::time) {
    const double tau = series.spacing();
    const int by_time =
        static_cast<int>(std::floor(0.5 * series.final_time() / tau + 1e-9));
    return std::min(by_time, series.num_frames() - 1);
  }
  const int j = spatial_axis(grid, axis);
  return std::min(grid.n() / 2, grid.cells_along(j) - 1);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y,
                    double* r2 = nullptr) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  const double slope = sxy / sxx;
  if (r2) *r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return slope;
}

std::optional<double> slope_vs_mu(const std::vector<double>& mus,
                                  const std::vector<double>& values) {
  std::vector<double> x, y;
  for (std::size_t i = 0; i < mus.size(); ++i) {
    if (values[i] > 0.0) {
      x.push_back(std::log(mus[i]));
      y.push_back(std::log(values[i]));
    }
  }
  if (x.size() < 2) return std::nullopt;
  return loglog_slope(x, y);
}

std::string cutoff_descriptor(const ProbeConfig& config) {
  return fmt::format("eps0={},h0={},side={}", config.eps0, config.h0,
                     to_string(config.side));
}

}  // namespace

std::string AxisSpec::name() const {
  switch (kind) {
    case AxisKind::time:
      return "time";
    case AxisKind::normal:
      return "normal";
    case AxisKind::tangential:
      return "tangential-" + std::to_string(index);
  }
  return "?";
}

AxisSpec AxisSpec::parse(const std::string& name) {
  if (name == "time") return {AxisKind::time, 0};
  if (name == "normal") return {AxisKind::normal, 0};
  const std::string prefix = "tangential-";
  if (name.rfind(prefix, 0) == 0 && name.size() == prefix.size() + 1 &&
      name.back() >= '0' && name.back() <= '1') {
    return {AxisKind::tangential, name.back() - '0'};
  }
  throw std::invalid_argument("unknown axis '" + name + "'");
}

const char* to_string(ProbeField field) {
  switch (field) {
    case ProbeField::stress:
      return "stress";
    case ProbeField::hardening:
      return "hardening";
    case ProbeField::stress_rate:
      return "stress_rate";
    case ProbeField::hardening_rate:
      return "hardening_rate";
    case ProbeField::velocity_gradient:
      return "velocity_gradient";
  }
  return "?";
}

ProbeField probe_field_from_string(const std::string& name) {
  for (auto f : {ProbeField::stress, ProbeField::hardening, ProbeField::stress_rate,
                 ProbeField::hardening_rate, ProbeField::velocity_gradient}) {
    if (name == to_string(f)) return f;
  }
  throw std::invalid_argument("unknown probe field '" + name + "'");
}

bool is_rate_field(ProbeField field) {
  return field == ProbeField::stress_rate || field == ProbeField::hardening_rate ||
         field == ProbeField::velocity_gradient;
}

const char* to_string(Aggregation mode) {
  return mode == Aggregation::sup ? "sup" : "integral";
}

Aggregation aggregation_from_string(const std::string& name) {
  if (name == "sup") return Aggregation::sup;
  if (name == "integral") return Aggregation::integral;
  throw std::invalid_argument("unknown aggregation '" + name + "'");
}

FieldSeries::FieldSeries(const Grid& grid, int components, double spacing)
    : grid_(&grid), components_(components), spacing_(spacing) {
  if (components < 1) throw std::invalid_argument("components must be >= 1");
  if (!(spacing > 0.0)) throw std::invalid_argument("frame spacing must be positive");
}


void FieldSeries::add(double time, std::vector<double> values) {
  if (values.size() !=
      static_cast<std::size_t>(grid_->num_qp()) * components_) {
    throw DimensionError("series frame size does not match the grid");
  }
  // The inner buffer survives reallocation of owned_ (vectors move).
  owned_.push_back(std::move(values));
  views_.emplace_back(owned_.back());
  times_.push_back(time);
}

void FieldSeries::add_view(double time, std::span<const double> values) {
  if (values.size() !=
      static_cast<std::size_t>(grid_->num_qp()) * components_) {
    throw DimensionError("series frame size does not match the grid");
  }
  views_.push_back(values);
  times_.push_back(time);
}

FieldSeries FieldSeries::from_history(const FieldHistory& history,
                                      ProbeField field) {
  const Grid& grid = history.grid();
  const int d = grid.dim();
  const int m = mandel_size(d);
  const bool rate = is_rate_field(field);
  int nc = m;
  if (field == ProbeField::hardening || field == ProbeField::hardening_rate) {
    nc = history.hardening_components();
  } else if (field == ProbeField::velocity_gradient) {
    nc = d * d;
  }
  FieldSeries out(grid, nc, history.frame_spacing());
  for (const Frame& f : history.frames()) {
    if (rate && !f.has_rates()) continue;
    switch (field) {
      case ProbeField::stress:
        out.add_view(f.time, f.stress);
        break;
      case ProbeField::hardening:
        out.add_view(f.time, f.hardening);
        break;
      case ProbeField::stress_rate:
        out.add_view(f.time, f.stress_rate);
        break;
      case ProbeField::hardening_rate:
        out.add_view(f.time, f.hardening_rate);
        break;
      case ProbeField::velocity_gradient:
        out.add(f.time, displacement_gradient(f.velocity, grid));
        break;
    }
  }
  return out;
}

int shifted_point(const Grid& grid, int qp, int axis, int multiple) {
  const int cell = grid.qp_cell(qp);
  auto idx = grid.cell_multi_index(cell);
  idx[axis] += multiple;
  if (idx[axis] < 0 || idx[axis] >= grid.cells_along(axis)) return -1;
  return grid.cell_index(idx) * grid.qp_per_cell() + grid.qp_local(qp);
}

ShiftedDifference diff_quotient(const FieldSeries& series, int frame,
                                AxisSpec axis, int multiple,
                                std::span<const double> weight) {
  const Grid& grid = series.grid();
  const int nc = series.components();
  if (multiple < 1) throw std::invalid_argument("shift multiple must be >= 1");
  if (frame < 0 || frame >= series.num_frames()) {
    throw std::out_of_range("frame index out of range");
  }
  if (!weight.empty() && static_cast<int>(weight.size()) != grid.num_qp()) {
    throw DimensionError("weight size does not match the grid");
  }
  ShiftedDifference out;
  out.components = nc;
  const auto w = series.values(frame);
  if (axis.kind == AxisKind::time) {
    if (multiple >= series.num_frames()) {
      throw std::invalid_argument("time shift exceeds the stored time range");
    }
    out.valid_frames = series.num_frames() - multiple;
    if (frame + multiple >= series.num_frames()) {
      throw std::out_of_range("frame has no partner at this time shift");
    }
    const auto v = series.values(frame + multiple);
    out.points.resize(grid.num_qp());
    out.values.resize(w.size());
    for (int qp = 0; qp < grid.num_qp(); ++qp) {
      out.points[qp] = qp;
      const double p = phi_at(weight, qp);
      for (int c = 0; c < nc; ++c) {
        const std::size_t i = static_cast<std::size_t>(qp) * nc + c;
        out.values[i] = p * (v[i] - w[i]);
      }
    }
    return out;
  }
  const int j = spatial_axis(grid, axis);
  if (multiple >= grid.cells_along(j)) {
    throw std::invalid_argument("spatial shift exceeds the domain extent");
  }
  out.valid_frames = series.num_frames();
  for (int qp = 0; qp < grid.num_qp(); ++qp) {
    const int s = shifted_point(grid, qp, j, multiple);
    if (s < 0) continue;
    out.points.push_back(qp);
    const double p = phi_at(weight, qp);
    for (int c = 0; c < nc; ++c) {
      const double a = w[static_cast<std::size_t>(qp) * nc + c];
      const double b = w[static_cast<std::size_t>(s) * nc + c];
      out.values.push_back(p * (b - a));
    }
  }
  return out;
}

std::vector<int> half_octave_ladder(int max_multiple) {
  std::vector<int> out;
  for (int e = 0;; ++e) {
    const int k = static_cast<int>(std::lround(std::pow(2.0, 0.5 * e)));
    if (k > max_multiple) break;
    if (out.empty() || out.back() != k) out.push_back(k);
  }
  return out;
}

SeminormTable seminorm_table(const FieldSeries& series, AxisSpec axis,
                             std::span<const double> weight, Aggregation mode,
                             const std::string& field,
                             const std::vector<int>& multiples) {
  const Grid& grid = series.grid();
  const int nc = series.components();
  if (!weight.empty() && static_cast<int>(weight.size()) != grid.num_qp()) {
    throw DimensionError("weight size does not match the grid");
  }
  if (series.num_frames() == 0) throw std::invalid_argument("series has no frames");
  std::vector<int> ladder = multiples;
  if (ladder.empty()) {
    ladder = half_octave_ladder(default_max_multiple(series, axis));
  }
  if (ladder.empty()) {
    throw std::invalid_argument("empty h-ladder: grid or time range too coarse");
  }

  SeminormTable table;
  table.axis = axis;
  table.field = field;
  table.mode = mode;
  const double tau = series.spacing();
  const double qw = grid.qp_weight();
  const bool is_time = axis.kind == AxisKind::time;
  const int j = is_time ? -1 : spatial_axis(grid, axis);

  for (int i = 0; i < series.num_frames(); ++i) {
    const auto w = series.values(i);
    double v = 0.0;
    for (int q = 0; q < grid.num_qp(); ++q) {
      const double phi = weight.empty() ? 1.0 : weight[q];
      double s = 0.0;
      for (int c = 0; c < nc; ++c) s += w[q * nc + c] * w[q * nc + c];
      v += qw * phi * phi * s;
    }
    if (mode == Aggregation::sup) {
      table.reference = std::max(table.reference, v);
    } else if (series.time(i) > 0.0) {
      table.reference += tau * v;
    }
  }

  for (int k : ladder) {
    if (k < 1) throw std::invalid_argument("ladder multiples must be >= 1");
    double sup = 0.0;
    double integral = 0.0;
    if (is_time) {
      if (k >= series.num_frames()) {
        throw std::invalid_argument("time shift exceeds the stored time range");
      }
      for (int i = 0; i + k < series.num_frames(); ++i) {
        const double v = time_frame_value(series.values(i), series.values(i + k),
                                          nc, weight, qw);
        sup = std::max(sup, v);
        if (series.time(i) > 0.0) integral += tau * v;
      }
    } else {
      if (k >= grid.cells_along(j)) {
        throw std::invalid_argument("spatial shift exceeds the domain extent");
      }
      const auto pairs = shift_pairs(grid, j, k);
      for (int i = 0; i < series.num_frames(); ++i) {
        const double v = space_frame_value(series.values(i), nc, pairs, weight, qw);
        sup = std::max(sup, v);
        if (series.time(i) > 0.0) integral += tau * v;
      }
    }
    SeminormRow row;
    row.multiple = k;
    row.h = is_time ? k * tau : k * grid.mesh_size();
    row.value = mode == Aggregation::sup ? sup : integral;
    table.rows.push_back(row);
  }
  return table;
}

FitResult fit_exponent(const SeminormTable& table, double h_lo, double h_hi) {
  const double lo = h_lo * (1.0 - 1e-9);
  const double hi = h_hi * (1.0 + 1e-9);
  std::vector<double> x, y;
  FitResult out;
  int in_window = 0;
  for (const auto& row : table.rows) {
    if (row.h < lo || row.h > hi) continue;
    ++in_window;
    if (!(row.value > kRoundoffFloor * table.reference)) {
      ++out.zero_rows;
      continue;
    }
    x.push_back(std::log(row.h));
    y.push_back(std::log(row.value));
    out.h_min = x.size() == 1 ? row.h : std::min(out.h_min, row.h);
    out.h_max = std::max(out.h_max, row.h);
  }
  if (in_window == 0) throw FitError("no table rows inside the fit window");
  if (x.empty()) {
    out.status = FitResult::Status::identically_regular;
    return out;
  }
  if (x.size() < 4) {
    throw FitError(fmt::format("only {} positive rows inside the fit window (need 4)",
                               x.size()));
  }
  double r2 = 0.0;
  out.s_hat = 0.5 * loglog_slope(x, y, &r2);
  out.r2 = r2;
  out.rows_used = static_cast<int>(x.size());
  return out;
}

double lipschitz_spread(const SeminormTable& table, double h_lo, double h_hi) {
  std::vector<double> q;
  for (const auto& row : table.rows) {
    if (row.h < h_lo * (1.0 - 1e-9) || row.h > h_hi * (1.0 + 1e-9)) continue;
    q.push_back(std::sqrt(row.value) / row.h);
  }
  if (q.empty()) throw FitError("no table rows inside the window");
  return spread_ratio(q);
}

double alpha_exponent(int dim) {
  if (dim != 2 && dim != 3) throw DimensionError("dimension must be 2 or 3");
  const double d = dim;
  return (2.0 * d - 7.0 + std::sqrt(1.0 + 4.0 * d * d + 20.0 * d)) /
         (8.0 * (d - 1.0));
}

BetaExponent beta_exponent(double p, int dim) {
  if (dim != 2 && dim != 3) throw DimensionError("dimension must be 2 or 3");
  const double d = dim;
  BetaExponent out;
  if (dim == 2) {
    if (!(p > 2.0)) throw std::invalid_argument("p must lie in (2, inf) for d = 2");
    out.degenerate = true;
  } else {
    const double upper = 2.0 * (d - 1.0) / (d - 2.0);
    if (!(p > 2.0 && p < upper)) {
      throw std::invalid_argument(fmt::format("p must lie in (2, {}) for d = {}",
                                              upper, dim));
    }
  }
  out.value = (p - 2.0) / (4.0 * (d - 1.0) - 2.0 * p * (d - 2.0));
  return out;
}

double lambda_exponent(double beta, int dim) {
  if (dim != 2 && dim != 3) throw DimensionError("dimension must be 2 or 3");
  return 1.0 / (2.0 * beta * (dim - 1) + 1.0);
}

ExponentTargets target_exponents(int dim, HardeningModel model, CutoffSide side) {
  ExponentTargets t;
  t.dim = dim;
  t.model = model;
  t.side = side;
  t.alpha = alpha_exponent(dim);
  const BetaExponent b = beta_exponent(3.0, dim);
  t.beta = b.value;
  t.beta_degenerate = b.degenerate;
  t.lambda = lambda_exponent(b.value, dim);
  t.rate_time = 0.5;
  t.rate_tangential = 0.5;
  if (model == HardeningModel::isotropic && side == CutoffSide::neumann) {
    t.stress_normal = t.alpha;
    t.rate_normal = t.alpha / 3.0;
  } else {
    t.stress_normal = 0.6;
    t.rate_normal = 0.2;
  }
  return t;
}

std::pair<double, bool> probe_target(const ProbeSpec& spec,
                                     const ExponentTargets& targets) {
  const bool rate = is_rate_field(spec.field);
  switch (spec.axis.kind) {
    case AxisKind::time:
      return {rate ? targets.rate_time : 1.0, false};
    case AxisKind::tangential:
      return {rate ? targets.rate_tangential : 1.0, false};
    case AxisKind::normal:
      return {rate ? targets.rate_normal : targets.stress_normal, true};
  }
  return {0.0, false};
}

std::vector<ProbeSpec> default_probes(int dim) {
  std::vector<ProbeSpec> out;
  const AxisSpec normal{AxisKind::normal, 0};
  const AxisSpec time{AxisKind::time, 0};
  for (auto f : {ProbeField::stress, ProbeField::hardening}) {
    out.push_back({normal, f, Aggregation::sup, true});
  }
  for (auto f : {ProbeField::stress_rate, ProbeField::hardening_rate}) {
    out.push_back({normal, f, Aggregation::integral, true});
  }
  for (int j = 0; j < dim - 1; ++j) {
    const AxisSpec tang{AxisKind::tangential, j};
    for (auto f : {ProbeField::stress, ProbeField::hardening}) {
      out.push_back({tang, f, Aggregation::sup, true});
    }
    for (auto f : {ProbeField::stress_rate, ProbeField::hardening_rate}) {
      out.push_back({tang, f, Aggregation::integral, true});
    }
  }
  for (auto f : {ProbeField::stress_rate, ProbeField::hardening_rate,
                 ProbeField::velocity_gradient}) {
    out.push_back({time, f, Aggregation::integral, false});
  }
  return out;
}

InterpolationReport interpolation_check(const FieldHistory& history,
                                        std::span<const double> weight,
                                        double delta,
                                        const std::vector<int>& multiples) {
  if (!(delta > 0.0 && delta < 1.0 / 3.0)) {
    throw std::invalid_argument("delta must lie in (0, 1/3)");
  }
  if (history.records().size() < 9) {
    throw std::invalid_argument("interpolation check needs at least 8 time steps");
  }
  const AxisSpec normal{AxisKind::normal, 0};
  auto table = [&](ProbeField f) {
    return seminorm_table(FieldSeries::from_history(history, f), normal, weight,
                          Aggregation::integral, to_string(f), multiples);
  };
  const SeminormTable s = table(ProbeField::stress);
  const SeminormTable x = table(ProbeField::hardening);
  const SeminormTable sr = table(ProbeField::stress_rate);
  const SeminormTable xr = table(ProbeField::hardening_rate);

  InterpolationReport out;
  out.delta = delta;
  std::vector<double> ratios;
  for (std::size_t i = 0; i < s.rows.size(); ++i) {
    InterpolationRow row;
    row.multiple = s.rows[i].multiple;
    row.h = s.rows[i].h;
    row.lhs = sr.rows[i].value + xr.rows[i].value;
    if (row.lhs <= kRoundoffFloor * (sr.reference + xr.reference)) row.lhs = 0.0;
    double base = s.rows[i].value + x.rows[i].value;
    if (base <= kRoundoffFloor * (s.reference + x.reference)) base = 0.0;
    row.rhs = std::pow(base, 1.0 / 3.0 - delta);
    row.flagged = !(base > 0.0);
    if (!row.flagged) {
      row.ratio = row.lhs / row.rhs;
      ratios.push_back(row.ratio);
    }
    out.rows.push_back(row);
  }
  bool all_zero = true;
  for (const auto& row : out.rows) {
    all_zero = all_zero && row.lhs == 0.0 && row.flagged;
  }
  out.degenerate = all_zero || ratios.empty();
  out.spread = out.degenerate ? 0.0 : spread_ratio(ratios);
  return out;
}

StripReport strip_gradient_norm(const FieldHistory& history, int multiple,
                                const Cutoff& cutoff) {
  const Grid& grid = history.grid();
  const int d = grid.dim();
  if (multiple < 1 || multiple > grid.cells_along(d - 1)) {
    throw std::invalid_argument("empty strip: multiple must be in [1, n]");
  }
  StripReport out;
  out.multiple = multiple;
  out.h = multiple * grid.mesh_size();
  if (!(out.h < cutoff.h0())) {
    throw std::invalid_argument("strip width must be below h0");
  }
  std::vector<double> phi = cutoff.qp_values();
  if (static_cast<int>(phi.size()) != grid.num_qp()) {
    phi.resize(grid.num_qp());
    for (int qp = 0; qp < grid.num_qp(); ++qp) phi[qp] = cutoff(grid.qp_coord(qp));
  }
  const double w = grid.qp_weight();
  const double tau = history.frame_spacing();
  for (const Frame& f : history.frames()) {
    if (!f.has_rates()) continue;
    const std::vector<double> g = displacement_gradient(f.velocity, grid);
    double normal = 0.0;
    double sym = 0.0;
    for (int qp = 0; qp < grid.num_qp(); ++qp) {
      if (grid.cell_multi_index(grid.qp_cell(qp))[d - 1] >= multiple) continue;
      const double p2 = phi[qp] * phi[qp];
      const double* gq = g.data() + static_cast<std::size_t>(qp) * d * d;
      for (int i = 0; i < d; ++i) {
        normal += w * p2 * gq[i * d + d - 1] * gq[i * d + d - 1];
        for (int k = 0; k < d; ++k) {
          const double e = 0.5 * (gq[i * d + k] + gq[k * d + i]);
          sym += w * p2 * e * e;
        }
      }
    }
    out.times.push_back(f.time);
    out.normal_gradient.push_back(normal);
    out.sym_gradient.push_back(sym);
    out.normal_gradient_integral += tau * normal;
    out.sym_gradient_integral += tau * sym;
  }
  return out;
}

ProbeReport run_probes(const FieldHistory& history, const ProbeConfig& config) {
  const Grid& grid = history.grid();
  Cutoff cutoff = make_cutoff(grid, config.eps0, config.h0, config.side);
  const std::vector<double>& phi = cutoff.qp_values();
  const std::string descriptor = cutoff_descriptor(config);

  ProbeReport report;
  report.targets = target_exponents(grid.dim(), history.model(), config.side);
  const std::vector<ProbeSpec> probes =
      config.probes.empty() ? default_probes(grid.dim()) : config.probes;

  std::map<ProbeField, FieldSeries> cache;
  const double final_time = history.final_frame().time;
  for (const ProbeSpec& spec : probes) {
    auto it = cache.find(spec.field);
    if (it == cache.end()) {
      it = cache.emplace(spec.field, FieldSeries::from_history(history, spec.field))
               .first;
    }
    SeminormTable table = seminorm_table(
        it->second, spec.axis,
        spec.weighted ? std::span<const double>(phi) : std::span<const double>(),
        spec.mode, to_string(spec.field));
    table.cutoff = spec.weighted ? descriptor : "none";

    ProbeFit fit;
    const auto [target, lossy] = probe_target(spec, report.targets);
    fit.target = target;
    fit.target_minus_delta = target - (lossy ? config.delta : 0.0);
    double lo, hi;
    if (spec.axis.kind == AxisKind::time) {
      lo = config.window.time_min_frames * history.frame_spacing();
      hi = config.window.time_max_fraction * final_time;
    } else {
      lo = config.window.space_min_cells * grid.mesh_size();
      hi = config.window.space_max;
    }
    try {
      fit.fit = fit_exponent(table, lo, hi);
      fit.margin = fit.fit->s_hat - fit.target_minus_delta;
    } catch (const FitError& e) {
      fit.error = e.what();
    }
    report.tables.push_back(std::move(table));
    report.fits.push_back(std::move(fit));
  }

  std::vector<int> window_ladder;
  for (int k : half_octave_ladder(grid.n() / 2)) {
    const double h = k * grid.mesh_size();
    if (h >= config.window.space_min_cells * grid.mesh_size() * (1.0 - 1e-9) &&
        h <= config.window.space_max * (1.0 + 1e-9)) {
      window_ladder.push_back(k);
    }
  }
  try {
    if (window_ladder.empty()) throw std::invalid_argument("empty window");
    report.interpolation =
        interpolation_check(history, phi, config.delta, window_ladder);
  } catch (const std::invalid_argument&) {
    report.interpolation.reset();
  }
  for (int k = 1; k * grid.mesh_size() < config.h0 && k <= grid.n(); k *= 2) {
    report.strips.push_back(strip_gradient_norm(history, k, cutoff));
  }
  return report;
}

double spread_ratio(std::span<const double> values) {
  if (values.empty()) return 1.0;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (*hi == *lo) return 1.0;
  if (!(*lo > 0.0)) return std::numeric_limits<double>::infinity();
  return *hi / *lo;
}

UniformityReport mu_sweep(const Scenario& scenario, const std::vector<double>& mus,
                          const ProbeConfig& config, const SweepCallback& on_run) {
  if (mus.empty()) throw std::invalid_argument("mu list is empty");
  for (std::size_t i = 0; i < mus.size(); ++i) {
    if (!(mus[i] > 0.0)) throw std::invalid_argument("mu values must be positive");
    if (i > 0 && !(mus[i] < mus[i - 1])) {
      throw std::invalid_argument("mu values must be strictly descending");
    }
  }
  UniformityReport report;
  for (double mu : mus) {
    SweepEntry entry;
    entry.mu = mu;
    Scenario sc = scenario;
    sc.material.mu = mu;
    try {
      const FieldHistory history = run(sc);
      entry.energy = energy_diagnostics(history, sc);
      entry.probes = run_probes(history, config);
      entry.newton = history.newton_summary();
      entry.ok = true;
      if (on_run) on_run(entry, &history);
    } catch (const std::exception& e) {
      entry.ok = false;
      entry.error = e.what();
      if (on_run) on_run(entry, nullptr);
    }
    report.runs.push_back(std::move(entry));
  }

  std::vector<const SweepEntry*> ok;
  for (const auto& r : report.runs) {
    if (r.ok) ok.push_back(&r);
  }
  auto add_spread = [&](const std::string& name, auto getter) {
    std::vector<double> v;
    for (const auto* r : ok) v.push_back(getter(*r));
    report.spreads.emplace_back(name, spread_ratio(v));
  };
  add_spread("sup_stress_rate", [](const SweepEntry& r) { return r.energy.sup_stress_rate; });
  add_spread("sup_hardening_rate",
             [](const SweepEntry& r) { return r.energy.sup_hardening_rate; });
  add_spread("sup_velocity_h1", [](const SweepEntry& r) { return r.energy.sup_velocity_h1; });
  add_spread("energy_bound", [](const SweepEntry& r) { return r.energy.energy_bound; });
  add_spread("final_penalty_energy",
             [](const SweepEntry& r) { return r.energy.final_penalty_energy; });
  add_spread("final_dissipation",
             [](const SweepEntry& r) { return r.energy.final_dissipation; });
  if (!ok.empty()) {
    const std::size_t nt = ok.front()->probes.tables.size();
    for (std::size_t t = 0; t < nt; ++t) {
      const SeminormTable& ref = ok.front()->probes.tables[t];
      add_spread(fmt::format("max_S:{}/{}/{}", ref.axis.name(), ref.field,
                             to_string(ref.mode)),
                 [t](const SweepEntry& r) {
                   double m = 0.0;
                   if (t < r.probes.tables.size()) {
                     for (const auto& row : r.probes.tables[t].rows) {
                       m = std::max(m, row.value);
                     }
                   }
                   return m;
                 });
    }
  }

  std::vector<double> mu_ok, l2, mx;
  for (const auto* r : ok) {
    mu_ok.push_back(r->mu);
    l2.push_back(r->energy.final_overshoot_l2);
    mx.push_back(r->energy.max_overshoot);
  }
  report.overshoot_l2_slope = slope_vs_mu(mu_ok, l2);
  report.overshoot_max_slope = slope_vs_mu(mu_ok, mx);
  return report;
}

}  // namespace hardening
