#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hardening/evolution.hpp"

namespace hardening {

enum class AxisKind { time, tangential, normal };

/// Shift direction. `index` selects the tangential axis (0 .. d-2).
struct AxisSpec {
  AxisKind kind = AxisKind::normal;
  int index = 0;

  std::string name() const;
  static AxisSpec parse(const std::string& name);
  bool operator==(const AxisSpec&) const = default;
};

enum class ProbeField {
  stress,
  hardening,
  stress_rate,
  hardening_rate,
  velocity_gradient
};

const char* to_string(ProbeField field);
ProbeField probe_field_from_string(const std::string& name);
bool is_rate_field(ProbeField field);

enum class Aggregation { sup, integral };

const char* to_string(Aggregation mode);
Aggregation aggregation_from_string(const std::string& name);

/// One quadrature-point field sampled at equally spaced time levels.
class FieldSeries {
 public:
  FieldSeries(const Grid& grid, int components, double spacing);

  /// Adds a frame that owns its values.
  void add(double time, std::vector<double> values);
  /// Adds a frame viewing external storage that must outlive the series.
  void add_view(double time, std::span<const double> values);

  static FieldSeries from_history(const FieldHistory& history, ProbeField field);

  const Grid& grid() const { return *grid_; }
  int components() const { return components_; }
  double spacing() const { return spacing_; }
  int num_frames() const { return static_cast<int>(views_.size()); }
  double time(int frame) const { return times_[frame]; }
  double final_time() const { return times_.empty() ? 0.0 : times_.back(); }
  std::span<const double> values(int frame) const { return views_[frame]; }

 private:
  const Grid* grid_;
  int components_;
  double spacing_;
  std::vector<double> times_;
  std::vector<std::vector<double>> owned_;
  std::vector<std::span<const double>> views_;
};

/// phi(x) (w(x + h) - w(x)) on the points/frames where the shift stays
/// inside; phi = 1 when no weight is given.
struct ShiftedDifference {
  std::vector<int> points;     // unshifted quadrature points kept
  std::vector<double> values;  // points.size() * components
  int components = 0;
  /// Frames with a valid time partner (time axis), otherwise all frames.
  int valid_frames = 0;
};

/// `multiple` is h in units of the mesh size (space) or frame spacing (time).
ShiftedDifference diff_quotient(const FieldSeries& series, int frame,
                                AxisSpec axis, int multiple,
                                std::span<const double> weight = {});

/// Quadrature point reached from `qp` by a shift of `multiple` cells, or -1.
int shifted_point(const Grid& grid, int qp, int axis, int multiple);

/// Integer multiples 1, 2, 3, 4, 6, 8, 11, 16, ... (rounded powers of sqrt 2).
std::vector<int> half_octave_ladder(int max_multiple);

struct SeminormRow {
  int multiple = 0;
  double h = 0.0;
  double value = 0.0;
};

struct SeminormTable {
  AxisSpec axis;
  std::string field;
  Aggregation mode = Aggregation::sup;
  std::string cutoff = "none";
  std::vector<SeminormRow> rows;
  /// The same aggregation of int phi^2 |w|^2; rows below
  /// kRoundoffFloor * reference count as zero in fits.
  double reference = 0.0;
};

inline constexpr double kRoundoffFloor = 1e-20;

/// S(h) = sup_t or sum_t dt * int |Delta^h w|^2 dx over the ladder.
/// The default ladder spans h <= 1/2 (space) or h <= T/2 (time).
/// Integral mode sums frames with t > 0 whose partner t + h is stored.
SeminormTable seminorm_table(const FieldSeries& series, AxisSpec axis,
                             std::span<const double> weight, Aggregation mode,
                             const std::string& field = "",
                             const std::vector<int>& multiples = {});

struct FitResult {
  enum class Status { fitted, identically_regular };
  Status status = Status::fitted;
  double s_hat = 0.0;
  double r2 = 0.0;
  int rows_used = 0;
  int zero_rows = 0;
  double h_min = 0.0;
  double h_max = 0.0;
};

class FitError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Least-squares slope of log S against log h over rows with h in
/// [h_lo, h_hi], halved. Zero and roundoff-level rows are excluded and counted; an all-zero
/// window yields identically_regular. Throws FitError for < 4 usable rows.
FitResult fit_exponent(const SeminormTable& table, double h_lo = 0.0,
                       double h_hi = std::numeric_limits<double>::infinity());

/// max/min over the window of sqrt(S(h))/h.
double lipschitz_spread(const SeminormTable& table, double h_lo, double h_hi);

struct BetaExponent {
  double value = 0.0;
  bool degenerate = false;  // d = 2: upper end of the range is infinite
};

double alpha_exponent(int dim);
/// beta(p,d) = (p-2) / (4(d-1) - 2p(d-2)) for p in (2, 2(d-1)/(d-2)).
BetaExponent beta_exponent(double p, int dim);
/// lambda = 1 / (2 beta (d-1) + 1).
double lambda_exponent(double beta, int dim);

struct ExponentTargets {
  int dim = 2;
  HardeningModel model = HardeningModel::kinematic;
  CutoffSide side = CutoffSide::neumann;
  double stress_normal = 0.0;
  double rate_time = 0.5;
  double rate_tangential = 0.5;
  double rate_normal = 0.0;
  double alpha = 0.0;
  double beta = 0.0;    // at p = 3
  double lambda = 0.0;  // lambda(beta(3, d), d)
  bool beta_degenerate = false;
};

/// Exponents near the given side of the boundary.
ExponentTargets target_exponents(int dim, HardeningModel model, CutoffSide side);

struct FitWindow {
  double space_min_cells = 2.0;    // h >= space_min_cells / n
  double space_max = 0.25;
  double time_min_frames = 2.0;    // h >= time_min_frames * frame spacing
  double time_max_fraction = 0.25; // h <= fraction * T

  bool operator==(const FitWindow&) const = default;
};

struct InterpolationRow {
  int multiple = 0;
  double h = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
  bool flagged = false;  // rhs == 0
};

struct InterpolationReport {
  double delta = 0.0;
  std::vector<InterpolationRow> rows;
  double spread = 0.0;  // max/min ratio over unflagged rows
  bool degenerate = false;
};

/// R(h) = LHS/RHS with LHS = int int phi^2 (|D_d^h sigma_dot|^2 +
/// |D_d^h xi_dot|^2) and RHS = (int int phi^2 (|D_d^h sigma|^2 +
/// |D_d^h xi|^2))^(1/3 - delta), over the normal ladder.
InterpolationReport interpolation_check(const FieldHistory& history,
                                        std::span<const double> weight,
                                        double delta,
                                        const std::vector<int>& multiples = {});

struct StripReport {
  int multiple = 0;
  double h = 0.0;
  std::vector<double> times;
  std::vector<double> normal_gradient;  // int_{x_d<h} |phi D_d u_dot|^2
  std::vector<double> sym_gradient;     // int_{x_d<h} |phi E(u_dot)|^2
  double normal_gradient_integral = 0.0;
  double sym_gradient_integral = 0.0;
};

StripReport strip_gradient_norm(const FieldHistory& history, int multiple,
                                const Cutoff& cutoff);

struct ProbeSpec {
  AxisSpec axis;
  ProbeField field = ProbeField::stress;
  Aggregation mode = Aggregation::sup;
  bool weighted = true;

  bool operator==(const ProbeSpec&) const = default;
};

/// The probe set used when a scenario does not list its own.
std::vector<ProbeSpec> default_probes(int dim);

struct ProbeConfig {
  std::vector<ProbeSpec> probes;
  double eps0 = 0.1;
  double h0 = 0.25;
  CutoffSide side = CutoffSide::neumann;
  FitWindow window;
  double delta = 0.05;
};

struct ProbeFit {
  std::optional<FitResult> fit;  // empty when the window has too few rows
  std::string error;
  double target = 0.0;
  double target_minus_delta = 0.0;
  double margin = 0.0;  // s_hat - target_minus_delta
};

struct ProbeReport {
  std::vector<SeminormTable> tables;
  std::vector<ProbeFit> fits;  // parallel to tables
  ExponentTargets targets;
  std::optional<InterpolationReport> interpolation;
  std::vector<StripReport> strips;
};

/// Target exponent of a probe and whether the -delta loss applies.
std::pair<double, bool> probe_target(const ProbeSpec& spec,
                                     const ExponentTargets& targets);

ProbeReport run_probes(const FieldHistory& history, const ProbeConfig& config);

struct SweepEntry {
  double mu = 0.0;
  bool ok = false;
  std::string error;
  EnergyReport energy;
  ProbeReport probes;
  NewtonSummary newton;
};

struct UniformityReport {
  std::vector<SweepEntry> runs;
  /// max/min over successful runs; 1 when all values coincide (incl. zeros).
  std::vector<std::pair<std::string, double>> spreads;
  /// Log-log slope of the L^2 overshoot at T and of the L^inf overshoot
  /// (max over time) against mu; empty with < 2 positive values.
  std::optional<double> overshoot_l2_slope;
  std::optional<double> overshoot_max_slope;
};

double spread_ratio(std::span<const double> values);

using SweepCallback = std::function<void(const SweepEntry&, const FieldHistory*)>;

/// Runs the scenario for each mu (descending) and gathers diagnostics.
UniformityReport mu_sweep(const Scenario& scenario, const std::vector<double>& mus,
                          const ProbeConfig& config,
                          const SweepCallback& on_run = {});

}  // namespace hardening
