#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "hdgfwi/adjoint.hpp"
#include "hdgfwi/dataset.hpp"

namespace hdgfwi {

/// Either a fixed uniform order or the wavelength rule of assign_orders.
struct OrderSelection {
  std::optional<int> uniform_order;
  OrderPolicy policy;
};

Discretization make_discretization(const Mesh& mesh, const Model& model, double frequency_hz,
                                   const OrderSelection& orders);

/// 1/2 sum over frequencies and sources of ||F(m) - d||^2.
double misfit(const Mesh& mesh, const BoundarySpec& boundary, const Model& model, const DataSet& data,
              const OrderSelection& orders, const FactorizationOptions& factorization = {});

/// Forward measurements for every (frequency, source), plus complex white
/// Gaussian noise at the requested per-trace SNR. No SNR or an infinite
/// one gives exact data.
DataSet synthesize_data(const Mesh& mesh, const BoundarySpec& boundary, const Model& truth,
                        const AcquisitionSetup& setup, const std::vector<double>& frequencies,
                        double laplace_shift, const OrderSelection& orders, std::optional<double> snr_db,
                        std::uint64_t seed, const FactorizationOptions& factorization = {});

/// Adds noise in place: per trace, variance ||s||^2 / (n 10^{snr/10}).
void add_noise(DataSet& data, double snr_db, std::uint64_t seed);

/// Polak-Ribiere-plus nonlinear conjugate gradient directions.
class NlcgDirection {
 public:
  /// s = -g + beta s_prev, beta = max(0, <g, g - g_prev> / ||g_prev||^2);
  /// falls back to -g when s is not a descent direction.
  RVector next(const RVector& gradient);
  void restart() { has_previous_ = false; }
  double last_beta() const noexcept { return beta_; }
  bool restarted() const noexcept { return restarted_; }

 private:
  bool has_previous_ = false;
  RVector previous_gradient_;
  RVector previous_direction_;
  double beta_ = 0.0;
  bool restarted_ = false;
};

struct LineSearchOptions {
  double c1 = 1e-4;
  int max_trials = 20;
};

struct LineSearchResult {
  bool accepted = false;
  double step = 0.0;
  double misfit = 0.0;
  int trials = 0;
  RVector point;  ///< accepted (projected) point
};

/// Backtracking Armijo search over steps rho0 2^{-j}, j = 0..max_trials-1.
/// Trial points are projected onto [lower, upper] before evaluation.
LineSearchResult armijo_line_search(const RVector& x, double f0, const RVector& gradient,
                                    const RVector& direction, double rho0,
                                    const std::function<double(const RVector&)>& objective, double lower,
                                    double upper, const LineSearchOptions& options = {});

struct InversionSettings {
  int iterations_per_frequency = 30;
  double c_min = 0.0;
  double c_max = std::numeric_limits<double>::infinity();
  /// Initial trial step so that max |rho0 s| equals this fraction of max c.
  double initial_step_fraction = 0.05;
  LineSearchOptions line_search;
  /// Stop a block when the misfit falls below this fraction of the data energy.
  double misfit_tolerance = 1e-16;
  int checkpoint_every = 0;  ///< 0: checkpoint only at the end of each frequency block
  Parameter parameter = Parameter::kWaveSpeed;
};

struct IterationRecord {
  int frequency_index = 0;
  double frequency = 0.0;
  int iteration = 0;
  double misfit = 0.0;
  double step = 0.0;
  double gradient_norm = 0.0;
  int trials = 0;
  std::string status;  ///< initial, accepted, rejected, converged, stalled
};

struct InversionResult {
  Model model;
  std::vector<IterationRecord> log;
  std::vector<double> wall_seconds;  ///< one entry per log record
};

using CheckpointFn = std::function<void(const Model& model, int frequency_index, int iteration)>;

/// Sequential frequency continuation; at each frequency, NLCG with Armijo
/// line search on the wave speed. One factorization per (model, frequency).
InversionResult run_inversion(const Mesh& mesh, const BoundarySpec& boundary, const Model& initial,
                              const DataSet& data, const OrderSelection& orders,
                              const InversionSettings& settings, const CheckpointFn& checkpoint = {},
                              const FactorizationOptions& factorization = {});

struct GradientCheckRow {
  double step = 0.0;            ///< relative FD step
  double relative_error = 0.0;  ///< ||g_fd - g_adj|| / ||g_adj|| over the checked dofs
};

struct GradientCheckReport {
  std::vector<int> dofs;
  RVector adjoint;                      ///< adjoint gradient at the checked dofs
  std::vector<RVector> finite_difference;  ///< one per step
  std::vector<GradientCheckRow> rows;
  double min_relative_error = 0.0;
};

/// Central finite differences of the misfit against the adjoint gradient.
/// The discretization is fixed from `model` at every frequency; steps are
/// relative to each checked coefficient.
GradientCheckReport gradient_check(const Mesh& mesh, const BoundarySpec& boundary, const Model& model,
                                   const DataSet& data, const OrderSelection& orders, Parameter parameter,
                                   const std::vector<int>& dofs, const std::vector<double>& steps,
                                   const FactorizationOptions& factorization = {});

/// Order-0 or order-r model on `to` from the nearest `from` cell centroid.
Model transfer_model(const Mesh& from, const Model& model, const Mesh& to);

}  // namespace hdgfwi
