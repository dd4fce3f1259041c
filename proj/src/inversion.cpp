#include "hdgfwi/inversion.hpp"

#include <algorithm>
#include <chrono>
#include <memory>
#include <cmath>
#include <numeric>
#include <random>

#include <spdlog/spdlog.h>

#include "hdgfwi/basis.hpp"

namespace hdgfwi {

void DataSet::validate() const {
  if (frequencies.empty()) throw ConfigError("data set has no frequencies");
  if (receivers.empty()) throw ConfigError("data set has no receivers");
  if (values.size() != frequencies.size()) {
    throw ConfigError("data set has " + std::to_string(values.size()) + " frequency blocks, header lists " +
                      std::to_string(frequencies.size()));
  }
  for (std::size_t f = 0; f < values.size(); ++f) {
    if (values[f].size() != sources.size()) {
      throw ConfigError("data block " + std::to_string(f) + " has " + std::to_string(values[f].size()) +
                        " sources, header lists " + std::to_string(sources.size()));
    }
    for (std::size_t s = 0; s < values[f].size(); ++s) {
      if (static_cast<std::size_t>(values[f][s].size()) != receivers.size()) {
        throw ConfigError("data trace (" + std::to_string(f) + ", " + std::to_string(s) + ") has " +
                          std::to_string(values[f][s].size()) + " receivers, header lists " +
                          std::to_string(receivers.size()));
      }
      if (!values[f][s].allFinite()) {
        throw ConfigError("data trace (" + std::to_string(f) + ", " + std::to_string(s) + ") is not finite");
      }
    }
  }
}

double DataSet::energy() const {
  double e = 0.0;
  for (const auto& block : values) {
    for (const CVector& trace : block) e += trace.squaredNorm();
  }
  return e;
}

Discretization make_discretization(const Mesh& mesh, const Model& model, double frequency_hz,
                                   const OrderSelection& orders) {
  if (orders.uniform_order) return Discretization::uniform(mesh, *orders.uniform_order);
  std::vector<double> c(mesh.num_cells());
  for (std::size_t e = 0; e < c.size(); ++e) c[e] = model.mean_wave_speed(e);
  return Discretization(mesh, assign_orders(mesh, c, frequency_hz, orders.policy).cell_orders);
}

namespace {

std::vector<std::size_t> ascending_frequencies(const std::vector<double>& freqs) {
  std::vector<std::size_t> idx(freqs.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return freqs[a] < freqs[b]; });
  return idx;
}

std::vector<Excitation> excitations_of(const DataSet& data) {
  AcquisitionSetup setup;
  setup.sources = data.sources;
  return point_excitations(setup);
}

}  // namespace

double misfit(const Mesh& mesh, const BoundarySpec& boundary, const Model& model, const DataSet& data,
              const OrderSelection& orders, const FactorizationOptions& factorization) {
  data.validate();
  const std::vector<Excitation> sources = excitations_of(data);
  double total = 0.0;
  for (std::size_t f = 0; f < data.frequencies.size(); ++f) {
    if (data.values[f].empty()) continue;
    ForwardSolver solver(mesh, make_discretization(mesh, model, data.frequencies[f], orders), boundary,
                         factorization);
    solver.set_state(model, complex_frequency(data.frequencies[f], data.laplace_shift));
    const RestrictionOperator restriction(mesh, solver.discretization(), data.receivers);
    total += misfit_and_gradient(solver, restriction, sources, data.values[f], Parameter::kWaveSpeed, false).misfit;
  }
  return total;
}

DataSet synthesize_data(const Mesh& mesh, const BoundarySpec& boundary, const Model& truth,
                        const AcquisitionSetup& setup, const std::vector<double>& frequencies,
                        double laplace_shift, const OrderSelection& orders, std::optional<double> snr_db,
                        std::uint64_t seed, const FactorizationOptions& factorization) {
  if (frequencies.empty()) throw ConfigError("synthesize: frequency list is empty");
  if (setup.receivers.empty()) throw ConfigError("synthesize: no receivers");
  DataSet data;
  data.frequencies = frequencies;
  data.laplace_shift = laplace_shift;
  data.sources = setup.sources;
  data.receivers = setup.receivers;
  const std::vector<Excitation> sources = point_excitations(setup);
  for (double f : frequencies) {
    ForwardSolver solver(mesh, make_discretization(mesh, truth, f, orders), boundary, factorization);
    solver.set_state(truth, complex_frequency(f, laplace_shift));
    const RestrictionOperator restriction(mesh, solver.discretization(), setup.receivers);
    std::vector<CVector> block;
    for (const FieldSolution& u : solver.solve_all(sources)) block.push_back(restriction.apply(u));
    data.values.push_back(std::move(block));
  }
  if (snr_db && std::isfinite(*snr_db)) {
    add_noise(data, *snr_db, seed);
    data.snr_db = snr_db;
    data.seed = seed;
  }
  return data;
}

void add_noise(DataSet& data, double snr_db, std::uint64_t seed) {
  if (!std::isfinite(snr_db)) return;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double ratio = std::pow(10.0, snr_db / 10.0);
  for (auto& block : data.values) {
    for (CVector& trace : block) {
      if (trace.size() == 0) continue;
      const double variance = trace.squaredNorm() / (static_cast<double>(trace.size()) * ratio);
      const double sd = std::sqrt(variance / 2.0);
      for (Eigen::Index k = 0; k < trace.size(); ++k) {
        const double re = normal(rng);
        const double im = normal(rng);
        trace[k] += Complex(sd * re, sd * im);
      }
    }
  }
}

RVector NlcgDirection::next(const RVector& gradient) {
  restarted_ = false;
  beta_ = 0.0;
  RVector s = -gradient;
  if (has_previous_) {
    const double denom = previous_gradient_.squaredNorm();
    if (denom > 0.0) beta_ = std::max(0.0, gradient.dot(gradient - previous_gradient_) / denom);
    s += beta_ * previous_direction_;
    if (s.dot(-gradient) <= 0.0) {
      s = -gradient;
      beta_ = 0.0;
      restarted_ = true;
    }
  }
  previous_gradient_ = gradient;
  previous_direction_ = s;
  has_previous_ = true;
  return s;
}

LineSearchResult armijo_line_search(const RVector& x, double f0, const RVector& gradient,
                                    const RVector& direction, double rho0,
                                    const std::function<double(const RVector&)>& objective, double lower,
                                    double upper, const LineSearchOptions& options) {
  LineSearchResult out;
  out.point = x;
  out.misfit = f0;
  const double slope = gradient.dot(direction);
  if (!(slope < 0.0) || !(rho0 > 0.0)) return out;
  double step = rho0;
  for (int j = 0; j < options.max_trials; ++j, step *= 0.5) {
    RVector trial = x + step * direction;
    for (Eigen::Index k = 0; k < trial.size(); ++k) trial[k] = std::clamp(trial[k], lower, upper);
    ++out.trials;
    const double f = objective(trial);
    if (std::isfinite(f) && f <= f0 + options.c1 * step * slope) {
      out.accepted = true;
      out.step = step;
      out.misfit = f;
      out.point = std::move(trial);
      return out;
    }
  }
  return out;
}

InversionResult run_inversion(const Mesh& mesh, const BoundarySpec& boundary, const Model& initial,
                              const DataSet& data, const OrderSelection& orders,
                              const InversionSettings& settings, const CheckpointFn& checkpoint,
                              const FactorizationOptions& factorization) {
  data.validate();
  if (settings.parameter != Parameter::kWaveSpeed) throw ConfigError("inversion updates the wave speed only");
  if (settings.iterations_per_frequency < 0) throw ConfigError("iterations per frequency must be >= 0");
  if (!(settings.c_min < settings.c_max)) throw ConfigError("wave-speed bounds are empty");
  InversionResult result{initial, {}, {}};
  Model& m = result.model;
  m.validate();
  for (double& c : m.wave_speed()) c = std::clamp(c, settings.c_min, settings.c_max);
  const std::vector<Excitation> sources = excitations_of(data);
  using Clock = std::chrono::steady_clock;
  auto t_last = Clock::now();
  auto record = [&](IterationRecord rec) {
    const auto now = Clock::now();
    result.wall_seconds.push_back(std::chrono::duration<double>(now - t_last).count());
    t_last = now;
    spdlog::info("freq {} Hz iter {} misfit {:.6e} step {:.3e} |g| {:.3e} trials {} {}", rec.frequency,
                 rec.iteration, rec.misfit, rec.step, rec.gradient_norm, rec.trials, rec.status);
    result.log.push_back(std::move(rec));
  };

  for (std::size_t fi : ascending_frequencies(data.frequencies)) {
    const double freq = data.frequencies[fi];
    const Complex sigma = complex_frequency(freq, data.laplace_shift);
    const std::vector<CVector>& block_data = data.values[fi];
    double block_energy = 0.0;
    for (const CVector& d : block_data) block_energy += d.squaredNorm();
    ForwardSolver solver(mesh, make_discretization(mesh, m, freq, orders), boundary, factorization);
    const RestrictionOperator restriction(mesh, solver.discretization(), data.receivers);
    solver.set_state(m, sigma);
    MisfitGradient mg = misfit_and_gradient(solver, restriction, sources, block_data, settings.parameter);
    const int findex = static_cast<int>(fi);
    record({findex, freq, 0, mg.misfit, 0.0, mg.gradient.norm(), 0, "initial"});

    NlcgDirection directions;
    bool failed_once = false;
    for (int it = 1; it <= settings.iterations_per_frequency; ++it) {
      const double gnorm = mg.gradient.norm();
      if (gnorm == 0.0 || mg.misfit <= settings.misfit_tolerance * block_energy) {
        record({findex, freq, it, mg.misfit, 0.0, gnorm, 0, "converged"});
        break;
      }
      const RVector s = directions.next(mg.gradient);
      const double smax = s.cwiseAbs().maxCoeff();
      const double cmax = *std::max_element(m.wave_speed().begin(), m.wave_speed().end());
      const double rho0 = settings.initial_step_fraction * cmax / smax;
      const RVector x = Eigen::Map<const RVector>(m.wave_speed().data(), static_cast<Eigen::Index>(m.num_dofs()));
      auto objective = [&](const RVector& trial) {
        Model t = m;
        std::copy(trial.data(), trial.data() + trial.size(), t.wave_speed().begin());
        solver.set_state(t, sigma);
        return misfit_and_gradient(solver, restriction, sources, block_data, settings.parameter, false).misfit;
      };
      const LineSearchResult ls = armijo_line_search(x, mg.misfit, mg.gradient, s, rho0, objective,
                                                     settings.c_min, settings.c_max, settings.line_search);
      if (ls.accepted) {
        std::copy(ls.point.data(), ls.point.data() + ls.point.size(), m.wave_speed().begin());
        // The solver already holds the factorization of the accepted model.
        mg = misfit_and_gradient(solver, restriction, sources, block_data, settings.parameter);
        record({findex, freq, it, mg.misfit, ls.step, mg.gradient.norm(), ls.trials, "accepted"});
        failed_once = false;
        if (settings.checkpoint_every > 0 && it % settings.checkpoint_every == 0 && checkpoint) {
          checkpoint(m, findex, it);
        }
        continue;
      }
      if (ls.trials > 0) solver.set_state(m, sigma);
      const bool stalled = failed_once || directions.restarted() || directions.last_beta() == 0.0;
      record({findex, freq, it, mg.misfit, 0.0, gnorm, ls.trials, stalled ? "stalled" : "rejected"});
      if (stalled) break;
      failed_once = true;
      directions.restart();
    }
    if (checkpoint) checkpoint(m, findex, -1);
  }
  return result;
}

GradientCheckReport gradient_check(const Mesh& mesh, const BoundarySpec& boundary, const Model& model,
                                   const DataSet& data, const OrderSelection& orders, Parameter parameter,
                                   const std::vector<int>& dofs, const std::vector<double>& steps,
                                   const FactorizationOptions& factorization) {
  data.validate();
  if (dofs.empty()) throw ConfigError("gradcheck: no model dofs selected");
  if (steps.empty()) throw ConfigError("gradcheck: no steps");
  if (parameter == Parameter::kInverseBulkModulus && model.order() != 0) {
    throw ConfigError("gradcheck: the inverse bulk modulus needs a piecewise-constant model");
  }
  for (int k : dofs) {
    if (k < 0 || static_cast<std::size_t>(k) >= model.num_dofs()) {
      throw ConfigError("gradcheck: model dof " + std::to_string(k) + " out of range");
    }
  }
  const std::vector<Excitation> sources = excitations_of(data);
  std::vector<std::unique_ptr<ForwardSolver>> solvers;
  std::vector<RestrictionOperator> restrictions;
  for (double f : data.frequencies) {
    solvers.push_back(std::make_unique<ForwardSolver>(mesh, make_discretization(mesh, model, f, orders), boundary,
                                                      factorization));
    restrictions.emplace_back(mesh, solvers.back()->discretization(), data.receivers);
  }
  auto evaluate = [&](const Model& m, bool with_gradient) {
    MisfitGradient total{0.0, RVector::Zero(static_cast<Eigen::Index>(m.num_dofs()))};
    for (std::size_t f = 0; f < data.frequencies.size(); ++f) {
      solvers[f]->set_state(m, complex_frequency(data.frequencies[f], data.laplace_shift));
      const MisfitGradient mg =
          misfit_and_gradient(*solvers[f], restrictions[f], sources, data.values[f], parameter, with_gradient);
      total.misfit += mg.misfit;
      if (with_gradient) total.gradient += mg.gradient;
    }
    return total;
  };
  // Parameter value of a dof and the model with that dof set to v.
  auto value = [&](const Model& m, int k) {
    const double c = m.wave_speed()[k];
    return parameter == Parameter::kWaveSpeed ? c : 1.0 / (m.density()[k] * c * c);
  };
  auto with_value = [&](int k, double v) {
    Model t = model;
    t.wave_speed()[k] = parameter == Parameter::kWaveSpeed ? v : 1.0 / std::sqrt(t.density()[k] * v);
    return t;
  };

  GradientCheckReport report;
  report.dofs = dofs;
  const RVector full = evaluate(model, true).gradient;
  report.adjoint.resize(static_cast<Eigen::Index>(dofs.size()));
  for (std::size_t i = 0; i < dofs.size(); ++i) report.adjoint[i] = full[dofs[i]];
  report.min_relative_error = std::numeric_limits<double>::infinity();
  for (double step : steps) {
    RVector fd(static_cast<Eigen::Index>(dofs.size()));
    for (std::size_t i = 0; i < dofs.size(); ++i) {
      const double x = value(model, dofs[i]);
      const double h = step * std::abs(x);
      const double jp = evaluate(with_value(dofs[i], x + h), false).misfit;
      const double jm = evaluate(with_value(dofs[i], x - h), false).misfit;
      fd[i] = (jp - jm) / (2.0 * h);
    }
    const double denom = report.adjoint.norm();
    const double err = denom > 0.0 ? (fd - report.adjoint).norm() / denom : (fd - report.adjoint).norm();
    report.rows.push_back({step, err});
    report.finite_difference.push_back(std::move(fd));
    report.min_relative_error = std::min(report.min_relative_error, err);
  }
  return report;
}

Model transfer_model(const Mesh& from, const Model& model, const Mesh& to) {
  if (model.num_cells() != from.num_cells()) throw StructuralError("transfer: model does not match source mesh");
  Model out(to.dim(), to.num_cells(), model.order(), 1.0, 1.0);
  std::vector<Point> centroids(from.num_cells());
  for (std::size_t e = 0; e < from.num_cells(); ++e) centroids[e] = from.cell_centroid(e);
  const int nm = model.dofs_per_cell();
  const std::vector<Point>& nodes = cached_basis(to.dim(), model.order()).nodes();
  for (std::size_t e = 0; e < to.num_cells(); ++e) {
    const Point x = to.cell_centroid(e);
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < centroids.size(); ++k) {
      const double d = (centroids[k] - x).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    for (int k = 0; k < nm; ++k) {
      const Point ref = from.to_reference(best, to.to_physical(e, nodes[k]));
      out.wave_speed()[e * nm + k] = model.wave_speed_at(best, ref);
      out.density()[e * nm + k] = model.density_at(best, ref);
    }
  }
  return out;
}

}  // namespace hdgfwi
