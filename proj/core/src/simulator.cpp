#include "jumpcons/simulator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>

#include <boost/random/normal_distribution.hpp>

#include "jumpcons/errors.hpp"
#include "jumpcons/parallel.hpp"
#include "jumpcons/quadrature.hpp"
#include "jumpcons/rng.hpp"

namespace jumpcons {

Dynamics::Dynamics(JumpDiffusionModel model)
    : model_(std::move(model)),
      jump_rate_(model_.levy().total_mass()),
      compensator_(model_.levy().small_jump_mean()) {}

ObservationSeries ObservationSeries::prefix(std::size_t n) const {
  if (n > this->n()) throw InputError("prefix longer than the series");
  ObservationSeries out;
  out.delta = delta;
  out.observations.assign(observations.begin(), observations.begin() + static_cast<std::ptrdiff_t>(n + 1));
  return out;
}

namespace {

constexpr std::size_t kMaxCoords = 8;

int step_count(double duration, double dt) {
  return std::max(1, static_cast<int>(std::ceil(duration / dt - 1e-9)));
}

void check_step(double dt, double horizon) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InputError("dt must be positive");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw InputError("horizon must be positive");
  if (dt >= horizon) throw InputError("dt must be smaller than the horizon");
}

void check_start(const Dynamics& dyn, const Vector& x0) {
  if (x0.size() != dyn.dim()) throw InputError("initial state has the wrong dimension");
  if (!x0.allFinite()) throw InputError("initial state is not finite");
}

/// Step-by-step integrator carrying its noise streams so that successive
/// advance() calls continue one path.
class PathIntegrator {
 public:
  PathIntegrator(const Dynamics& dyn, Vector x0, std::uint64_t seed, std::uint64_t stream)
      : dyn_(dyn),
        x_(std::move(x0)),
        drift_(dyn.dim()),
        increment_(dyn.dim()),
        remaining_(dyn.dim()),
        normals_(dyn.dim()),
        jump_(dyn.dim()),
        brownian_(make_engine(seed, {stream, 0})),
        jumps_(make_engine(seed, {stream, 1})) {
    schedule_next_jump();
  }

  /// Restarts at x0 on fresh streams, keeping the buffers.
  void reset(const Vector& x0, std::uint64_t seed, std::uint64_t stream) {
    x_ = x0;
    brownian_ = make_engine(seed, {stream, 0});
    jumps_ = make_engine(seed, {stream, 1});
    gauss_.reset();
    gauss_jump_.reset();
    t_ = 0.0;
    last_jump_ = 0.0;
    steps_ = 0;
    schedule_next_jump();
  }

  const Vector& state() const { return x_; }
  double time() const { return t_; }
  std::size_t steps() const { return steps_; }

  /// Observer signature: on_step(t_start, h, dW, x_after, jump_or_null).
  template <class Observer>
  void advance(double duration, double dt, Observer&& on_step) {
    const int steps = step_count(duration, dt);
    const double h = duration / steps;
    const double t_start = t_;
    for (int i = 0; i < steps; ++i) {
      const double t_end = (i + 1 == steps) ? t_start + duration : t_start + (i + 1) * h;
      grid_step(t_end, on_step);
    }
  }

  void advance(double duration, double dt) {
    advance(duration, dt, [](double, double, const Vector&, const Vector&, const Vector*) {});
  }

 private:
  template <class Observer>
  void grid_step(double t_end, Observer& on_step) {
    const int d = dyn_.dim();
    double s = t_;
    double span = t_end - s;
    for (int c = 0; c < d; ++c) normals_(c) = gauss_(brownian_);
    remaining_ = std::sqrt(span) * normals_;

    while (next_jump_ <= t_end) {
      const double tau = next_jump_;
      const double left = tau - s;
      const double right = t_end - tau;
      const double total = t_end - s;
      std::array<double, kMaxCoords> u{};
      const double u_atom = uniform_(jumps_);
      for (int c = 0; c < d; ++c) u[static_cast<std::size_t>(c)] = uniform_(jumps_);
      for (int c = 0; c < d; ++c) normals_(c) = gauss_jump_(jumps_);
      // Brownian bridge value at tau given the increment over [s, t_end].
      const double w = total > 0.0 ? left / total : 0.0;
      const double sd = total > 0.0 ? std::sqrt(std::max(0.0, left * right / total)) : 0.0;
      increment_ = w * remaining_ + sd * normals_;
      remaining_ -= increment_;

      dyn_.effective_drift(x_, drift_);
      x_ += drift_ * left + increment_;
      jump_ = dyn_.model().levy().sample_jump(u_atom, std::span<const double>(u.data(), d));
      x_ += jump_;
      check_finite(tau);
      on_step(s, left, increment_, x_, &jump_);
      s = tau;
      schedule_next_jump();
    }

    dyn_.effective_drift(x_, drift_);
    x_ += drift_ * (t_end - s) + remaining_;
    check_finite(t_end);
    on_step(s, t_end - s, remaining_, x_, static_cast<const Vector*>(nullptr));
    t_ = t_end;
    ++steps_;
  }

  void schedule_next_jump() {
    // Interarrival times are measured from the previous jump.
    const double rate = dyn_.jump_rate();
    const double e = -std::log1p(-uniform_(jumps_));
    next_jump_ = rate > 0.0 ? last_jump_ + e / rate : std::numeric_limits<double>::infinity();
    last_jump_ = next_jump_;
  }

  void check_finite(double t) const {
    if (!x_.allFinite()) throw NumericBlowup(steps_, t);
  }

  const Dynamics& dyn_;
  Vector x_;
  Vector drift_;
  Vector increment_;
  Vector remaining_;
  Vector normals_;
  Vector jump_;
  Engine brownian_;
  Engine jumps_;
  boost::random::normal_distribution<double> gauss_;
  boost::random::normal_distribution<double> gauss_jump_;
  std::uniform_real_distribution<double> uniform_;
  double t_ = 0.0;
  double next_jump_ = 0.0;
  double last_jump_ = 0.0;
  std::size_t steps_ = 0;
};

void check_dim(const Dynamics& dyn) {
  if (static_cast<std::size_t>(dyn.dim()) > kMaxCoords) throw InputError("dimension too large for the simulator");
}

}  // namespace

PathSkeleton simulate_path(const JumpDiffusionModel& model, const Vector& x0, double horizon, double dt,
                           std::uint64_t seed) {
  check_step(dt, horizon);
  const Dynamics dyn(model);
  check_dim(dyn);
  check_start(dyn, x0);

  PathSkeleton path;
  path.compensator = dyn.compensator();
  path.dt = dt;
  path.seed = seed;
  path.times.push_back(0.0);
  path.states.push_back(x0);
  path.jump_flag.push_back(0);

  PathIntegrator integrator(dyn, x0, seed, 0);
  // A jump observer call ends a sub-step at the jump time; the state it
  // reports already includes the jump.
  integrator.advance(horizon, dt, [&](double t0, double h, const Vector& dw, const Vector& x, const Vector* jump) {
    path.times.push_back(t0 + h);
    path.states.push_back(x);
    path.brownian_increments.push_back(dw);
    path.jump_flag.push_back(jump ? 1 : 0);
    if (jump) path.jumps.push_back(JumpEvent{t0 + h, *jump, path.states.size() - 1});
  });
  return path;
}

Vector simulate_endpoint(const Dynamics& dyn, const Vector& x0, double horizon, double dt, std::uint64_t seed,
                         std::uint64_t stream) {
  check_step(dt, horizon);
  check_dim(dyn);
  check_start(dyn, x0);
  PathIntegrator integrator(dyn, x0, seed, stream);
  integrator.advance(horizon, dt);
  return integrator.state();
}

std::vector<Vector> simulate_endpoints(const Dynamics& dyn, const Vector& x0, double horizon, double dt,
                                       std::size_t replicates, std::uint64_t seed) {
  check_step(dt, horizon);
  check_dim(dyn);
  check_start(dyn, x0);
  std::vector<Vector> out(replicates);
  parallel_for(replicates, [&](std::size_t k) {
    PathIntegrator integrator(dyn, x0, seed, k);
    integrator.advance(horizon, dt);
    out[k] = integrator.state();
  });
  return out;
}

void simulate_endpoints_serial(const Dynamics& dyn, const Vector& x0, double horizon, double dt, std::uint64_t seed,
                               std::vector<Vector>& out) {
  check_step(dt, horizon);
  check_dim(dyn);
  check_start(dyn, x0);
  PathIntegrator integrator(dyn, x0, seed, 0);
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (k > 0) integrator.reset(x0, seed, k);
    integrator.advance(horizon, dt);
    out[k] = integrator.state();
  }
}

double recommended_burn_in(const JumpDiffusionModel& model) {
  return 10.0 * model.domain().outer_radius() / model.drift().k();
}

StationarySamples sample_stationary(const JumpDiffusionModel& model, double burn_in, double thin, std::size_t count,
                                    double dt, std::uint64_t seed) {
  if (!(burn_in >= 0.0)) throw InputError("burn_in must be non-negative");
  if (!(thin > 0.0)) throw InputError("thin must be positive");
  if (!(dt > 0.0) || dt > thin) throw InputError("dt must be positive and no larger than thin");
  const Dynamics dyn(model);
  check_dim(dyn);

  StationarySamples out;
  const double heuristic = recommended_burn_in(model);
  if (burn_in < heuristic) {
    out.warning = "burn_in " + std::to_string(burn_in) + " is below the recommended " + std::to_string(heuristic);
  }
  PathIntegrator integrator(dyn, Vector::Zero(model.dim()), seed, 0);
  if (burn_in > 0.0) integrator.advance(burn_in, dt);
  out.points.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    integrator.advance(thin, dt);
    out.points.push_back(integrator.state());
  }
  return out;
}

ObservationSeries sample_observations(const JumpDiffusionModel& model, std::size_t n, double delta, double dt,
                                      std::uint64_t seed, const ObservationInit& init) {
  check_step(dt, delta);
  const Dynamics dyn(model);
  check_dim(dyn);

  Vector x0 = Vector::Zero(model.dim());
  double burn_in = 0.0;
  if (const auto* point = std::get_if<Vector>(&init)) {
    check_start(dyn, *point);
    x0 = *point;
  } else {
    burn_in = std::get<StationaryInit>(init).burn_in;
    if (burn_in <= 0.0) burn_in = recommended_burn_in(model);
  }

  ObservationSeries series;
  series.delta = delta;
  series.observations.reserve(n + 1);
  PathIntegrator integrator(dyn, x0, seed, 0);
  if (burn_in > 0.0) integrator.advance(burn_in, dt);
  series.observations.push_back(integrator.state());
  for (std::size_t i = 0; i < n; ++i) {
    integrator.advance(delta, dt);
    series.observations.push_back(integrator.state());
  }
  return series;
}

SemigroupEstimate estimate_semigroup(const JumpDiffusionModel& model, const TestField& f, const Vector& x,
                                     double delta, std::size_t replicates, double dt, std::uint64_t seed,
                                     const SemigroupOptions& options) {
  if (replicates < 2) throw InputError("at least two replicates are required");
  check_step(dt, delta);
  if (options.martingale_control_variate && !f.gradient) {
    throw InputError("control variate needs the test-function gradient");
  }
  const Dynamics dyn(model);
  check_dim(dyn);
  check_start(dyn, x);

  const double fx = f(x);
  double jump_compensator = 0.0;
  const bool jump_cv = options.jump_control_variate && dyn.jump_rate() > 0.0;
  if (jump_cv) {
    if (options.quadrature_order < 2) throw InputError("quadrature order must be >= 2");
    const auto& levy = model.levy();
    const auto grid = jump_domain_grid(options.quadrature_order, dyn.dim(), model.domain().r);
    for (Eigen::Index n = 0; n < grid.weights.size(); ++n) {
      const Vector z = grid.points.col(n);
      const double dens = levy.density(z);
      if (dens != 0.0) jump_compensator += grid.weights(n) * dens * (f(x + z) - fx);
    }
    jump_compensator *= delta;
  }

  std::vector<double> values(replicates);
  parallel_for(replicates, [&](std::size_t k) {
    PathIntegrator integrator(dyn, x, seed, k);
    if (options.martingale_control_variate || jump_cv) {
      double martingale = 0.0;
      double jumps = 0.0;
      Vector before = x;
      integrator.advance(delta, dt, [&](double, double, const Vector& dw, const Vector& after, const Vector* jump) {
        if (options.martingale_control_variate) martingale += f.gradient(before).dot(dw);
        if (jump_cv && jump) jumps += f(x + *jump) - fx;
        before = after;
      });
      values[k] = f(integrator.state()) - martingale - (jump_cv ? jumps - jump_compensator : 0.0);
    } else {
      integrator.advance(delta, dt);
      values[k] = f(integrator.state());
    }
  });

  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(replicates);
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(replicates - 1);
  return {mean, std::sqrt(var / static_cast<double>(replicates))};
}

std::vector<RhoPoint> default_rho(const DomainSpec& domain) {
  const int d = domain.d;
  const int m = std::max(2, static_cast<int>(std::lround(std::pow(64.0, 1.0 / d))));
  std::size_t total = 1;
  for (int c = 0; c < d; ++c) total *= static_cast<std::size_t>(m);
  const double mass = 1.0 / static_cast<double>(total);
  const double cell = 2.0 * domain.r / m;

  std::vector<RhoPoint> rho;
  rho.reserve(total);
  for (std::size_t flat = 0; flat < total; ++flat) {
    Vector p(d);
    std::size_t rest = flat;
    for (int c = 0; c < d; ++c) {
      const auto i = rest % static_cast<std::size_t>(m);
      rest /= static_cast<std::size_t>(m);
      p(c) = -domain.r + (static_cast<double>(i) + 0.5) * cell;
    }
    rho.push_back({std::move(p), mass});
  }
  return rho;
}

namespace {

/// f values at the endpoints of every replicate started at every rho point;
/// result is [point][replicate].
std::vector<std::vector<double>> endpoint_values(const Dynamics& dyn, const TestField& f,
                                                 std::span<const RhoPoint> rho, double delta,
                                                 std::size_t replicates, double dt, std::uint64_t seed) {
  std::vector<std::vector<double>> values(rho.size(), std::vector<double>(replicates));
  parallel_for(rho.size() * replicates, [&](std::size_t idx) {
    const std::size_t i = idx / replicates;
    const std::size_t k = idx % replicates;
    PathIntegrator integrator(dyn, rho[i].point, derive_seed(seed, {i}), k);
    integrator.advance(delta, dt);
    values[i][k] = f(integrator.state());
  });
  return values;
}

void check_rho(const Dynamics& dyn, std::span<const RhoPoint> rho) {
  if (rho.empty()) throw InputError("rho has no points");
  for (const auto& p : rho) {
    check_start(dyn, p.point);
    if (!(p.mass >= 0.0)) throw InputError("rho masses must be non-negative");
  }
}

}  // namespace

WeakDistance weak_distance(const JumpDiffusionModel& a, const JumpDiffusionModel& b, const TestField& f,
                           std::span<const RhoPoint> rho, double delta, std::size_t replicates, double dt,
                           std::uint64_t seed) {
  if (replicates < 2) throw InputError("at least two replicates are required");
  if (!(a.domain() == b.domain())) throw InputError("models live on different domains");
  check_step(dt, delta);
  const Dynamics da(a);
  const Dynamics db(b);
  check_dim(da);
  check_rho(da, rho);

  const auto va = endpoint_values(da, f, rho, delta, replicates, dt, seed);
  const auto vb = endpoint_values(db, f, rho, delta, replicates, dt, seed);

  WeakDistance out;
  double variance = 0.0;
  const auto n = static_cast<double>(replicates);
  for (std::size_t i = 0; i < rho.size(); ++i) {
    double mean = 0.0;
    for (std::size_t k = 0; k < replicates; ++k) mean += va[i][k] - vb[i][k];
    mean /= n;
    double var = 0.0;
    for (std::size_t k = 0; k < replicates; ++k) {
      const double dev = va[i][k] - vb[i][k] - mean;
      var += dev * dev;
    }
    var /= n - 1.0;
    out.value += rho[i].mass * std::abs(mean);
    variance += rho[i].mass * rho[i].mass * var / n;
  }
  out.stderr = std::sqrt(variance);
  return out;
}

std::vector<std::vector<double>> semigroup_table(const JumpDiffusionModel& model, std::span<const TestField> fs,
                                                 std::span<const RhoPoint> rho, double delta, std::size_t replicates,
                                                 double dt, std::uint64_t seed) {
  if (replicates < 2) throw InputError("at least two replicates are required");
  check_step(dt, delta);
  const Dynamics dyn(model);
  check_dim(dyn);
  check_rho(dyn, rho);

  std::vector<std::vector<double>> sums(rho.size() * replicates, std::vector<double>(fs.size()));
  parallel_for(rho.size() * replicates, [&](std::size_t idx) {
    const std::size_t i = idx / replicates;
    const std::size_t k = idx % replicates;
    PathIntegrator integrator(dyn, rho[i].point, derive_seed(seed, {i}), k);
    integrator.advance(delta, dt);
    for (std::size_t j = 0; j < fs.size(); ++j) sums[idx][j] = fs[j](integrator.state());
  });

  std::vector<std::vector<double>> table(rho.size(), std::vector<double>(fs.size(), 0.0));
  for (std::size_t i = 0; i < rho.size(); ++i) {
    for (std::size_t k = 0; k < replicates; ++k) {
      for (std::size_t j = 0; j < fs.size(); ++j) table[i][j] += sums[i * replicates + k][j];
    }
    for (auto& v : table[i]) v /= static_cast<double>(replicates);
  }
  return table;
}

std::vector<double> table_distances(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b,
                                    std::span<const RhoPoint> rho) {
  if (a.size() != rho.size() || b.size() != rho.size()) throw InputError("table size does not match rho");
  const std::size_t nf = a.empty() ? 0 : a.front().size();
  std::vector<double> out(nf, 0.0);
  for (std::size_t i = 0; i < rho.size(); ++i) {
    if (a[i].size() != nf || b[i].size() != nf) throw InputError("tables have different function counts");
    for (std::size_t j = 0; j < nf; ++j) out[j] += rho[i].mass * std::abs(a[i][j] - b[i][j]);
  }
  return out;
}

double equicontinuity_modulus(std::span<const JumpDiffusionModel> models, const TestField& f,
                              std::span<const Vector> probe_points, double gamma, double delta,
                              std::size_t replicates, double dt, std::uint64_t seed) {
  if (!(gamma > 0.0)) throw InputError("gamma must be positive");
  if (replicates < 2) throw InputError("at least two replicates are required");
  check_step(dt, delta);

  double modulus = 0.0;
  for (const auto& model : models) {
    const Dynamics dyn(model);
    check_dim(dyn);
    std::vector<double> values(probe_points.size());
    for (std::size_t p = 0; p < probe_points.size(); ++p) {
      check_start(dyn, probe_points[p]);
      const auto ends = simulate_endpoints(dyn, probe_points[p], delta, dt, replicates, seed);
      double mean = 0.0;
      for (const auto& e : ends) mean += f(e);
      values[p] = mean / static_cast<double>(replicates);
    }
    for (std::size_t p = 0; p < probe_points.size(); ++p) {
      for (std::size_t q = p + 1; q < probe_points.size(); ++q) {
        if ((probe_points[p] - probe_points[q]).norm() < gamma) {
          modulus = std::max(modulus, std::abs(values[p] - values[q]));
        }
      }
    }
  }
  return modulus;
}

}  // namespace jumpcons
