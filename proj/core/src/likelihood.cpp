#include "jumpcons/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "jumpcons/errors.hpp"
#include "jumpcons/parallel.hpp"
#include "jumpcons/quadrature.hpp"
#include "jumpcons/rng.hpp"

namespace jumpcons {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_pair(const JumpDiffusionModel& a, const JumpDiffusionModel& b) {
  if (!(a.domain() == b.domain())) throw InputError("models live on different domains");
}

double clip_ratio(double ratio, std::size_t& clipped) {
  if (ratio < kRatioFloor) {
    ++clipped;
    return kRatioFloor;
  }
  if (ratio > kRatioCeiling) {
    ++clipped;
    return kRatioCeiling;
  }
  return ratio;
}

struct MeanStderr {
  double mean = 0.0;
  double stderr = 0.0;
};

MeanStderr mean_stderr(const std::vector<double>& v) {
  MeanStderr out;
  if (v.empty()) return out;
  for (double x : v) out.mean += x;
  out.mean /= static_cast<double>(v.size());
  if (v.size() < 2) return out;
  double var = 0.0;
  for (double x : v) var += (x - out.mean) * (x - out.mean);
  var /= static_cast<double>(v.size() - 1);
  out.stderr = std::sqrt(var / static_cast<double>(v.size()));
  return out;
}

/// Root mean square of |b0 - b| over the samples.
double drift_l2(const DriftSpec& b0, const DriftSpec& b, std::span<const Vector> samples, const Vector& offset) {
  const int d = b0.dim();
  Vector v0(d);
  Vector v1(d);
  double sum = 0.0;
  for (const auto& x : samples) {
    b0.eval(x, v0);
    b.eval(x, v1);
    sum += (v0 - v1 - offset).squaredNorm();
  }
  return std::sqrt(sum / static_cast<double>(samples.size()));
}

void check_samples(const JumpDiffusionModel& model, std::span<const Vector> samples) {
  if (samples.empty()) throw InputError("stationary sample list is empty");
  for (const auto& x : samples) {
    if (x.size() != model.dim() || !x.allFinite()) throw InputError("invalid stationary sample");
  }
}

}  // namespace

GirsanovWeight log_girsanov_weight(const PathSkeleton& skeleton, const JumpDiffusionModel& reference,
                                   const JumpDiffusionModel& target, const QuadratureConfig& quad) {
  check_pair(reference, target);
  const int d = reference.dim();
  const std::size_t steps = skeleton.brownian_increments.size();
  if (skeleton.states.size() != steps + 1 || skeleton.times.size() != steps + 1 ||
      skeleton.jump_flag.size() != steps + 1) {
    throw InputError("inconsistent path skeleton");
  }
  if (!skeleton.states.empty() && skeleton.states.front().size() != d) {
    throw InputError("path dimension does not match the models");
  }

  GirsanovWeight out;
  const Vector offset = target.levy().small_jump_mean(quad.order) - reference.levy().small_jump_mean(quad.order);
  Vector bt(d);
  Vector br(d);
  Vector g(d);
  double continuous = 0.0;
  for (std::size_t i = 0; i < steps; ++i) {
    const double h = skeleton.times[i + 1] - skeleton.times[i];
    target.drift().eval(skeleton.states[i], bt);
    reference.drift().eval(skeleton.states[i], br);
    g = bt - br - offset;
    continuous += g.dot(skeleton.brownian_increments[i]) - 0.5 * g.squaredNorm() * h;
  }

  double jumps = 0.0;
  for (const auto& jump : skeleton.jumps) {
    const double num = target.levy().density(jump.size);
    const double den = reference.levy().density(jump.size);
    if (num == 0.0 || target.levy().lambda() == 0.0) {
      out.singular = true;
      out.log_weight = -kInf;
      return out;
    }
    jumps += std::log(clip_ratio(num / den, out.clipped));
  }
  const double horizon = skeleton.times.empty() ? 0.0 : skeleton.times.back() - skeleton.times.front();
  jumps -= horizon * (target.levy().total_mass() - reference.levy().total_mass());
  out.log_weight = continuous + jumps;
  return out;
}

KLBoundTerms kl_upper_bound(const JumpDiffusionModel& truth, const JumpDiffusionModel& candidate,
                            std::span<const Vector> stationary_samples, const QuadratureConfig& quad) {
  check_pair(truth, candidate);
  check_samples(truth, stationary_samples);
  if (quad.order < 2) throw InputError("quadrature order must be at least 2");
  const LevyMixture& nu0 = truth.levy();
  const LevyMixture& nu = candidate.levy();

  KLBoundTerms out;
  const bool zero0 = nu0.total_mass() == 0.0;
  const bool zero1 = nu.total_mass() == 0.0;
  if (zero0 != zero1) throw SupportViolation("one Levy measure vanishes while the other does not");

  Vector compensator = Vector::Zero(truth.dim());
  double jump = 0.0;
  if (!zero0) {
    const auto grid = jump_domain_grid(quad.order, truth.dim(), truth.domain().r);
    for (Eigen::Index n = 0; n < grid.weights.size(); ++n) {
      const Vector z = grid.points.col(n);
      const double p0 = nu0.density(z);
      const double p1 = nu.density(z);
      if (p0 == 0.0 || p1 == 0.0 || !std::isfinite(p0 / p1)) {
        throw SupportViolation("Levy density ratio is 0 or infinite on the quadrature grid");
      }
      const double rho = clip_ratio(p0 / p1, out.clipped);
      if (z.norm() <= 1.0) compensator += grid.weights(n) * (rho - 1.0) * p1 * z;
      jump += grid.weights(n) * (std::log(rho) - rho + 1.0) * p0;
    }
  }
  const double drift = drift_l2(truth.drift(), candidate.drift(), stationary_samples, Vector::Zero(truth.dim()));
  const double sum = drift + compensator.norm();
  out.drift_term = 0.5 * sum * sum;
  out.jump_term = std::abs(jump);
  out.total = out.drift_term + out.jump_term;
  return out;
}

double path_kl_rate(const JumpDiffusionModel& truth, const JumpDiffusionModel& candidate,
                    std::span<const Vector> stationary_samples, const QuadratureConfig& quad) {
  check_pair(truth, candidate);
  check_samples(truth, stationary_samples);
  if (quad.order < 2) throw InputError("quadrature order must be at least 2");
  const LevyMixture& nu0 = truth.levy();
  const LevyMixture& nu = candidate.levy();
  if (nu0.total_mass() > 0.0 && nu.total_mass() == 0.0) return kInf;

  const Vector offset = nu0.small_jump_mean(quad.order) - nu.small_jump_mean(quad.order);
  const double g = drift_l2(truth.drift(), candidate.drift(), stationary_samples, offset);
  double jump = 0.0;
  if (nu.total_mass() > 0.0) {
    const auto grid = jump_domain_grid(quad.order, truth.dim(), truth.domain().r);
    for (Eigen::Index n = 0; n < grid.weights.size(); ++n) {
      const Vector z = grid.points.col(n);
      const double p0 = nu0.density(z);
      const double p1 = nu.density(z);
      const double plogp = p0 > 0.0 ? p0 * std::log(p0 / p1) : 0.0;
      jump += grid.weights(n) * (plogp - p0 + p1);
    }
  }
  return 0.5 * g * g + jump;
}

GirsanovSummary girsanov_summary(const JumpDiffusionModel& reference, const JumpDiffusionModel& target,
                                 std::span<const Vector> starts, double delta, std::size_t paths, double dt,
                                 std::uint64_t seed, const QuadratureConfig& quad) {
  check_pair(reference, target);
  check_samples(reference, starts);
  if (paths < 2) throw InputError("at least two paths are required");

  std::vector<GirsanovWeight> weights(paths);
  parallel_for(paths, [&](std::size_t k) {
    const auto path = simulate_path(reference, starts[k % starts.size()], delta, dt, derive_seed(seed, {k}));
    weights[k] = log_girsanov_weight(path, reference, target, quad);
  });

  GirsanovSummary out;
  out.paths = paths;
  std::vector<double> logs;
  std::vector<double> values;
  logs.reserve(paths);
  values.reserve(paths);
  for (const auto& w : weights) {
    out.clipped += w.clipped;
    values.push_back(w.singular ? 0.0 : std::exp(w.log_weight));
    if (w.singular) {
      ++out.singular;
      continue;
    }
    logs.push_back(w.log_weight);
  }
  const auto l = mean_stderr(logs);
  const auto v = mean_stderr(values);
  out.mean_log_weight = out.singular > 0 ? -kInf : l.mean;
  out.stderr_log_weight = l.stderr;
  out.mean_weight = v.mean;
  out.stderr_weight = v.stderr;
  return out;
}

KLChainCheck validate_kl_chain(const JumpDiffusionModel& truth, const JumpDiffusionModel& candidate,
                               std::span<const Vector> stationary_samples, double delta, std::size_t paths,
                               double dt, std::uint64_t seed, const QuadratureConfig& quad) {
  const auto bound = kl_upper_bound(truth, candidate, stationary_samples, quad);
  const auto summary = girsanov_summary(truth, candidate, stationary_samples, delta, paths, dt, seed, quad);
  KLChainCheck out;
  out.mean_neg_log_weight = -summary.mean_log_weight;
  out.stderr = summary.stderr_log_weight;
  out.bound = delta * bound.total;
  out.exact = delta * path_kl_rate(truth, candidate, stationary_samples, quad);
  out.lower_holds = out.mean_neg_log_weight >= -3.0 * out.stderr;
  out.upper_holds = out.mean_neg_log_weight <= out.bound + 3.0 * out.stderr;
  return out;
}

DensityEstimate kernel_density(std::span<const Vector> endpoints, const Vector& y, std::optional<double> bandwidth) {
  if (endpoints.empty()) throw InputError("no endpoints for the density estimate");
  const Eigen::Index d = y.size();
  const auto count = static_cast<double>(endpoints.size());

  DensityEstimate out;
  out.bandwidth = Vector(d);
  if (bandwidth) {
    if (!(*bandwidth > 0.0)) throw InputError("bandwidth must be positive");
    out.bandwidth.setConstant(*bandwidth);
  } else {
    const double factor = std::pow(4.0 / ((static_cast<double>(d) + 2.0) * count), 1.0 / (static_cast<double>(d) + 4.0));
    for (Eigen::Index c = 0; c < d; ++c) {
      double mean = 0.0;
      for (const auto& e : endpoints) mean += e(c);
      mean /= count;
      double var = 0.0;
      for (const auto& e : endpoints) var += (e(c) - mean) * (e(c) - mean);
      var /= std::max(1.0, count - 1.0);
      out.bandwidth(c) = std::sqrt(var) * factor;
      if (!(out.bandwidth(c) > 0.0)) throw InputError("kernel bandwidth is zero");
    }
  }

  std::vector<double> logk(endpoints.size());
  double lmax = -kInf;
  for (std::size_t k = 0; k < endpoints.size(); ++k) {
    double s = 0.0;
    for (Eigen::Index c = 0; c < d; ++c) {
      const double u = (y(c) - endpoints[k](c)) / out.bandwidth(c);
      s -= 0.5 * u * u;
    }
    logk[k] = s;
    lmax = std::max(lmax, s);
  }
  double log_norm = 0.0;
  for (Eigen::Index c = 0; c < d; ++c) log_norm += std::log(out.bandwidth(c) * std::sqrt(2.0 * std::numbers::pi));

  double sum = 0.0;
  double sum2 = 0.0;
  for (double l : logk) {
    const double v = std::exp(l - lmax);
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / count;
  const double var = std::max(0.0, (sum2 / count - mean * mean) * count / std::max(1.0, count - 1.0));
  out.log_density = lmax + std::log(mean) - log_norm;
  const double scale = std::exp(lmax - log_norm);
  out.density = scale * mean;
  out.stderr = scale * std::sqrt(var / count);
  return out;
}

DensityEstimate estimate_transition_density(const JumpDiffusionModel& model, const Vector& x, const Vector& y,
                                            double delta, std::size_t replicates, std::optional<double> bandwidth,
                                            double dt, std::uint64_t seed) {
  if (replicates < kMinDensityReplicates) throw InputError("at least 100 replicates are required");
  if (y.size() != model.dim()) throw InputError("target point has the wrong dimension");
  const Dynamics dyn(model);
  const auto ends = simulate_endpoints(dyn, x, delta, dt, replicates, seed);
  return kernel_density(ends, y, bandwidth);
}

void EstimatorConfig::validate() const {
  if (replicates < kMinDensityReplicates) throw InputError("estimator replicates must be at least 100");
  if (!(dt > 0.0)) throw InputError("estimator dt must be positive");
  if (bandwidth && !(*bandwidth > 0.0)) throw InputError("estimator bandwidth must be positive");
  if (!(refresh_prob >= 0.0 && refresh_prob <= 1.0)) throw InputError("refresh_prob must lie in [0, 1]");
}

PosteriorScore log_posterior_unnorm(const JumpDiffusionModel& params, const ObservationSeries& data,
                                    const PriorConfigs& priors, const EstimatorConfig& estimator,
                                    std::uint64_t aux_seed, bool include_likelihood) {
  PosteriorScore out;
  out.drift_prior = drift_prior_logdensity(params.drift(), priors.drift);
  out.levy_prior = levy_prior_logdensity(params.levy(), priors.levy);
  if (include_likelihood && !data.observations.empty()) {
    estimator.validate();
    for (const auto& x : data.observations) {
      if (x.size() != params.dim() || !x.allFinite()) throw InputError("observation has the wrong dimension");
    }
    const Dynamics dyn(params);
    const std::size_t n = data.n();
    std::vector<double> logs(n);
    parallel_for(n, [&](std::size_t t) {
      const std::uint64_t seed = derive_seed(aux_seed, {t + 1});
      std::vector<Vector> ends(estimator.replicates, Vector(params.dim()));
      simulate_endpoints_serial(dyn, data.observations[t], data.delta, estimator.dt, seed, ends);
      logs[t] = kernel_density(ends, data.observations[t + 1], estimator.bandwidth).log_density;
    });
    for (double l : logs) {
      if (!std::isfinite(l)) ++out.zero_transitions;
      out.log_likelihood += l;
    }
    if (estimator.include_stationary_factor) {
      const auto stationary = sample_stationary(params, recommended_burn_in(params), 1.0, estimator.replicates,
                                                std::min(estimator.dt, 1.0), derive_seed(aux_seed, {0}));
      out.stationary = kernel_density(stationary.points, data.observations.front(), estimator.bandwidth).log_density;
    }
  }
  out.total = out.drift_prior + out.levy_prior + out.log_likelihood + out.stationary;
  if (std::isnan(out.total)) out.total = -kInf;
  return out;
}

}  // namespace jumpcons
