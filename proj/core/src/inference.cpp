#include "jumpcons/inference.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Cholesky>

#include "jumpcons/errors.hpp"
#include "jumpcons/rng.hpp"

namespace jumpcons {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMinBeta = 1e-4;
constexpr double kMaxBeta = 0.99;
constexpr double kMinScale = 1e-3;
constexpr double kMaxScale = 10.0;

double logit(double p) { return std::log(p) - std::log1p(-p); }
double sigmoid(double u) { return 1.0 / (1.0 + std::exp(-u)); }

/// Unconstrained coordinates of the mixture shape: K - 1 logit sticks, K d
/// logit centres, K log precisions.
std::vector<double> mixture_coordinates(const LevyMixture& levy) {
  const auto& atoms = levy.atoms();
  const double r = levy.domain().r;
  const auto v = stick_proportions(atoms);
  std::vector<double> u;
  for (std::size_t i = 0; i + 1 < atoms.size(); ++i) u.push_back(logit(v[i]));
  for (const auto& a : atoms) {
    for (Eigen::Index c = 0; c < a.center.size(); ++c) u.push_back(logit((a.center(c) + r) / (2.0 * r)));
  }
  for (const auto& a : atoms) u.push_back(std::log(a.tau));
  return u;
}

LevyMixture mixture_from_coordinates(const LevyMixture& like, std::span<const double> u) {
  const std::size_t k = like.atoms().size();
  const int d = like.domain().d;
  const double r = like.domain().r;
  std::vector<LevyAtom> atoms(k);
  double remaining = 1.0;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double v = i + 1 < k ? sigmoid(u[pos++]) : 1.0;
    atoms[i].weight = i + 1 < k ? v * remaining : remaining;
    remaining -= atoms[i].weight;
  }
  for (std::size_t i = 0; i < k; ++i) {
    atoms[i].center = Vector(d);
    for (int c = 0; c < d; ++c) atoms[i].center(c) = -r + 2.0 * r * sigmoid(u[pos++]);
  }
  for (std::size_t i = 0; i < k; ++i) atoms[i].tau = std::exp(u[pos++]);
  return LevyMixture(like.domain(), like.lambda(), like.mass_tol(), std::move(atoms));
}

/// Log target in the coordinates of the block: the pCN move is prior
/// reversible so only the remaining terms enter.
double block_target(Block block, const PosteriorScore& score, const LevyMixture& levy) {
  if (block == Block::kDrift) return score.total - score.drift_prior;
  return score.total + levy_log_jacobian(levy);
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n == 0) return 0.0;
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

LevyMixture initial_mixture(const DomainSpec& domain, const DPMixConfig& cfg, std::size_t k) {
  std::vector<LevyAtom> atoms(k);
  const double cell = 2.0 * domain.r / static_cast<double>(k);
  for (std::size_t i = 0; i < k; ++i) {
    atoms[i].weight = 1.0 / static_cast<double>(k);
    atoms[i].center = Vector::Constant(domain.d, -domain.r + (static_cast<double>(i) + 0.5) * cell);
    atoms[i].tau = std::exp(cfg.tau_log_mean);
  }
  atoms.back().weight = 1.0 - (static_cast<double>(k) - 1.0) / static_cast<double>(k);
  return LevyMixture(domain, cfg.lambda_shape / cfg.lambda_rate, cfg.mass_tol, std::move(atoms));
}

struct ScoreFn {
  const ObservationSeries& data;
  const PriorConfigs& priors;
  const EstimatorConfig& estimator;
  bool prior_only;

  PosteriorScore operator()(const JumpDiffusionModel& model, std::uint64_t aux) const {
    return log_posterior_unnorm(model, data, priors, estimator, aux, !prior_only);
  }
};

}  // namespace

const char* block_name(Block block) {
  switch (block) {
    case Block::kDrift:
      return "drift";
    case Block::kMixture:
      return "mixture";
    case Block::kIntensity:
      return "intensity";
  }
  return "unknown";
}

void ProposalConfig::validate() const {
  if (!(beta_pcn > 0.0 && beta_pcn < 1.0)) throw InputError("beta_pcn must lie in (0, 1)");
  if (!(stick_step > 0.0 && center_step > 0.0 && log_tau_step > 0.0 && log_lambda_step > 0.0)) {
    throw InputError("random-walk steps must be positive");
  }
  if (atoms < 1) throw InputError("atoms must be at least 1");
  if (!(target_acceptance > 0.0 && target_acceptance < 1.0)) throw InputError("target_acceptance must lie in (0, 1)");
  if (adapt_interval < 1) throw InputError("adapt_interval must be at least 1");
}

double levy_log_jacobian(const LevyMixture& levy) {
  const auto& atoms = levy.atoms();
  const double r = levy.domain().r;
  const auto v = stick_proportions(atoms);
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < atoms.size(); ++i) sum += std::log(v[i]) + std::log1p(-v[i]);
  for (const auto& a : atoms) {
    for (Eigen::Index c = 0; c < a.center.size(); ++c) {
      const double s = (a.center(c) + r) / (2.0 * r);
      sum += std::log(2.0 * r) + std::log(s) + std::log1p(-s);
    }
    sum += std::log(a.tau);
  }
  return sum + std::log(levy.lambda());
}

JumpDiffusionModel Chain::model(std::size_t i) const {
  DriftSpec drift = drift_template;
  const auto& s = samples.at(i);
  std::copy(s.coefficients.begin(), s.coefficients.end(), drift.coefficients().begin());
  return JumpDiffusionModel(std::move(drift), s.levy);
}

DriftSpec regression_drift(const ObservationSeries& data, const GaussianPriorConfig& cfg) {
  const auto var = drift_prior_variances(cfg);
  DriftSpec drift(cfg.domain, cfg.s, cfg.k, cfg.level);
  const int d = cfg.domain.d;
  const std::size_t p = drift.basis_size();
  if (data.n() == 0) return drift;

  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < data.n(); ++i) {
    if (sup_norm(data.observations[i]) < cfg.domain.r) rows.push_back(i);
  }
  if (rows.empty()) return drift;

  Matrix phi(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(p));
  Matrix y(static_cast<Eigen::Index>(rows.size()), d);
  for (std::size_t m = 0; m < rows.size(); ++m) {
    const auto i = rows[m];
    for (std::size_t f = 0; f < p; ++f) {
      phi(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(f)) =
          basis_value(multi_index(f, d, cfg.level), data.observations[i], cfg.domain.r);
    }
    y.row(static_cast<Eigen::Index>(m)) =
        ((data.observations[i + 1] - data.observations[i]) / data.delta).transpose();
  }

  // Increments divided by delta have noise variance 1 / delta.
  const double noise_precision = data.delta;
  std::vector<char> keep(rows.size(), 1);
  Matrix coef(static_cast<Eigen::Index>(p), d);
  for (int pass = 0; pass < 2; ++pass) {
    Matrix precision = Matrix::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    Matrix rhs = Matrix::Zero(static_cast<Eigen::Index>(p), d);
    for (std::size_t m = 0; m < rows.size(); ++m) {
      if (!keep[m]) continue;
      const auto row = phi.row(static_cast<Eigen::Index>(m));
      precision.noalias() += noise_precision * row.transpose() * row;
      rhs.noalias() += noise_precision * row.transpose() * y.row(static_cast<Eigen::Index>(m));
    }
    for (std::size_t f = 0; f < p; ++f) precision(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(f)) += 1.0 / var[f];
    coef = precision.ldlt().solve(rhs);
    if (pass == 0) {
      for (std::size_t m = 0; m < rows.size(); ++m) {
        const Vector res = y.row(static_cast<Eigen::Index>(m)).transpose() -
                           coef.transpose() * phi.row(static_cast<Eigen::Index>(m)).transpose();
        keep[m] = res.norm() * std::sqrt(data.delta) <= 3.0 ? 1 : 0;
      }
    }
  }
  auto out = drift.coefficients();
  for (int c = 0; c < d; ++c) {
    for (std::size_t f = 0; f < p; ++f) out[static_cast<std::size_t>(c) * p + f] = coef(static_cast<Eigen::Index>(f), c);
  }
  return drift;
}

double log_acceptance_ratio(Block block, const JumpDiffusionModel& from, const JumpDiffusionModel& to,
                            const ObservationSeries& data, const PriorConfigs& priors,
                            const EstimatorConfig& estimator, std::uint64_t aux_seed, bool prior_only) {
  const ScoreFn score{data, priors, estimator, prior_only};
  return block_target(block, score(to, aux_seed), to.levy()) - block_target(block, score(from, aux_seed), from.levy());
}

Chain run_chain(const ObservationSeries& data, const PriorConfigs& priors, const EstimatorConfig& estimator,
                const ProposalConfig& proposal, std::size_t iterations, std::size_t warmup, std::uint64_t seed,
                const std::optional<JumpDiffusionModel>& init) {
  if (!(iterations > warmup)) throw InputError("iterations must exceed warmup");
  priors.drift.validate();
  priors.levy.validate();
  proposal.validate();
  if (!proposal.prior_only) estimator.validate();

  const DomainSpec& domain = priors.drift.domain;
  JumpDiffusionModel current = init ? *init
                                    : JumpDiffusionModel(proposal.prior_only ? DriftSpec(domain, priors.drift.s,
                                                                                          priors.drift.k,
                                                                                          priors.drift.level)
                                                                             : regression_drift(data, priors.drift),
                                                         initial_mixture(domain, priors.levy, proposal.atoms));
  if (!(current.domain() == domain)) throw InputError("initial model does not match the prior domain");
  if (current.levy().lambda() <= 0.0) throw InputError("initial intensity must be positive");
  current = JumpDiffusionModel(current.drift(), close_last_stick(current.levy()));

  const ScoreFn score_of{data, priors, estimator, proposal.prior_only};
  const auto prior_var = drift_prior_variances(priors.drift);
  Engine rng = make_engine(seed, {2});
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> uniform;

  std::uint64_t aux = derive_seed(seed, {3});
  PosteriorScore score = score_of(current, aux);
  if (!std::isfinite(score.total)) throw NumericError("initial state has a non-finite posterior score");

  Chain chain{current.drift(), {}, {}, 0, iterations, warmup, seed, false, {}};
  chain.samples.reserve(iterations - warmup);

  double beta = proposal.beta_pcn;
  double mixture_scale = 1.0;
  double lambda_scale = 1.0;
  std::array<std::size_t, kBlockCount> proposed{};
  std::array<std::size_t, kBlockCount> accepted{};
  std::array<std::size_t, kBlockCount> window_proposed{};
  std::array<std::size_t, kBlockCount> window_accepted{};
  std::size_t adapt_round = 0;

  auto attempt = [&](Block block, const JumpDiffusionModel& candidate, bool in_warmup) {
    const auto b = static_cast<std::size_t>(block);
    ++window_proposed[b];
    if (!in_warmup) ++proposed[b];
    const PosteriorScore cand_score = score_of(candidate, aux);
    const double log_alpha =
        block_target(block, cand_score, candidate.levy()) - block_target(block, score, current.levy());
    if (std::isfinite(cand_score.total) && !std::isnan(log_alpha) && std::log(uniform(rng)) < log_alpha) {
      current = candidate;
      score = cand_score;
      ++window_accepted[b];
      if (!in_warmup) ++accepted[b];
    }
  };

  const std::size_t mixture_dims = mixture_coordinates(current.levy()).size();
  const std::size_t k = current.levy().atoms().size();
  std::vector<double> steps;
  for (std::size_t i = 0; i + 1 < k; ++i) steps.push_back(proposal.stick_step);
  for (std::size_t i = 0; i < k * static_cast<std::size_t>(domain.d); ++i) steps.push_back(proposal.center_step);
  for (std::size_t i = 0; i < k; ++i) steps.push_back(proposal.log_tau_step);

  for (std::size_t it = 0; it < iterations; ++it) {
    const bool in_warmup = it < warmup;

    {
      DriftSpec drift = current.drift();
      auto a = drift.coefficients();
      const double keep = std::sqrt(1.0 - beta * beta);
      for (std::size_t i = 0; i < a.size(); ++i) a[i] = keep * a[i] + beta * std::sqrt(prior_var[i]) * gauss(rng);
      attempt(Block::kDrift, JumpDiffusionModel(std::move(drift), current.levy()), in_warmup);
    }

    // The two Levy blocks alternate: each keeps the posterior invariant, so
    // the periodic scan does too, at two score evaluations per iteration.
    if (it % 2 == 0 && mixture_dims > 0) {
      auto u = mixture_coordinates(current.levy());
      for (std::size_t i = 0; i < u.size(); ++i) u[i] += mixture_scale * steps[i] * gauss(rng);
      bool finite = true;
      for (double x : u) finite = finite && std::isfinite(x);
      if (finite) {
        attempt(Block::kMixture, JumpDiffusionModel(current.drift(), mixture_from_coordinates(current.levy(), u)),
                in_warmup);
      }
    }

    if (it % 2 == 1 || mixture_dims == 0) {
      const double lambda = current.levy().lambda() * std::exp(lambda_scale * proposal.log_lambda_step * gauss(rng));
      attempt(Block::kIntensity, JumpDiffusionModel(current.drift(), current.levy().with_lambda(lambda)), in_warmup);
    }

    if (!proposal.prior_only && uniform(rng) < estimator.refresh_prob) {
      const std::uint64_t fresh = derive_seed(seed, {4, it});
      const PosteriorScore fresh_score = score_of(current, fresh);
      if (std::isfinite(fresh_score.total) && std::log(uniform(rng)) < fresh_score.total - score.total) {
        aux = fresh;
        score = fresh_score;
        ++chain.aux_refreshes;
      }
    }

    if (in_warmup && proposal.adapt && (it + 1) % proposal.adapt_interval == 0) {
      ++adapt_round;
      const double gain = 4.0 / std::sqrt(static_cast<double>(adapt_round));
      auto rate = [&](Block block) {
        const auto b = static_cast<std::size_t>(block);
        return window_proposed[b] ? static_cast<double>(window_accepted[b]) / static_cast<double>(window_proposed[b])
                                  : proposal.target_acceptance;
      };
      beta = std::clamp(sigmoid(logit(beta) + gain * (rate(Block::kDrift) - proposal.target_acceptance)), kMinBeta,
                        kMaxBeta);
      mixture_scale = std::clamp(mixture_scale * std::exp(gain * (rate(Block::kMixture) - proposal.target_acceptance)),
                                 kMinScale, kMaxScale);
      lambda_scale = std::clamp(lambda_scale * std::exp(gain * (rate(Block::kIntensity) - proposal.target_acceptance)),
                                kMinScale, kMaxScale);
      window_proposed.fill(0);
      window_accepted.fill(0);
    }

    if (!in_warmup) {
      const auto coeffs = current.drift().coefficients();
      chain.samples.push_back({std::vector<double>(coeffs.begin(), coeffs.end()), current.levy(), score.total});
    }
  }

  const std::array<double, kBlockCount> scales{beta, mixture_scale, lambda_scale};
  for (std::size_t b = 0; b < kBlockCount; ++b) {
    BlockStats stats;
    stats.name = block_name(static_cast<Block>(b));
    stats.proposed = proposed[b];
    stats.accepted = accepted[b];
    stats.acceptance_rate = proposed[b] ? static_cast<double>(accepted[b]) / static_cast<double>(proposed[b]) : 0.0;
    stats.final_scale = scales[b];
    if (proposed[b] > 0 && accepted[b] == 0) {
      chain.tuning_failure = true;
      chain.diagnostics.push_back(stats.name + " block accepted no proposals after warmup");
    } else if (!proposal.prior_only && proposed[b] > 0 && accepted[b] == proposed[b]) {
      chain.tuning_failure = true;
      chain.diagnostics.push_back(stats.name + " block accepted every proposal after warmup");
    }
    chain.blocks.push_back(std::move(stats));
  }
  return chain;
}

std::vector<double> contraction_distances(const Chain& chain, const JumpDiffusionModel& truth,
                                          const WeakMetricConfig& metric, std::size_t thin) {
  if (thin < 1) throw InputError("thin must be at least 1");
  if (metric.test_functions.empty()) throw InputError("no test functions");
  const auto truth_table =
      semigroup_table(truth, metric.test_functions, metric.rho, metric.delta, metric.replicates, metric.dt, metric.seed);
  std::vector<double> out;
  for (std::size_t i = 0; i < chain.samples.size(); i += thin) {
    const auto table = semigroup_table(chain.model(i), metric.test_functions, metric.rho, metric.delta,
                                       metric.replicates, metric.dt, metric.seed);
    const auto dist = table_distances(table, truth_table, metric.rho);
    out.push_back(*std::max_element(dist.begin(), dist.end()));
  }
  return out;
}

ContractionSummary summarize_distances(std::span<const double> distances, double epsilon, std::uint64_t seed) {
  if (distances.size() < 20) throw InputError("at least 20 thinned samples are required");
  ContractionSummary out;
  out.samples = distances.size();
  std::size_t outside = 0;
  for (double v : distances) outside += v > epsilon ? 1 : 0;
  out.mass_outside = static_cast<double>(outside) / static_cast<double>(distances.size());
  out.median_distance = median_of({distances.begin(), distances.end()});

  constexpr int kResamples = 200;
  Engine rng = make_engine(seed, {5});
  std::uniform_int_distribution<std::size_t> pick(0, distances.size() - 1);
  std::vector<double> medians(kResamples);
  std::vector<double> resample(distances.size());
  for (auto& m : medians) {
    for (auto& v : resample) v = distances[pick(rng)];
    m = median_of(resample);
  }
  double mean = 0.0;
  for (double m : medians) mean += m;
  mean /= kResamples;
  double var = 0.0;
  for (double m : medians) var += (m - mean) * (m - mean);
  out.median_stderr = std::sqrt(var / (kResamples - 1));
  return out;
}

ContractionSummary contraction_metric(const Chain& chain, const JumpDiffusionModel& truth,
                                      const WeakMetricConfig& metric, double epsilon, std::size_t thin) {
  const auto dist = contraction_distances(chain, truth, metric, thin);
  return summarize_distances(dist, epsilon, metric.seed);
}

}  // namespace jumpcons
