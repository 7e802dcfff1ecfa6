#include <doctest.h>

#include <cmath>

#include "jumpcons/errors.hpp"
#include "jumpcons/priors.hpp"
#include "jumpcons/simulator.hpp"
#include "oracles.hpp"

using namespace jumpcons;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

JumpDiffusionModel brownian(int d, double r = 50.0) {
  const DomainSpec domain(d, r);
  return JumpDiffusionModel(DriftSpec(domain, d + 3.0, 1.0, 1), LevyMixture::zero(domain));
}

JumpDiffusionModel prior_model(int d, double r, std::uint64_t seed, double lambda = -1.0) {
  const DomainSpec domain(d, r);
  auto levy = sample_levy_prior(DPMixConfig{}, domain, seed);
  if (lambda >= 0.0) levy = levy.with_lambda(lambda);
  return JumpDiffusionModel(sample_drift_prior(GaussianPriorConfig{domain, d + 3.0, 4, 1.0}, seed), levy);
}

std::vector<double> coordinate(const std::vector<Vector>& pts, int i) {
  std::vector<double> out;
  for (const auto& p : pts) out.push_back(p(i));
  return out;
}

}  // namespace

TEST_CASE("replay of a skeleton reproduces its states") {
  const auto model = prior_model(2, 2.0, 4, 3.0);
  const auto path = simulate_path(model, vec({0.5, -0.5}), 3.0, 0.01, 99);
  REQUIRE(path.jumps.size() > 0);
  Vector b(2);
  std::size_t jump_index = 0;
  for (std::size_t i = 0; i + 1 < path.states.size(); ++i) {
    model.drift().eval(path.states[i], b);
    Vector next = path.states[i] + (b - path.compensator) * (path.times[i + 1] - path.times[i]) +
                  path.brownian_increments[i];
    if (path.jump_flag[i + 1]) {
      REQUIRE(jump_index < path.jumps.size());
      CHECK(path.jumps[jump_index].state_index == i + 1);
      CHECK(path.jumps[jump_index].time == path.times[i + 1]);
      next += path.jumps[jump_index++].size;
    }
    CHECK((next - path.states[i + 1]).cwiseAbs().maxCoeff() <= 1e-12);
  }
  CHECK(jump_index == path.jumps.size());
}

TEST_CASE("Brownian increments have variance matching their step") {
  const auto path = simulate_path(brownian(1), vec({0.0}), 20.0, 1e-3, 5);
  std::vector<double> scaled;
  for (std::size_t i = 0; i < path.brownian_increments.size(); ++i) {
    scaled.push_back(path.brownian_increments[i](0) / std::sqrt(path.times[i + 1] - path.times[i]));
  }
  const double var = oracle::sample_variance(scaled);
  const double n = static_cast<double>(scaled.size());
  CHECK(std::abs(var - 1.0) < 3.0 * std::sqrt(2.0 / (n - 1.0)));
}

TEST_CASE("identical seeds give bit-identical skeletons") {
  const auto model = prior_model(1, 3.0, 7, 2.0);
  const auto a = simulate_path(model, vec({0.1}), 2.0, 0.005, 1234);
  const auto b = simulate_path(model, vec({0.1}), 2.0, 0.005, 1234);
  REQUIRE(a.states.size() == b.states.size());
  CHECK(a.times == b.times);
  for (std::size_t i = 0; i < a.states.size(); ++i) CHECK((a.states[i].array() == b.states[i].array()).all());
  const auto c = simulate_path(model, vec({0.1}), 2.0, 0.005, 1235);
  CHECK(c.states.back()(0) != a.states.back()(0));
}

TEST_CASE("pure Brownian endpoint variance is the horizon") {
  const Dynamics dyn(brownian(1));
  const auto ends = simulate_endpoints(dyn, vec({0.0}), 1.0, 1e-3, 10000, 11);
  const auto xs = coordinate(ends, 0);
  const double var = oracle::sample_variance(xs);
  CHECK(std::abs(var - 1.0) < 3.0 * std::sqrt(2.0 / 9999.0));
}

TEST_CASE("jump counts follow the Poisson rate") {
  const auto model = prior_model(1, 3.0, 2, 2.0);
  std::vector<double> counts;
  for (std::uint64_t s = 0; s < 2000; ++s) {
    counts.push_back(static_cast<double>(simulate_path(model, vec({0.0}), 5.0, 0.05, s).jumps.size()));
  }
  const auto ms = oracle::mean_se(counts);
  CHECK(std::abs(ms.mean - 10.0) < 3.0 * ms.se);
}

TEST_CASE("compound Poisson first moment") {
  // Jumps near m = 2 (|z| > 1, no compensation), core wide enough and k tiny so
  // the tail is never felt in practice.
  const DomainSpec domain(1, 6.0);
  const JumpDiffusionModel model(DriftSpec(domain, 4.0, 1e-9, 1),
                                 LevyMixture(domain, 1.0, 1e-3, {LevyAtom{1.0, vec({2.0}), 400.0}}));
  const auto ends = simulate_endpoints(Dynamics(model), vec({0.0}), 0.5, 1e-3, 20000, 3);
  const auto ms = oracle::mean_se(coordinate(ends, 0));
  CHECK(std::abs(ms.mean - 1.0 * 0.5 * 2.0) < 3.0 * ms.se);
}

TEST_CASE("simulate_path input errors") {
  const auto model = brownian(1);
  CHECK_THROWS_AS(simulate_path(model, vec({0.0}), 1.0, 1.0, 1), InputError);
  CHECK_THROWS_AS(simulate_path(model, vec({0.0}), 1.0, 0.0, 1), InputError);
  CHECK_THROWS_AS(simulate_path(model, vec({0.0, 1.0}), 1.0, 0.1, 1), InputError);
}

TEST_CASE("stationary samples of the zero drift are centred") {
  const DomainSpec domain(1, 2.0);
  const JumpDiffusionModel model(DriftSpec(domain, 4.0, 1.0, 2), LevyMixture::zero(domain));
  const auto st = sample_stationary(model, recommended_burn_in(model), 2.0, 2000, 0.01, 8);
  CHECK_FALSE(st.warning.has_value());
  const auto xs = coordinate(st.points, 0);
  const double ess = oracle::effective_sample_size(xs);
  const double sd = std::sqrt(oracle::sample_variance(xs));
  CHECK(std::abs(oracle::mean_se(xs).mean) < 3.0 * sd / std::sqrt(ess));
  CHECK(sample_stationary(model, 1.0, 1.0, 5, 0.01, 8).warning.has_value());
}

TEST_CASE("stationary samples from two seeds agree in distribution") {
  const auto model = prior_model(1, 2.0, 12, 0.0);
  const auto a = coordinate(sample_stationary(model, 30.0, 5.0, 600, 0.01, 1).points, 0);
  const auto b = coordinate(sample_stationary(model, 30.0, 5.0, 600, 0.01, 2).points, 0);
  CHECK(oracle::ks_statistic(a, b) < oracle::ks_critical_1pct(a.size(), b.size()));
}

TEST_CASE("time average along a path matches the ensemble average") {
  const auto model = prior_model(1, 2.0, 6, 0.5);
  const auto path = simulate_path(model, vec({0.0}), 4000.0, 0.01, 77);
  std::vector<double> time_samples;
  for (std::size_t i = 0; i < path.states.size(); i += 100) {
    if (path.times[i] >= 30.0) time_samples.push_back(path.states[i](0) * path.states[i](0));
  }
  const auto ensemble = sample_stationary(model, 30.0, 5.0, 800, 0.01, 78);
  std::vector<double> ens;
  for (const auto& p : ensemble.points) ens.push_back(p(0) * p(0));
  const double se_time = std::sqrt(oracle::sample_variance(time_samples) / oracle::effective_sample_size(time_samples));
  const double se_ens = std::sqrt(oracle::sample_variance(ens) / oracle::effective_sample_size(ens));
  const double diff = oracle::mean_se(time_samples).mean - oracle::mean_se(ens).mean;
  CHECK(std::abs(diff) < 3.0 * std::hypot(se_time, se_ens));
}

TEST_CASE("one observation equals the simulated endpoint") {
  const auto model = prior_model(2, 2.0, 3, 1.0);
  const Vector x0 = vec({0.2, 0.1});
  const auto series = sample_observations(model, 1, 0.5, 0.01, 42, x0);
  const auto path = simulate_path(model, x0, 0.5, 0.01, 42);
  CHECK(series.n() == 1);
  CHECK((series.observations[1].array() == path.states.back().array()).all());
}

TEST_CASE("observation series are nested in n") {
  const auto model = prior_model(1, 3.0, 3, 1.0);
  const auto small = sample_observations(model, 50, 0.5, 0.01, 5);
  const auto large = sample_observations(model, 200, 0.5, 0.01, 5);
  for (std::size_t i = 0; i <= 50; ++i) CHECK((small.observations[i].array() == large.observations[i].array()).all());
  const auto prefix = large.prefix(50);
  CHECK(prefix.n() == 50);
  CHECK((prefix.observations.back().array() == small.observations.back().array()).all());
}

TEST_CASE("observation autocorrelation decays with lag") {
  const auto model = prior_model(1, 2.0, 9, 0.5);
  const auto series = sample_observations(model, 4000, 0.5, 0.01, 13);
  const auto xs = coordinate(series.observations, 0);
  auto acf = [&](std::size_t lag) {
    const double m = oracle::mean_se(xs).mean;
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      den += (xs[i] - m) * (xs[i] - m);
      if (i + lag < xs.size()) num += (xs[i] - m) * (xs[i + lag] - m);
    }
    return num / den;
  };
  CHECK(acf(1) > acf(10));
}

TEST_CASE("stationary initial points match stationary samples") {
  const auto model = prior_model(1, 2.0, 15, 0.5);
  std::vector<double> starts;
  for (std::uint64_t s = 0; s < 400; ++s) starts.push_back(sample_observations(model, 1, 0.5, 0.01, s).observations[0](0));
  const auto ref = coordinate(sample_stationary(model, 30.0, 5.0, 400, 0.01, 1000).points, 0);
  CHECK(oracle::ks_statistic(starts, ref) < oracle::ks_critical_1pct(starts.size(), ref.size()));
}

TEST_CASE("semigroup of a constant is exact") {
  const auto model = prior_model(1, 2.0, 1, 1.0);
  const auto est = estimate_semigroup(model, test_fields::constant(1, 2.5), vec({0.3}), 0.5, 50, 0.01, 1);
  CHECK(est.mean == 2.5);
  CHECK(est.stderr == 0.0);
  CHECK_THROWS_AS(estimate_semigroup(model, test_fields::constant(1, 1.0), vec({0.3}), 0.5, 1, 0.01, 1), InputError);
}

TEST_CASE("driftless diffusion: identity is a martingale and x^2 gains delta") {
  const auto model = brownian(1);
  for (double x : {-1.0, 0.0, 0.7, 2.0}) {
    const auto m = estimate_semigroup(model, test_fields::coordinate(1, 0), vec({x}), 0.5, 5000, 1e-3, 3);
    CHECK(std::abs(m.mean - x) < 3.0 * m.stderr);
    const auto q = estimate_semigroup(model, test_fields::coordinate_squared(1, 0), vec({x}), 0.5, 5000, 1e-3, 4);
    CHECK(std::abs(q.mean - (x * x + 0.5)) < 3.0 * q.stderr);
  }
}

TEST_CASE("control variate preserves the mean and shrinks the error") {
  // Weak drift: the Brownian martingale dominates the fluctuation of f.
  const DomainSpec domain(1, 2.0);
  DriftSpec drift(domain, 4.0, 1.0, 2);
  drift.set_coefficient(0, {1}, 0.3);
  drift.set_coefficient(0, {2}, -0.2);
  const JumpDiffusionModel model(drift, LevyMixture::zero(domain));
  const auto f = test_fields::tanh_ridge(vec({1.0}), 0.2);
  const auto plain = estimate_semigroup(model, f, vec({0.5}), 0.5, 4000, 0.005, 6);
  SemigroupOptions opts;
  opts.martingale_control_variate = true;
  const auto cv = estimate_semigroup(model, f, vec({0.5}), 0.5, 4000, 0.005, 6, opts);
  CHECK(cv.stderr < plain.stderr);
  CHECK(std::abs(cv.mean - plain.mean) < 3.0 * plain.stderr);
}

TEST_CASE("jump control variate preserves the mean and shrinks the error") {
  const DomainSpec domain(1, 3.0);
  const JumpDiffusionModel model(DriftSpec(domain, 4.0, 1.0, 1),
                                 LevyMixture(domain, 2.0, 1e-3, {LevyAtom{1.0, vec({1.5}), 4.0}}));
  const auto f = test_fields::tanh_ridge(vec({1.0}), 0.0);
  const auto plain = estimate_semigroup(model, f, vec({0.2}), 0.2, 20000, 0.004, 12);
  SemigroupOptions opts;
  opts.jump_control_variate = true;
  const auto cv = estimate_semigroup(model, f, vec({0.2}), 0.2, 20000, 0.004, 12, opts);
  CHECK(cv.stderr < 0.85 * plain.stderr);
  CHECK(std::abs(cv.mean - plain.mean) < 3.0 * plain.stderr);
  opts.martingale_control_variate = true;
  const auto both = estimate_semigroup(model, f, vec({0.2}), 0.2, 20000, 0.004, 12, opts);
  CHECK(both.stderr < cv.stderr);
  CHECK(std::abs(both.mean - plain.mean) < 3.0 * plain.stderr);
  opts.quadrature_order = 1;
  CHECK_THROWS_AS(estimate_semigroup(model, f, vec({0.2}), 0.2, 100, 0.004, 12, opts), InputError);
}

TEST_CASE("weak distance is zero for equal models and symmetric") {
  const auto a = prior_model(1, 3.0, 1, 1.0);
  const auto b = prior_model(1, 3.0, 2, 1.0);
  const auto rho = default_rho(a.domain());
  const auto f = test_fields::tanh_ridge(vec({1.0}), 0.0);
  CHECK(weak_distance(a, a, f, rho, 0.5, 64, 0.01, 3).value == 0.0);
  const auto ab = weak_distance(a, b, f, rho, 0.5, 64, 0.01, 3);
  const auto ba = weak_distance(b, a, f, rho, 0.5, 64, 0.01, 3);
  CHECK(ab.value == ba.value);
  CHECK(ab.value > 0.0);
}

TEST_CASE("default rho is a probability on about 64 points in the core") {
  for (int d : {1, 2, 3}) {
    const DomainSpec domain(d, 2.0);
    const auto rho = default_rho(domain);
    double mass = 0.0;
    for (const auto& p : rho) {
      mass += p.mass;
      CHECK(domain.contains(p.point));
    }
    CHECK(mass == doctest::Approx(1.0));
    CHECK(rho.size() == static_cast<std::size_t>(std::pow(std::max(2L, std::lround(std::pow(64.0, 1.0 / d))), d)));
  }
}

TEST_CASE("a drift bump is detected and stable across seeds") {
  const DomainSpec domain(1, 3.0);
  const JumpDiffusionModel base(DriftSpec(domain, 4.0, 1.0, 1), LevyMixture::zero(domain));
  DriftSpec bumped(domain, 4.0, 1.0, 1);
  bumped.set_coefficient(0, {1}, 1.0);
  const JumpDiffusionModel bump(bumped, LevyMixture::zero(domain));
  const auto rho = default_rho(domain);
  const auto f = test_fields::tanh_ridge(vec({1.0}), 0.0);
  const double d1 = weak_distance(base, bump, f, rho, 0.5, 2000, 0.01, 1).value;
  const double d2 = weak_distance(base, bump, f, rho, 0.5, 2000, 0.01, 2).value;
  CHECK(d1 > 0.0);
  CHECK(std::abs(d1 - d2) < 0.1 * d1);
}

TEST_CASE("weak distance satisfies the triangle inequality up to noise") {
  const auto a = prior_model(1, 3.0, 11, 0.5);
  const auto b = prior_model(1, 3.0, 12, 0.5);
  const auto c = prior_model(1, 3.0, 13, 0.5);
  const auto rho = default_rho(a.domain());
  const auto f = test_fields::tanh_ridge(vec({1.0}), 0.0);
  const auto ab = weak_distance(a, b, f, rho, 0.5, 256, 0.01, 5);
  const auto bc = weak_distance(b, c, f, rho, 0.5, 256, 0.01, 5);
  const auto ac = weak_distance(a, c, f, rho, 0.5, 256, 0.01, 5);
  const double noise = std::sqrt(ab.stderr * ab.stderr + bc.stderr * bc.stderr + ac.stderr * ac.stderr);
  CHECK(ac.value <= ab.value + bc.value + 2.0 * noise);
}

TEST_CASE("equicontinuity modulus is monotone in gamma and small at small gamma") {
  std::vector<JumpDiffusionModel> models;
  for (std::uint64_t s = 0; s < 3; ++s) models.push_back(prior_model(1, 3.0, s, 0.5));
  std::vector<Vector> probes;
  for (int i = 0; i <= 30; ++i) probes.push_back(vec({-3.0 + 0.2 * i}));
  const auto f = test_fields::tanh_ridge(vec({1.0}), 0.0);
  double prev = 0.0;
  for (double gamma : {0.21, 0.41, 1.01, 2.01}) {
    const double m = equicontinuity_modulus(models, f, probes, gamma, 0.5, 256, 0.01, 1);
    CHECK(m >= prev);
    prev = m;
  }
  CHECK(equicontinuity_modulus(models, f, probes, 0.01, 0.5, 256, 0.01, 1) == 0.0);
  CHECK_THROWS_AS(equicontinuity_modulus(models, f, probes, 0.0, 0.5, 256, 0.01, 1), InputError);
}

TEST_CASE("equicontinuity modulus is uniform over prior models") {
  std::vector<double> moduli;
  std::vector<Vector> probes;
  for (int i = 0; i <= 60; ++i) probes.push_back(vec({-3.0 + 0.1 * i}));
  const auto f = test_fields::tanh_ridge(vec({1.0}), 0.0);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const std::vector<JumpDiffusionModel> one{prior_model(1, 3.0, 100 + s)};
    moduli.push_back(equicontinuity_modulus(one, f, probes, 0.1, 0.5, 128, 0.01, 2));
  }
  std::vector<double> sorted = moduli;
  std::sort(sorted.begin(), sorted.end());
  const double median = 0.5 * (sorted[9] + sorted[10]);
  for (double m : moduli) CHECK(m <= 3.0 * median);
}
