#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "jumpcons/fields.hpp"
#include "jumpcons/model.hpp"
#include "jumpcons/types.hpp"

namespace jumpcons {

/// dt default: 1e-3 * min(1, delta).
inline double default_dt(double delta) { return 1e-3 * std::min(1.0, delta); }

/// A model prepared for time stepping. The process is integrated in
/// compensated form: small jumps (|z|_2 <= 1) are compensated, so the drift
/// applied between jumps is b(x) - int_{|z|<=1} z nu(dz). This is the
/// dynamics whose generator carries the 1{|z|<=1} z.grad f correction.
class Dynamics {
 public:
  explicit Dynamics(JumpDiffusionModel model);

  const JumpDiffusionModel& model() const { return model_; }
  int dim() const { return model_.dim(); }
  double jump_rate() const { return jump_rate_; }
  const Vector& compensator() const { return compensator_; }

  void effective_drift(const Vector& x, Vector& out) const {
    model_.drift().eval(x, out);
    out -= compensator_;
  }

 private:
  JumpDiffusionModel model_;
  double jump_rate_;
  Vector compensator_;
};

struct JumpEvent {
  double time = 0.0;
  Vector size;
  /// Index into PathSkeleton::states of the post-jump state.
  std::size_t state_index = 0;
};

/// Simulated trajectory. For every step i:
///   states[i+1] = states[i] + (b(states[i]) - m) dt_i + brownian_increments[i] + J_{i+1}
/// where m is `compensator` and J_{i+1} is the jump landing at times[i+1]
/// (zero when jump_flag[i+1] == 0).
struct PathSkeleton {
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<Vector> brownian_increments;
  std::vector<char> jump_flag;
  std::vector<JumpEvent> jumps;
  Vector compensator;
  double dt = 0.0;
  std::uint64_t seed = 0;
};

struct ObservationSeries {
  double delta = 0.0;
  std::vector<Vector> observations;  // x_0 .. x_n

  std::size_t n() const { return observations.empty() ? 0 : observations.size() - 1; }
  /// First n + 1 observations.
  ObservationSeries prefix(std::size_t n) const;
};

/// Euler-Maruyama with exact jump-time insertion. Streams: Brownian
/// increments from (seed, {stream, 0}), jump clock/marks/bridges from
/// (seed, {stream, 1}); jump m always consumes the same uniforms so two
/// models driven by the same seed share their noise.
/// Throws InputError if dt <= 0 or dt >= horizon; NumericBlowup on a
/// non-finite state.
PathSkeleton simulate_path(const JumpDiffusionModel& model, const Vector& x0, double horizon, double dt,
                           std::uint64_t seed);

/// Endpoint only, for replicate `stream` of `seed`.
Vector simulate_endpoint(const Dynamics& dyn, const Vector& x0, double horizon, double dt, std::uint64_t seed,
                         std::uint64_t stream = 0);

/// Endpoints of `replicates` independent paths (stream = replicate index).
std::vector<Vector> simulate_endpoints(const Dynamics& dyn, const Vector& x0, double horizon, double dt,
                                       std::size_t replicates, std::uint64_t seed);

/// Same streams as simulate_endpoints, run on the calling thread into
/// `out` (its size sets the replicate count) without per-path allocation.
void simulate_endpoints_serial(const Dynamics& dyn, const Vector& x0, double horizon, double dt, std::uint64_t seed,
                               std::vector<Vector>& out);

struct StationarySamples {
  std::vector<Vector> points;
  /// Set when burn_in is below the 10 (r + 1) / k heuristic.
  std::optional<std::string> warning;
};

/// One long path from the origin: discard burn_in, then record every `thin`
/// time units.
StationarySamples sample_stationary(const JumpDiffusionModel& model, double burn_in, double thin, std::size_t count,
                                    double dt, std::uint64_t seed);

/// Burn-in heuristic 10 (r + 1) / k.
double recommended_burn_in(const JumpDiffusionModel& model);

struct StationaryInit {
  /// Burn-in time before x_0; <= 0 selects the heuristic.
  double burn_in = 0.0;
};
using ObservationInit = std::variant<StationaryInit, Vector>;

/// One path observed every delta: x_0 (stationary draw or the given point)
/// then n further observations. Series for smaller n are prefixes of series
/// for larger n under the same seed.
ObservationSeries sample_observations(const JumpDiffusionModel& model, std::size_t n, double delta, double dt,
                                      std::uint64_t seed, const ObservationInit& init = StationaryInit{});

struct SemigroupEstimate {
  double mean = 0.0;
  double stderr = 0.0;
};

struct SemigroupOptions {
  /// Subtract the discrete martingale sum grad f(X_{t_i}) . dW_i, which has
  /// mean zero under the scheme; lowers variance for smooth f.
  bool martingale_control_variate = false;
  /// Subtract sum over jumps of f(x + Z) - f(x) minus its exact mean
  /// delta * int [f(x + z) - f(x)] nu(dz), with x the start point.
  bool jump_control_variate = false;
  /// Gauss-Legendre order for the jump compensator integral.
  int quadrature_order = 32;
};

/// Monte Carlo P_delta f(x) = E[f(X_delta) | X_0 = x]. Throws InputError if
/// replicates < 2.
SemigroupEstimate estimate_semigroup(const JumpDiffusionModel& model, const TestField& f, const Vector& x,
                                     double delta, std::size_t replicates, double dt, std::uint64_t seed,
                                     const SemigroupOptions& options = {});

/// Finite measure rho as weighted points.
struct RhoPoint {
  Vector point;
  double mass = 0.0;
};

/// Uniform probability measure on a ~64-point regular grid of cell
/// midpoints over D_r (m = round(64^{1/d}) points per axis).
std::vector<RhoPoint> default_rho(const DomainSpec& domain);

struct WeakDistance {
  double value = 0.0;
  /// Standard error of sum_i mass_i (P_a f - P_b f)(x_i) from the paired
  /// replicate differences.
  double stderr = 0.0;
};

/// sum_i mass_i |P_delta^a f(x_i) - P_delta^b f(x_i)| with both models
/// driven by the same streams at every rho point.
WeakDistance weak_distance(const JumpDiffusionModel& a, const JumpDiffusionModel& b, const TestField& f,
                           std::span<const RhoPoint> rho, double delta, std::size_t replicates, double dt,
                           std::uint64_t seed);

/// Semigroup values P_delta f_k(x_i) for several test functions at once,
/// sharing the simulated endpoints. Result is [point][function]. Point i
/// uses streams derived from (seed, i), matching weak_distance.
std::vector<std::vector<double>> semigroup_table(const JumpDiffusionModel& model, std::span<const TestField> fs,
                                                 std::span<const RhoPoint> rho, double delta, std::size_t replicates,
                                                 double dt, std::uint64_t seed);

/// Distances between two semigroup tables, one per test function.
std::vector<double> table_distances(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b,
                                    std::span<const RhoPoint> rho);

/// max over models and probe pairs with |x - y|_2 < gamma of
/// |P_delta f(x) - P_delta f(y)|. All probe points of a model share one
/// stream so the estimate is smooth in x. Throws InputError if gamma <= 0.
double equicontinuity_modulus(std::span<const JumpDiffusionModel> models, const TestField& f,
                              std::span<const Vector> probe_points, double gamma, double delta,
                              std::size_t replicates, double dt, std::uint64_t seed);

}  // namespace jumpcons
