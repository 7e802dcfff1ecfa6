#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "jumpcons/domain.hpp"
#include "jumpcons/fields.hpp"
#include "jumpcons/levy.hpp"
#include "jumpcons/model.hpp"

namespace jumpcons {

/// Absolute residual below which the Lamperti identity counts as satisfied.
inline constexpr double kLampertiTolerance = 1e-6;
/// Relative change under grid doubling that flags a divergent supremum.
inline constexpr double kDoublingTolerance = 0.10;

struct LampertiReport {
  bool satisfied = true;
  double max_residual = 0.0;
  Vector worst_point;
  /// 1-based (i, j, k) with k > j; all zero when no triple exists (d = 1).
  std::array<int, 3> worst_triple{0, 0, 0};
};

/// sum_l d_l sigma_ik sigma_lj - sum_l d_l sigma_ij sigma_lk at x, with
/// 0-based indices. Uses analytic partials when supplied, otherwise central
/// differences.
double lamperti_residual(const SigmaField& sigma, const Vector& x, int i, int j, int k);

/// Evaluates the Lamperti commutation identity on a grid over the core.
/// Throws InputError for a non-square sigma or grid_resolution < 2.
LampertiReport check_lamperti(const SigmaField& sigma, const DomainSpec& domain, int grid_resolution);

/// One estimated constant. A violation always carries at least one witness.
struct ConstantEstimate {
  double value = 0.0;
  bool violated = false;
  std::vector<Vector> witnesses;
  std::string note;
};

/// Estimates of the existence/ergodicity constants C1..C5.
struct ConditionReport {
  ConstantEstimate c1;  // squared Lipschitz ratio of b (jump term vanishes for homogeneous nu)
  ConstantEstimate c2;  // sup |b|_2 + int |z|^2 nu(dz)
  ConstantEstimate c3;  // jump-coefficient Lipschitz ratio
  ConstantEstimate c4;  // radius beyond which the inward drift condition holds
  ConstantEstimate c5;  // strength of the inward drift
  int grid_size = 0;
  int probe_pairs = 0;

  bool ok() const { return !(c1.violated || c2.violated || c3.violated || c4.violated || c5.violated); }
};

/// Checks a model built from the drift construction.
ConditionReport check_conditions(const JumpDiffusionModel& model, int grid_resolution, int probe_pairs,
                                 std::uint64_t seed);

/// Checks an arbitrary drift field paired with a Levy mixture; C4 is taken
/// from the domain metadata.
ConditionReport check_conditions(const VectorField& drift, const LevyMixture& levy, int grid_resolution,
                                 int probe_pairs, std::uint64_t seed);

/// Linear growth / bounded partials / polynomial inward drift variant that
/// applies only without jumps.
struct GradientConditionReport {
  ConstantEstimate k1;
  ConstantEstimate k2;
  ConstantEstimate k3;
  ConstantEstimate k4;
  ConstantEstimate beta;
  int grid_size = 0;
  int probe_pairs = 0;

  bool ok() const { return !(k1.violated || k2.violated || k3.violated || k4.violated || beta.violated); }
};

struct GradientConditionOptions {
  /// Half-width of the probe box; the doubling check uses twice this.
  double extent = 10.0;
  /// Radius from which the inward condition is required.
  double k4 = 1.0;
  /// Total jump intensity of the enclosing model; must be 0.
  double enclosing_lambda = 0.0;
};

/// Throws UsageError when options.enclosing_lambda > 0.
GradientConditionReport check_conditions_gradient_nojump(const VectorField& drift, int grid_resolution,
                                                         int probe_pairs, std::uint64_t seed,
                                                         const GradientConditionOptions& options = {});

struct QuadratureConfig {
  int order = 32;
};

/// G f(x) = b(x).grad f + 1/2 lap f + int [f(x+z) - f(x) - 1{|z|<=1} z.grad f] nu(dz),
/// jump integral by composite tensor Gauss-Legendre over D_r.
/// Throws InputError when quad.order < 2.
double apply_generator(const JumpDiffusionModel& model, const TestField& f, const Vector& x,
                       const QuadratureConfig& quad = {});

}  // namespace jumpcons
