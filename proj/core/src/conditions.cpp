#include "jumpcons/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <functional>
#include <limits>
#include <numbers>

#include "jumpcons/errors.hpp"
#include "jumpcons/quadrature.hpp"
#include "jumpcons/rng.hpp"

namespace jumpcons {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kMaxGridPoints = std::size_t{1} << 22;

// Regular grid of `res` points per axis on [-half, half]^d.
struct BoxGrid {
  int d;
  double half;
  int res;

  double spacing() const { return 2.0 * half / (res - 1); }

  void for_each(const std::function<void(const Vector&)>& fn) const {
    std::vector<int> idx(d, 0);
    Vector x(d);
    while (true) {
      for (int i = 0; i < d; ++i) x(i) = -half + idx[i] * spacing();
      fn(x);
      int i = 0;
      for (; i < d; ++i) {
        if (++idx[i] < res) break;
        idx[i] = 0;
      }
      if (i == d) break;
    }
  }
};

// Doubles the extent and halves the spacing, capped by total size.
BoxGrid refine(const BoxGrid& g) {
  int res = 4 * g.res - 3;
  while (res > 2 && std::pow(static_cast<double>(res), g.d) > static_cast<double>(kMaxGridPoints)) {
    res = (res + 1) / 2;
  }
  return {g.d, 2.0 * g.half, std::max(res, g.res)};
}

bool changed_too_much(double base, double refined) {
  if (!std::isfinite(base) || !std::isfinite(refined)) return true;
  const double scale = std::max(std::abs(base), std::abs(refined));
  if (scale < 1e-12) return false;
  return std::abs(refined - base) > kDoublingTolerance * std::max(std::abs(base), 1e-12);
}

struct Extremum {
  double value;
  std::vector<Vector> witnesses;
};

// Compass search for a local maximum of fn from z, step halving from
// `step` down to `min_step`.
double compass_maximize(const std::function<double(const Vector&)>& fn, Vector& z, double step, double min_step) {
  constexpr int kMaxMoves = 400;
  double best = fn(z);
  int moves = 0;
  while (step >= min_step && moves < kMaxMoves) {
    bool improved = false;
    for (Eigen::Index i = 0; i < z.size() && moves < kMaxMoves; ++i) {
      for (double sign : {1.0, -1.0}) {
        Vector trial = z;
        trial(i) += sign * step;
        const double v = fn(trial);
        if (v > best) {
          best = v;
          z = std::move(trial);
          improved = true;
          ++moves;
          break;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return best;
}

// sup |b(x) - b(y)|^2 / |x - y|^2 over grid neighbours and random pairs.
// Breakpoints are axis coordinates where b may kink; one-sided quotients are
// taken there from every grid point.
Extremum lipschitz_sup(const VectorField& b, const BoxGrid& grid, int pairs, Engine& rng,
                       const std::vector<double>& breakpoints) {
  const int d = grid.d;
  const double h = grid.spacing();
  constexpr std::size_t kPolished = 16;
  Extremum best{0.0, {}};
  std::vector<std::pair<double, Vector>> leaders;  // (ratio, stacked pair)
  Vector bx(d);
  Vector by(d);
  auto ratio_of = [&](const Vector& x, const Vector& y) {
    const double denom = (x - y).squaredNorm();
    if (!(denom > 1e-12 * h * h)) return -kInf;
    b.eval(x, bx);
    b.eval(y, by);
    return (bx - by).squaredNorm() / denom;
  };
  auto consider = [&](const Vector& x, const Vector& y) {
    const double ratio = ratio_of(x, y);
    if (ratio == -kInf) return;
    if (!(ratio <= best.value)) best = {ratio, {x, y}};
    if (leaders.size() == kPolished && !(ratio > leaders.back().first)) return;
    // Leaders are kept at least two grid cells apart so ties cannot crowd out
    // other basins.
    const Vector mid = 0.5 * (x + y);
    for (auto& [value, z] : leaders) {
      if ((0.5 * (z.head(d) + z.tail(d)) - mid).norm() < 2.0 * h) {
        if (ratio > value) {
          value = ratio;
          z << x, y;
          std::sort(leaders.begin(), leaders.end(), [](const auto& a, const auto& c) { return a.first > c.first; });
        }
        return;
      }
    }
    Vector z(2 * d);
    z << x, y;
    if (leaders.size() == kPolished) leaders.pop_back();
    leaders.emplace_back(ratio, std::move(z));
    std::sort(leaders.begin(), leaders.end(), [](const auto& a, const auto& c) { return a.first > c.first; });
  };

  grid.for_each([&](const Vector& x) {
    for (int i = 0; i < d; ++i) {
      if (x(i) + h > grid.half + 1e-12) continue;
      Vector y = x;
      y(i) += h;
      consider(x, y);
    }
    for (int i = 0; i < d; ++i) {
      for (double c : breakpoints) {
        Vector at = x;
        at(i) = c;
        for (double side : {-1e-3, 1e-3}) {
          Vector y = at;
          y(i) += side * h;
          consider(at, y);
        }
      }
    }
  });

  std::uniform_real_distribution<double> unif(-grid.half, grid.half);
  std::uniform_real_distribution<double> expo(-2.0, 0.0);
  std::normal_distribution<double> normal;
  for (int p = 0; p < pairs; ++p) {
    Vector x(d);
    for (int i = 0; i < d; ++i) x(i) = unif(rng);
    Vector y(d);
    if (p % 2 == 0) {
      for (int i = 0; i < d; ++i) y(i) = unif(rng);
    } else {
      Vector u(d);
      for (int i = 0; i < d; ++i) u(i) = normal(rng);
      y = x + (h * std::pow(10.0, expo(rng)) / u.norm()) * u;
    }
    consider(x, y);
  }

  auto stacked_ratio = [&](const Vector& z) { return ratio_of(z.head(d), z.tail(d)); };
  for (auto& [value, z] : leaders) {
    const double v = compass_maximize(stacked_ratio, z, 0.5 * h, 1e-4 * h);
    if (v > best.value) best = {v, {Vector(z.head(d)), Vector(z.tail(d))}};
  }
  return best;
}

// Grid supremum followed by a local polish of the best grid point.
Extremum polished_sup(const BoxGrid& grid, const std::function<double(const Vector&)>& fn) {
  Extremum best{-kInf, {}};
  grid.for_each([&](const Vector& x) {
    const double v = fn(x);
    if (!(v <= best.value)) best = {v, {x}};
  });
  if (!best.witnesses.empty()) {
    Vector z = best.witnesses.front();
    const double v = compass_maximize(fn, z, 0.5 * grid.spacing(), 1e-4 * grid.spacing());
    if (v > best.value) best = {v, {z}};
  }
  return best;
}

Extremum sup_over(const BoxGrid& grid, const std::function<double(const Vector&)>& fn) {
  Extremum best{-kInf, {}};
  grid.for_each([&](const Vector& x) {
    const double v = fn(x);
    if (!(v <= best.value)) best = {v, {x}};
  });
  return best;
}

Extremum inf_over(const BoxGrid& grid, const std::function<bool(const Vector&)>& include,
                  const std::function<double(const Vector&)>& fn) {
  Extremum best{kInf, {}};
  grid.for_each([&](const Vector& x) {
    if (!include(x)) return;
    const double v = fn(x);
    if (!(v >= best.value)) best = {v, {x}};
  });
  return best;
}

ConstantEstimate estimate_with_doubling(const Extremum& base, const Extremum& refined, const std::string& what) {
  ConstantEstimate c;
  c.value = base.value;
  if (changed_too_much(base.value, refined.value)) {
    c.violated = true;
    c.witnesses = refined.witnesses;
    c.note = what + " not stable under grid doubling (" + std::to_string(base.value) + " -> " +
             std::to_string(refined.value) + ")";
  }
  return c;
}

ConditionReport check_conditions_impl(const VectorField& b, const LevyMixture& levy, int grid_resolution,
                                      int probe_pairs, std::uint64_t seed) {
  const DomainSpec& domain = levy.domain();
  if (b.dim() != domain.d) throw InputError("drift dimension does not match the domain");
  if (grid_resolution < 2) throw InputError("grid_resolution must be >= 2");
  if (probe_pairs < 0) throw InputError("probe_pairs must be >= 0");

  const int d = domain.d;
  const BoxGrid base{d, 2.0 * domain.outer_radius(), grid_resolution};
  const BoxGrid fine = refine(base);

  ConditionReport report;
  report.grid_size = grid_resolution;
  report.probe_pairs = probe_pairs;

  {
    Engine rng_base = make_engine(seed, {1});
    Engine rng_fine = make_engine(seed, {2});
    // Coarse difference quotients understate smooth fields, so stability is
    // judged between the two finer levels and only growth counts.
    const double r = domain.r;
    const std::vector<double> kinks{-r - 1.0, -r, r, r + 1.0};
    const auto c1_base = lipschitz_sup(b, fine, probe_pairs, rng_base, kinks);
    auto c1_fine = lipschitz_sup(b, refine(fine), 2 * probe_pairs, rng_fine, kinks);
    if (c1_fine.value < c1_base.value) c1_fine = c1_base;
    report.c1 = estimate_with_doubling(c1_base, c1_fine, "C1");
    report.c1.value = c1_fine.value;
  }

  {
    const double jump_moment = levy.second_moment();
    Vector out(d);
    auto norm_b = [&](const Vector& x) {
      b.eval(x, out);
      return out.norm();
    };
    auto c2_base = polished_sup(fine, norm_b);
    auto c2_fine = polished_sup(refine(fine), norm_b);
    if (c2_fine.value < c2_base.value) c2_fine = c2_base;
    c2_base.value += jump_moment;
    c2_fine.value += jump_moment;
    report.c2 = estimate_with_doubling(c2_base, c2_fine, "C2");
    report.c2.value = c2_fine.value;
  }

  report.c3.value = 1.0;
  report.c3.note = "homogeneous";

  const double c4 = domain.outer_radius() * std::sqrt(static_cast<double>(d));
  report.c4.value = c4;
  report.c4.note = "tail construction";

  {
    Vector out(d);
    auto beyond = [&](const Vector& x) { return x.norm() > c4; };
    auto inward = [&](const Vector& x) {
      b.eval(x, out);
      return -x.dot(out) / x.norm();
    };
    const auto c5_base = inf_over(base, beyond, inward);
    const auto c5_fine = inf_over(fine, beyond, inward);
    report.c5 = estimate_with_doubling(c5_base, c5_fine, "C5");
    if (!(c5_base.value > 0.0) || !(c5_fine.value > 0.0)) {
      report.c5.violated = true;
      report.c5.witnesses = c5_base.value <= c5_fine.value ? c5_base.witnesses : c5_fine.witnesses;
      report.c5.note = "x.b(x) > -C5 |x| for some |x| > C4";
    }
  }
  return report;
}

}  // namespace

double lamperti_residual(const SigmaField& sigma, const Vector& x, int i, int j, int k) {
  const Matrix s = sigma.value(x);
  const auto d = s.rows();
  std::vector<Matrix> partials;
  if (sigma.partials) {
    partials = sigma.partials(x);
  } else {
    const double h = fd_step(x);
    for (Eigen::Index l = 0; l < d; ++l) {
      Vector xp = x;
      Vector xm = x;
      xp(l) += h;
      xm(l) -= h;
      partials.push_back((sigma.value(xp) - sigma.value(xm)) / (2.0 * h));
    }
  }
  double lhs = 0.0;
  double rhs = 0.0;
  for (Eigen::Index l = 0; l < d; ++l) {
    lhs += partials[l](i, k) * s(l, j);
    rhs += partials[l](i, j) * s(l, k);
  }
  return lhs - rhs;
}

LampertiReport check_lamperti(const SigmaField& sigma, const DomainSpec& domain, int grid_resolution) {
  domain.validate();
  if (grid_resolution < 2) throw InputError("grid_resolution must be >= 2");
  if (!sigma.value) throw InputError("sigma evaluator missing");
  const int d = domain.d;
  {
    const Matrix probe = sigma.value(Vector::Zero(d));
    if (probe.rows() != probe.cols()) throw InputError("sigma must be square");
    if (probe.rows() != d) throw InputError("sigma dimension does not match the domain");
  }

  LampertiReport report;
  report.worst_point = Vector::Zero(d);
  if (d == 1) return report;

  const BoxGrid grid{d, domain.r, grid_resolution};
  grid.for_each([&](const Vector& x) {
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        for (int k = j + 1; k < d; ++k) {
          const double res = std::abs(lamperti_residual(sigma, x, i, j, k));
          if (res > report.max_residual) {
            report.max_residual = res;
            report.worst_point = x;
            report.worst_triple = {i + 1, j + 1, k + 1};
          }
        }
      }
    }
  });
  report.satisfied = report.max_residual < kLampertiTolerance;
  return report;
}

ConditionReport check_conditions(const JumpDiffusionModel& model, int grid_resolution, int probe_pairs,
                                 std::uint64_t seed) {
  return check_conditions_impl(model.drift(), model.levy(), grid_resolution, probe_pairs, seed);
}

ConditionReport check_conditions(const VectorField& drift, const LevyMixture& levy, int grid_resolution,
                                 int probe_pairs, std::uint64_t seed) {
  return check_conditions_impl(drift, levy, grid_resolution, probe_pairs, seed);
}

GradientConditionReport check_conditions_gradient_nojump(const VectorField& b, int grid_resolution, int probe_pairs,
                                                         std::uint64_t seed, const GradientConditionOptions& options) {
  if (options.enclosing_lambda > 0.0) {
    throw UsageError("gradient-type conditions apply only in the absence of jumps (lambda = 0)");
  }
  if (grid_resolution < 2) throw InputError("grid_resolution must be >= 2");
  if (!(options.extent > options.k4) || !(options.k4 > 0.0)) throw InputError("need 0 < k4 < extent");

  const int d = b.dim();
  const BoxGrid base{d, options.extent, grid_resolution};
  const BoxGrid fine = refine(base);

  GradientConditionReport report;
  report.grid_size = grid_resolution;
  report.probe_pairs = probe_pairs;

  Vector out(d);
  auto growth = [&](const Vector& x) {
    b.eval(x, out);
    return out.squaredNorm() / (1.0 + x.squaredNorm());
  };
  auto partial_sup = [&](const Vector& x) { return b.jacobian(x).cwiseAbs().maxCoeff(); };

  // Random interior probes supplement the grid for both suprema.
  auto with_probes = [&](Extremum e, const BoxGrid& g, std::uint64_t stream, int count,
                         const std::function<double(const Vector&)>& fn) {
    Engine rng = make_engine(seed, {stream});
    std::uniform_real_distribution<double> unif(-g.half, g.half);
    for (int p = 0; p < count; ++p) {
      Vector x(d);
      for (int i = 0; i < d; ++i) x(i) = unif(rng);
      const double v = fn(x);
      if (!(v <= e.value)) e = {v, {x}};
    }
    return e;
  };

  report.k1 = estimate_with_doubling(with_probes(sup_over(base, growth), base, 1, probe_pairs, growth),
                                     with_probes(sup_over(fine, growth), fine, 2, 2 * probe_pairs, growth), "K1");
  report.k2 = estimate_with_doubling(with_probes(sup_over(base, partial_sup), base, 3, probe_pairs, partial_sup),
                                     with_probes(sup_over(fine, partial_sup), fine, 4, 2 * probe_pairs, partial_sup),
                                     "K2");

  report.k4.value = options.k4;

  // Inward condition x.b(x) <= -K3 |x|^beta for |x| >= K4: fit beta by least
  // squares on log(-x.b) against log|x|, clamp to beta >= 1, then K3 is the
  // smallest admissible constant on the grid.
  std::vector<double> log_r;
  std::vector<double> log_v;
  std::vector<Vector> pts;
  Extremum worst{kInf, {}};
  for (const BoxGrid* g : {&base, &fine}) {
    g->for_each([&](const Vector& x) {
      const double rx = x.norm();
      if (rx < options.k4) return;
      b.eval(x, out);
      const double v = -x.dot(out);
      if (!(v > 0.0)) {
        if (!(v >= worst.value)) worst = {v, {x}};
        return;
      }
      log_r.push_back(std::log(rx));
      log_v.push_back(std::log(v));
      pts.push_back(x);
    });
  }
  if (!worst.witnesses.empty()) {
    report.k3.violated = true;
    report.k3.value = 0.0;
    report.k3.witnesses = worst.witnesses;
    report.k3.note = "x.b(x) >= 0 at |x| >= K4";
    report.beta.value = 1.0;
    return report;
  }
  if (log_r.size() < 2) throw InputError("no grid points beyond k4; enlarge extent");
  double mr = 0.0;
  double mv = 0.0;
  for (std::size_t n = 0; n < log_r.size(); ++n) {
    mr += log_r[n];
    mv += log_v[n];
  }
  mr /= static_cast<double>(log_r.size());
  mv /= static_cast<double>(log_r.size());
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t n = 0; n < log_r.size(); ++n) {
    sxy += (log_r[n] - mr) * (log_v[n] - mv);
    sxx += (log_r[n] - mr) * (log_r[n] - mr);
  }
  const double beta = std::max(1.0, sxx > 0.0 ? sxy / sxx : 1.0);
  report.beta.value = beta;
  double k3 = kInf;
  Vector k3_at;
  for (std::size_t n = 0; n < log_r.size(); ++n) {
    const double c = std::exp(log_v[n] - beta * log_r[n]);
    if (c < k3) {
      k3 = c;
      k3_at = pts[n];
    }
  }
  report.k3.value = k3;
  if (!(k3 > 1e-12)) {
    report.k3.violated = true;
    report.k3.witnesses = {k3_at};
    report.k3.note = "inward drift decays faster than |x|^beta";
  }
  return report;
}

double apply_generator(const JumpDiffusionModel& model, const TestField& f, const Vector& x,
                       const QuadratureConfig& quad) {
  if (quad.order < 2) throw InputError("quadrature order must be >= 2");
  const Vector grad = f.gradient(x);
  const Matrix hess = f.hessian(x);
  double value = model.drift()(x).dot(grad) + 0.5 * hess.trace();

  const auto& levy = model.levy();
  if (levy.total_mass() == 0.0) return value;
  const double fx = f.value(x);
  const auto grid = jump_domain_grid(quad.order, model.dim(), model.domain().r);
  double jump = 0.0;
  for (Eigen::Index n = 0; n < grid.weights.size(); ++n) {
    const Vector z = grid.points.col(n);
    const double dens = levy.density(z);
    if (dens == 0.0) continue;
    double integrand = f.value(x + z) - fx;
    if (z.norm() <= 1.0) integrand -= z.dot(grad);
    jump += grid.weights(n) * dens * integrand;
  }
  return value + jump;
}

}  // namespace jumpcons
