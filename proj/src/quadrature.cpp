#include "qedcoh/quadrature.hpp"

#include "qedcoh/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <string>
#include <tuple>

namespace qedcoh::quad {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// 21-point Kronrod extension of the 10-point Gauss rule (QUADPACK qk21).
constexpr std::array<double, 11> kXgk = {
  0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
  0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
  0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
  0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
  0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
  0.000000000000000000000000000000000};

constexpr std::array<double, 11> kWgk = {
  0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
  0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
  0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
  0.123491976262065851077720314722391, 0.134709217311473325928054001771707,
  0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
  0.149445554002916905664936468389821};

// Gauss weights at kXgk[1], kXgk[3], ..., kXgk[9].
constexpr std::array<double, 5> kWg = {
  0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
  0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
  0.295524224714752870173892994651146};

struct Panel
{
  double a;
  double b;
  double value;
  double error;
  /// Part of the error that bisection cannot reduce: rounding
  /// (50 eps int |f|) plus errors carried by the samples.
  double floor;
  bool splittable;
};

struct PanelOrder
{
  bool operator()(const Panel& x, const Panel& y) const { return x.error < y.error; }
};

struct Sample
{
  double value;
  /// Error already carried by the sample (an inner integral); 0 for plain f.
  double error;
};

template <class Sampler>
Panel gauss_kronrod_21(const Sampler& f, double a, double b, std::size_t& evals)
{
  const double centre = 0.5 * (a + b);
  const double half = 0.5 * (b - a);

  // Isolated non-finite samples (an integrable singularity hit exactly by a
  // node) are dropped and the panel is forced to split.
  bool hit_singularity = false;
  double carried = 0.0;
  auto sample = [&](double x, double weight) {
    const Sample s = f(x);
    if (!std::isfinite(s.value)) {
      hit_singularity = true;
      return 0.0;
    }
    carried += weight * s.error;
    return s.value;
  };

  std::array<double, 10> f1{};
  std::array<double, 10> f2{};
  const double fc = sample(centre, kWgk[10]);
  double resk = kWgk[10] * fc;
  double resg = 0.0;
  double resabs = std::abs(resk);
  for (std::size_t j = 0; j < 10; ++j) {
    const double dx = half * kXgk[j];
    f1[j] = sample(centre - dx, kWgk[j]);
    f2[j] = sample(centre + dx, kWgk[j]);
    const double pair = f1[j] + f2[j];
    resk += kWgk[j] * pair;
    resabs += kWgk[j] * (std::abs(f1[j]) + std::abs(f2[j]));
    if (j % 2 == 1) {
      resg += kWg[j / 2] * pair;
    }
  }
  evals += 21;

  const double reskh = 0.5 * resk;
  double resasc = kWgk[10] * std::abs(fc - reskh);
  for (std::size_t j = 0; j < 10; ++j) {
    resasc += kWgk[j] * (std::abs(f1[j] - reskh) + std::abs(f2[j] - reskh));
  }

  const double scale = std::abs(half);
  const double value = resk * half;
  resasc *= scale;
  resabs *= scale;
  double err = std::abs((resk - resg) * half);
  if (resasc != 0.0 && err != 0.0) {
    err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  }
  // Carried inner errors do not shrink under bisection either.
  const double floor = 50.0 * kEps * resabs + (std::isfinite(carried) ? carried * scale : 0.0);
  if (resabs > std::numeric_limits<double>::min() / (50.0 * kEps)) {
    err = std::max(floor, err);
  }
  err += carried * scale;
  if (hit_singularity || !std::isfinite(value) || !std::isfinite(err)) {
    err = std::numeric_limits<double>::infinity();
  }

  // Stop bisecting once the panel is at the resolution of its abscissae.
  const double width_floor = 1000.0 * kEps * std::max(std::abs(a), std::abs(b));
  const bool splittable = std::isfinite(value) && (b - a) > width_floor &&
                          (b - a) > 1e3 * std::numeric_limits<double>::min();
  return {a, b, value, err, floor, splittable};
}

double tolerance_for(double value, const QuadratureConfig& cfg)
{
  return std::max(cfg.abs_tol, cfg.rel_tol * std::abs(value));
}

// Richardson extrapolation to eps -> 0 of S(eps) = S0 + c1 eps + c3 eps^3 + ...
// on a geometric sequence, or Neville extrapolation otherwise.
struct Extrapolated
{
  double value;
  double error;
};

Extrapolated extrapolate_to_zero(std::span<const double> eps, std::span<const double> values)
{
  const std::size_t m = values.size();
  if (m == 1) {
    return {values[0], std::abs(values[0]) + 1.0};
  }

  bool geometric = true;
  const double ratio = eps[1] / eps[0];
  for (std::size_t k = 2; k < m; ++k) {
    if (std::abs(eps[k] / eps[k - 1] - ratio) > 1e-9 * ratio) {
      geometric = false;
      break;
    }
  }

  std::vector<std::vector<double>> table(m);
  for (std::size_t k = 0; k < m; ++k) {
    table[k].resize(k + 1);
    table[k][0] = values[k];
    for (std::size_t j = 1; j <= k; ++j) {
      if (geometric) {
        const double factor = std::pow(ratio, static_cast<double>(2 * j - 1));
        table[k][j] = (table[k][j - 1] - factor * table[k - 1][j - 1]) / (1.0 - factor);
      } else {
        const double far = eps[k - j];
        const double near = eps[k];
        table[k][j] = (far * table[k][j - 1] - near * table[k - 1][j - 1]) / (far - near);
      }
    }
  }

  if (m == 2) {
    return {table[1][1], std::abs(table[1][1] - table[1][0])};
  }
  Extrapolated best{table[m - 1][0], std::abs(table[m - 1][0] - table[m - 2][0])};
  for (std::size_t k = 2; k < m; ++k) {
    for (std::size_t j = 1; j < k; ++j) {
      const double err = std::max(std::abs(table[k][j] - table[k][j - 1]),
                                  std::abs(table[k][j] - table[k - 1][j]));
      if (err < best.error) {
        best = {table[k][j], err};
      }
    }
  }
  return best;
}

void accumulate(IntegrationResult& total, const IntegrationResult& part)
{
  total.value += part.value;
  total.error_estimate += part.error_estimate;
  total.evaluations += part.evaluations;
  total.converged = total.converged && part.converged;
}

} // namespace

std::vector<double> geometric_excision(double ratio, std::size_t terms)
{
  std::vector<double> seq;
  seq.reserve(terms);
  double e = ratio;
  for (std::size_t k = 0; k < terms; ++k) {
    seq.push_back(e);
    e *= ratio;
  }
  return seq;
}

void QuadratureConfig::validate() const
{
  if (!(rel_tol > 0.0)) {
    throw ValidationError("rel_tol must be positive");
  }
  if (!(abs_tol > 0.0)) {
    throw ValidationError("abs_tol must be positive");
  }
  if (max_subdivisions < 1) {
    throw ValidationError("max_subdivisions must be at least 1");
  }
  if (excision_sequence.empty()) {
    throw ValidationError("excision_sequence must not be empty");
  }
  for (std::size_t k = 0; k < excision_sequence.size(); ++k) {
    const double e = excision_sequence[k];
    if (!(e > 0.0) || e > 1.0) {
      throw ValidationError("excision_sequence entries must lie in (0, 1]");
    }
    if (k > 0 && !(e < excision_sequence[k - 1])) {
      throw ValidationError("excision_sequence must be strictly decreasing");
    }
  }
}

QuadratureConfig QuadratureConfig::tightened(double factor) const
{
  QuadratureConfig out = *this;
  out.rel_tol = std::max(rel_tol * factor, 4.0 * kEps);
  out.abs_tol = std::max(abs_tol * factor, std::numeric_limits<double>::min());
  return out;
}

IntegrationResult integrate_1d(const Integrand1d& f, double a, double b,
                               const QuadratureConfig& cfg)
{
  return integrate_1d(f, a, b, std::span<const double>{}, cfg);
}

namespace {

template <class Sampler>
IntegrationResult adaptive(const Sampler& f, double a, double b, std::span<const double> breakpoints,
                           const QuadratureConfig& cfg)
{
  cfg.validate();
  if (!(a < b) || !std::isfinite(a) || !std::isfinite(b)) {
    throw ValidationError("integration interval must satisfy a < b (finite)");
  }

  std::vector<double> edges{a};
  for (double p : breakpoints) {
    if (p > a && p < b) {
      edges.push_back(p);
    }
  }
  edges.push_back(b);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  std::size_t evals = 0;
  std::priority_queue<Panel, std::vector<Panel>, PanelOrder> active;
  std::vector<Panel> frozen;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    active.push(gauss_kronrod_21(f, edges[i], edges[i + 1], evals));
  }

  auto totals = [&]() {
    double value = 0.0;
    double error = 0.0;
    double floor = 0.0;
    auto copy = active;
    while (!copy.empty()) {
      value += copy.top().value;
      error += copy.top().error;
      floor += copy.top().floor;
      copy.pop();
    }
    for (const Panel& p : frozen) {
      value += p.value;
      error += p.error;
      floor += p.floor;
    }
    return std::tuple{value, error, floor};
  };

  double value = 0.0;
  double error = 0.0;
  double floor = 0.0;
  std::tie(value, error, floor) = totals();

  std::size_t subdivisions = 0;
  std::size_t roundoff_hits = 0;
  while (!active.empty() && std::isfinite(value)) {
    if (error <= tolerance_for(value, cfg)) {
      break;
    }
    // Errors at the rounding floor cannot be reduced by bisection.
    if (subdivisions >= cfg.max_subdivisions || roundoff_hits >= 10 || error <= 1.5 * floor) {
      break;
    }
    Panel worst = active.top();
    active.pop();
    if (!worst.splittable) {
      frozen.push_back(worst);
      continue;
    }
    const double mid = 0.5 * (worst.a + worst.b);
    const Panel left = gauss_kronrod_21(f, worst.a, mid, evals);
    const Panel right = gauss_kronrod_21(f, mid, worst.b, evals);
    const double pair_value = left.value + right.value;
    const double pair_error = left.error + right.error;
    // Bisection that neither moves the value nor shrinks the error means
    // the integrand is resolved down to its own rounding noise.
    if (std::isfinite(worst.error) && pair_error >= 0.99 * worst.error &&
        std::abs(pair_value - worst.value) <= 1e-5 * std::abs(pair_value)) {
      ++roundoff_hits;
    }
    value += pair_value - worst.value;
    error += pair_error - worst.error;
    floor += left.floor + right.floor - worst.floor;
    active.push(left);
    active.push(right);
    ++subdivisions;
    // Re-sum periodically (and after infinite errors) to stop drift.
    if (subdivisions % 256 == 0 || !std::isfinite(error)) {
      std::tie(value, error, floor) = totals();
    }
  }
  std::tie(value, error, floor) = totals();

  IntegrationResult out;
  out.value = value;
  out.error_estimate = error;
  out.evaluations = evals;
  out.converged = std::isfinite(value) && error <= tolerance_for(value, cfg);
  return out;
}

} // namespace

IntegrationResult integrate_1d(const Integrand1d& f, double a, double b,
                               std::span<const double> breakpoints,
                               const QuadratureConfig& cfg)
{
  return adaptive([&f](double x) { return Sample{f(x), 0.0}; }, a, b, breakpoints, cfg);
}

IntegrationResult integrate_1d_nested(const NestedIntegrand& f, double a, double b,
                                      std::span<const double> breakpoints,
                                      const QuadratureConfig& cfg)
{
  std::size_t inner_evals = 0;
  IntegrationResult r = adaptive(
    [&](double x) {
      const IntegrationResult inner = f(x);
      inner_evals += inner.evaluations;
      return Sample{inner.value, inner.error_estimate};
    },
    a, b, breakpoints, cfg);
  r.evaluations = inner_evals;
  return r;
}

IntegrationResult pv_integrate_1d(const Integrand1d& f, double a, double b,
                                  std::span<const double> poles,
                                  const QuadratureConfig& cfg)
{
  cfg.validate();
  if (!(a < b) || !std::isfinite(a) || !std::isfinite(b)) {
    throw ValidationError("integration interval must satisfy a < b (finite)");
  }

  const double scale = std::max({std::abs(a), std::abs(b), b - a});
  // Resolution of doubles near an end point, not over the whole interval.
  const auto on_boundary = [](double p, double end) {
    return std::abs(p - end) <= 64.0 * kEps * std::max(std::abs(p), std::abs(end));
  };
  std::vector<double> interior;
  for (double p : poles) {
    if (!std::isfinite(p)) {
      throw DomainError("pole location must be finite");
    }
    if (on_boundary(p, a) || on_boundary(p, b)) {
      throw PoleOnBoundary("pole at " + std::to_string(p) + " lies on the integration boundary");
    }
    if (p > a && p < b) {
      interior.push_back(p);
    }
  }
  std::sort(interior.begin(), interior.end());
  for (std::size_t i = 1; i < interior.size(); ++i) {
    if (interior[i] - interior[i - 1] <= 1024.0 * kEps * scale) {
      throw PolesTooClose("poles are numerically coincident");
    }
  }

  if (interior.empty()) {
    return integrate_1d(f, a, b, cfg);
  }

  const std::size_t n = interior.size();
  std::vector<double> half_width(n);
  for (std::size_t i = 0; i < n; ++i) {
    double d = std::min(interior[i] - a, b - interior[i]);
    if (i > 0) {
      d = std::min(d, 0.5 * (interior[i] - interior[i - 1]));
    }
    if (i + 1 < n) {
      d = std::min(d, 0.5 * (interior[i + 1] - interior[i]));
    }
    half_width[i] = 0.5 * d;
  }

  // Pieces are held to their own scale first; when they cancel, they are
  // re-run against the scale of the principal value itself.
  // Sum of |piece| of the latest evaluation; pieces that cancel need a
  // proportionally tighter relative tolerance.
  double piece_mass = 0.0;
  auto evaluate = [&](const QuadratureConfig& piece_cfg) {
    IntegrationResult total;
    total.converged = true;
    piece_mass = 0.0;
    const auto add = [&](const IntegrationResult& part) {
      piece_mass += std::abs(part.value);
      accumulate(total, part);
    };

    // Pole-free complement of the windows.
    double left = a;
    for (std::size_t i = 0; i < n; ++i) {
      const double right = interior[i] - half_width[i];
      add(integrate_1d(f, left, right, piece_cfg));
      left = interior[i] + half_width[i];
    }
    add(integrate_1d(f, left, b, piece_cfg));

    // Shell integrals shrink with eps while the rounding noise of f near the
    // pole does not; hold them to the scale of the whole principal value.
    QuadratureConfig shell_cfg = piece_cfg;
    shell_cfg.abs_tol =
      std::max(piece_cfg.abs_tol, 1e-3 * piece_cfg.rel_tol * std::abs(total.value));

    // Tightened retries must not truncate the excision sequence further.
    const double noise_budget = 0.01 * tolerance_for(total.value, cfg);
    const auto& fractions = piece_cfg.excision_sequence;
    for (std::size_t i = 0; i < n; ++i) {
      const double p = interior[i];
      const double d = half_width[i];
      const Integrand1d pair = [&f, p](double x) { return f(p + x) + f(p - x); };

      std::vector<double> eps;
      std::vector<double> partial;
      eps.reserve(fractions.size());
      partial.reserve(fractions.size());
      double running = 0.0;
      double upper = d;
      IntegrationResult window;
      window.converged = true;
      for (double s : fractions) {
        const double e = s * d;
        // Rounding of p + x makes each sample of the pair uncertain by about
        // eps |p| |f'|, so a shell [e, upper] carries noise ~ eps |p| |f(p +- e)|.
        // A shell is worth adding while its noise is negligible or still
        // below the extrapolation error it would reduce; at least two are
        // always kept.
        const double noise = kEps * std::abs(p) * std::max(std::abs(f(p + e)), std::abs(f(p - e)));
        window.evaluations += 2;
        if (eps.size() >= 2 && !(noise <= noise_budget)) {
          if (!(noise < extrapolate_to_zero(eps, partial).error)) {
            break;
          }
        }
        if (e < upper) {
          QuadratureConfig noisy_cfg = shell_cfg;
          if (std::isfinite(noise)) {
            noisy_cfg.abs_tol = std::max(shell_cfg.abs_tol, noise);
          }
          const IntegrationResult shell = integrate_1d(pair, e, upper, noisy_cfg);
          running += shell.value;
          window.error_estimate += shell.error_estimate;
          window.evaluations += shell.evaluations;
          window.converged = window.converged && shell.converged;
        }
        eps.push_back(e);
        partial.push_back(running);
        upper = e;
      }
      const Extrapolated limit = extrapolate_to_zero(eps, partial);
      window.value = limit.value;
      window.error_estimate += limit.error;
      add(window);
    }
    return total;
  };

  IntegrationResult total = evaluate(cfg);
  QuadratureConfig piece_cfg = cfg;
  for (int retry = 0; retry < 3 && std::isfinite(total.value); ++retry) {
    const double target = tolerance_for(total.value, cfg);
    if (total.error_estimate <= target) {
      break;
    }
    const double cancellation = piece_mass > 0.0 ? std::min(1.0, std::abs(total.value) / piece_mass) : 1.0;
    piece_cfg = piece_cfg.tightened(std::max(0.5 * cancellation * target / total.error_estimate, 1e-4));
    IntegrationResult again = evaluate(piece_cfg);
    again.evaluations += total.evaluations;
    const bool progress = again.error_estimate < 0.5 * total.error_estimate;
    if (again.error_estimate < total.error_estimate) {
      total = again;
    } else {
      total.evaluations = again.evaluations;
    }
    if (!progress) {
      break;
    }
  }

  // Pieces that stopped on rounding noise still carry their error estimate.
  total.converged = std::isfinite(total.value) &&
                    total.error_estimate <= tolerance_for(total.value, cfg);
  return total;
}

IntegrationResult integrate_periodic(const Integrand1d& f, double lo, double hi,
                                     std::optional<double> graded_at,
                                     const QuadratureConfig& cfg)
{
  cfg.validate();
  if (!(lo < hi)) {
    throw ValidationError("periodic axis must satisfy lo < hi");
  }
  const double period = hi - lo;
  constexpr double two_pi = 2.0 * std::numbers::pi;

  // g(u) on [0, 1) whose plain average is the integral over one period.
  Integrand1d g;
  bool skip_origin = false;
  if (graded_at) {
    const double c = *graded_at;
    g = [&f, c, period](double u) {
      const double arg = two_pi * u;
      const double jac = 1.0 - std::cos(arg);
      return f(c + period * (u - std::sin(arg) / two_pi)) * period * jac;
    };
    skip_origin = true;
  } else {
    g = [&f, lo, period](double u) { return f(lo + period * u) * period; };
  }

  std::size_t evals = 0;
  std::size_t nodes = 8;
  double sum = 0.0;
  for (std::size_t j = skip_origin ? 1 : 0; j < nodes; ++j) {
    sum += g(static_cast<double>(j) / static_cast<double>(nodes));
    ++evals;
  }
  double estimate = sum / static_cast<double>(nodes);
  double error = std::numeric_limits<double>::infinity();
  const std::size_t max_nodes = std::max<std::size_t>(64, 32 * cfg.max_subdivisions);

  while (nodes < max_nodes) {
    const std::size_t refined = 2 * nodes;
    for (std::size_t j = 1; j < refined; j += 2) {
      sum += g(static_cast<double>(j) / static_cast<double>(refined));
      ++evals;
    }
    const double next = sum / static_cast<double>(refined);
    error = std::abs(next - estimate);
    estimate = next;
    nodes = refined;
    if (nodes >= 32 && error <= tolerance_for(estimate, cfg)) {
      break;
    }
  }

  IntegrationResult out;
  out.value = estimate;
  out.error_estimate = error;
  out.evaluations = evals;
  out.converged = std::isfinite(estimate) && error <= tolerance_for(estimate, cfg);
  return out;
}

namespace {

IntegrationResult nested_level(const IntegrandNd& f, std::span<const Axis> box,
                               const QuadratureConfig& cfg, std::size_t dim,
                               std::vector<double>& coords)
{
  const Axis& axis = box[dim];
  const QuadratureConfig level_cfg = cfg.tightened(std::pow(0.1, static_cast<double>(dim)));

  IntegrationResult r;
  if (dim + 1 == box.size()) {
    const Integrand1d g = [&](double x) {
      coords[dim] = x;
      return f(std::span<const double>(coords));
    };
    r = axis.periodic ? integrate_periodic(g, axis.lo, axis.hi, axis.graded_at, level_cfg)
                      : integrate_1d(g, axis.lo, axis.hi, level_cfg);
  } else if (!axis.periodic) {
    const NestedIntegrand g = [&](double x) {
      coords[dim] = x;
      return nested_level(f, box, cfg, dim + 1, coords);
    };
    r = integrate_1d_nested(g, axis.lo, axis.hi, {}, level_cfg);
  } else {
    // The periodic rule weights every node equally; bound the inner
    // contribution by the worst inner error over the period.
    double inner_error = 0.0;
    std::size_t evals = 0;
    const Integrand1d g = [&](double x) {
      coords[dim] = x;
      const IntegrationResult inner = nested_level(f, box, cfg, dim + 1, coords);
      inner_error = std::max(inner_error, inner.error_estimate);
      evals += inner.evaluations;
      return inner.value;
    };
    r = integrate_periodic(g, axis.lo, axis.hi, axis.graded_at, level_cfg);
    r.error_estimate += inner_error * (axis.hi - axis.lo);
    r.evaluations = evals;
  }
  r.converged = std::isfinite(r.value) && r.error_estimate <= tolerance_for(r.value, level_cfg);
  return r;
}

} // namespace

IntegrationResult integrate_nd(const IntegrandNd& f, std::span<const Axis> box,
                               const QuadratureConfig& cfg)
{
  cfg.validate();
  if (box.size() != 2 && box.size() != 3) {
    throw ValidationError("integrate_nd supports 2 or 3 dimensions");
  }
  for (const Axis& axis : box) {
    if (!(axis.lo < axis.hi)) {
      throw ValidationError("every box axis must satisfy lo < hi");
    }
  }
  std::vector<double> coords(box.size(), 0.0);
  IntegrationResult r = nested_level(f, box, cfg, 0, coords);
  r.converged = std::isfinite(r.value) && r.error_estimate <= tolerance_for(r.value, cfg);
  return r;
}

} // namespace qedcoh::quad
