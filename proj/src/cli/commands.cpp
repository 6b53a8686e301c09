#include "qedcoh/cli.hpp"

#include "qedcoh/csv.hpp"
#include "qedcoh/decoherence.hpp"
#include "qedcoh/errors.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <thread>

namespace qedcoh::cli {

namespace {

constexpr double kPi = std::numbers::pi;

/// Flat key=value files: keys without a section belong to the selected
/// command, so every key mirrors a command-line flag.
class FlatConfig : public CLI::ConfigTOML
{
public:
  explicit FlatConfig(std::string command) : command_(std::move(command)) {}

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override
  {
    auto items = CLI::ConfigTOML::from_config(input);
    if (!command_.empty()) {
      for (auto& item : items) {
        if (item.parents.empty()) {
          item.parents = {command_};
        }
      }
    }
    return items;
  }

private:
  std::string command_;
};

struct Common
{
  std::string out_path;
  double rel_tol = quad::QuadratureConfig{}.rel_tol;
  std::uint64_t seed = 20261017;
  std::string unit = "um";
  double alpha = PhysicalConstants{}.alpha_fs;
  unsigned threads = 0;

  quad::QuadratureConfig quadrature() const
  {
    quad::QuadratureConfig cfg;
    cfg.rel_tol = rel_tol;
    cfg.validate();
    return cfg;
  }

  PhysicalConstants constants() const
  {
    PhysicalConstants pc{alpha};
    pc.validate();
    return pc;
  }

  double unit_in_m() const
  {
    static const std::map<std::string, double> units{{"m", 1.0}, {"mm", 1e-3}, {"um", 1e-6}, {"nm", 1e-9}};
    return units.at(unit);
  }
};

struct ShapeArgs
{
  std::string shape = "sphere";
  double R = 0.5;
  double L = 1.0;

  Wavepacket make() const { return shape == "sphere" ? Wavepacket::sphere(R) : Wavepacket::cylinder(R, L); }

  std::string describe() const
  {
    return shape == "sphere" ? "sphere R=" + format_number(R)
                             : "cylinder R=" + format_number(R) + " L=" + format_number(L);
  }
};

/// Optional spreading-bound inputs shared by the geometry commands.
struct EnergyArgs
{
  double energy = 0.0;
  double dx0 = 0.0;

  std::optional<SpreadingCheck> check(const Common& common) const
  {
    if (energy == 0.0 && dx0 == 0.0) {
      return std::nullopt;
    }
    const ValidityInput in{energy, dx0 * common.unit_in_m()};
    in.validate();
    return SpreadingCheck{in, common.unit_in_m()};
  }
};

struct SweepArgs
{
  std::string variable;
  double min = 0.0;
  double max = 0.0;
  std::size_t steps = 0;
};

void add_common(CLI::App* cmd, Common& c)
{
  cmd->add_option("--out", c.out_path, "Write the report or CSV to this file instead of standard output");
  cmd->add_option("--rel-tol", c.rel_tol, "Relative tolerance of the quadratures")->capture_default_str();
  cmd->add_option("--seed", c.seed, "Seed of the Monte-Carlo oracle")->capture_default_str();
  cmd->add_option("--unit", c.unit, "Length unit of every length input")
    ->check(CLI::IsMember({"m", "mm", "um", "nm"}))
    ->capture_default_str();
  cmd->add_option("--alpha", c.alpha, "Fine-structure constant")->capture_default_str();
  cmd->add_option("--threads", c.threads, "Worker threads for sweeps (0: hardware concurrency)")
    ->capture_default_str();
}

void add_shape(CLI::App* cmd, ShapeArgs& s)
{
  cmd->add_option("--shape", s.shape, "Wavepacket shape")
    ->check(CLI::IsMember({"sphere", "cylinder"}))
    ->capture_default_str();
  cmd->add_option("--R", s.R, "Sphere or cylinder radius")->capture_default_str();
  cmd->add_option("--L", s.L, "Cylinder length")->capture_default_str();
}

void add_energy(CLI::App* cmd, EnergyArgs& e)
{
  cmd->add_option("--energy", e.energy, "Kinetic energy in eV; enables the spreading check with --dx0");
  cmd->add_option("--dx0", e.dx0, "Initial wavepacket size for the spreading check");
}

template <class T>
struct Slot
{
  std::optional<T> value;
  std::exception_ptr error;
};

/// Evaluates fn(0..n-1) on worker threads; results keep the index order.
template <class T>
std::vector<Slot<T>> parallel_map(std::size_t n, unsigned threads, const std::function<T(std::size_t)>& fn)
{
  std::vector<Slot<T>> slots(n);
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        slots[i].value = fn(i);
      } catch (...) {
        slots[i].error = std::current_exception();
      }
    }
  };
  const unsigned hw = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
  const std::size_t count = std::min<std::size_t>(hw, n);
  std::vector<std::jthread> pool;
  for (std::size_t t = 1; t < count; ++t) {
    pool.emplace_back(work);
  }
  work();
  return slots;
}

std::vector<double> grid(double lo, double hi, std::size_t steps, bool log_spacing)
{
  std::vector<double> g(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    const double u = static_cast<double>(i) / static_cast<double>(steps - 1);
    g[i] = log_spacing ? lo * std::pow(hi / lo, u) : lo + (hi - lo) * u;
  }
  g.front() = lo;
  g.back() = hi;
  return g;
}

std::vector<double> sweep_grid(const SweepArgs& s)
{
  if (!(s.min > 0.0 && s.max > s.min)) {
    throw ValidationError("sweep range must satisfy 0 < sweep-min < sweep-max");
  }
  if (s.steps < 2) {
    throw ValidationError("sweep-steps must be at least 2");
  }
  return grid(s.min, s.max, s.steps, true);
}

void print_warnings(std::ostream& os, const std::vector<RegimeWarning>& warnings, const std::vector<std::string>& notes)
{
  for (const auto& w : warnings) {
    os << "warning[" << w.code << "] = " << w.message << '\n';
  }
  for (const auto& n : notes) {
    os << "note = " << n << '\n';
  }
}

void line(std::ostream& os, const std::string& key, double value) { os << key << " = " << format_number(value) << '\n'; }

void emit_sweep_rows(std::ostream& os, const std::string& variable, const std::vector<double>& xs,
                     const std::vector<Slot<DecoherenceResult>>& rows)
{
  CsvWriter csv(os, {variable, "w_vacuum", "w_photon", "w_total"});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].error) {
      csv.flush();
      std::rethrow_exception(rows[i].error);
    }
    const auto& r = *rows[i].value;
    csv.row(std::vector<double>{xs[i], r.w_vacuum, r.w_photon, r.w_total});
  }
}

// kappa-sweep ----------------------------------------------------------------

struct KappaSweepArgs
{
  std::string shape = "cylinder";
  double beta_min = 0.1;
  double beta_max = 20.0;
  std::size_t steps = 40;
  bool log_spacing = true;
};

void run_kappa_sweep(const KappaSweepArgs& a, const Common& c, std::ostream& os)
{
  const auto cfg = c.quadrature();
  if (a.shape == "sphere") {
    const auto k = kappa(Wavepacket::sphere(1.0), cfg);
    CsvWriter csv(os, {"beta", "kappa", "error_estimate"});
    csv.row(std::vector<std::string>{"-", format_number(k.kappa), format_number(k.error_estimate)});
    return;
  }
  if (!(a.beta_min > 0.0 && a.beta_max > a.beta_min)) {
    throw ValidationError("beta range must satisfy 0 < beta-min < beta-max");
  }
  if (a.steps < 2) {
    throw ValidationError("steps must be at least 2");
  }
  auto betas = grid(a.beta_min, a.beta_max, a.steps, a.log_spacing);
  // The cusp sits at beta = 2; make it a grid point whenever it is bracketed.
  if (a.beta_min < 2.0 && 2.0 < a.beta_max && std::find(betas.begin(), betas.end(), 2.0) == betas.end()) {
    betas.insert(std::upper_bound(betas.begin(), betas.end(), 2.0), 2.0);
  }
  const auto rows = parallel_map<KappaResult>(betas.size(), c.threads, [&](std::size_t i) {
    return kappa(Wavepacket::cylinder(1.0, betas[i]), cfg);
  });
  CsvWriter csv(os, {"beta", "kappa", "error_estimate"});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].error) {
      csv.flush();
      std::rethrow_exception(rows[i].error);
    }
    csv.row(std::vector<double>{betas[i], rows[i].value->kappa, rows[i].value->error_estimate});
  }
}

// parallel -------------------------------------------------------------------

struct ParallelArgs
{
  ParallelGeometry geom{100.0, 1e6, 0.01};
  std::string kernel = "exact";
  ShapeArgs shape;
  EnergyArgs energy;
  SweepArgs sweep;
};

void run_parallel(const ParallelArgs& a, const Common& c, std::ostream& os)
{
  a.geom.validate();
  const auto wp = a.shape.make();
  const auto cfg = c.quadrature();
  const auto pc = c.constants();
  const auto mode = a.kernel == "exact" ? PhotonKernel::exact : PhotonKernel::asymptotic;
  const auto spreading = a.energy.check(c);

  if (!a.sweep.variable.empty()) {
    const auto xs = sweep_grid(a.sweep);
    const auto kap = kappa(wp, cfg);
    const auto rows = parallel_map<DecoherenceResult>(xs.size(), c.threads, [&](std::size_t i) {
      const ParallelGeometry g{a.geom.r0, xs[i], a.geom.v};
      DecoherenceResult r;
      r.w_vacuum = w_vacuum_parallel(g, kap, pc);
      r.w_photon = w_photon_parallel(g, mode, pc);
      r.w_total = r.w_vacuum + r.w_photon;
      return r;
    });
    emit_sweep_rows(os, "T", xs, rows);
    return;
  }

  auto r = w_total_parallel(a.geom, wp, mode, cfg, pc);
  r.regime_warnings = check_regime(a.geom, wp, spreading);
  os << "geometry = parallel\n";
  line(os, "r0", a.geom.r0);
  line(os, "T", a.geom.T);
  line(os, "v", a.geom.v);
  os << "unit = " << c.unit << '\n';
  os << "wavepacket = " << a.shape.describe() << '\n';
  line(os, "ell", r.term("ell"));
  line(os, "kappa", r.term("kappa"));
  os << "kernel = " << a.kernel << '\n';
  line(os, "K", r.term("K"));
  line(os, "W_V", r.w_vacuum);
  line(os, "W_gamma", r.w_photon);
  line(os, "W", r.w_total);
  line(os, "contrast", r.contrast);
  line(os, "W_plateau", w_parallel_plateau(a.geom.r0, r.term("ell"), r.term("kappa"), pc));
  line(os, "error_estimate", r.error_estimate);
  print_warnings(os, r.regime_warnings, r.notes);
}

// intersect ------------------------------------------------------------------

struct IntersectArgs
{
  IntersectingGeometry geom{100.0, 1e4, 1.5707963, 0.1};
  std::string branch = "closed";
  ShapeArgs shape;
  EnergyArgs energy;
  SweepArgs sweep;
};

void run_intersect(const IntersectArgs& a, const Common& c, std::ostream& os)
{
  a.geom.validate();
  const auto wp = a.shape.make();
  const auto cfg = c.quadrature();
  const auto pc = c.constants();
  const auto branch = a.branch == "closed" ? SegmentBranch::closed : SegmentBranch::assembled;
  const auto spreading = a.energy.check(c);

  if (!a.sweep.variable.empty()) {
    const auto xs = sweep_grid(a.sweep);
    const double ell0 = characteristic_length(wp);
    const auto rows = parallel_map<DecoherenceResult>(xs.size(), c.threads, [&](std::size_t i) {
      if (a.sweep.variable == "ell") {
        return w_total_intersecting(a.geom, wp.scaled(xs[i] / ell0), branch, cfg, pc);
      }
      return w_total_intersecting({a.geom.L1, xs[i], a.geom.theta, a.geom.v}, wp, branch, cfg, pc);
    });
    emit_sweep_rows(os, a.sweep.variable, xs, rows);
    return;
  }

  auto r = w_total_intersecting(a.geom, wp, branch, cfg, pc);
  r.regime_warnings = check_regime(a.geom, wp, spreading);
  os << "geometry = intersecting\n";
  line(os, "L1", a.geom.L1);
  line(os, "L2", a.geom.L2);
  line(os, "theta", a.geom.theta);
  line(os, "v", a.geom.v);
  os << "unit = " << c.unit << '\n';
  os << "wavepacket = " << a.shape.describe() << '\n';
  os << "branch = " << a.branch << '\n';
  for (const auto& [name, value] : r.breakdown) {
    line(os, name, value);
  }
  line(os, "W_V", r.w_vacuum);
  line(os, "W_gamma", r.w_photon);
  line(os, "W", r.w_total);
  line(os, "contrast", r.contrast);
  line(os, "W_closed_form", w_intersecting_closed(a.geom.theta, a.geom.v, r.term("kappa"), pc));
  line(os, "error_estimate", r.error_estimate);
  line(os, "asymptotic_budget", intersecting_asymptotic_budget(a.geom, r.term("ell"), pc));
  print_warnings(os, r.regime_warnings, r.notes);
}

// verify ---------------------------------------------------------------------

struct Check
{
  std::string name;
  double value;
  double reference;
  /// Absolute tolerance on |value - reference|.
  double tolerance;

  bool passed() const { return std::abs(value - reference) <= tolerance; }
};

std::vector<Check> kernel_checks(const Common& c)
{
  const auto cfg = c.quadrature();
  auto seg_cfg = segment_quadrature_defaults();
  seg_cfg.rel_tol = std::max(seg_cfg.rel_tol, c.rel_tol);
  std::vector<Check> out;
  for (double ratio : {1.5, 2.0, 5.0, 10.0, 100.0}) {
    const double closed = kernel_K_closed(ratio, 1.0);
    const auto num = kernel_K_numeric(ratio, 1.0, cfg);
    out.push_back({"K closed vs PV, T/rho=" + format_number(ratio), num.value, closed, 1e-8 * std::abs(closed)});
  }
  // At T = rho the integrand reduces to -2/(tau + rho).
  const auto limit = quad::integrate_1d([](double t) { return -2.0 / (t + 1.0); }, 0.0, 1.0, cfg);
  out.push_back({"K limit T=rho vs -2 ln 2", limit.value, kernel_K_coincident_limit(), 1e-10});
  const double K100 = kernel_K_closed(100.0, 1.0);
  out.push_back({"K asymptote, T/rho=100", kernel_K_asymptotic(100.0, 1.0), K100, 0.01 * std::abs(K100)});

  SegmentPairInput inp;
  inp.L1 = 1e3;
  inp.L2 = 1e5;
  inp.ell = 1.0;
  inp.v = 0.01;
  inp.theta = kPi / 6.0;
  const double jab = segment_J_ab_closed(inp);
  out.push_back({"J_ab exact vs double integral", segment_J_ab_numeric(inp, cfg).value, jab, 1e-8 * std::abs(jab)});
  const double iaa = segment_I_aa_closed(inp);
  out.push_back({"I_aa PV vs closed, v=0.01", segment_I_aa_numeric(inp, seg_cfg).value, iaa, 0.01 * std::abs(iaa)});
  inp.theta = kPi / 4.0;
  const double iab = segment_I_ab_closed(inp);
  out.push_back({"I_ab PV vs closed, v=0.01", segment_I_ab_numeric(inp, seg_cfg).value, iab, 0.02 * std::abs(iab)});
  // L2 / (2 L1 v sin theta) = 100.
  inp.L2 = 100.0 * 2.0 * inp.L1 * inp.v * std::sin(inp.theta);
  out.push_back({"I_bb closed vs K, T/rho=100", segment_I_bb_closed(inp), segment_I_bb_kernel(inp), 3.0 / 100.0});
  return out;
}

std::vector<Check> kappa_checks(const Common& c, std::size_t samples)
{
  const auto cfg = c.quadrature();
  std::vector<Check> out;
  const auto sphere = Wavepacket::sphere(1.0);
  out.push_back({"kappa sphere, closed", kappa(sphere, cfg).kappa, -1.5, 0.0});
  out.push_back({"kappa sphere, quadrature", kappa_numeric(sphere, cfg).kappa, -1.5, 1e-3});
  const auto mc = kappa_bruteforce_oracle(sphere, samples, c.seed);
  out.push_back({"kappa sphere, Monte-Carlo", mc.kappa, -1.5, 4.0 * mc.error_estimate});
  const double betas[] = {0.25, 1.0, 2.0, 4.0, 8.0};
  const auto rows = parallel_map<Check>(std::size(betas), c.threads, [&](std::size_t i) {
    const auto wp = Wavepacket::cylinder(1.0, betas[i]);
    const auto det = kappa(wp, cfg);
    const auto oracle = kappa_bruteforce_oracle(wp, samples, c.seed + i + 1);
    return Check{"kappa cylinder beta=" + format_number(betas[i]) + " vs Monte-Carlo", det.kappa, oracle.kappa,
                 4.0 * std::hypot(det.error_estimate, oracle.error_estimate)};
  });
  for (const auto& r : rows) {
    if (r.error) {
      std::rethrow_exception(r.error);
    }
    out.push_back(*r.value);
  }
  return out;
}

int run_verify(const std::string& suite, std::size_t samples, const Common& c, std::ostream& os)
{
  std::vector<Check> checks;
  if (suite == "kernels" || suite == "all") {
    const auto k = kernel_checks(c);
    checks.insert(checks.end(), k.begin(), k.end());
  }
  if (suite == "kappa" || suite == "all") {
    const auto k = kappa_checks(c, samples);
    checks.insert(checks.end(), k.begin(), k.end());
  }
  std::size_t width = 5;
  for (const auto& ch : checks) {
    width = std::max(width, ch.name.size());
  }
  const auto pad = [](std::string s, std::size_t w) {
    s.resize(std::max(s.size(), w), ' ');
    return s;
  };
  os << pad("check", width) << "  " << pad("value", 20) << pad("reference", 20) << pad("|diff|", 20)
     << pad("tolerance", 20) << "status\n";
  bool all = true;
  for (const auto& ch : checks) {
    all = all && ch.passed();
    os << pad(ch.name, width) << "  " << pad(format_number(ch.value), 20) << pad(format_number(ch.reference), 20)
       << pad(format_number(std::abs(ch.value - ch.reference)), 20) << pad(format_number(ch.tolerance), 20)
       << (ch.passed() ? "PASS" : "FAIL") << '\n';
  }
  os << (all ? "all checks passed\n" : "some checks failed\n");
  return all ? kSuccess : kVerificationFailed;
}

// validity -------------------------------------------------------------------

void run_validity(double energy, double dx0, const Common& c, std::ostream& os)
{
  const ValidityInput in{energy, dx0 * c.unit_in_m()};
  const auto bound = max_flight_distance(in);
  char approx[32];
  std::snprintf(approx, sizeof approx, "%.2g", bound.distance_m);
  line(os, "energy_eV", energy);
  line(os, "dx0_m", in.dx0);
  line(os, "max_flight_distance_m", bound.distance_m);
  // 1 m (E / 10 keV)^(1/2) (dx0 / 1 um)^2
  line(os, "rule_of_thumb_m", std::sqrt(energy / 1e4) * std::pow(in.dx0 / 1e-6, 2));
  os << "flight distance must satisfy L << " << format_number(bound.distance_m) << " m (≈ " << approx << " m)\n";
  print_warnings(os, bound.warnings, {});
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
  CLI::App app{"Decoherence of electron interference by vacuum fluctuations and photon emission.\n"
               "Lengths and times share one unit (c = 1); speeds are fractions of c."};
  app.name("qedcoh");
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "Flat key=value file; keys are the long flag names, '#' starts a comment");
  app.allow_config_extras(CLI::config_extras_mode::error);

  Common common;

  KappaSweepArgs ks;
  auto* kappa_cmd = app.add_subcommand("kappa-sweep", "Shape constant kappa of cylinders over beta = L/R");
  kappa_cmd->footer("CSV columns: beta (L/R, '-' for the sphere), kappa, error_estimate (quadrature error of "
                    "kappa). beta = 2 is added to the grid when bracketed.");
  kappa_cmd->add_option("--shape", ks.shape, "Wavepacket shape")
    ->check(CLI::IsMember({"cylinder", "sphere"}))
    ->capture_default_str();
  kappa_cmd->add_option("--beta-min", ks.beta_min, "Smallest beta")->capture_default_str();
  kappa_cmd->add_option("--beta-max", ks.beta_max, "Largest beta")->capture_default_str();
  kappa_cmd->add_option("--steps", ks.steps, "Grid points")->capture_default_str();
  kappa_cmd->add_flag("--log,!--linear", ks.log_spacing, "Logarithmic (default) or linear spacing");

  ParallelArgs pa;
  auto* par_cmd = app.add_subcommand("parallel", "Two parallel paths a distance r0 apart");
  par_cmd->footer("T is the rest-frame flight time. With --sweep T the output is CSV with columns "
                  "T (flight time), w_vacuum (W_V), w_photon (W_gamma), w_total (W = W_V + W_gamma).");
  par_cmd->add_option("--r0", pa.geom.r0, "Path separation")->capture_default_str();
  par_cmd->add_option("--T", pa.geom.T, "Flight time")->capture_default_str();
  par_cmd->add_option("--v", pa.geom.v, "Speed")->capture_default_str();
  par_cmd->add_option("--kernel", pa.kernel, "Photon kernel")
    ->check(CLI::IsMember({"exact", "asymptotic"}))
    ->capture_default_str();
  par_cmd->add_option("--sweep", pa.sweep.variable, "Sweep variable")->check(CLI::IsMember({"T"}));
  par_cmd->add_option("--sweep-min", pa.sweep.min, "First sweep value");
  par_cmd->add_option("--sweep-max", pa.sweep.max, "Last sweep value");
  par_cmd->add_option("--sweep-steps", pa.sweep.steps, "Log-spaced sweep points");
  add_shape(par_cmd, pa.shape);
  add_energy(par_cmd, pa.energy);

  IntersectArgs ia;
  auto* int_cmd = app.add_subcommand("intersect", "Two paths meeting at an angle 2 theta");
  int_cmd->footer("With --sweep ell (wavepacket rescaled) or --sweep L2 the output is CSV with columns "
                  "<variable>, w_vacuum (W_V), w_photon (W_gamma), w_total (W = W_V + W_gamma).");
  int_cmd->add_option("--L1", ia.geom.L1, "Length of the first segments")->capture_default_str();
  int_cmd->add_option("--L2", ia.geom.L2, "Length of the second segments")->capture_default_str();
  int_cmd->add_option("--theta", ia.geom.theta, "Half-opening angle in radians")->capture_default_str();
  int_cmd->add_option("--v", ia.geom.v, "Speed")->capture_default_str();
  int_cmd->add_option("--branch", ia.branch, "Closed small-v forms or numeric principal values")
    ->check(CLI::IsMember({"closed", "assembled"}))
    ->capture_default_str();
  int_cmd->add_option("--sweep", ia.sweep.variable, "Sweep variable")->check(CLI::IsMember({"ell", "L2"}));
  int_cmd->add_option("--sweep-min", ia.sweep.min, "First sweep value");
  int_cmd->add_option("--sweep-max", ia.sweep.max, "Last sweep value");
  int_cmd->add_option("--sweep-steps", ia.sweep.steps, "Log-spaced sweep points");
  add_shape(int_cmd, ia.shape);
  add_energy(int_cmd, ia.energy);

  std::string suite = "all";
  std::size_t samples = 1'000'000;
  auto* verify_cmd = app.add_subcommand("verify", "Closed forms against quadrature and Monte-Carlo oracles");
  verify_cmd->add_option("suite", suite, "kernels, kappa or all")->capture_default_str();
  verify_cmd->add_option("--samples", samples, "Monte-Carlo samples per kappa check")->capture_default_str();

  double energy = 0.0;
  double dx0 = 0.0;
  auto* validity_cmd = app.add_subcommand("validity", "Flight distance below which wavepacket spreading is negligible");
  validity_cmd->add_option("--energy", energy, "Kinetic energy in eV")->required();
  validity_cmd->add_option("--dx0", dx0, "Initial wavepacket size")->required();

  for (auto* cmd : {kappa_cmd, par_cmd, int_cmd, verify_cmd, validity_cmd}) {
    cmd->configurable();
    cmd->allow_config_extras(CLI::config_extras_mode::error);
    add_common(cmd, common);
  }

  // Flat config keys belong to the command named on the line.
  std::string command;
  for (std::size_t i = 1; i < args.size() && command.empty(); ++i) {
    if (app.get_subcommand_no_throw(args[i]) != nullptr) {
      command = args[i];
    }
  }
  app.config_formatter(std::make_shared<FlatConfig>(command));

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kInvalidInput;
  }

  std::ofstream file;
  if (!common.out_path.empty()) {
    file.open(common.out_path);
    if (!file) {
      err << "error: cannot open " << common.out_path << " for writing\n";
      return kInvalidInput;
    }
  }
  std::ostream& os = common.out_path.empty() ? out : file;

  try {
    int code = kSuccess;
    if (*kappa_cmd) {
      run_kappa_sweep(ks, common, os);
    } else if (*par_cmd) {
      run_parallel(pa, common, os);
    } else if (*int_cmd) {
      run_intersect(ia, common, os);
    } else if (*verify_cmd) {
      if (suite != "kernels" && suite != "kappa" && suite != "all") {
        err << "error: unknown suite '" << suite << "' (kernels, kappa or all)\n";
        return kInvalidInput;
      }
      code = run_verify(suite, samples, common, os);
    } else if (*validity_cmd) {
      run_validity(energy, dx0, common, os);
    }
    os.flush();
    return code;
  } catch (const NonConvergence& e) {
    os.flush();
    err << "error: " << e.what() << " (best estimate " << format_number(e.best_estimate) << ", error "
        << format_number(e.error_estimate) << ")\n";
    return kNonConvergence;
  } catch (const Error& e) {
    os.flush();
    err << "error: " << e.what() << '\n';
    return kInvalidInput;
  }
}

} // namespace qedcoh::cli
