#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "common.hpp"
#include "mgtrap/constants.hpp"
#include "mgtrap/field_model.hpp"
#include "mgtrap/scenario/commands.hpp"
#include "mgtrap/scenario/parallel.hpp"
#include "mgtrap/tracking.hpp"

namespace mgtrap::scenario {

using detail::json;
using detail::say;
namespace fs = std::filesystem;
using constants::kMicron;
using constants::kPicogram;

const std::string& builtin_rough_vacuum_yaml() {
  static const std::string text = R"(trap:
  y0_um: 75
  measured: {fx_hz: 104, fy_hz: 130, fz_hz: 9.6}
  material: {chi_si: -2.2e-5, rho_kg_m3: 3500}
particle:
  mass_pg: 28
gas:
  pressures_mbar: [5.3e-2, 2.7e-2, 1.3e-2, 6.7e-3]
  temperature_k: 295
  kappa_hz_per_mbar: 63
sim:
  duration_s: 60
  output_rate_hz: 496
  steps_per_sample_count: 20
  n_trials_count: 30
  seed_id: 20170601
analysis:
  axes: [x, y, z]
  calibrate_axes: [y, z]
  calibrate: mass
tracking:
  duration_s: 20
  dropout_ratio: 0.01
  min_mass_counts: 400
)";
  return text;
}

const std::string& builtin_high_vacuum_yaml() {
  static const std::string text = R"(trap:
  y0_um: 75
  measured: {fx_hz: 104, fy_hz: 130, fz_hz: 9.6}
  material: {chi_si: -2.2e-5, rho_kg_m3: 3500}
particle:
  mass_pg: 28
gas:
  pressures_mbar: [7e-8]
  temperature_k: 295
  kappa_hz_per_mbar: 63
feedback:
  mode: bandpass
  x: {enabled: false, projection_weight_ratio: 1}
  y: {enabled: true, center_hz: 130, bandwidth_hz: 40, gain_n_s_per_m: 5e-13, force_max_pn: 1000,
      detection_noise_um: 0.03, projection_weight_ratio: 1}
  z: {enabled: true, center_hz: 9.6, bandwidth_hz: 5, gain_n_s_per_m: 6e-13, force_max_pn: 1000,
      detection_noise_um: 0.03, projection_weight_ratio: 1}
sim:
  duration_s: 60
  warmup_s: 5
  output_rate_hz: 496
  steps_per_sample_count: 20
  n_trials_count: 10
  seed_id: 20170602
analysis:
  axes: [y, z]
  calibrate_axes: [y, z]
  calibrate: temperature
)";
  return text;
}

namespace {

// Reference values for one trapped cluster: pressure, axis, f0, linewidth,
// S0 and calibrated mass with its quoted uncertainty and rounding step.
struct ReferenceRow {
  double pressure;
  Axis axis;
  double f0, gamma;
  double s0, mass, mass_err, mass_step;
};

const std::vector<ReferenceRow>& reference_rows() {
  static const std::vector<ReferenceRow> rows{
      {5.3e-2, Axis::Z, 9.64, 3.39, 24.5, 28.8, 0.4, 0.1},   {5.3e-2, Axis::Y, 129.53, 3.56, 0.151, 25.9, 0.3, 0.1},
      {5.3e-2, Axis::X, 104.03, 3.2, 0, 0, 0, 0},             {2.7e-2, Axis::Z, 9.56, 1.67, 23.3, 30.8, 0.4, 0.1},
      {2.7e-2, Axis::Y, 129.56, 1.75, 0.146, 26.9, 0.4, 0.1}, {2.7e-2, Axis::X, 104.03, 1.66, 0, 0, 0, 0},
      {1.3e-2, Axis::Z, 9.58, 0.87, 23.5, 30.5, 0.6, 0.1},    {1.3e-2, Axis::Y, 129.65, 0.91, 0.149, 26.3, 0.7, 0.1},
      {1.3e-2, Axis::X, 104.05, 0.87, 0, 0, 0, 0},            {6.7e-3, Axis::Z, 9.57, 0.40, 25.9, 27.7, 0.7, 0.1},
      {6.7e-3, Axis::Y, 129.66, 0.47, 0.150, 26.0, 1.0, 1.0}, {6.7e-3, Axis::X, 104.10, 0.44, 0, 0, 0, 0},
  };
  return rows;
}

// Cooled reference rows: f0, linewidth, temperature.
struct CooledRow {
  Axis axis;
  double f0, gamma, temperature;
};
const CooledRow kCooled[] = {{Axis::Z, 10.3, 10.6, 0.60}, {Axis::Y, 130.72, 6.3, 3.2}};

enum class Status { Pass, Fail, Info };

struct Check {
  std::string criterion;
  std::string name;
  std::string measured;
  std::string expected;
  Status status;
};

class Report {
 public:
  explicit Report(const RunOptions& opts) : opts_(opts) {}

  void add(std::string criterion, std::string name, std::string measured, std::string expected, Status status) {
    checks_.push_back({std::move(criterion), std::move(name), std::move(measured), std::move(expected), status});
    const Check& c = checks_.back();
    say(opts_, line(c));
  }

  void within(const std::string& criterion, const std::string& name, double value, double target, double rel_tol) {
    const bool ok = std::isfinite(value) && std::abs(value - target) <= rel_tol * std::abs(target);
    add(criterion, name, format_number(value), format_number(target) + " +- " + format_number(100 * rel_tol) + "%",
        ok ? Status::Pass : Status::Fail);
  }

  void fail(const std::string& criterion, const std::string& name, const std::string& why) {
    add(criterion, name, why, "", Status::Fail);
  }

  bool all_pass() const {
    return std::none_of(checks_.begin(), checks_.end(), [](const Check& c) { return c.status == Status::Fail; });
  }

  std::string csv() const {
    std::ostringstream os;
    os << "criterion,check,measured,expected,status\n";
    for (const auto& c : checks_) {
      os << c.criterion << ',' << c.name << ',' << c.measured << ',' << c.expected << ',' << status_name(c.status)
         << '\n';
    }
    return os.str();
  }

  std::string text() const {
    std::ostringstream os;
    for (const auto& c : checks_) os << line(c) << '\n';
    return os.str();
  }

 private:
  static const char* status_name(Status s) { return s == Status::Pass ? "PASS" : (s == Status::Fail ? "FAIL" : "INFO"); }

  static std::string line(const Check& c) {
    char buf[320];
    std::snprintf(buf, sizeof buf, "[%s] %-5s %-34s %-16s %s", status_name(c.status), c.criterion.c_str(),
                  c.name.c_str(), c.measured.c_str(), c.expected.empty() ? "" : ("(" + c.expected + ")").c_str());
    return buf;
  }

  const RunOptions& opts_;
  std::vector<Check> checks_;
};

using Clock = std::chrono::steady_clock;

std::string describe(const NumericalError& e) {
  const char* kind = dynamic_cast<const NoEquilibrium*>(&e)        ? "NoEquilibrium: "
                     : dynamic_cast<const NoConvergence*>(&e)      ? "NoConvergence: "
                     : dynamic_cast<const Unstable*>(&e)           ? "Unstable: "
                     : dynamic_cast<const ImaginaryFrequency*>(&e) ? "ImaginaryFrequency: "
                     : dynamic_cast<const Escape*>(&e)             ? "Escape: "
                     : dynamic_cast<const NoPeak*>(&e)             ? "NoPeak: "
                                                                   : "";
  return kind + std::string(e.what());
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string pct(double x) { return format_number(std::round(x * 1e4) / 1e2) + "%"; }

const SummaryRow* find_row(const std::vector<SummaryRow>& rows, std::optional<double> pressure, Axis axis) {
  for (const auto& r : rows) {
    if (r.axis != axis) continue;
    if (pressure && (!r.pressure || std::abs(*r.pressure - *pressure) > 1e-9 * *pressure)) continue;
    return &r;
  }
  return nullptr;
}

std::string axis_label(Axis a) {
  return a == Axis::X ? "transverse" : (a == Axis::Y ? "vertical" : "axial");
}

RunOptions sub_options(const RunOptions& opts, const fs::path& dir) {
  RunOptions o = opts;
  o.out = opts.out / dir;
  return o;
}

// ---------------------------------------------------------------- criteria 5, 6

void check_field_properties(Report& rep, const MultipoleCoefficients& c) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> u(-0.5 * c.y0, 0.5 * c.y0);
  const double h = 1e-6 * c.y0;
  double worst_div = 0, worst_curl = 0, worst_grad = 0, worst_hess = 0;
  for (int n = 0; n < 1000; ++n) {
    const Vec3 p{u(rng), u(rng), u(rng)};
    Mat3 jac;
    Eigen::Vector3d fd_grad;
    Mat3 fd_hess;
    for (int k = 0; k < 3; ++k) {
      Vec3 dp;
      dp[k] = h;
      const Vec3 bp = field_B(c, p + dp), bm = field_B(c, p - dp);
      for (int i = 0; i < 3; ++i) jac(i, k) = (bp[i] - bm[i]) / (2 * h);
      fd_grad(k) = (b_squared(c, p + dp) - b_squared(c, p - dp)) / (2 * h);
      const Vec3 gp = grad_b_squared(c, p + dp), gm = grad_b_squared(c, p - dp);
      for (int i = 0; i < 3; ++i) fd_hess(i, k) = (gp[i] - gm[i]) / (2 * h);
    }
    const double jn = jac.norm();
    worst_div = std::max(worst_div, std::abs(jac.trace()) / jn);
    worst_curl = std::max(worst_curl, (jac - jac.transpose()).norm() / jn);
    const Vec3 g = grad_b_squared(c, p);
    const Eigen::Vector3d ga(g.x, g.y, g.z);
    worst_grad = std::max(worst_grad, (ga - fd_grad).norm() / ga.norm());
    const Mat3 ha = hess_b_squared(c, p);
    worst_hess = std::max(worst_hess, (ha - fd_hess).norm() / ha.norm());
  }
  const double elapsed = seconds_since(t0);
  auto row = [&](const char* name, double v) {
    rep.add("C5", name, format_number(v), "<= 1e-6", v <= 1e-6 ? Status::Pass : Status::Fail);
  };
  row("div B (Laplacian of potential)", worst_div);
  row("curl B", worst_curl);
  row("grad |B|^2 vs finite difference", worst_grad);
  row("Hess |B|^2 vs finite difference", worst_hess);
  rep.add("C5", "runtime (1000 points)", "", "< 1 s", elapsed < 1.0 ? Status::Pass : Status::Fail);
}

void check_size_independence(Report& rep, const TrapModel& trap) {
  Particle ref;
  ref.material = trap.material;
  const ModeFrequencies f_ref = mode_frequencies(trap, ref);
  double worst = 0;
  for (double m : {1e-21, 1e-18, 1e-15, 28e-15, 1e-12, 1e-9}) {
    Particle p = ref;
    p.mass = m;
    const ModeFrequencies f = mode_frequencies(trap, p);
    for (int i = 0; i < 3; ++i) worst = std::max(worst, std::abs(f[i] - f_ref[i]) / f_ref[i]);
  }
  rep.add("C6", "mode frequencies vs particle mass", format_number(worst), "<= 1e-12",
          worst <= 1e-12 ? Status::Pass : Status::Fail);
}

// ---------------------------------------------------------------- criterion 2

void check_mass_arithmetic(Report& rep, double temperature) {
  const auto t0 = Clock::now();
  std::vector<std::pair<const ReferenceRow*, double>> results;
  for (const auto& r : reference_rows()) {
    if (r.mass == 0) continue;
    PsdFit fit;
    fit.f0 = r.f0;
    fit.s0 = r.s0;
    results.emplace_back(&r, mass_from_fit(fit, temperature).value / kPicogram);
  }
  const double elapsed = seconds_since(t0);
  for (const auto& [r, m] : results) {
    const double tol = r->mass_err + 0.5 * r->mass_step;
    const std::string name = "mass " + format_number(r->pressure) + " mbar " + axis_label(r->axis);
    rep.add("C2", name, format_number(std::round(m * 100) / 100) + " pg",
            format_number(r->mass) + " +- " + format_number(tol) + " pg",
            std::abs(m - r->mass) <= tol ? Status::Pass : Status::Fail);
  }
  rep.add("C2", "runtime", "", "< 1 ms", elapsed < 1e-3 ? Status::Pass : Status::Fail);
}

// ---------------------------------------------------------------- criterion 7

void check_tracking(Report& rep, const ScenarioConfig& cfg, const TrapModel& trap, const RunOptions& opts) {
  const TrackingSection tr = cfg.tracking.value_or(TrackingSection{});
  const CameraModel& cam = tr.camera;

  // Localisation accuracy at SNR ~ 10 on random sub-pixel positions.
  {
    std::mt19937_64 rng(777);
    std::uniform_real_distribution<double> uy(-5.0, 5.0), uz(-20.0, 20.0);
    double sum2 = 0;
    int n = 0, lost = 0;
    for (int i = 0; i < 1000; ++i) {
      const PlanePosition p{uy(rng), uz(rng)};
      const auto loc = locate(render_frame(cam, p, 9000 + i), cam, tr.min_mass);
      if (!loc) {
        ++lost;
        continue;
      }
      sum2 += std::pow(loc->row - to_row(cam, p.y), 2) + std::pow(loc->col - to_col(cam, p.z), 2);
      ++n;
    }
    const double rms = n ? std::sqrt(sum2 / n) : INFINITY;
    rep.add("C7", "render/locate RMS error (SNR 10)", format_number(std::round(rms * 1e4) / 1e4) + " px", "< 0.2 px",
            rms < 0.2 && lost == 0 ? Status::Pass : Status::Fail);
  }

  // Tracked trajectory versus the direct one, with and without dropouts.
  const fs::path dir = opts.out / "tracking";
  detail::ensure_dir(dir);
  SimConfig sc = cfg.sim.sim;
  sc.duration = tr.duration;
  sc.output_rate = tr.fps;
  sc.dt = 1.0 / (20.0 * tr.fps);
  sc.seed = cfg.seed() + 999983;
  const GasEnvironment gas = cfg.gas.pressures.empty() ? GasEnvironment{} : cfg.gas.at(0);
  const SimResult sim = simulate(trap, cfg.particle(), gas, FeedbackConfig{}, sc);
  const std::size_t n = sim.truth.size();

  std::mt19937_64 drop_rng(sc.seed ^ 0x5eedULL);
  std::vector<bool> dropped(n, false);
  const auto n_drop = static_cast<std::size_t>(std::llround(tr.dropout_fraction * static_cast<double>(n)));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), drop_rng);
  for (std::size_t k = 0; k < n_drop; ++k) dropped[order[k]] = true;

  // The camera is centred on the equilibrium position.
  TrackedTrajectory clean, lossy;
  clean.positions.resize(n);
  lossy.positions.resize(n);
  parallel_for(n, opts.threads, [&](std::size_t i) {
    const Vec3& r = sim.truth.samples[i];
    const PlanePosition p{(r.y - sim.y_eq) / kMicron, r.z / kMicron};
    const Frame frame = render_frame(cam, p, sc.seed + 17 * i);
    if (auto loc = locate(frame, cam, tr.min_mass)) clean.positions[i] = {loc->pos, true};
    if (dropped[i]) {
      const Frame dark = render_frame(cam, p, sc.seed + 17 * i, 0.0);
      if (auto loc = locate(dark, cam, tr.min_mass)) lossy.positions[i] = {loc->pos, true};
    } else {
      lossy.positions[i] = clean.positions[i];
    }
  });

  auto to_traj = [&](const TrackedTrajectory& t) {
    Trajectory out;
    out.sample_rate = tr.fps;
    for (const auto& e : t.positions) out.samples.push_back({0.0, e.pos.y * kMicron, e.pos.z * kMicron});
    return out;
  };
  const Trajectory tracked = to_traj(fill_missing(clean));
  const Trajectory tracked_lossy = to_traj(fill_missing(lossy));
  write_trajectory_csv(dir / "direct.csv", sim.truth);
  write_trajectory_csv(dir / "tracked.csv", tracked);
  write_trajectory_csv(dir / "tracked_dropout.csv", tracked_lossy);

  auto fit_axis = [&](const Trajectory& t, Axis a) {
    std::vector<double> s = t.component(a, 1.0 / kMicron);
    return fit_psd(periodogram(s, t.sample_rate), cfg.analysis.fit);
  };
  const double bin = tr.fps / static_cast<double>(n);
  for (Axis a : {Axis::Z, Axis::Y}) {
    const PsdFit direct = fit_axis(sim.truth, a);
    const PsdFit via_frames = fit_axis(tracked, a);
    const double df = std::abs(via_frames.f0 - direct.f0);
    rep.add("C7", std::string("tracked f0 ") + axis_label(a), format_number(std::round(df * 1e5) / 1e5) + " Hz",
            "<= 1 bin = " + format_number(bin) + " Hz", df <= bin ? Status::Pass : Status::Fail);
  }
  const double mass = cfg.particle().mass;
  const double t_clean = temperature_from_fit(fit_axis(tracked, Axis::Z), mass).value;
  const double t_lossy = temperature_from_fit(fit_axis(tracked_lossy, Axis::Z), mass).value;
  const double bias = (t_lossy - t_clean) / t_clean;
  rep.add("C7", "fill_missing temperature bias (1%)", pct(bias), "|bias| < 3%",
          std::abs(bias) < 0.03 && lossy.missing() >= n_drop ? Status::Pass : Status::Fail);
}

}  // namespace

int cmd_reproduce_paper(const std::string& override_yaml, const RunOptions& opts) {
  detail::ensure_dir(opts.out);
  Report rep(opts);
  const ScenarioConfig rough = parse_config(override_yaml, builtin_rough_vacuum_yaml());
  const ScenarioConfig hv = parse_config(override_yaml, builtin_high_vacuum_yaml());
  detail::Manifest manifest{"reproduce-paper"};

  // C1: coefficients from the measured frequencies.
  std::optional<MultipoleCoefficients> coeffs = rough.trap.coefficients;
  try {
    const auto t0 = Clock::now();
    const int status = cmd_fit_trap(rough, sub_options(opts, "fit_trap"));
    const double elapsed = seconds_since(t0);
    std::ifstream is(opts.out / "fit_trap" / "coefficients.json");
    const json j = json::parse(is);
    rep.within("C1", "a2 (T)", j["a2_t"].get<double>(), -1.3, 0.15);
    rep.within("C1", "a3 (T)", j["a3_t"].get<double>(), 0.018, 0.15);
    rep.within("C1", "a4 (T)", j["a4_t"].get<double>(), 0.72, 0.15);
    rep.within("C1", "y_eq (um)", j["y_eq_um"].get<double>(), -19.0, 0.10);
    rep.within("C1", "|B(y_eq)| (T)", j["b_eq_tesla"].get<double>(), 0.2, 0.10);
    rep.add("C1", "fit-trap runtime", "", "< 1 s", status == kExitOk && elapsed < 1.0 ? Status::Pass : Status::Fail);
    if (!coeffs) {
      coeffs = MultipoleCoefficients{j["a2_t"].get<double>(), j["a3_t"].get<double>(), j["a4_t"].get<double>(),
                                     rough.trap.y0};
    }
  } catch (const NumericalError& e) {
    rep.fail("C1", "fit-trap", describe(e));
  }

  check_mass_arithmetic(rep, rough.gas.temperature);

  if (!coeffs) {
    rep.fail("C3-C7", "trap-dependent checks", "skipped: no trap coefficients");
  } else {
    const TrapModel trap{*coeffs, rough.trap.material};
    check_field_properties(rep, *coeffs);
    try {
      check_size_independence(rep, trap);

      // C3 and the rough-vacuum reference rows.
      ScenarioConfig rc = rough;
      rc.trap.coefficients = coeffs;
      const int sim_status = cmd_simulate(rc, sub_options(opts, "rough/sim"));
      if (sim_status != kExitOk) rep.fail("C3", "rough-vacuum simulate", "exit " + std::to_string(sim_status));
      std::vector<SummaryRow> rows;
      cmd_analyze(rc, {opts.out / "rough/sim"}, sub_options(opts, "rough/analysis"), &rows);

      const EquilibriumInfo eq = analyze_equilibrium(trap);
      const SummaryRow* c3z = find_row(rows, rc.gas.pressures.front(), Axis::Z);
      const double gamma_gas = damping_rate(rc.gas.at(0));
      if (c3z && c3z->fit) {
        rep.within("C3", "axial f0 (Hz)", c3z->fit->f0, eq.freqs.fz, 0.01);
        rep.within("C3", "axial gamma (Hz)", c3z->fit->gamma, gamma_gas, 0.10);
        rep.within("C3", "axial mass (pg)", c3z->mass->value / kPicogram, rc.particle().mass / kPicogram, 0.05);
      } else {
        rep.fail("C3", "axial fit", c3z ? c3z->error : "missing");
      }
      for (const auto& ref : reference_rows()) {
        const SummaryRow* r = find_row(rows, ref.pressure, ref.axis);
        const std::string tag = format_number(ref.pressure) + " " + axis_label(ref.axis);
        if (!r) continue;
        if (!r->fit) {
          rep.fail("table", tag, r->error);
          continue;
        }
        rep.within("table", tag + " f0", r->fit->f0, ref.f0, 0.01);
        rep.within("table", tag + " gamma", r->fit->gamma, ref.gamma, 0.20);
        if (ref.mass > 0 && r->mass) rep.within("table", tag + " mass", r->mass->value / kPicogram, ref.mass, 0.15);
      }

      // C4a: ideal velocity damping, no detection noise.
      ScenarioConfig ic = hv;
      ic.trap.coefficients = coeffs;
      ic.feedback.mode = FeedbackMode::IdealVelocity;
      const double fb_hz = 1.0;
      for (Axis a : {Axis::Y, Axis::Z}) {
        AxisFeedback& ax = ic.feedback.axes[index(a)];
        ax.enabled = true;
        ax.gain = 2.0 * constants::kPi * fb_hz * ic.particle().mass;
        ax.detection_noise_std = 0.0;
      }
      ic.sim.n_trials = std::min(ic.sim.n_trials, 5);
      std::vector<SummaryRow> ideal_rows;
      cmd_simulate(ic, sub_options(opts, "ideal/sim"));
      cmd_analyze(ic, {opts.out / "ideal/sim"}, sub_options(opts, "ideal/analysis"), &ideal_rows);
      const double g_hv = damping_rate(ic.gas.at(0));
      const double t_expect = ic.gas.temperature * g_hv / (g_hv + fb_hz);
      for (Axis a : {Axis::Z, Axis::Y}) {
        const SummaryRow* r = find_row(ideal_rows, std::nullopt, a);
        if (r && r->temperature && !r->temperature_assumed) {
          rep.within("C4", "ideal feedback T_eff " + axis_label(a) + " (K)", r->temperature->value, t_expect, 0.15);
        } else {
          rep.fail("C4", "ideal feedback " + axis_label(a), r ? r->error : "missing");
        }
      }

      // C4b: bandpass feedback with detection noise.
      ScenarioConfig bc = hv;
      bc.trap.coefficients = coeffs;
      std::vector<SummaryRow> hv_rows;
      const int hv_status = cmd_simulate(bc, sub_options(opts, "hv/sim"));
      if (hv_status != kExitOk) rep.fail("C4", "cooled simulate", "exit " + std::to_string(hv_status));
      cmd_analyze(bc, {opts.out / "hv/sim"}, sub_options(opts, "hv/analysis"), &hv_rows);
      const SummaryRow* z = find_row(hv_rows, std::nullopt, Axis::Z);
      const SummaryRow* y = find_row(hv_rows, std::nullopt, Axis::Y);
      const double g_gas = damping_rate(bc.gas.at(0));
      if (z && z->fit && z->temperature) {
        const double t = z->temperature->value;
        rep.add("C4", "cooled axial T_eff (K)", format_number(t), "<= 1 K", t <= 1.0 ? Status::Pass : Status::Fail);
        rep.add("C4", "axial cooling factor", format_number(bc.gas.temperature / t), ">= 300",
                bc.gas.temperature / t >= 300 ? Status::Pass : Status::Fail);
        const double shift = z->fit->f0 - eq.freqs.fz;
        rep.add("C4", "axial f0 shift (Hz)", format_number(shift), "|shift| <= 1 Hz",
                std::abs(shift) <= 1.0 ? Status::Pass : Status::Fail);
        rep.add("C4", "axial gamma broadened (Hz)", format_number(z->fit->gamma),
                "> 100 x " + format_number(g_gas), z->fit->gamma > 100 * g_gas ? Status::Pass : Status::Fail);
      } else {
        rep.fail("C4", "cooled axial fit", z ? z->error : "missing");
      }
      if (y && y->fit) {
        rep.add("C4", "vertical gamma broadened (Hz)", format_number(y->fit->gamma),
                "> 100 x " + format_number(g_gas), y->fit->gamma > 100 * g_gas ? Status::Pass : Status::Fail);
      } else {
        rep.fail("C4", "cooled vertical fit", y ? y->error : "missing");
      }
      for (const auto& ref : kCooled) {
        const SummaryRow* r = ref.axis == Axis::Z ? z : y;
        if (!r || !r->fit) continue;
        const std::string tag = "HV " + axis_label(ref.axis);
        rep.add("table", tag + " f0 / gamma / T", format_number(r->fit->f0) + " / " + format_number(r->fit->gamma) +
                         " / " + format_number(r->temperature ? r->temperature->value : NAN),
                "ref " + format_number(ref.f0) + " / " + format_number(ref.gamma) + " / " +
                    format_number(ref.temperature),
                Status::Info);
      }

      check_tracking(rep, rough, trap, opts);
    } catch (const NumericalError& e) {
      rep.fail("C3-C7", "pipeline", describe(e));
    }
  }

  write_file_atomic(opts.out / "report.csv", rep.csv());
  write_file_atomic(opts.out / "report.txt", rep.text());
  manifest.add(opts.out, opts.out / "report.csv");
  manifest.add(opts.out, opts.out / "report.txt");
  manifest.write(opts.out, rough, rough.seed());
  const bool ok = rep.all_pass();
  say(opts, ok ? "all checks passed" : "some checks FAILED");
  return ok ? kExitOk : kExitNumerical;
}

}  // namespace mgtrap::scenario
