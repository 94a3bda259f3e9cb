#include "mgtrap/scenario/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "mgtrap/constants.hpp"
#include "mgtrap/errors.hpp"

namespace mgtrap::scenario {
namespace {

using constants::kMicron;
using constants::kPi;
using constants::kPicogram;
using constants::kPiconewton;

// Read access to one mapping that remembers which keys were consumed so
// leftovers can be reported as unknown.
class Section {
 public:
  Section(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) throw ConfigError("'" + path_ + "' must be a mapping");
  }

  bool has(const std::string& key) const { return node_ && node_.IsMap() && node_[key] && !node_[key].IsNull(); }

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  YAML::Node raw(const std::string& key) {
    used_.insert(key);
    if (!has(key)) throw ConfigError("missing key '" + key_path(key) + "'");
    return node_[key];
  }

  double number(const std::string& key) {
    const YAML::Node n = raw(key);
    double v = 0.0;
    if (!n.IsScalar() || !YAML::convert<double>::decode(n, v) || !std::isfinite(v)) {
      throw ConfigError("'" + key_path(key) + "' must be a finite number");
    }
    return v;
  }

  double number_or(const std::string& key, double fallback) { return has(key) ? number(key) : (used_.insert(key), fallback); }

  long long integer(const std::string& key) {
    const YAML::Node n = raw(key);
    long long v = 0;
    if (!n.IsScalar() || !YAML::convert<long long>::decode(n, v)) {
      throw ConfigError("'" + key_path(key) + "' must be an integer");
    }
    return v;
  }

  long long integer_or(const std::string& key, long long fallback) {
    return has(key) ? integer(key) : (used_.insert(key), fallback);
  }

  bool flag_or(const std::string& key, bool fallback) {
    if (!has(key)) return used_.insert(key), fallback;
    const YAML::Node n = raw(key);
    bool v = false;
    if (!n.IsScalar() || !YAML::convert<bool>::decode(n, v)) {
      throw ConfigError("'" + key_path(key) + "' must be true or false");
    }
    return v;
  }

  std::string text(const std::string& key) {
    const YAML::Node n = raw(key);
    if (!n.IsScalar()) throw ConfigError("'" + key_path(key) + "' must be a string");
    return n.Scalar();
  }

  std::string choice_or(const std::string& key, const std::string& fallback, std::initializer_list<const char*> allowed) {
    const std::string v = has(key) ? text(key) : (used_.insert(key), fallback);
    for (const char* a : allowed)
      if (v == a) return v;
    std::string msg = "'" + key_path(key) + "' must be one of:";
    for (const char* a : allowed) msg += std::string(" ") + a;
    throw ConfigError(msg);
  }

  std::vector<double> numbers(const std::string& key) {
    const YAML::Node n = raw(key);
    std::vector<double> out;
    auto convert = [&](const YAML::Node& item) {
      double v = 0.0;
      if (!item.IsScalar() || !YAML::convert<double>::decode(item, v) || !std::isfinite(v)) {
        throw ConfigError("'" + key_path(key) + "' must contain finite numbers");
      }
      out.push_back(v);
    };
    if (n.IsSequence()) {
      for (const auto& item : n) convert(item);
    } else {
      convert(n);
    }
    return out;
  }

  Section child(const std::string& key) {
    used_.insert(key);
    return Section(has(key) ? node_[key] : YAML::Node(), key_path(key));
  }

  void finish() const {
    if (!node_ || !node_.IsMap()) return;
    for (const auto& kv : node_) {
      const std::string k = kv.first.as<std::string>();
      if (!used_.count(k)) throw ConfigError("unknown key '" + key_path(k) + "'");
    }
  }

 private:
  YAML::Node node_;
  std::string path_;
  std::set<std::string> used_;
};

std::vector<Axis> parse_axes(Section& s, const std::string& key, std::vector<Axis> fallback) {
  if (!s.has(key)) {
    s.child(key);  // mark as used
    return fallback;
  }
  const YAML::Node n = s.raw(key);
  if (!n.IsSequence()) throw ConfigError("'" + s.key_path(key) + "' must be a list of x, y, z");
  std::vector<Axis> out;
  for (const auto& item : n) {
    const std::string a = item.IsScalar() ? item.Scalar() : "";
    if (a == "x") out.push_back(Axis::X);
    else if (a == "y") out.push_back(Axis::Y);
    else if (a == "z") out.push_back(Axis::Z);
    else throw ConfigError("'" + s.key_path(key) + "' entries must be x, y or z");
  }
  return out;
}

AxisFeedback parse_axis_feedback(Section s, std::optional<double> mass) {
  AxisFeedback a;
  a.enabled = s.flag_or("enabled", false);
  a.center_freq = s.number_or("center_hz", a.center_freq);
  a.bandwidth = s.number_or("bandwidth_hz", a.bandwidth);
  if (s.has("gain_n_s_per_m") && s.has("damping_hz")) {
    throw ConfigError("'" + s.key_path("gain_n_s_per_m") + "' and 'damping_hz' are mutually exclusive");
  }
  if (s.has("damping_hz")) {
    if (!mass) throw ConfigError("'" + s.key_path("damping_hz") + "' needs a numeric particle.mass_pg");
    a.gain = 2.0 * kPi * s.number("damping_hz") * *mass;
  } else {
    s.child("damping_hz");
    a.gain = s.number_or("gain_n_s_per_m", 0.0);
  }
  if (s.has("extra_delay_samples")) a.extra_delay = static_cast<int>(s.integer("extra_delay_samples"));
  else s.child("extra_delay_samples");
  a.force_max = s.number_or("force_max_pn", a.force_max / kPiconewton) * kPiconewton;
  a.detection_noise_std = s.number_or("detection_noise_um", 0.0) * kMicron;
  a.projection_weight = s.number_or("projection_weight_ratio", 1.0);
  s.finish();
  try {
    a.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(s.key_path("") + ": " + e.what());
  }
  return a;
}

YAML::Node parse_yaml(const std::string& text) {
  try {
    YAML::Node n = YAML::Load(text);
    if (n.IsNull()) return YAML::Node(YAML::NodeType::Map);
    if (!n.IsMap()) throw ConfigError("config must be a mapping at the top level");
    return n;
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config is not valid YAML: ") + e.what());
  }
}

// Overlay maps key by key; anything else replaces.
YAML::Node merge(const YAML::Node& base, const YAML::Node& over) {
  if (!base.IsMap() || !over.IsMap()) return YAML::Clone(over);
  YAML::Node out = YAML::Clone(base);
  for (const auto& kv : over) {
    const std::string k = kv.first.as<std::string>();
    out[k] = out[k] ? merge(out[k], kv.second) : YAML::Clone(kv.second);
  }
  return out;
}

std::string emit(const YAML::Node& n) {
  YAML::Emitter e;
  e.SetMapFormat(YAML::Block);
  e << n;
  return e.c_str();
}

}  // namespace

std::uint64_t fnv1a(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t ScenarioConfig::seed() const { return sim.seed_id.value_or(hash & 0x7fffffffffffffffULL); }

Particle ScenarioConfig::particle() const {
  if (!particle_mass) throw ConfigError("particle.mass_pg must be a number for this command");
  Particle p;
  p.material = trap.material;
  p.mass = *particle_mass;
  return p;
}

ScenarioConfig parse_config(const std::string& text, const std::string& base) {
  YAML::Node root = parse_yaml(text);
  if (!base.empty()) root = merge(parse_yaml(base), root);

  ScenarioConfig cfg;
  cfg.canonical = emit(root);
  cfg.hash = fnv1a(cfg.canonical);

  Section top(root, "");

  {
    Section trap = top.child("trap");
    cfg.trap.y0 = trap.number_or("y0_um", 75.0) * kMicron;
    if (trap.has("coefficients")) {
      Section c = trap.child("coefficients");
      cfg.trap.coefficients = MultipoleCoefficients{c.number("a2_t"), c.number("a3_t"), c.number("a4_t"), cfg.trap.y0};
      c.finish();
    } else {
      trap.child("coefficients");
    }
    if (trap.has("measured")) {
      Section m = trap.child("measured");
      cfg.trap.measured = ModeFrequencies{m.number("fx_hz"), m.number("fy_hz"), m.number("fz_hz")};
      m.finish();
    } else {
      trap.child("measured");
    }
    Section mat = trap.child("material");
    cfg.trap.material.chi = mat.number_or("chi_si", kDiamond.chi);
    cfg.trap.material.rho = mat.number_or("rho_kg_m3", kDiamond.rho);
    mat.finish();
    trap.finish();
    if (!(cfg.trap.y0 > 0.0)) throw ConfigError("'trap.y0_um' must be positive");
    if (!(cfg.trap.material.rho > 0.0)) throw ConfigError("'trap.material.rho_kg_m3' must be positive");
  }

  {
    Section p = top.child("particle");
    if (p.has("mass_pg")) {
      const YAML::Node n = p.raw("mass_pg");
      double v = 0.0;
      if (n.IsScalar() && n.Scalar() == "fit-from-psd") {
        cfg.particle_mass.reset();
      } else if (n.IsScalar() && YAML::convert<double>::decode(n, v) && std::isfinite(v) && v > 0.0) {
        cfg.particle_mass = v * kPicogram;
      } else {
        throw ConfigError("'particle.mass_pg' must be a positive number or fit-from-psd");
      }
    } else {
      p.child("mass_pg");
      cfg.particle_mass = 28.0 * kPicogram;
    }
    p.finish();
  }

  {
    Section g = top.child("gas");
    if (g.has("pressures_mbar")) cfg.gas.pressures = g.numbers("pressures_mbar");
    else g.child("pressures_mbar");
    cfg.gas.temperature = g.number_or("temperature_k", cfg.gas.temperature);
    cfg.gas.kappa = g.number_or("kappa_hz_per_mbar", cfg.gas.kappa);
    g.finish();
    for (double p : cfg.gas.pressures)
      if (!(p >= 0.0)) throw ConfigError("'gas.pressures_mbar' entries must be >= 0");
    if (!(cfg.gas.temperature > 0.0)) throw ConfigError("'gas.temperature_k' must be positive");
    if (!(cfg.gas.kappa > 0.0)) throw ConfigError("'gas.kappa_hz_per_mbar' must be positive");
  }

  {
    Section f = top.child("feedback");
    const std::string mode = f.choice_or("mode", "bandpass", {"bandpass", "ideal_velocity"});
    cfg.feedback.mode = mode == "bandpass" ? FeedbackMode::Bandpass : FeedbackMode::IdealVelocity;
    cfg.feedback.transverse_nonlinearity = f.number_or("transverse_nonlinearity_per_um", 0.0) / kMicron;
    for (Axis a : {Axis::X, Axis::Y, Axis::Z}) {
      cfg.feedback.axes[index(a)] = parse_axis_feedback(f.child(axis_name(a)), cfg.particle_mass);
    }
    f.finish();
  }

  {
    Section s = top.child("sim");
    SimConfig& sim = cfg.sim.sim;
    sim.duration = s.number_or("duration_s", 60.0);
    sim.output_rate = s.number_or("output_rate_hz", 496.0);
    if (s.has("dt_s") && s.has("steps_per_sample_count")) {
      throw ConfigError("'sim.dt_s' and 'sim.steps_per_sample_count' are mutually exclusive");
    }
    if (s.has("dt_s")) {
      sim.dt = s.number("dt_s");
      s.child("steps_per_sample_count");
    } else {
      s.child("dt_s");
      const long long n = s.integer_or("steps_per_sample_count", 20);
      if (n < 1) throw ConfigError("'sim.steps_per_sample_count' must be >= 1");
      sim.dt = 1.0 / (static_cast<double>(n) * sim.output_rate);
    }
    sim.warmup = s.number_or("warmup_s", 0.0);
    const long long n_trials = s.integer_or("n_trials_count", 1);
    if (n_trials < 1 || n_trials > 100000) throw ConfigError("'sim.n_trials_count' must be in [1, 100000]");
    cfg.sim.n_trials = static_cast<int>(n_trials);
    if (s.has("seed_id")) {
      const long long seed = s.integer("seed_id");
      if (seed < 0) throw ConfigError("'sim.seed_id' must be non-negative");
      cfg.sim.seed_id = static_cast<std::uint64_t>(seed);
    } else {
      s.child("seed_id");
    }
    sim.initial.kind = s.choice_or("initial", "thermal", {"thermal", "rest"}) == "thermal"
                           ? InitialState::Kind::Thermal
                           : InitialState::Kind::Explicit;
    sim.potential = s.choice_or("potential", "full", {"full", "harmonic"}) == "full" ? PotentialModel::Full
                                                                                   : PotentialModel::Harmonic;
    sim.line_noise_amplitude = s.number_or("line_noise_pn", 0.0) * kPiconewton;
    sim.line_noise_freq = s.number_or("line_noise_hz", 120.0);
    s.finish();
    try {
      sim.steps_per_sample();
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("sim: ") + e.what());
    }
  }

  {
    Section a = top.child("analysis");
    AnalysisSection& an = cfg.analysis;
    an.axes = parse_axes(a, "axes", an.axes);
    an.calibrate_axes = parse_axes(a, "calibrate_axes", an.calibrate_axes);
    an.calibrate = a.choice_or("calibrate", "mass", {"mass", "temperature"}) == "mass" ? Calibrate::Mass
                                                                                     : Calibrate::Temperature;
    an.source = a.choice_or("source", "true", {"true", "measured"}) == "true" ? TrajectorySource::True
                                                                             : TrajectorySource::Measured;
    if (a.has("exclude_bands_hz")) {
      const YAML::Node n = a.raw("exclude_bands_hz");
      if (!n.IsSequence()) throw ConfigError("'analysis.exclude_bands_hz' must be a list of [lo, hi] pairs");
      an.fit.exclude_bands.clear();
      for (const auto& band : n) {
        if (!band.IsSequence() || band.size() != 2) {
          throw ConfigError("'analysis.exclude_bands_hz' must be a list of [lo, hi] pairs");
        }
        FrequencyBand b{band[0].as<double>(), band[1].as<double>()};
        if (!(b.hi > b.lo)) throw ConfigError("'analysis.exclude_bands_hz' needs lo < hi");
        an.fit.exclude_bands.push_back(b);
      }
    } else {
      a.child("exclude_bands_hz");
    }
    an.fit.window_lo_factor = a.number_or("window_lo_ratio", an.fit.window_lo_factor);
    an.fit.window_hi_factor = a.number_or("window_hi_ratio", an.fit.window_hi_factor);
    an.fit.fit_noise_floor = a.flag_or("fit_noise_floor", an.fit.fit_noise_floor);
    an.fit.alias_images = static_cast<int>(a.integer_or("alias_images_count", an.fit.alias_images));
    an.fit.min_peak_ratio = a.number_or("min_peak_ratio", an.fit.min_peak_ratio);
    a.finish();
    if (!(an.fit.window_lo_factor > 0.0 && an.fit.window_hi_factor > an.fit.window_lo_factor)) {
      throw ConfigError("analysis window ratios must satisfy 0 < lo < hi");
    }
    if (an.fit.alias_images < 0) throw ConfigError("'analysis.alias_images_count' must be >= 0");
    if (an.calibrate == Calibrate::Temperature && !cfg.particle_mass) {
      throw ConfigError("'analysis.calibrate: temperature' needs a numeric particle.mass_pg");
    }
  }

  if (top.has("tracking")) {
    Section t = top.child("tracking");
    TrackingSection tr;
    CameraModel& c = tr.camera;
    c.width = static_cast<int>(t.integer_or("width_px", c.width));
    c.height = static_cast<int>(t.integer_or("height_px", c.height));
    c.calibration = t.number_or("calibration_um_per_px", c.calibration);
    c.psf_sigma = t.number_or("psf_sigma_px", c.psf_sigma);
    c.peak_counts = t.number_or("peak_counts", c.peak_counts);
    c.background_mean = t.number_or("background_mean_counts", c.background_mean);
    c.background_std = t.number_or("background_std_counts", c.background_std);
    c.center_row = t.number_or("center_row_px", (c.height - 1) / 2.0);
    c.center_col = t.number_or("center_col_px", (c.width - 1) / 2.0);
    c.feature_radius = static_cast<int>(t.integer_or("feature_radius_px", 0));
    tr.min_mass = t.number_or("min_mass_counts", tr.min_mass);
    tr.fps = t.number_or("fps_hz", tr.fps);
    tr.dropout_fraction = t.number_or("dropout_ratio", 0.0);
    tr.duration = t.number_or("duration_s", tr.duration);
    t.finish();
    try {
      c.validate();
    } catch (const InputError& e) {
      throw ConfigError(std::string("tracking: ") + e.what());
    }
    if (!(tr.fps > 0.0)) throw ConfigError("'tracking.fps_hz' must be positive");
    if (!(tr.dropout_fraction >= 0.0 && tr.dropout_fraction < 1.0)) {
      throw ConfigError("'tracking.dropout_ratio' must be in [0, 1)");
    }
    if (!(tr.duration > 0.0)) throw ConfigError("'tracking.duration_s' must be positive");
    cfg.tracking = tr;
  } else {
    top.child("tracking");
  }

  top.finish();
  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path, const std::string& base) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), base);
}

}  // namespace mgtrap::scenario
