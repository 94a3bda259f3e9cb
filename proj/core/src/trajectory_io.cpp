#include "mgtrap/trajectory_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "mgtrap/constants.hpp"
#include "mgtrap/errors.hpp"

namespace mgtrap {
namespace {

using constants::kMicron;
using constants::kPiconewton;

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot open " + path.string() + " for writing");
  return os;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open " + path.string());
  return is;
}

std::vector<double> split_numbers(const std::string& line, std::size_t expected, std::size_t line_no) {
  std::vector<double> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(cell, &used));
      while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw InputError("line " + std::to_string(line_no) + ": not a number: '" + cell + "'");
    }
  }
  if (out.size() != expected) {
    throw InputError("line " + std::to_string(line_no) + ": expected " + std::to_string(expected) + " columns");
  }
  return out;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

void write_vec_rows(std::ostream& os, const Trajectory& traj, double scale) {
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const Vec3& v = traj.samples[i];
    os << format_number(traj.time(i)) << ',' << format_number(v.x * scale) << ','
       << format_number(v.y * scale) << ',' << format_number(v.z * scale) << '\n';
  }
}

}  // namespace

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v == 0.0 ? 0.0 : v);  // no "-0"
  return buf;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  os << "t,x_um,y_um,z_um\n";
  write_vec_rows(os, traj, 1.0 / kMicron);
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
  auto os = open_out(path);
  write_trajectory_csv(os, traj);
}

Trajectory read_trajectory_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || strip_cr(line) != "t,x_um,y_um,z_um") {
    throw InputError("trajectory CSV must start with the header t,x_um,y_um,z_um");
  }
  std::vector<double> times;
  Trajectory traj;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto v = split_numbers(line, 4, line_no);
    times.push_back(v[0]);
    traj.samples.push_back({v[1] * kMicron, v[2] * kMicron, v[3] * kMicron});
  }
  if (times.size() < 2) throw LengthError("trajectory CSV needs at least two rows");
  const double span = times.back() - times.front();
  if (!(span > 0.0)) throw InputError("trajectory time column must increase");
  const double step = span / static_cast<double>(times.size() - 1);
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (std::abs(times[i] - times[i - 1] - step) > 1e-3 * step) {
      throw InputError("trajectory samples are not uniformly spaced (row " + std::to_string(i + 1) + ")");
    }
  }
  traj.sample_rate = 1.0 / step;
  traj.t0 = times.front();
  traj.validate();
  return traj;
}

Trajectory read_trajectory_csv(const std::filesystem::path& path) {
  auto is = open_in(path);
  try {
    return read_trajectory_csv(is);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void write_force_csv(std::ostream& os, const Trajectory& force) {
  os << "t,Fx,Fy,Fz\n";
  write_vec_rows(os, force, 1.0 / kPiconewton);
}

void write_force_csv(const std::filesystem::path& path, const Trajectory& force) {
  auto os = open_out(path);
  write_force_csv(os, force);
}

void write_psd_csv(std::ostream& os, const PsdEstimate& psd) {
  os << "freq_hz,psd_um2_per_hz,std_um2_per_hz\n";
  for (std::size_t k = 0; k < psd.freqs.size(); ++k) {
    const double s = k < psd.point_std.size() ? psd.point_std[k] : 0.0;
    os << format_number(psd.freqs[k]) << ',' << format_number(psd.values[k]) << ',' << format_number(s) << '\n';
  }
}

void write_psd_csv(const std::filesystem::path& path, const PsdEstimate& psd) {
  auto os = open_out(path);
  write_psd_csv(os, psd);
}

PsdEstimate read_psd_csv(std::istream& is, double sample_rate, int n_trials) {
  std::string line;
  if (!std::getline(is, line) || strip_cr(line) != "freq_hz,psd_um2_per_hz,std_um2_per_hz") {
    throw InputError("PSD CSV must start with the header freq_hz,psd_um2_per_hz,std_um2_per_hz");
  }
  PsdEstimate psd;
  psd.sample_rate = sample_rate;
  psd.n_trials = n_trials;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto v = split_numbers(line, 3, line_no);
    if (!psd.freqs.empty() && !(v[0] > psd.freqs.back())) throw InputError("PSD frequencies must increase");
    if (v[1] < 0.0) throw InputError("PSD values must be non-negative");
    psd.freqs.push_back(v[0]);
    psd.values.push_back(v[1]);
    psd.point_std.push_back(v[2]);
  }
  return psd;
}

std::string fit_to_json(const PsdFit& fit, int indent) {
  nlohmann::ordered_json j;
  j["f0_hz"] = fit.f0;
  j["gamma_hz"] = fit.gamma;
  j["s0_um2"] = fit.s0;
  j["noise_floor"] = fit.noise_floor;
  j["uncertainties"] = {{"f0_hz", fit.f0_err},
                        {"gamma_hz", fit.gamma_err},
                        {"s0_um2", fit.s0_err},
                        {"noise_floor", fit.noise_floor_err}};
  j["n_trials"] = fit.n_trials;
  j["n_points"] = fit.n_points;
  j["residual_norm"] = fit.residual_norm;
  j["weighted"] = fit.weighted;
  return j.dump(indent);
}

PsdFit fit_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    PsdFit fit;
    fit.f0 = j.at("f0_hz").get<double>();
    fit.gamma = j.at("gamma_hz").get<double>();
    fit.s0 = j.at("s0_um2").get<double>();
    fit.noise_floor = j.at("noise_floor").get<double>();
    const auto& u = j.at("uncertainties");
    fit.f0_err = u.at("f0_hz").get<double>();
    fit.gamma_err = u.at("gamma_hz").get<double>();
    fit.s0_err = u.at("s0_um2").get<double>();
    fit.noise_floor_err = u.at("noise_floor").get<double>();
    fit.n_trials = j.at("n_trials").get<int>();
    fit.n_points = j.value("n_points", 0);
    fit.residual_norm = j.value("residual_norm", 0.0);
    fit.weighted = j.value("weighted", false);
    return fit;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("invalid fit JSON: ") + e.what());
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    auto os = open_out(tmp);
    os << contents;
    if (!os) throw InputError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace mgtrap
