#include "mgtrap/frame_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include <json.hpp>

#include "mgtrap/errors.hpp"
#include "mgtrap/trajectory_io.hpp"

namespace mgtrap {
namespace {

void check_depth(int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) throw InputError("bit depth must be 8 or 16");
}

void encode(std::string& out, const Frame& f, int bit_depth) {
  const double max_v = bit_depth == 8 ? 255.0 : 65535.0;
  for (float v : f.intensity) {
    const auto q = static_cast<unsigned>(std::clamp(std::lround(static_cast<double>(v)), 0L, static_cast<long>(max_v)));
    if (bit_depth == 16) out.push_back(static_cast<char>((q >> 8) & 0xff));
    out.push_back(static_cast<char>(q & 0xff));
  }
}

void decode(const unsigned char* data, Frame& f, int bit_depth) {
  const std::size_t n = static_cast<std::size_t>(f.width) * f.height;
  f.intensity.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    f.intensity[i] = bit_depth == 8 ? static_cast<float>(data[i])
                                    : static_cast<float>((data[2 * i] << 8) | data[2 * i + 1]);
  }
}

// Next whitespace-delimited PGM header token, skipping '#' comments.
std::string header_token(std::istream& is) {
  std::string tok;
  char c;
  while (is.get(c)) {
    if (c == '#') {
      std::string rest;
      std::getline(is, rest);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(c);
  }
  return tok;
}

}  // namespace

void write_pgm(const std::filesystem::path& path, const Frame& frame, int bit_depth) {
  check_depth(bit_depth);
  std::string data = "P5\n" + std::to_string(frame.width) + " " + std::to_string(frame.height) + "\n" +
                     (bit_depth == 8 ? "255" : "65535") + "\n";
  encode(data, frame, bit_depth);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot write " + path.string());
  os << data;
}

Frame read_pgm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open " + path.string());
  if (header_token(is) != "P5") throw InputError(path.string() + ": not a binary PGM (P5)");
  Frame f;
  int maxval = 0;
  try {
    f.width = std::stoi(header_token(is));
    f.height = std::stoi(header_token(is));
    maxval = std::stoi(header_token(is));
  } catch (const std::exception&) {
    throw InputError(path.string() + ": malformed PGM header");
  }
  if (f.width <= 0 || f.height <= 0 || maxval <= 0 || maxval > 65535) {
    throw InputError(path.string() + ": malformed PGM header");
  }
  const int depth = maxval < 256 ? 8 : 16;
  const std::size_t bytes = static_cast<std::size_t>(f.width) * f.height * (depth / 8);
  std::vector<unsigned char> data(bytes);
  is.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(bytes));
  if (static_cast<std::size_t>(is.gcount()) != bytes) throw InputError(path.string() + ": truncated PGM data");
  decode(data.data(), f, depth);
  return f;
}

void write_frame_stream(const std::filesystem::path& stem, const std::vector<Frame>& frames, StreamInfo info) {
  check_depth(info.bit_depth);
  if (!frames.empty()) {
    info.width = frames.front().width;
    info.height = frames.front().height;
  }
  info.n_frames = frames.size();
  std::string data;
  data.reserve(frames.size() * static_cast<std::size_t>(info.width) * info.height * (info.bit_depth / 8));
  for (const auto& f : frames) {
    if (f.width != info.width || f.height != info.height) throw InputError("frames differ in size");
    encode(data, f, info.bit_depth);
  }
  auto raw = stem;
  raw += ".raw";
  auto side = stem;
  side += ".json";
  {
    std::ofstream os(raw, std::ios::binary);
    if (!os) throw InputError("cannot write " + raw.string());
    os << data;
  }
  nlohmann::ordered_json j;
  j["raw_file"] = raw.filename().string();
  j["width"] = info.width;
  j["height"] = info.height;
  j["bit_depth"] = info.bit_depth;
  j["fps"] = info.fps;
  j["calibration_um_per_px"] = info.calibration;
  j["n_frames"] = info.n_frames;
  write_file_atomic(side, j.dump(2) + "\n");
}

std::vector<Frame> read_frame_stream(const std::filesystem::path& sidecar, StreamInfo* info_out) {
  std::ifstream is(sidecar);
  if (!is) throw InputError("cannot open " + sidecar.string());
  StreamInfo info;
  std::filesystem::path raw;
  try {
    const auto j = nlohmann::json::parse(is);
    info.width = j.at("width").get<int>();
    info.height = j.at("height").get<int>();
    info.bit_depth = j.at("bit_depth").get<int>();
    info.fps = j.at("fps").get<double>();
    info.calibration = j.at("calibration_um_per_px").get<double>();
    info.n_frames = j.at("n_frames").get<std::size_t>();
    raw = sidecar.parent_path() / j.at("raw_file").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(sidecar.string() + ": invalid sidecar: " + e.what());
  }
  check_depth(info.bit_depth);
  if (info.width <= 0 || info.height <= 0 || !(info.fps > 0.0)) throw InputError("invalid stream geometry");

  std::ifstream rs(raw, std::ios::binary);
  if (!rs) throw InputError("cannot open " + raw.string());
  const std::vector<unsigned char> data((std::istreambuf_iterator<char>(rs)), std::istreambuf_iterator<char>());
  const std::size_t frame_bytes = static_cast<std::size_t>(info.width) * info.height * (info.bit_depth / 8);
  if (data.size() != frame_bytes * info.n_frames) {
    throw InputError(raw.string() + ": size does not match the sidecar");
  }
  std::vector<Frame> frames(info.n_frames);
  for (std::size_t i = 0; i < info.n_frames; ++i) {
    frames[i].width = info.width;
    frames[i].height = info.height;
    frames[i].timestamp = static_cast<double>(i) / info.fps;
    decode(data.data() + i * frame_bytes, frames[i], info.bit_depth);
  }
  if (info_out) *info_out = info;
  return frames;
}

std::vector<Frame> load_frames(const std::filesystem::path& source, double fps, StreamInfo* info) {
  namespace fs = std::filesystem;
  if (fs::is_regular_file(source) && source.extension() == ".json") return read_frame_stream(source, info);
  if (!fs::is_directory(source)) throw InputError("frame source not found: " + source.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(source))
    if (e.is_regular_file() && e.path().extension() == ".pgm") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw InputError("no .pgm frames in " + source.string());
  std::vector<Frame> frames;
  frames.reserve(files.size());
  for (std::size_t i = 0; i < files.size(); ++i) {
    frames.push_back(read_pgm(files[i]));
    frames.back().timestamp = static_cast<double>(i) / fps;
  }
  if (info) {
    info->width = frames.front().width;
    info->height = frames.front().height;
    info->fps = fps;
    info->n_frames = frames.size();
  }
  return frames;
}

}  // namespace mgtrap
