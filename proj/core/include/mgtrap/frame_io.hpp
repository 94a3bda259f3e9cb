#pragma once

#include <filesystem>
#include <vector>

#include "mgtrap/tracking.hpp"

namespace mgtrap {

/// Binary PGM (P5), 8- or 16-bit (big-endian). Intensities are rounded and
/// clamped to the representable range.
void write_pgm(const std::filesystem::path& path, const Frame& frame, int bit_depth = 8);
Frame read_pgm(const std::filesystem::path& path);

/// Describes a concatenated raw frame stream.
struct StreamInfo {
  int width = 0;
  int height = 0;
  int bit_depth = 8;
  double fps = 496.0;
  double calibration = 0.259;  // um per pixel
  std::size_t n_frames = 0;
};

/// Writes `<stem>.raw` (frames back to back, same sample encoding as PGM)
/// and the JSON sidecar `<stem>.json`.
void write_frame_stream(const std::filesystem::path& stem, const std::vector<Frame>& frames, StreamInfo info);

/// Reads a stream given its JSON sidecar path.
std::vector<Frame> read_frame_stream(const std::filesystem::path& sidecar, StreamInfo* info = nullptr);

/// Loads a frame source: a `.json` sidecar or a directory of `.pgm` files
/// taken in lexicographic order (timestamps from `fps`).
std::vector<Frame> load_frames(const std::filesystem::path& source, double fps, StreamInfo* info = nullptr);

}  // namespace mgtrap
