#pragma once

#include <filesystem>
#include <span>
#include <vector>

namespace sbd {

/// Header of the SMBASIS1 raw container shared by basis stacks and frame
/// stacks. Planes follow a blank line, ordered frame-major, basis-major,
/// channel-minor, row-major, as little-endian float64.
struct ContainerHeader {
  double pixel_size_nm = 0.0;
  int oversampling = 1;
  int width = 0;
  int height = 0;
  int channels = 2;
  int bases = 6;
  int frames = 1;

  std::size_t plane_size() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  std::size_t planes_per_frame() const {
    return static_cast<std::size_t>(channels) * static_cast<std::size_t>(bases);
  }
};

struct Container {
  ContainerHeader header;
  std::vector<double> data;
  /// Number of complete frames present; less than header.frames if truncated.
  int complete_frames = 0;
};

void write_container(const std::filesystem::path& path, const ContainerHeader& header,
                     std::span<const double> data);

/// Throws FormatError naming the field for a bad magic string, a missing or
/// malformed key, or a short payload. With allow_truncated the payload may
/// end early; complete_frames then reports how many frames are whole.
Container read_container(const std::filesystem::path& path, bool allow_truncated = false);

}  // namespace sbd
