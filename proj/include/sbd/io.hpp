#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sbd/container.hpp"
#include "sbd/forward_model.hpp"
#include "sbd/refine.hpp"

namespace sbd {

/// Frames read from disk. Unusable frames (non-finite or negative pixels,
/// unreadable pages, missing payload) are nullopt with a reason in problems.
struct FrameStack {
  int width = 0;   ///< per channel
  int height = 0;
  double pixel_size_nm = 0.0;  ///< 0 when the file carries no calibration
  std::vector<std::optional<Frame>> frames;
  std::vector<std::pair<int, std::string>> problems;
};

/// True for .tif / .tiff paths.
bool is_tiff_path(const std::filesystem::path& path);

/// Writes frames as a 16-bit TIFF stack (channels side by side, values
/// rounded and clamped to [0, 65535]) or as a raw container with bases=1.
void write_frame_stack(const std::filesystem::path& path, std::span<const Frame> frames,
                       double pixel_size_nm);
/// Reads either format. A TIFF page of width 2W holds both channels.
FrameStack read_frame_stack(const std::filesystem::path& path);

struct SceneRecord {
  int frame = -1;  ///< -1 applies the emitter to every frame
  Emitter emitter;
};

/// Scene table: comma-separated with a header naming s, x_nm, y_nm,
/// theta_rad, phi_rad, gamma and optionally frame. Lines starting with '#'
/// are ignored. Throws FormatError naming the record.
std::vector<SceneRecord> read_scene(const std::filesystem::path& path);
void write_scene(const std::filesystem::path& path, std::span<const SceneRecord> scene);

struct TruthRow {
  int frame = 0;
  double x_nm = 0.0;
  double y_nm = 0.0;
  double s = 0.0;
  double theta = 0.0;
  double phi = 0.0;
  double gamma = 0.0;
};
void write_truth(std::ostream& out, std::span<const TruthRow> rows);
std::vector<TruthRow> read_truth(const std::filesystem::path& path);

struct LocalizationRow {
  int frame = 0;
  EmitterEstimate estimate;
};

inline constexpr const char* kLocalizationHeader =
    "frame_index,x_nm,y_nm,s_photons,eta1,eta2,eta3,eta4,eta5,eta6,theta_rad,phi_rad,gamma,"
    "cone_half_angle_rad,nll,flags";

void write_localizations(std::ostream& out, std::span<const LocalizationRow> rows);
std::vector<LocalizationRow> read_localizations(const std::filesystem::path& path);

/// One "key=value" line per entry.
void write_metrics(std::ostream& out, std::span<const std::pair<std::string, std::string>> metrics);

/// Single-page 16-bit grayscale TIFF.
void write_tiff16(const std::filesystem::path& path, int width, int height,
                  std::span<const std::uint16_t> pixels);

}  // namespace sbd
