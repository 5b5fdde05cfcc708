#include "sbd/detect.hpp"

#include <algorithm>
#include <cstdlib>
#include <numeric>

#include "sbd/errors.hpp"

namespace sbd {

namespace {

Detection describe(int index, double score, const JointSignal& f, const GridGeometry& geom) {
  Detection d;
  d.grid_index = index;
  d.score = score;
  const int gw = geom.grid_width;
  const int gh = geom.grid_height;
  const int qx = index % gw;
  const int qy = index / gw;
  double wx = 0.0;
  double wy = 0.0;
  for (int ny = std::max(0, qy - 1); ny <= std::min(gh - 1, qy + 1); ++ny) {
    for (int nx = std::max(0, qx - 1); nx <= std::min(gw - 1, qx + 1); ++nx) {
      const int n = ny * gw + nx;
      for (int j = 0; j < kNumBases; ++j) d.eta[static_cast<std::size_t>(j)] += f.eta(n, j);
      for (int j = 0; j < kNumShiftedBases; ++j) {
        const double eta = f.eta(n, j);
        wx += eta * geom.grid_x_subpx(nx) + f.zeta_x(n, j);
        wy += eta * geom.grid_y_subpx(ny) + f.zeta_y(n, j);
      }
    }
  }
  d.s = d.eta[0] + d.eta[1] + d.eta[2];
  if (d.s > 0.0) {
    d.r = {geom.to_nm_x(wx / d.s), geom.to_nm_y(wy / d.s)};
  } else {
    d.r = geom.grid_point(index);
  }
  return d;
}

}  // namespace

void DetectionOptions::validate() const {
  if (!(threshold > 0.0 && threshold < 1.0)) throw ParameterError("detection threshold must lie in (0, 1)");
  if (min_separation < 1) throw ParameterError("min_separation must be >= 1");
}

std::vector<Detection> find_support(const GradMapImage& map, const JointSignal& f,
                                    const GridGeometry& geom, const DetectionOptions& options) {
  options.validate();
  const int gw = map.grid_width;
  const int gh = map.grid_height;
  if (gw != geom.grid_width || gh != geom.grid_height ||
      map.values.size() != static_cast<std::size_t>(geom.grid_size())) {
    throw ShapeError("gradmap does not match the grid");
  }
  const auto value = [&](int x, int y) { return map.values[static_cast<std::size_t>(y) * gw + x]; };

  std::vector<int> candidates;
  for (int y = 0; y < gh; ++y) {
    for (int x = 0; x < gw; ++x) {
      const double v = value(x, y);
      if (!(v >= options.threshold) || v <= 0.0) continue;
      bool is_max = true;
      for (int dy = -1; dy <= 1 && is_max; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx;
          const int ny = y + dy;
          if ((dx == 0 && dy == 0) || nx < 0 || ny < 0 || nx >= gw || ny >= gh) continue;
          if (value(nx, ny) > v) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) candidates.push_back(y * gw + x);
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(), [&](int a, int b) {
    return map.values[static_cast<std::size_t>(a)] > map.values[static_cast<std::size_t>(b)];
  });

  std::vector<Detection> out;
  std::vector<int> kept;
  for (int c : candidates) {
    const int cx = c % gw;
    const int cy = c / gw;
    const bool clear = std::none_of(kept.begin(), kept.end(), [&](int k) {
      return std::max(std::abs(k % gw - cx), std::abs(k / gw - cy)) < options.min_separation;
    });
    if (!clear) continue;
    kept.push_back(c);
    out.push_back(describe(c, map.values[static_cast<std::size_t>(c)], f, geom));
  }
  return out;
}

std::vector<Detection> find_support_each(std::span<const GradMapImage> maps, const JointSignal& f,
                                         const GridGeometry& geom, const DetectionOptions& options) {
  std::vector<Detection> out;
  for (const auto& m : maps) {
    for (auto& d : find_support(m, f, geom, options)) {
      auto same = std::find_if(out.begin(), out.end(),
                               [&](const Detection& e) { return e.grid_index == d.grid_index; });
      if (same == out.end()) {
        out.push_back(d);
      } else if (d.score > same->score) {
        same->score = d.score;
      }
    }
  }
  std::sort(out.begin(), out.end(),
            [](const Detection& a, const Detection& b) { return a.grid_index < b.grid_index; });
  return out;
}

}  // namespace sbd
