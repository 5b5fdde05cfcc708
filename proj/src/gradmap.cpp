#include "sbd/gradmap.hpp"

#include <algorithm>
#include <cmath>

#include "sbd/errors.hpp"

namespace sbd {

namespace {

void check_basis(int j) {
  if (j < 0 || j >= kNumShiftedBases) throw ShapeError("gradmap needs one of the shifted bases 0..2");
}

GradMapImage empty_like(const GridGeometry& geom, int j) {
  GradMapImage g;
  g.grid_width = geom.grid_width;
  g.grid_height = geom.grid_height;
  g.basis = j;
  g.values.assign(static_cast<std::size_t>(geom.grid_size()), 0.0);
  return g;
}

}  // namespace

double GradMapImage::max() const {
  return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
}

GradMapImage gradmap_scores(const JointSignal& f, int j, const GridGeometry& geom) {
  check_basis(j);
  if (f.groups() != geom.grid_size()) throw ShapeError("signal does not match the grid");
  GradMapImage out = empty_like(geom, j);
  const double rho = geom.rho_subpx();
  const int gw = geom.grid_width;
  const int gh = geom.grid_height;
  for (int qy = 0; qy < gh; ++qy) {
    for (int qx = 0; qx < gw; ++qx) {
      double score = 0.0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int ny = qy + dy;
          const int nx = qx + dx;
          if (nx < 0 || ny < 0 || nx >= gw || ny >= gh) continue;
          const int n = ny * gw + nx;
          const double eta = f.eta(n, j);
          if (!(eta > 0.0)) continue;
          const double ox = f.zeta_x(n, j) / eta;
          const double oy = f.zeta_y(n, j) / eta;
          const double len = std::hypot(ox, oy);
          double c = 0.0;
          if (dx == 0 && dy == 0) {
            c = len < 0.5 * rho ? 1.0 : 0.0;
          } else if (len > 0.0) {
            // Pointing vector from the neighbor back toward the center.
            const double px = -dx;
            const double py = -dy;
            c = std::max(0.0, (ox * px + oy * py) / (len * std::hypot(px, py)));
          }
          score += eta * c;
        }
      }
      out.values[static_cast<std::size_t>(qy) * gw + qx] = score;
    }
  }
  return out;
}

std::vector<double> gradmap_weights(const JointSignal& f, int j, const GridGeometry& geom) {
  check_basis(j);
  if (f.groups() != geom.grid_size()) throw ShapeError("signal does not match the grid");
  const int gw = geom.grid_width;
  const int gh = geom.grid_height;
  std::vector<double> w(static_cast<std::size_t>(geom.grid_size()), 0.0);
  for (int qy = 0; qy < gh; ++qy) {
    for (int qx = 0; qx < gw; ++qx) {
      double acc = 0.0;
      for (int ny = std::max(0, qy - 1); ny <= std::min(gh - 1, qy + 1); ++ny) {
        for (int nx = std::max(0, qx - 1); nx <= std::min(gw - 1, qx + 1); ++nx) {
          acc += std::max(0.0, f.eta(ny * gw + nx, j));
        }
      }
      w[static_cast<std::size_t>(qy) * gw + qx] = acc;
    }
  }
  return w;
}

GradMapImage gradmap(const JointSignal& f, int j, const GridGeometry& geom, double scale) {
  GradMapImage g = gradmap_scores(f, j, geom);
  if (!(scale > 0.0)) {
    const auto w = gradmap_weights(f, j, geom);
    scale = w.empty() ? 0.0 : *std::max_element(w.begin(), w.end());
  }
  if (scale > 0.0) {
    for (double& v : g.values) v = std::min(1.0, v / scale);
  }
  return g;
}

GradMapImage pool_gradmaps(const GradMapImage& g1, const GradMapImage& g2, const GradMapImage& g3) {
  const auto same = [&](const GradMapImage& g) {
    return g.grid_width == g1.grid_width && g.grid_height == g1.grid_height &&
           g.values.size() == g1.values.size();
  };
  if (!same(g2) || !same(g3)) throw ShapeError("gradmaps to pool differ in size");
  GradMapImage out = g1;
  out.basis = -1;
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    out.values[i] = (g1.values[i] + g2.values[i] + g3.values[i]) / 3.0;
  }
  return out;
}

GradMapImage normalize_gradmap(const GradMapImage& g, double floor) {
  GradMapImage out = g;
  const double scale = std::max(g.max(), floor);
  if (scale > 0.0) {
    for (double& v : out.values) v = std::clamp(v / scale, 0.0, 1.0);
  }
  return out;
}

}  // namespace sbd
