#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "sbd/basis.hpp"
#include "sbd/design_operator.hpp"
#include "sbd/joint_signal.hpp"
#include "sbd/objective.hpp"

namespace sbd::test {

inline const BasisStack& default_basis() {
  static const BasisStack basis = generate_synthetic_basis(BasisGeneratorParams{});
  return basis;
}

inline DesignOperator make_op(int width, int height, int step = 0) {
  return DesignOperator(default_basis(), GridSpec{width, height, step});
}

/// Random feasible signal: eta > 0 on a fraction of groups, offsets inside the cones.
inline JointSignal random_signal(int groups, std::mt19937_64& rng, double scale, double density, double rho) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  JointSignal f(groups);
  for (int i = 0; i < groups; ++i) {
    if (u(rng) > density) continue;
    for (int j = 0; j < kNumBases; ++j) f.eta(i, j) = scale * (j < 3 ? 0.2 + u(rng) : u(rng) - 0.5);
    for (int j = 0; j < kNumShiftedBases; ++j) {
      const double r = 0.9 * rho * f.eta(i, j) * u(rng);
      const double a = 2.0 * M_PI * u(rng);
      f.zeta_x(i, j) = r * std::cos(a);
      f.zeta_y(i, j) = r * std::sin(a);
    }
  }
  return f;
}

/// Dense A built from single columns: model[p] = sum_k A[p, k] f[k].
inline std::vector<double> dense_apply(const DesignOperator& op, const JointSignal& f) {
  std::vector<double> out(op.pixel_count(), 0.0);
  for (int i = 0; i < f.groups(); ++i) {
    for (int c = 0; c < kGroupSize; ++c) {
      const double v = f.group(i)[c];
      if (v == 0.0) continue;
      const auto col = op.column(i, c);
      for (std::size_t p = 0; p < out.size(); ++p) out[p] += col[p] * v;
    }
  }
  return out;
}

inline std::filesystem::path temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "sbd_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace sbd::test
