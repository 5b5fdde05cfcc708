#pragma once

#include <span>
#include <vector>

#include "sbd/basis.hpp"

namespace sbd {

/// Coefficients per grid point: six scaled moments eta^1..eta^6 followed by
/// (zeta_x, zeta_y) for the three shifted bases.
inline constexpr int kGroupSize = kNumBases + 2 * kNumShiftedBases;

constexpr int eta_index(int j) noexcept { return j; }
constexpr int zeta_x_index(int j) noexcept { return kNumBases + 2 * j; }
constexpr int zeta_y_index(int j) noexcept { return kNumBases + 2 * j + 1; }

/// The unknown F of the recovery problem, stored group-major.
///
/// zeta values are photon counts times sub-pixel offsets, so an emitter at
/// grid point i with offset delta (sub-pixels) has zeta^j = eta^j * delta for
/// j < 3. Bases 3..5 have no offset slots.
class JointSignal {
 public:
  JointSignal() = default;
  explicit JointSignal(int groups) : values_(static_cast<std::size_t>(groups) * kGroupSize, 0.0) {}

  int groups() const noexcept { return static_cast<int>(values_.size() / kGroupSize); }

  double& eta(int i, int j) { return values_[offset(i) + eta_index(j)]; }
  double eta(int i, int j) const { return values_[offset(i) + eta_index(j)]; }
  double& zeta_x(int i, int j) { return values_[offset(i) + zeta_x_index(j)]; }
  double zeta_x(int i, int j) const { return values_[offset(i) + zeta_x_index(j)]; }
  double& zeta_y(int i, int j) { return values_[offset(i) + zeta_y_index(j)]; }
  double zeta_y(int i, int j) const { return values_[offset(i) + zeta_y_index(j)]; }

  std::span<double> group(int i) { return {values_.data() + offset(i), kGroupSize}; }
  std::span<const double> group(int i) const { return {values_.data() + offset(i), kGroupSize}; }

  std::vector<double>& values() noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }

  void set_zero();
  bool group_is_zero(int i) const;

  friend bool operator==(const JointSignal&, const JointSignal&) = default;

 private:
  static std::size_t offset(int i) { return static_cast<std::size_t>(i) * kGroupSize; }
  std::vector<double> values_;
};

double dot(const JointSignal& a, const JointSignal& b);
double squared_distance(const JointSignal& a, const JointSignal& b);

}  // namespace sbd
