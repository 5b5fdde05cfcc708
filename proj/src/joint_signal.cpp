#include "sbd/joint_signal.hpp"

#include <algorithm>

#include "sbd/errors.hpp"

namespace sbd {

void JointSignal::set_zero() { std::fill(values_.begin(), values_.end(), 0.0); }

bool JointSignal::group_is_zero(int i) const {
  const auto g = group(i);
  return std::all_of(g.begin(), g.end(), [](double v) { return v == 0.0; });
}

double dot(const JointSignal& a, const JointSignal& b) {
  if (a.values().size() != b.values().size()) throw ShapeError("joint signal size mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < a.values().size(); ++k) s += a.values()[k] * b.values()[k];
  return s;
}

double squared_distance(const JointSignal& a, const JointSignal& b) {
  if (a.values().size() != b.values().size()) throw ShapeError("joint signal size mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < a.values().size(); ++k) {
    const double d = a.values()[k] - b.values()[k];
    s += d * d;
  }
  return s;
}

}  // namespace sbd
