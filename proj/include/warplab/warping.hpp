#pragma once

#include <functional>
#include <span>
#include <string>

#include "warplab/jet.hpp"

namespace warplab {

/// A radial warping coefficient r -> (value, d/dr, d²/dr²).
struct WarpingFunction {
  std::function<Jet2(real)> eval;
  std::string label;

  Jet2 operator()(real r) const { return eval(r); }
  real value(real r) const { return eval(r).value; }
};

/// r (1 + r²)^(-1/4): the sphere warping shared by every model here.
WarpingFunction nabonnand_f();
/// (1 + r²)^(-alpha).
WarpingFunction power_decay_h(real alpha);
/// f(r) = r, the flat cone.
WarpingFunction linear_f();
/// f(r) = sin r, the round sphere on (0, pi).
WarpingFunction sine_f();
WarpingFunction constant_h(real c);

struct RoleCheck {
  bool ok = true;
  std::string message;
  real failing_r = 0;
};

/// f(0)=0, f'(0)=1, 0 < f' < 1 and f'' < 0 on the sampled r > 0.
RoleCheck check_f_role(const WarpingFunction& f, std::span<const real> grid);
/// h(0) > 0 and h' < 0 on the sampled r > 0.
RoleCheck check_h_role(const WarpingFunction& h, std::span<const real> grid);

struct DoublyWarpedMetric {
  int k = 1;
  WarpingFunction f;
  WarpingFunction h;

  DoublyWarpedMetric(int k_, WarpingFunction f_, WarpingFunction h_);
};

}  // namespace warplab
