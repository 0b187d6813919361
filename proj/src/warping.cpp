#include "warplab/warping.hpp"

#include <sstream>

namespace warplab {

WarpingFunction nabonnand_f() {
  return {[](real r) {
            const Jet2 x = Jet2::variable(r);
            return x * pow(1 + x * x, real(-0.25L));
          },
          "nabonnand_f"};
}

WarpingFunction power_decay_h(real alpha) {
  std::ostringstream label;
  label.precision(21);
  label << "power_decay(" << alpha << ")";
  return {[alpha](real r) {
            const Jet2 x = Jet2::variable(r);
            return pow(1 + x * x, -alpha);
          },
          label.str()};
}

WarpingFunction linear_f() {
  return {[](real r) { return Jet2::variable(r); }, "linear_f"};
}

WarpingFunction sine_f() {
  return {[](real r) { return sin(Jet2::variable(r)); }, "sine_f"};
}

WarpingFunction constant_h(real c) {
  return {[c](real) { return Jet2::constant(c); }, "constant"};
}

RoleCheck check_f_role(const WarpingFunction& f, std::span<const real> grid) {
  const Jet2 at0 = f(0);
  if (std::abs(at0.value) > 1e-15L || std::abs(at0.d1 - 1) > 1e-12L) {
    return {false, "f(0)=0 and f'(0)=1 required", 0};
  }
  for (real r : grid) {
    if (r <= 0) continue;
    const Jet2 j = f(r);
    if (!(j.d1 > 0 && j.d1 < 1)) return {false, "0 < f' < 1 violated", r};
    if (!(j.d2 < 0)) return {false, "f'' < 0 violated", r};
  }
  return {};
}

RoleCheck check_h_role(const WarpingFunction& h, std::span<const real> grid) {
  if (!(h(0).value > 0)) return {false, "h(0) > 0 violated", 0};
  for (real r : grid) {
    if (r <= 0) continue;
    if (!(h(r).d1 < 0)) return {false, "h' < 0 violated", r};
  }
  return {};
}

DoublyWarpedMetric::DoublyWarpedMetric(int k_, WarpingFunction f_, WarpingFunction h_)
    : k(k_), f(std::move(f_)), h(std::move(h_)) {
  if (k < 1) throw Error(ErrorKind::InvalidArgument, "sphere dimension k must be >= 1");
}

}  // namespace warplab
