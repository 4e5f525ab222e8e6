#pragma once

#include "mfopf/network.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace mfopf {

// Steady-state model of a back-to-back modular multilevel converter seen as a
// two-port element. Powers are injections from the converter into its
// terminal buses, in per unit; V is the terminal rms voltage magnitude.

/// Arm current statistics of one converter terminal.
template <class T>
struct ArmCurrents {
  T i_rms_sq;  // squared rms arm current
  T i_mabs;    // mean absolute arm current
  T i_dc;      // DC-link current
};

/// Smoothing used inside the optimization model so that the mean-absolute
/// current stays differentiable at zero power. Perturbs losses by O(eps).
inline constexpr double kArmCurrentSmoothing = 1e-6;

/// Arm currents at a terminal exchanging (p, q) at voltage v with modulation
/// index m. With eps = 0 the exact expressions are used and the removable
/// singularity at p = q = 0 evaluates to zero. With eps > 0 every square root
/// and |p| is regularized by eps^2.
template <class T>
ArmCurrents<T> arm_currents(const T& p, const T& q, const T& v, double m, double eps = 0.0) {
  using std::sqrt;
  if (!(v > 0.0)) throw EvaluationError("arm currents need a positive terminal voltage");
  const T p2 = p * p;
  const T q2 = q * q;
  const double m2 = m * m;
  const double e2 = eps * eps;

  ArmCurrents<T> out{(m2 * p2 + (p2 + q2) / 2.0) / (18.0 * v * v), T(0.0), T(0.0)};
  const double k_mabs = 2.0 * std::numbers::sqrt2 / 3.0;
  if (eps == 0.0) {
    out.i_dc = m * (p < 0.0 ? T(-p) : p) / (std::numbers::sqrt2 * v);
    if (p2 + q2 > 0.0) out.i_mabs = k_mabs / v * (m2 * p2 / sqrt(p2 + q2) + sqrt(q2 + p2 * (1.0 - m2)));
  } else {
    out.i_dc = m * sqrt(p2 + e2) / (std::numbers::sqrt2 * v);
    out.i_mabs = k_mabs / v * (m2 * p2 / sqrt(p2 + q2 + e2) + sqrt(q2 + p2 * (1.0 - m2) + e2));
  }
  return out;
}

/// Conduction loss summed over the six arms of one converter stage.
template <class T>
T conduction_loss(const ArmCurrents<T>& ac, double c1, double c2, double c3) {
  return 6.0 * (c1 * ac.i_rms_sq + c2 * ac.i_mabs + c3 * ac.i_dc);
}

/// Switching loss of one converter stage, including the constant no-load term.
template <class T>
T switching_loss(const ArmCurrents<T>& ac, double s1, double s2, double s3) {
  return 6.0 * (s1 * ac.i_rms_sq + s2 * ac.i_mabs + s3);
}

template <class T>
T terminal_loss(const ArmCurrents<T>& ac, const LossCoefficients& k) {
  return conduction_loss(ac, k.c1, k.c2, k.c3) + switching_loss(ac, k.s1, k.s2, k.s3);
}

/// Active-power balance of an interface: zero when the power leaving one side
/// equals the power entering the other plus the converter losses. Loss terms
/// are ignored when the interface has losses disabled.
double interface_power_residual(const ConverterInterface& iface, double p_i, double p_j, double losses_i,
                                double losses_j);

/// Converter voltage and arm-current limit residuals of one terminal; each
/// entry is <= 0 when satisfied: {V - v_max, i_rms_sq - i_arm_rms_max^2}.
std::array<double, 2> converter_limit_residuals(const ConverterTerminal& terminal, double v,
                                                const ArmCurrents<double>& ac);

}  // namespace mfopf
