#include "mfopf/converter.hpp"

namespace mfopf {

double interface_power_residual(const ConverterInterface& iface, double p_i, double p_j, double losses_i,
                                double losses_j) {
  if (!iface.losses_enabled) return p_i + p_j;
  return p_i + p_j + losses_i + losses_j;
}

std::array<double, 2> converter_limit_residuals(const ConverterTerminal& terminal, double v,
                                                const ArmCurrents<double>& ac) {
  return {v - terminal.v_max, ac.i_rms_sq - terminal.i_arm_rms_max * terminal.i_arm_rms_max};
}

}  // namespace mfopf
