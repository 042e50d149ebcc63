#pragma once

#include "mbrf/vehicle_class.hpp"

namespace mbrf {

/// Polynomial speed/acceleration CO2 surrogate. Coefficients are for a
/// reference car; other classes reuse them scaled by mass_scale.
struct EmissionParams {
    double beta0 = 0.45;    // idle, g/s
    double beta1 = 0.03;    // g/m
    double beta2 = 0.002;   // g s / m^2
    double beta3 = 0.0001;  // g s^2 / m^3
    double beta4 = 0.06;    // g s^2 / m^2, acceleration coupling
    double mass_scale = 1.0;
};

EmissionParams emission_params_for(const VehicleClass& cls);

/// Instantaneous CO2 emission rate in g/s. Requires speed >= 0.
double co2_rate(double speed, double accel, const EmissionParams& params);

} // namespace mbrf
