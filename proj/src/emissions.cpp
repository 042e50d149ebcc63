#include "mbrf/emissions.hpp"

#include <algorithm>

namespace mbrf {

EmissionParams emission_params_for(const VehicleClass& cls) {
    EmissionParams p;
    p.mass_scale = cls.mass / kReferenceMassKg * cls.emission_scale;
    return p;
}

double co2_rate(double speed, double accel, const EmissionParams& p) {
    const double v = speed;
    const double poly = p.beta0 + v * (p.beta1 + v * (p.beta2 + v * p.beta3)) +
                        p.beta4 * std::max(accel, 0.0) * v;
    return p.mass_scale * std::max(p.beta0, poly);
}

} // namespace mbrf
