#pragma once

#include <string>
#include <vector>

namespace mbrf {

/// Mass used to normalise momentum and emissions; a standard passenger car.
inline constexpr double kReferenceMassKg = 1500.0;

struct VehicleClass {
    std::string name;
    double mass = kReferenceMassKg;  // kg
    double length = 5.0;             // m
    double max_speed = 13.89;        // m/s
    double max_accel = 2.6;          // m/s^2
    double max_decel = 4.5;          // m/s^2, positive magnitude
    double emission_scale = 1.0;     // extra multiplier on top of the mass ratio

    /// Throws ConfigError when any physical parameter is not strictly positive.
    void validate() const;
};

VehicleClass car_class();
VehicleClass truck_class();
VehicleClass bus_class();
VehicleClass motorcycle_class();

/// car, truck, bus, motorcycle in that order.
std::vector<VehicleClass> canonical_classes();

} // namespace mbrf
