#include "mbrf/vehicle_class.hpp"

#include "mbrf/errors.hpp"

namespace mbrf {

void VehicleClass::validate() const {
    const auto need = [&](double v, const char* field) {
        if (!(v > 0)) throw ConfigError("vehicle class '" + name + "': " + field + " must be > 0");
    };
    need(mass, "mass");
    need(length, "length");
    need(max_speed, "max_speed");
    need(max_accel, "max_accel");
    need(max_decel, "max_decel");
    need(emission_scale, "emission_scale");
}

VehicleClass car_class() { return {"car", 1500.0, 5.0, 13.89, 2.6, 4.5, 1.0}; }
VehicleClass truck_class() { return {"truck", 8000.0, 10.0, 11.11, 1.2, 4.0, 1.0}; }
VehicleClass bus_class() { return {"bus", 12000.0, 12.0, 11.11, 1.0, 4.0, 1.0}; }
VehicleClass motorcycle_class() { return {"motorcycle", 200.0, 2.5, 13.89, 3.0, 5.0, 1.0}; }

std::vector<VehicleClass> canonical_classes() {
    return {car_class(), truck_class(), bus_class(), motorcycle_class()};
}

} // namespace mbrf
