#pragma once

namespace ptrap {

// CODATA 2018
inline constexpr double kElementaryCharge = 1.602176634e-19;  // C
inline constexpr double kAtomicMassUnit = 1.66053906660e-27;  // kg
inline constexpr double kBoltzmann = 1.380649e-23;            // J/K
inline constexpr double kPi = 3.14159265358979323846;

struct IonSpecies {
    double mass;    // kg
    double charge;  // C
};

// 88Sr+, the workhorse ion here
inline IonSpecies sr88_ion() {
    return {87.905612 * kAtomicMassUnit, kElementaryCharge};
}

}  // namespace ptrap
