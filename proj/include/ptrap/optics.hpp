#pragma once

#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "ptrap/constants.hpp"
#include "ptrap/fields.hpp"

namespace ptrap {

struct OpticsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GaussianBeam {
    double waist_w0 = 2.88e-6;      // m, at the fiber tip
    double wavelength = 674.0e-9;   // m
    Vec3 origin = Vec3::Zero();     // fiber tip position
    Vec3 direction = Vec3(0, 0, 1); // unit propagation direction
    double power = 125.0e-6;        // W

    double rayleigh_range() const { return kPi * waist_w0 * waist_w0 / wavelength; }
};

// w(z) = w0 sqrt(1 + (z/zR)^2)
double waist_at(const GaussianBeam& beam, double z);

// Solves for the tip waist w0 such that w(dist) = target. Two roots exist;
// returns the smaller (diverging fiber mode). Throws OpticsError if the
// target is unreachable (target^2 < 2 dist lambda / pi).
double calibrate_tip_waist(double target_waist, double dist, double wavelength);

// I(r) = 2P/(pi w^2) exp(-2 rho^2 / w^2). Throws OpticsError behind the tip.
double intensity(const GaussianBeam& beam, const Vec3& r);

// weak-drive linear model: rate = k * I
double shelving_rate(double intensity_w_m2, double k_rate_per_w_m2);

struct ChargingModel {
    double e_max = 10.0;          // V/m at power_ref, saturated
    Vec3 direction = Vec3(0, 0, 1);
    double tau_charge = 1.6;      // s
    double tau_discharge = 4.7;   // s
    double power_ref = 125.0e-6;  // W

    void validate() const;
};

struct LightInterval {
    double t_on = 0.0;   // s
    double t_off = 0.0;  // s, end of illumination
};

// First-order charging kinetics: during light the field relaxes toward the
// power-scaled saturation value with tau_charge, otherwise toward zero with
// tau_discharge. Continuous in t; E(t<first on) = 0.
Vec3 charging_field(const ChargingModel& model, const std::vector<LightInterval>& schedule,
                    double power, double t);

// Static-displacement response d_i = q E_i / (m omega_i^2) along principal axes.
Vec3 displacement_from_field(const Vec3& e_field, const IonSpecies& ion,
                             const SpectrumResult& spectrum);

}  // namespace ptrap
