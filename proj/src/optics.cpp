#include "ptrap/optics.hpp"

#include <cmath>

namespace ptrap {

double waist_at(const GaussianBeam& beam, double z) {
    const double zr = beam.rayleigh_range();
    return beam.waist_w0 * std::sqrt(1.0 + (z / zr) * (z / zr));
}

double calibrate_tip_waist(double target_waist, double dist, double wavelength) {
    if (!(target_waist > 0.0) || !(dist >= 0.0) || !(wavelength > 0.0)) {
        throw OpticsError("calibrate_tip_waist: bad arguments");
    }
    // w(d)^2 = u + (d lambda / pi)^2 / u with u = w0^2
    const double w2 = target_waist * target_waist;
    const double c = dist * wavelength / kPi;
    const double disc = w2 * w2 - 4.0 * c * c;
    if (disc < 0.0) {
        throw OpticsError("calibrate_tip_waist: target waist unreachable at that distance");
    }
    const double u = 0.5 * (w2 - std::sqrt(disc));
    return std::sqrt(u);
}

double intensity(const GaussianBeam& beam, const Vec3& r) {
    const Vec3 d = r - beam.origin;
    const double axial = d.dot(beam.direction);
    if (axial < 0.0) throw OpticsError("intensity: point behind the fiber tip");
    const double rho2 = (d - axial * beam.direction).squaredNorm();
    const double w = waist_at(beam, axial);
    const double peak = 2.0 * beam.power / (kPi * w * w);
    return peak * std::exp(-2.0 * rho2 / (w * w));
}

double shelving_rate(double intensity_w_m2, double k_rate_per_w_m2) {
    if (intensity_w_m2 < 0.0 || k_rate_per_w_m2 < 0.0) {
        throw OpticsError("shelving_rate: negative input");
    }
    return k_rate_per_w_m2 * intensity_w_m2;
}

void ChargingModel::validate() const {
    if (e_max < 0.0) throw OpticsError("charging: e_max must be >= 0");
    if (!(tau_charge > 0.0) || !(tau_discharge > 0.0)) {
        throw OpticsError("charging: time constants must be > 0");
    }
    if (!(power_ref > 0.0)) throw OpticsError("charging: power_ref must be > 0");
}

Vec3 charging_field(const ChargingModel& model, const std::vector<LightInterval>& schedule,
                    double power, double t) {
    model.validate();
    double prev_end = -1.0e300;
    for (const auto& iv : schedule) {
        if (!(iv.t_off > iv.t_on)) throw OpticsError("charging: schedule interval has t_off <= t_on");
        if (iv.t_on < prev_end) throw OpticsError("charging: schedule overlaps or is unsorted");
        prev_end = iv.t_off;
    }
    const double e_sat = model.e_max * power / model.power_ref;

    double e = 0.0;
    double t_cursor = schedule.empty() ? t : schedule.front().t_on;
    if (t <= t_cursor) return Vec3::Zero();
    for (const auto& iv : schedule) {
        // dark stretch before this interval
        const double dark_end = std::min(iv.t_on, t);
        if (dark_end > t_cursor) {
            e *= std::exp(-(dark_end - t_cursor) / model.tau_discharge);
            t_cursor = dark_end;
        }
        if (t_cursor >= t) break;
        // lit stretch
        const double lit_end = std::min(iv.t_off, t);
        if (lit_end > t_cursor) {
            e = e_sat + (e - e_sat) * std::exp(-(lit_end - t_cursor) / model.tau_charge);
            t_cursor = lit_end;
        }
        if (t_cursor >= t) break;
    }
    if (t > t_cursor) e *= std::exp(-(t - t_cursor) / model.tau_discharge);
    return e * model.direction;
}

Vec3 displacement_from_field(const Vec3& e_field, const IonSpecies& ion,
                             const SpectrumResult& spectrum) {
    Vec3 d = Vec3::Zero();
    for (int i = 0; i < 3; ++i) {
        const double w = spectrum.omega_sec[i];
        if (!(w > 0.0)) throw SolverError("unstable-spectrum: non-positive secular frequency");
        d += spectrum.axes[i] * (ion.charge * e_field.dot(spectrum.axes[i]) / (ion.mass * w * w));
    }
    return d;
}

}  // namespace ptrap
