#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "ptrap/constants.hpp"
#include "ptrap/fields.hpp"

namespace ptrap {

struct DynamicsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TrajectorySample {
    double t;  // s
    Vec3 position;
    Vec3 velocity;
};

struct TrajectoryResult {
    std::vector<TrajectorySample> samples;
    Vec3 mean_position = Vec3::Zero();  // over the RMS window
    double rms_amplitude = 0.0;         // m, about mean_position, integer cycles
    bool converged = false;
    // end state, for chaining legs with RF-phase continuity
    Vec3 final_position = Vec3::Zero();
    Vec3 final_velocity = Vec3::Zero();
    double final_time = 0.0;
    int cycles_run = 0;
};

struct IntegrateOptions {
    double damping = 0.0;          // gamma, 1/s
    double duration = 0.0;         // s (rounded down to whole RF cycles, min 1)
    int steps_per_cycle = 1000;    // >= 100
    double start_time = 0.0;       // s, sets the RF phase of the first step
    int record_stride = 0;         // steps between samples; 0 = steps_per_cycle/64
    int rms_window_cycles = 20;    // trailing window for mean/rms
    bool stop_when_converged = false;
    double ke_floor = 0.0;         // J; 0 = auto from ke_floor_velocity
    double ke_floor_velocity = 1.0e-3;  // m/s scale defining "settled"
    double lost_radius = 2.5e-2;   // m
};

// m r'' = q E(r, t) - m gamma r', classic RK4 with a fixed step.
// Convergence: the cycle-averaged kinetic energy of the secular (cycle-mean)
// velocity varies by < 1% over 10 consecutive cycles, relative to
// max(KE, ke_floor). Throws DynamicsError("ion-lost"/"step-instability").
TrajectoryResult integrate(const FieldModel& model, const IonSpecies& ion, const Vec3& position,
                           const Vec3& velocity, const IntegrateOptions& opts);

struct SteadyStateOptions {
    double settle_damping = 2.0 * kPi * 5.0e3;  // 1/s
    int settle_max_cycles = 6000;
    double measure_damping = 0.0;
    int measure_cycles = 60;  // >= 20
    int steps_per_cycle = 1000;
};

// Settles with damping until the convergence criterion holds, then remeasures
// the RMS amplitude (about the trajectory's own mean) over an undamped window.
double steady_state_rms(const FieldModel& model, const IonSpecies& ion, const Vec3& start,
                        const SteadyStateOptions& opts = {});

// Amplitude and phase of the Omega Fourier component of velocity projected on
// axis, over the trailing integer-cycle window of the samples.
// Throws DynamicsError("insufficient-window") below 10 cycles.
struct OscillationComponent {
    double amplitude = 0.0;  // m/s
    double phase = 0.0;      // rad
};
OscillationComponent micromotion_velocity(const TrajectoryResult& traj, const Vec3& axis,
                                          double omega_rf);

// Secular frequency from the cycle-averaged trajectory (zero crossings of the
// projection on axis). Test-oracle support.
double trajectory_secular_frequency(const TrajectoryResult& traj, const Vec3& axis,
                                    double omega_rf);

struct MCMap {
    std::vector<double> delta_rel_axis;  // relative ratio error, dimensionless
    std::vector<double> theta_axis;      // rad
    std::vector<double> rms;             // m, row-major [i_delta * n_theta + j]
    std::vector<int> n_ok;               // successful samples per cell
    std::uint64_t seed = 0;

    double at(std::size_t i, std::size_t j) const { return rms[i * theta_axis.size() + j]; }
};

struct McOptions {
    int steps_per_cycle = 1000;
    int measure_cycles = 100;
    double settle_damping = 2.0 * kPi * 5.0e3;
    int settle_max_cycles = 6000;
    double position_jitter = 1.0e-6;  // m, uniform ball
    double temperature = 5.0e-3;      // K, isotropic thermal velocity draw
};

// RMS positioning error under drive imperfections. Per sample the ion is
// settled once under the nominal drive from randomized initial conditions;
// each cell then evolves that state undamped under (delta*(1+x), theta) and
// takes the RMS displacement about the settled reference position.
// Cells run in parallel; per-sample RNG streams derive from (seed, sample).
MCMap mc_map(const LocalFieldModel& nominal, const IonSpecies& ion,
             const std::vector<double>& delta_rel_axis, const std::vector<double>& theta_axis,
             int n_samples, std::uint64_t seed, const McOptions& opts = {});

// True when the sublevel set {rms < level} containing the center cell does
// not touch the grid boundary (the contour closes inside the map).
bool contour_closed_around_center(const MCMap& map, double level);

}  // namespace ptrap
