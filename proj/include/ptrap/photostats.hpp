#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "ptrap/constants.hpp"
#include "ptrap/dynamics.hpp"
#include "ptrap/fields.hpp"

namespace ptrap {

struct PhotostatsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TelegraphTrace {
    double bin_width = 0.0;  // s
    std::vector<int> counts;
    // per-bin majority state for synthetic data: 1 = bright, 0 = dark
    std::optional<std::vector<std::uint8_t>> true_states;
    std::uint64_t seed = 0;
};

// Two-state process sampled with exact exponential waiting times
// (bright->dark at r_shelve, dark->bright at gamma_decay, starting bright);
// per-bin counts are Poisson with the state-weighted mean.
TelegraphTrace simulate_telegraph(double r_shelve, double gamma_decay, double r_bright,
                                  double r_dark, double bin_width, double duration,
                                  std::uint64_t seed);

// counts >= threshold classify as bright. Throws PhotostatsError
// ("threshold-degenerate") for threshold <= 0; thresholds above the data
// classify everything dark.
std::vector<std::uint8_t> detect_states(const TelegraphTrace& trace, double threshold);

// two-means split of the count histogram; midpoint of the cluster means
double auto_threshold(const TelegraphTrace& trace);

struct RateEstimate {
    double rate = 0.0;    // 1/s
    double stderr_ = 0.0; // 1/s, rate/sqrt(n), defined for n >= 1
    int n_transitions = 0;
    double bright_time = 0.0;  // s
    bool stderr_defined = false;
};

// bright->dark transitions per total bright time. debounce ignores
// single-bin dark blips (off by default).
// Throws PhotostatsError("no-bright-time") for zero bright bins.
RateEstimate shelving_rate_estimate(const std::vector<std::uint8_t>& states, double bin_width,
                                    bool debounce = false);

struct LineModel {
    double linewidth = 1.351e8;  // Gamma, rad/s (422 nm cycling line)
    double detuning = -0.5 * 1.351e8;  // rad/s
    Vec3 k_vector = Vec3(1.0, 1.0, 0.0).normalized() * (2.0 * kPi / 422.0e-9);  // rad/m
};

struct CorrelationSignal {
    std::vector<int> phase_bins;     // counts per RF-phase bin over [0, 2pi)
    double modulation_depth = 0.0;   // |first Fourier component| / mean
    double modulation_phase = 0.0;   // rad
};

// RF-photon correlation for an ion held a small displacement from the node.
// The Omega velocity component uses the first-order micromotion
// reconstruction v = -(Omega/2) sum_i axis_i q_i d_i sin(Omega t); photons are
// drawn by thinning against the peak Lorentzian scattering rate.
CorrelationSignal correlation_signal(const Vec3& displacement, const DriveConfig& drive,
                                     const SpectrumResult& spectrum, const LineModel& line,
                                     long n_photons, std::uint64_t seed, int n_bins = 64);

struct CompensateOptions {
    long n_photons = 200000;
    int presearch = 5;            // coarse grid points per axis
    double xtol = 1.0e-4;         // simplex tolerance, fraction of bound
    Vec3 node_guess = Vec3(0.0, -3.3e-4, 6.2e-4);
    std::vector<LineModel> beams;  // default: two horizontal probes
};

struct CompensateResult {
    std::map<std::string, double> voltages;  // compensation to add, per electrode
    double final_depth = 0.0;                // summed modulation depth
    Vec3 residual_displacement = Vec3::Zero();  // m, from the RF node
    bool budget_exhausted = false;
    int evaluations = 0;
};

// Minimizes the summed correlation modulation depth over the compensation
// voltages (differential pairs when the four standard pads are given).
// Stray fields live in trap.drive().dc_voltages and the trap bias field.
CompensateResult compensate(const TrapFieldModel& trap, const IonSpecies& ion,
                            const std::map<std::string, double>& initial_dc, double bound_volts,
                            int budget, std::uint64_t seed, const CompensateOptions& opts = {});

// Equilibrium of the total pseudopotential (RF + DC) near the node; Newton
// with finite differences on the given model.
Vec3 equilibrium_position(const FieldModel& model, const IonSpecies& ion, const Vec3& start);

}  // namespace ptrap
