#include "ptrap/dynamics.hpp"

#include <cmath>
#include <complex>
#include <deque>
#include <random>

#include "ptrap/rng.hpp"

namespace ptrap {

namespace {

struct PhaseTable {
    // cos/sin of the drive phase at half-step resolution; phases repeat
    // exactly every RF cycle because h = T_rf / steps_per_cycle.
    std::vector<double> c, s;
    explicit PhaseTable(double omega, double t0, int steps_per_cycle) {
        const int n = 2 * steps_per_cycle;
        c.resize(n);
        s.resize(n);
        const double phi0 = omega * t0;
        for (int k = 0; k < n; ++k) {
            const double phi = phi0 + kPi * k / steps_per_cycle;
            c[k] = std::cos(phi);
            s[k] = std::sin(phi);
        }
    }
};

}  // namespace

TrajectoryResult integrate(const FieldModel& model, const IonSpecies& ion, const Vec3& position,
                           const Vec3& velocity, const IntegrateOptions& opts) {
    if (!(position.z() > 0.0)) throw DynamicsError("ion-lost: initial z <= 0");
    if (opts.steps_per_cycle < 100) throw DynamicsError("integrate: steps_per_cycle must be >= 100");

    const double omega = model.omega();
    const double t_cycle = 2.0 * kPi / omega;
    const int n_cycles = std::max(1, static_cast<int>(std::floor(opts.duration / t_cycle)));
    const int spc = opts.steps_per_cycle;
    const double h = t_cycle / spc;
    const int stride = opts.record_stride > 0 ? opts.record_stride : std::max(1, spc / 64);
    const double qm = ion.charge / ion.mass;
    const double gamma = opts.damping;
    const double ke_floor = opts.ke_floor > 0.0
                                ? opts.ke_floor
                                : 0.5 * ion.mass * opts.ke_floor_velocity * opts.ke_floor_velocity;

    PhaseTable phase(omega, opts.start_time, spc);

    auto accel = [&](const Vec3& r, const Vec3& v, int half_index) -> Vec3 {
        const Vec3 e = model.rf_field_at(r, phase.c[half_index], phase.s[half_index]) + model.dc_field(r);
        return qm * e - gamma * v;
    };

    TrajectoryResult out;
    out.samples.reserve(static_cast<std::size_t>(n_cycles) * spc / stride + 2);

    Vec3 r = position, v = velocity;
    std::deque<double> ke_history;

    // trailing-window accumulators, restarted each cycle; the final window is
    // assembled from the last rms_window_cycles completed cycles
    const int win = std::max(1, opts.rms_window_cycles);
    std::deque<Vec3> cycle_pos_sum;
    std::deque<double> cycle_dev_sum;  // sum |r - r_ref|^2 per cycle
    std::deque<int> cycle_counts;
    const Vec3 r_ref = position;  // fixed offset to keep the variance sums small

    int step_global = 0;
    bool converged = false;
    int cycles_done = 0;
    for (int cyc = 0; cyc < n_cycles && !(converged && opts.stop_when_converged); ++cyc) {
        Vec3 vel_sum = Vec3::Zero();
        Vec3 pos_sum = Vec3::Zero();
        double dev_sum = 0.0;
        for (int k = 0; k < spc; ++k, ++step_global) {
            if (step_global % stride == 0) {
                out.samples.push_back({opts.start_time + step_global * h, r, v});
            }
            const int hi = 2 * (step_global % spc);
            const Vec3 a1 = accel(r, v, hi);
            const Vec3 r2 = r + 0.5 * h * v, v2 = v + 0.5 * h * a1;
            const Vec3 a2 = accel(r2, v2, hi + 1);
            const Vec3 r3 = r + 0.5 * h * v2, v3 = v + 0.5 * h * a2;
            const Vec3 a3 = accel(r3, v3, hi + 1);
            const Vec3 r4 = r + h * v3, v4 = v + h * a3;
            const Vec3 a4 = accel(r4, v4, (hi + 2) % (2 * spc));
            r += (h / 6.0) * (v + 2.0 * v2 + 2.0 * v3 + v4);
            v += (h / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4);

            if (!r.allFinite() || !v.allFinite()) throw DynamicsError("step-instability: NaN/overflow");
            if (r.z() <= 0.0 || r.norm() > opts.lost_radius) throw DynamicsError("ion-lost");

            vel_sum += v;
            pos_sum += r;
            dev_sum += (r - r_ref).squaredNorm();
        }
        ++cycles_done;

        cycle_pos_sum.push_back(pos_sum);
        cycle_dev_sum.push_back(dev_sum);
        cycle_counts.push_back(spc);
        if (static_cast<int>(cycle_pos_sum.size()) > win) {
            cycle_pos_sum.pop_front();
            cycle_dev_sum.pop_front();
            cycle_counts.pop_front();
        }

        const Vec3 v_sec = vel_sum / spc;
        const double ke = 0.5 * ion.mass * v_sec.squaredNorm();
        ke_history.push_back(ke);
        if (ke_history.size() > 10) ke_history.pop_front();
        if (ke_history.size() == 10) {
            double lo = ke_history.front(), hi_v = ke_history.front();
            for (double x : ke_history) {
                lo = std::min(lo, x);
                hi_v = std::max(hi_v, x);
            }
            converged = (hi_v - lo) < 0.01 * std::max(ke_history.back(), ke_floor);
        }
    }

    // window statistics: mean and rms about the window mean
    Vec3 pos_total = Vec3::Zero();
    double dev_total = 0.0;
    long n_total = 0;
    for (std::size_t i = 0; i < cycle_pos_sum.size(); ++i) {
        pos_total += cycle_pos_sum[i];
        dev_total += cycle_dev_sum[i];
        n_total += cycle_counts[i];
    }
    const Vec3 mean = pos_total / static_cast<double>(n_total);
    const double mean_dev2 = dev_total / static_cast<double>(n_total);
    const double rms2 = mean_dev2 - (mean - r_ref).squaredNorm();
    out.mean_position = mean;
    out.rms_amplitude = std::sqrt(std::max(0.0, rms2));
    out.converged = converged;
    out.final_position = r;
    out.final_velocity = v;
    out.final_time = opts.start_time + step_global * h;
    out.cycles_run = cycles_done;
    return out;
}

double steady_state_rms(const FieldModel& model, const IonSpecies& ion, const Vec3& start,
                        const SteadyStateOptions& opts) {
    const double t_cycle = 2.0 * kPi / model.omega();

    IntegrateOptions settle;
    settle.damping = opts.settle_damping;
    settle.duration = opts.settle_max_cycles * t_cycle;
    settle.steps_per_cycle = opts.steps_per_cycle;
    settle.stop_when_converged = true;
    settle.record_stride = opts.steps_per_cycle;  // sparse; settle samples unused
    TrajectoryResult s = integrate(model, ion, start, Vec3::Zero(), settle);
    if (!s.converged) throw DynamicsError("no-convergence: settle cap reached");

    IntegrateOptions meas;
    meas.damping = opts.measure_damping;
    meas.duration = std::max(20, opts.measure_cycles) * t_cycle;
    meas.steps_per_cycle = opts.steps_per_cycle;
    meas.start_time = s.final_time;
    meas.rms_window_cycles = std::max(20, opts.measure_cycles);
    TrajectoryResult m = integrate(model, ion, s.final_position, s.final_velocity, meas);
    return m.rms_amplitude;
}

OscillationComponent micromotion_velocity(const TrajectoryResult& traj, const Vec3& axis,
                                          double omega_rf) {
    const double t_cycle = 2.0 * kPi / omega_rf;
    if (traj.samples.size() < 4) throw DynamicsError("insufficient-window: too few samples");
    const double span = traj.samples.back().t - traj.samples.front().t;
    const int cycles = static_cast<int>(std::floor(span / t_cycle + 1.0e-9));
    if (cycles < 10) throw DynamicsError("insufficient-window: fewer than 10 RF cycles");
    const double t_start = traj.samples.back().t - cycles * t_cycle;

    std::complex<double> acc = 0.0;
    long n = 0;
    for (const auto& smp : traj.samples) {
        if (smp.t < t_start - 1.0e-15) continue;
        const double phi = omega_rf * smp.t;
        acc += smp.velocity.dot(axis) * std::complex<double>(std::cos(phi), -std::sin(phi));
        ++n;
    }
    acc *= 2.0 / static_cast<double>(n);
    OscillationComponent out;
    out.amplitude = std::abs(acc);
    out.phase = std::arg(acc);
    return out;
}

double trajectory_secular_frequency(const TrajectoryResult& traj, const Vec3& axis,
                                    double omega_rf) {
    const double t_cycle = 2.0 * kPi / omega_rf;
    if (traj.samples.empty()) throw DynamicsError("insufficient-window: empty trajectory");
    // cycle-averaged (secular) positions
    std::vector<double> sec_t, sec_x;
    double t0 = traj.samples.front().t;
    double acc = 0.0, tacc = 0.0;
    int n = 0;
    for (const auto& smp : traj.samples) {
        if (smp.t - t0 >= t_cycle) {
            if (n > 0) {
                sec_t.push_back(tacc / n);
                sec_x.push_back(acc / n);
            }
            t0 += t_cycle * std::floor((smp.t - t0) / t_cycle);
            acc = 0.0;
            tacc = 0.0;
            n = 0;
        }
        acc += smp.position.dot(axis);
        tacc += smp.t;
        ++n;
    }
    if (sec_x.size() < 8) throw DynamicsError("insufficient-window: too few cycles");
    double mean = 0.0;
    for (double x : sec_x) mean += x;
    mean /= static_cast<double>(sec_x.size());

    // linear-interpolated zero crossings of the secular coordinate
    std::vector<double> crossings;
    for (std::size_t i = 1; i < sec_x.size(); ++i) {
        const double a = sec_x[i - 1] - mean, b = sec_x[i] - mean;
        if ((a <= 0.0 && b > 0.0) || (a >= 0.0 && b < 0.0)) {
            const double f = a / (a - b);
            crossings.push_back(sec_t[i - 1] + f * (sec_t[i] - sec_t[i - 1]));
        }
    }
    if (crossings.size() < 3) throw DynamicsError("insufficient-window: too few oscillations");
    const double period = 2.0 * (crossings.back() - crossings.front()) /
                          static_cast<double>(crossings.size() - 1);
    return 2.0 * kPi / period;
}

MCMap mc_map(const LocalFieldModel& nominal, const IonSpecies& ion,
             const std::vector<double>& delta_rel_axis, const std::vector<double>& theta_axis,
             int n_samples, std::uint64_t seed, const McOptions& opts) {
    if (n_samples < 1) throw DynamicsError("mc_map: n_samples must be >= 1");
    const std::size_t nd = delta_rel_axis.size(), nt = theta_axis.size();
    if (nd == 0 || nt == 0) throw DynamicsError("mc_map: empty axes");

    MCMap map;
    map.delta_rel_axis = delta_rel_axis;
    map.theta_axis = theta_axis;
    map.seed = seed;
    map.rms.assign(nd * nt, 0.0);
    map.n_ok.assign(nd * nt, 0);

    const double t_cycle = 2.0 * kPi / nominal.omega();
    const double v1 = nominal.v1();
    const double delta0 = nominal.delta();

    for (int s = 0; s < n_samples; ++s) {
        // randomized start: uniform ball jitter + isotropic thermal velocity
        auto rng = make_rng(seed, static_cast<std::uint64_t>(s));
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        Vec3 jitter;
        do {
            jitter = Vec3(u(rng), u(rng), u(rng));
        } while (jitter.squaredNorm() > 1.0);
        jitter *= opts.position_jitter;
        const double sigma_v = std::sqrt(kBoltzmann * opts.temperature / ion.mass);
        std::normal_distribution<double> nv(0.0, sigma_v);
        const Vec3 v0(nv(rng), nv(rng), nv(rng));

        // one settle under the nominal drive, shared by all cells
        IntegrateOptions settle;
        settle.damping = opts.settle_damping;
        settle.duration = opts.settle_max_cycles * t_cycle;
        settle.steps_per_cycle = opts.steps_per_cycle;
        settle.stop_when_converged = true;
        settle.record_stride = opts.steps_per_cycle;
        settle.rms_window_cycles = 1;
        TrajectoryResult st = integrate(nominal, ion, nominal.center() + jitter, v0, settle);
        if (!st.converged) throw DynamicsError("no-convergence: mc_map settle cap reached");
        const Vec3 r_ref = st.mean_position;  // nominal operating position

#pragma omp parallel for collapse(2) schedule(static)
        for (std::size_t i = 0; i < nd; ++i) {
            for (std::size_t j = 0; j < nt; ++j) {
                LocalFieldModel cell = nominal;
                cell.set_drive(v1, delta0 * (1.0 + delta_rel_axis[i]), theta_axis[j]);
                IntegrateOptions meas;
                meas.damping = 0.0;
                meas.duration = opts.measure_cycles * t_cycle;
                meas.steps_per_cycle = opts.steps_per_cycle;
                meas.start_time = st.final_time;
                meas.record_stride = opts.steps_per_cycle;  // statistics only
                meas.rms_window_cycles = opts.measure_cycles;
                try {
                    TrajectoryResult m =
                        integrate(cell, ion, st.final_position, st.final_velocity, meas);
                    // positioning error about the nominal settled point
                    const double rms2 = m.rms_amplitude * m.rms_amplitude +
                                        (m.mean_position - r_ref).squaredNorm();
                    map.rms[i * nt + j] += std::sqrt(rms2);
                    map.n_ok[i * nt + j] += 1;
                } catch (const DynamicsError&) {
                    // failed cell: contributes nothing; n_ok stays short
                }
            }
        }
    }

    for (std::size_t k = 0; k < map.rms.size(); ++k) {
        map.rms[k] = map.n_ok[k] > 0 ? map.rms[k] / map.n_ok[k]
                                     : std::numeric_limits<double>::quiet_NaN();
    }
    return map;
}

bool contour_closed_around_center(const MCMap& map, double level) {
    const std::size_t nd = map.delta_rel_axis.size(), nt = map.theta_axis.size();
    std::vector<char> below(nd * nt, 0), seen(nd * nt, 0);
    for (std::size_t k = 0; k < below.size(); ++k) {
        below[k] = std::isfinite(map.rms[k]) && map.rms[k] < level;
    }
    const std::size_t ci = nd / 2, cj = nt / 2;
    if (!below[ci * nt + cj]) return false;
    // flood fill from the center over the sublevel set
    std::vector<std::pair<std::size_t, std::size_t>> stack{{ci, cj}};
    seen[ci * nt + cj] = 1;
    while (!stack.empty()) {
        auto [i, j] = stack.back();
        stack.pop_back();
        if (i == 0 || j == 0 || i == nd - 1 || j == nt - 1) return false;  // reached boundary
        const std::pair<std::size_t, std::size_t> nbrs[4] = {
            {i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}};
        for (auto [a, b] : nbrs) {
            const std::size_t k = a * nt + b;
            if (!seen[k] && below[k]) {
                seen[k] = 1;
                stack.push_back({a, b});
            }
        }
    }
    return true;
}

}  // namespace ptrap
