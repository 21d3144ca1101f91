#pragma once

#include <array>
#include <complex>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ptrap/constants.hpp"
#include "ptrap/geometry.hpp"

namespace ptrap {

using Vec3c = Eigen::Vector3cd;

struct FieldEvalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DriveConfig {
    double omega_rf = 2.0 * kPi * 6.0e6;  // rad/s
    double v1 = 125.0;                    // V amplitude on RF1
    double delta = 0.92;                  // V2/V1
    double theta = 0.0;                   // rad, relative phase of RF2
    std::map<std::string, double> dc_voltages;

    void validate() const;
};

// Per-electrode unit-voltage potentials/fields above a gapless plane:
//   phi(r) = (z / 2pi) * Integral dA' / |r - r'|^3
// integrated with the midpoint rule over discretize() cells.
class FieldBasis {
public:
    FieldBasis(const TrapLayout& layout, double max_cell = 2.0e-5);

    double unit_potential(const std::string& id, const Vec3& r) const;
    Vec3 unit_field(const std::string& id, const Vec3& r) const;

    // Batch evaluation; results ordered by input index.
    std::vector<Vec3> unit_fields(const std::string& id, std::span<const Vec3> pts) const;

    const PatchCells& cells(const std::string& id) const;
    double max_cell() const { return max_cell_; }
    const std::vector<std::string>& ids() const { return ids_; }

    // quadrature kernels (OpenMP) and the serial references kept for testing
    static double potential_of_cells(const PatchCells& c, const Vec3& r);
    static double potential_of_cells_serial(const PatchCells& c, const Vec3& r);
    static Vec3 field_of_cells(const PatchCells& c, const Vec3& r);
    static Vec3 field_of_cells_serial(const PatchCells& c, const Vec3& r);

private:
    std::vector<std::string> ids_;
    std::vector<PatchCells> cells_;
    double max_cell_;
    std::size_t index_of(const std::string& id) const;
};

// The time-dependent field seen by the ion:
//   E(r, t) = Re[rf_phasor(r) e^{i omega t}] + dc_field(r)
class FieldModel {
public:
    virtual ~FieldModel() = default;
    virtual Vec3c rf_phasor(const Vec3& r) const = 0;
    virtual Vec3 dc_field(const Vec3& r) const = 0;
    virtual double dc_potential(const Vec3& r) const = 0;
    virtual double omega() const = 0;

    // instantaneous RF field given cos/sin of the drive phase
    virtual Vec3 rf_field_at(const Vec3& r, double coswt, double sinwt) const {
        const Vec3c p = rf_phasor(r);
        Vec3 out;
        for (int i = 0; i < 3; ++i) out(i) = p(i).real() * coswt - p(i).imag() * sinwt;
        return out;
    }
};

// Quadrature-backed model over a trap layout.
class TrapFieldModel : public FieldModel {
public:
    TrapFieldModel(std::shared_ptr<const FieldBasis> basis, const TrapLayout& layout,
                   DriveConfig drive);

    Vec3c rf_phasor(const Vec3& r) const override;
    Vec3 dc_field(const Vec3& r) const override;
    double dc_potential(const Vec3& r) const override;
    double omega() const override { return drive_.omega_rf; }

    const DriveConfig& drive() const { return drive_; }
    void set_drive(const DriveConfig& d) { drive_ = d; }
    void set_bias_field(const Vec3& e) { bias_ = e; }
    const FieldBasis& basis() const { return *basis_; }
    const std::string& rf1_id() const { return rf1_; }
    const std::string& rf2_id() const { return rf2_; }

private:
    std::shared_ptr<const FieldBasis> basis_;
    DriveConfig drive_;
    Vec3 bias_ = Vec3::Zero();
    std::string rf1_, rf2_;
    std::vector<std::string> dc_ids_;
};

// Ideal quadrupole with uniform-gradient RF field, used as the Mathieu test
// oracle: E_rf = A * diag(gx, gy, gz) * r (gx+gy+gz = 0 keeps it Laplacian),
// plus an optional uniform static field.
class QuadrupoleFieldModel : public FieldModel {
public:
    QuadrupoleFieldModel(double omega_rf, double amplitude, const Vec3& g,
                         const Vec3& dc = Vec3::Zero())
        : omega_(omega_rf), amp_(amplitude), g_(g), dc_(dc) {}

    Vec3c rf_phasor(const Vec3& r) const override {
        return (amp_ * g_.cwiseProduct(r)).cast<std::complex<double>>();
    }
    Vec3 dc_field(const Vec3& r) const override { (void)r; return dc_; }
    double dc_potential(const Vec3& r) const override { return -dc_.dot(r); }
    double omega() const override { return omega_; }

    void set_dc(const Vec3& e) { dc_ = e; }
    // Mathieu q along axis i for an ion
    double mathieu_q(const IonSpecies& ion, int axis) const {
        return 2.0 * ion.charge * amp_ * g_(axis) / (ion.mass * omega_ * omega_);
    }

private:
    double omega_, amp_;
    Vec3 g_, dc_;
};

double pseudopotential(const FieldModel& model, const IonSpecies& ion, const Vec3& r);

struct NodeOptions {
    double tol = 1.0e-9;       // m, simplex tolerance
    double init_step = 5.0e-5; // m
    int max_iter = 4000;
    bool polish = true;        // Gauss-Newton refinement of the phasor residual
};

// Local minimizer of |rf_phasor|^2 from the given guess.
Vec3 find_node(const FieldModel& model, const Vec3& guess, const NodeOptions& opts = {});

struct SpectrumResult {
    Vec3 node = Vec3::Zero();
    std::array<double, 3> omega_sec{};  // rad/s, ordered [x, y', z']
    std::array<Vec3, 3> axes{};         // principal axes matching omega_sec
    double tilt_yz = 0.0;               // rad, tilt of the z'-axis from vertical
    std::array<double, 3> mathieu_q{};
};

struct SpectrumOptions {
    double hessian_step = 1.0e-6;  // m
    NodeOptions node;
};

SpectrumResult secular_spectrum(const FieldModel& model, const IonSpecies& ion,
                                const Vec3& node_guess, const SpectrumOptions& opts = {});

// Quadratic Taylor cache of a FieldModel around a point. RF1/RF2 unit fields
// and per-electrode DC unit fields are expanded separately, so drive ratio,
// phase and DC voltages stay adjustable without rebuilding.
class LocalFieldModel : public FieldModel {
public:
    struct VectorExpansion {
        Vec3 value = Vec3::Zero();
        Eigen::Matrix3d jac = Eigen::Matrix3d::Zero();
        std::array<Eigen::Matrix3d, 3> hess{Eigen::Matrix3d::Zero(), Eigen::Matrix3d::Zero(),
                                            Eigen::Matrix3d::Zero()};
        Vec3 eval(const Vec3& dr) const;
    };
    struct ScalarExpansion {
        double value = 0.0;
        Vec3 grad = Vec3::Zero();
        Eigen::Matrix3d hess = Eigen::Matrix3d::Zero();
        double eval(const Vec3& dr) const;
    };

    // Builds from a quadrature model; fd_step is the stencil spacing.
    LocalFieldModel(const TrapFieldModel& source, const Vec3& center, double radius,
                    double fd_step = 2.0e-6);

    Vec3c rf_phasor(const Vec3& r) const override;
    Vec3 dc_field(const Vec3& r) const override;
    double dc_potential(const Vec3& r) const override;
    double omega() const override { return omega_; }
    Vec3 rf_field_at(const Vec3& r, double coswt, double sinwt) const override;

    void set_drive(double v1, double delta, double theta);
    void set_dc_voltage(const std::string& id, double volts);
    void set_dc_voltages(const std::map<std::string, double>& v);
    void set_bias_field(const Vec3& e) { bias_ = e; }

    const Vec3& center() const { return center_; }
    double radius() const { return radius_; }
    double v1() const { return v1_; }
    double delta() const { return delta_; }
    double theta() const { return theta_; }

private:
    Vec3 center_;
    double radius_, omega_;
    double v1_, delta_, theta_;
    VectorExpansion rf1_, rf2_;
    std::vector<std::string> dc_ids_;
    std::vector<VectorExpansion> dc_field_exp_;
    std::vector<ScalarExpansion> dc_pot_exp_;
    std::vector<double> dc_volts_;
    Vec3 bias_ = Vec3::Zero();
    std::complex<double> c2_ = 0.0;  // v1 * delta * e^{i theta}, cached
};

}  // namespace ptrap
