#include "ptrap/fields.hpp"

#include <cmath>

#include <omp.h>

#include "ptrap/optimize.hpp"

namespace ptrap {

namespace {
constexpr double kTwoPi = 2.0 * kPi;

void require_above_plane(const Vec3& r) {
    if (!(r.z() > 0.0)) throw FieldEvalError("evaluation-at-plane: require z > 0");
}
}  // namespace

void DriveConfig::validate() const {
    if (!(omega_rf > 0.0)) throw std::invalid_argument("drive: omega_rf must be > 0");
    if (v1 < 0.0) throw std::invalid_argument("drive: v1 must be >= 0");
    if (delta < 0.0) throw std::invalid_argument("drive: delta must be >= 0");
}

FieldBasis::FieldBasis(const TrapLayout& layout, double max_cell) : max_cell_(max_cell) {
    ids_.reserve(layout.patches.size());
    cells_.reserve(layout.patches.size());
    for (const auto& p : layout.patches) {
        ids_.push_back(p.id);
        cells_.push_back(discretize(p, max_cell));
    }
}

std::size_t FieldBasis::index_of(const std::string& id) const {
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        if (ids_[i] == id) return i;
    }
    throw FieldEvalError("no such electrode in basis: " + id);
}

const PatchCells& FieldBasis::cells(const std::string& id) const { return cells_[index_of(id)]; }

double FieldBasis::potential_of_cells(const PatchCells& c, const Vec3& r) {
    require_above_plane(r);
    const double px = r.x(), py = r.y(), z = r.z();
    const std::size_t n = c.size();
    const double* cx = c.x.data();
    const double* cy = c.y.data();
    const double* ca = c.area.data();
    double sum = 0.0;
#pragma omp parallel for reduction(+ : sum) schedule(static)
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = px - cx[i];
        const double dy = py - cy[i];
        const double d2 = dx * dx + dy * dy + z * z;
        sum += ca[i] / (d2 * std::sqrt(d2));
    }
    return z / kTwoPi * sum;
}

double FieldBasis::potential_of_cells_serial(const PatchCells& c, const Vec3& r) {
    require_above_plane(r);
    const double px = r.x(), py = r.y(), z = r.z();
    double sum = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double dx = px - c.x[i];
        const double dy = py - c.y[i];
        const double d2 = dx * dx + dy * dy + z * z;
        sum += c.area[i] / (d2 * std::sqrt(d2));
    }
    return z / kTwoPi * sum;
}

Vec3 FieldBasis::field_of_cells(const PatchCells& c, const Vec3& r) {
    require_above_plane(r);
    const double px = r.x(), py = r.y(), z = r.z();
    const std::size_t n = c.size();
    const double* cx = c.x.data();
    const double* cy = c.y.data();
    const double* ca = c.area.data();
    double ex = 0.0, ey = 0.0, ez = 0.0;
#pragma omp parallel for reduction(+ : ex, ey, ez) schedule(static)
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = px - cx[i];
        const double dy = py - cy[i];
        const double d2 = dx * dx + dy * dy + z * z;
        const double inv3 = 1.0 / (d2 * std::sqrt(d2));
        const double inv5 = inv3 / d2;
        ex += ca[i] * dx * inv5;
        ey += ca[i] * dy * inv5;
        ez += ca[i] * (3.0 * z * z * inv5 - inv3);
    }
    return {3.0 * z / kTwoPi * ex, 3.0 * z / kTwoPi * ey, ez / kTwoPi};
}

Vec3 FieldBasis::field_of_cells_serial(const PatchCells& c, const Vec3& r) {
    require_above_plane(r);
    const double px = r.x(), py = r.y(), z = r.z();
    double ex = 0.0, ey = 0.0, ez = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double dx = px - c.x[i];
        const double dy = py - c.y[i];
        const double d2 = dx * dx + dy * dy + z * z;
        const double inv3 = 1.0 / (d2 * std::sqrt(d2));
        const double inv5 = inv3 / d2;
        ex += c.area[i] * dx * inv5;
        ey += c.area[i] * dy * inv5;
        ez += c.area[i] * (3.0 * z * z * inv5 - inv3);
    }
    return {3.0 * z / kTwoPi * ex, 3.0 * z / kTwoPi * ey, ez / kTwoPi};
}

double FieldBasis::unit_potential(const std::string& id, const Vec3& r) const {
    return potential_of_cells(cells_[index_of(id)], r);
}

Vec3 FieldBasis::unit_field(const std::string& id, const Vec3& r) const {
    return field_of_cells(cells_[index_of(id)], r);
}

std::vector<Vec3> FieldBasis::unit_fields(const std::string& id, std::span<const Vec3> pts) const {
    const PatchCells& c = cells_[index_of(id)];
    std::vector<Vec3> out(pts.size());
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < pts.size(); ++i) out[i] = field_of_cells_serial(c, pts[i]);
    return out;
}

TrapFieldModel::TrapFieldModel(std::shared_ptr<const FieldBasis> basis, const TrapLayout& layout,
                               DriveConfig drive)
    : basis_(std::move(basis)), drive_(std::move(drive)) {
    drive_.validate();
    auto rf1s = layout.ids_with_role(Role::RF1);
    auto rf2s = layout.ids_with_role(Role::RF2);
    if (rf1s.size() != 1 || rf2s.size() != 1) {
        throw FieldEvalError("two-source drive needs exactly one RF1 and one RF2 patch");
    }
    rf1_ = rf1s[0];
    rf2_ = rf2s[0];
    dc_ids_ = layout.ids_with_role(Role::DC);
}

Vec3c TrapFieldModel::rf_phasor(const Vec3& r) const {
    const Vec3 e1 = basis_->unit_field(rf1_, r);
    const Vec3 e2 = basis_->unit_field(rf2_, r);
    const std::complex<double> c2 =
        drive_.v1 * drive_.delta * std::polar(1.0, drive_.theta);
    Vec3c out;
    for (int i = 0; i < 3; ++i) out(i) = drive_.v1 * e1(i) + c2 * e2(i);
    return out;
}

Vec3 TrapFieldModel::dc_field(const Vec3& r) const {
    Vec3 e = bias_;
    for (const auto& [id, v] : drive_.dc_voltages) {
        if (v != 0.0) e += v * basis_->unit_field(id, r);
    }
    return e;
}

double TrapFieldModel::dc_potential(const Vec3& r) const {
    double phi = -bias_.dot(r);
    for (const auto& [id, v] : drive_.dc_voltages) {
        if (v != 0.0) phi += v * basis_->unit_potential(id, r);
    }
    return phi;
}

double pseudopotential(const FieldModel& model, const IonSpecies& ion, const Vec3& r) {
    const Vec3c e = model.rf_phasor(r);
    const double e2 = e.squaredNorm();  // |Re|^2 + |Im|^2
    const double w = model.omega();
    return ion.charge * ion.charge * e2 / (4.0 * ion.mass * w * w) +
           ion.charge * model.dc_potential(r);
}

namespace {

double phasor_norm2(const FieldModel& model, const Vec3& r) {
    if (r.z() <= 1.0e-7) return 1.0e100 * (1.0 + (1.0e-7 - r.z()) * 1.0e7);
    return model.rf_phasor(r).squaredNorm();
}

// Gauss-Newton on the 6-component residual [Re E; Im E].
Vec3 gauss_newton_polish(const FieldModel& model, Vec3 r, int iters) {
    const double h = 1.0e-8;
    for (int it = 0; it < iters; ++it) {
        Eigen::Matrix<double, 6, 1> res;
        const Vec3c e0 = model.rf_phasor(r);
        res << e0.real(), e0.imag();
        Eigen::Matrix<double, 6, 3> jac;
        for (int j = 0; j < 3; ++j) {
            Vec3 rp = r, rm = r;
            rp(j) += h;
            rm(j) -= h;
            const Vec3c ep = model.rf_phasor(rp);
            const Vec3c em = model.rf_phasor(rm);
            for (int i = 0; i < 3; ++i) {
                jac(i, j) = (ep(i).real() - em(i).real()) / (2.0 * h);
                jac(i + 3, j) = (ep(i).imag() - em(i).imag()) / (2.0 * h);
            }
        }
        const Eigen::Matrix3d jtj = jac.transpose() * jac;
        const Vec3 g = jac.transpose() * res;
        Eigen::LDLT<Eigen::Matrix3d> ldlt(jtj);
        if (ldlt.info() != Eigen::Success) break;
        const Vec3 step = ldlt.solve(g);
        if (!step.allFinite()) break;
        const Vec3 cand = r - step;
        if (cand.z() <= 0.0 || phasor_norm2(model, cand) >= res.squaredNorm()) break;
        r = cand;
        if (step.norm() < 1.0e-15) break;
    }
    return r;
}

}  // namespace

Vec3 find_node(const FieldModel& model, const Vec3& guess, const NodeOptions& opts) {
    if (!(guess.z() > 0.0)) throw FieldEvalError("find_node: guess must have z > 0");
    auto obj = [&](const Eigen::VectorXd& x) {
        return phasor_norm2(model, Vec3(x(0), x(1), x(2)));
    };
    Eigen::VectorXd x0 = guess;
    Eigen::VectorXd scale = Eigen::VectorXd::Constant(3, opts.init_step);
    SimplexResult res = nelder_mead(obj, x0, scale, opts.tol / opts.init_step, opts.max_iter);
    if (!res.converged) {
        throw SolverError("no-convergence: node search exceeded iteration cap; last iterate (" +
                          std::to_string(res.x(0)) + ", " + std::to_string(res.x(1)) + ", " +
                          std::to_string(res.x(2)) + ")");
    }
    Vec3 node(res.x(0), res.x(1), res.x(2));
    if (opts.polish) node = gauss_newton_polish(model, node, 30);
    return node;
}

SpectrumResult secular_spectrum(const FieldModel& model, const IonSpecies& ion,
                                const Vec3& node_guess, const SpectrumOptions& opts) {
    SpectrumResult out;
    out.node = find_node(model, node_guess, opts.node);

    const double h = opts.hessian_step;
    auto psi = [&](const Vec3& r) { return pseudopotential(model, ion, r); };
    Eigen::Matrix3d hess;
    const double psi0 = psi(out.node);
    for (int i = 0; i < 3; ++i) {
        Vec3 ei = Vec3::Zero();
        ei(i) = h;
        hess(i, i) = (psi(out.node + ei) - 2.0 * psi0 + psi(out.node - ei)) / (h * h);
        for (int j = i + 1; j < 3; ++j) {
            Vec3 ej = Vec3::Zero();
            ej(j) = h;
            const double v = (psi(out.node + ei + ej) - psi(out.node + ei - ej) -
                              psi(out.node - ei + ej) + psi(out.node - ei - ej)) /
                             (4.0 * h * h);
            hess(i, j) = hess(j, i) = v;
        }
    }

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(hess);
    if (eig.info() != Eigen::Success) throw SolverError("spectrum: eigensolver failed");
    for (int k = 0; k < 3; ++k) {
        if (!(eig.eigenvalues()(k) > 0.0)) {
            throw SolverError("unstable-configuration: non-positive pseudopotential curvature");
        }
    }

    // identify axes: x = largest |x| component; of the rest, z' = more vertical
    std::array<int, 3> order{};
    int ix = 0;
    for (int k = 1; k < 3; ++k) {
        if (std::abs(eig.eigenvectors()(0, k)) > std::abs(eig.eigenvectors()(0, ix))) ix = k;
    }
    std::array<int, 2> rest{};
    int n = 0;
    for (int k = 0; k < 3; ++k) {
        if (k != ix) rest[n++] = k;
    }
    const int iz = std::abs(eig.eigenvectors()(2, rest[0])) >= std::abs(eig.eigenvectors()(2, rest[1]))
                       ? rest[0]
                       : rest[1];
    const int iy = (iz == rest[0]) ? rest[1] : rest[0];
    order = {ix, iy, iz};

    // RF phasor Jacobian for the Mathieu parameters
    Eigen::Matrix3cd jac;
    for (int j = 0; j < 3; ++j) {
        Vec3 ej = Vec3::Zero();
        ej(j) = h;
        const Vec3c ep = model.rf_phasor(out.node + ej);
        const Vec3c em = model.rf_phasor(out.node - ej);
        jac.col(j) = (ep - em) / (2.0 * h);
    }

    const double w_rf = model.omega();
    for (int k = 0; k < 3; ++k) {
        const int src = order[k];
        out.omega_sec[k] = std::sqrt(eig.eigenvalues()(src) / ion.mass);
        out.axes[k] = eig.eigenvectors().col(src);
        if (out.axes[k](2) < 0.0) out.axes[k] = -out.axes[k];
        const std::complex<double> curv =
            out.axes[k].cast<std::complex<double>>().dot(jac * out.axes[k].cast<std::complex<double>>());
        out.mathieu_q[k] = 2.0 * ion.charge * std::abs(curv) / (ion.mass * w_rf * w_rf);
    }
    out.tilt_yz = std::atan2(std::abs(out.axes[2](1)), std::abs(out.axes[2](2)));
    return out;
}

Vec3 LocalFieldModel::VectorExpansion::eval(const Vec3& dr) const {
    Vec3 out = value + jac * dr;
    for (int i = 0; i < 3; ++i) out(i) += 0.5 * dr.dot(hess[i] * dr);
    return out;
}

double LocalFieldModel::ScalarExpansion::eval(const Vec3& dr) const {
    return value + grad.dot(dr) + 0.5 * dr.dot(hess * dr);
}

namespace {

// 19-point stencil for value, Jacobian and per-component Hessians.
template <typename F>
LocalFieldModel::VectorExpansion expand_vector(const F& f, const Vec3& c, double h) {
    LocalFieldModel::VectorExpansion e;
    e.value = f(c);
    std::array<Vec3, 3> plus, minus;
    for (int j = 0; j < 3; ++j) {
        Vec3 ej = Vec3::Zero();
        ej(j) = h;
        plus[j] = f(c + ej);
        minus[j] = f(c - ej);
        e.jac.col(j) = (plus[j] - minus[j]) / (2.0 * h);
    }
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            e.hess[i](j, j) = (plus[j](i) - 2.0 * e.value(i) + minus[j](i)) / (h * h);
        }
    }
    for (int j = 0; j < 3; ++j) {
        for (int k = j + 1; k < 3; ++k) {
            Vec3 ej = Vec3::Zero(), ek = Vec3::Zero();
            ej(j) = h;
            ek(k) = h;
            const Vec3 fpp = f(c + ej + ek);
            const Vec3 fpm = f(c + ej - ek);
            const Vec3 fmp = f(c - ej + ek);
            const Vec3 fmm = f(c - ej - ek);
            for (int i = 0; i < 3; ++i) {
                const double v = (fpp(i) - fpm(i) - fmp(i) + fmm(i)) / (4.0 * h * h);
                e.hess[i](j, k) = e.hess[i](k, j) = v;
            }
        }
    }
    return e;
}

template <typename F>
LocalFieldModel::ScalarExpansion expand_scalar(const F& f, const Vec3& c, double h) {
    LocalFieldModel::ScalarExpansion e;
    e.value = f(c);
    std::array<double, 3> plus, minus;
    for (int j = 0; j < 3; ++j) {
        Vec3 ej = Vec3::Zero();
        ej(j) = h;
        plus[j] = f(c + ej);
        minus[j] = f(c - ej);
        e.grad(j) = (plus[j] - minus[j]) / (2.0 * h);
        e.hess(j, j) = (plus[j] - 2.0 * e.value + minus[j]) / (h * h);
    }
    for (int j = 0; j < 3; ++j) {
        for (int k = j + 1; k < 3; ++k) {
            Vec3 ej = Vec3::Zero(), ek = Vec3::Zero();
            ej(j) = h;
            ek(k) = h;
            const double v =
                (f(c + ej + ek) - f(c + ej - ek) - f(c - ej + ek) + f(c - ej - ek)) / (4.0 * h * h);
            e.hess(j, k) = e.hess(k, j) = v;
        }
    }
    return e;
}

}  // namespace

LocalFieldModel::LocalFieldModel(const TrapFieldModel& source, const Vec3& center, double radius,
                                 double fd_step)
    : center_(center),
      radius_(radius),
      omega_(source.omega()),
      v1_(source.drive().v1),
      delta_(source.drive().delta),
      theta_(source.drive().theta) {
    const FieldBasis& basis = source.basis();
    rf1_ = expand_vector([&](const Vec3& r) { return basis.unit_field(source.rf1_id(), r); },
                         center, fd_step);
    rf2_ = expand_vector([&](const Vec3& r) { return basis.unit_field(source.rf2_id(), r); },
                         center, fd_step);
    for (const auto& id : basis.ids()) {
        if (id == source.rf1_id() || id == source.rf2_id()) continue;
        dc_ids_.push_back(id);
        dc_field_exp_.push_back(
            expand_vector([&](const Vec3& r) { return basis.unit_field(id, r); }, center, fd_step));
        dc_pot_exp_.push_back(expand_scalar(
            [&](const Vec3& r) { return basis.unit_potential(id, r); }, center, fd_step));
        auto it = source.drive().dc_voltages.find(id);
        dc_volts_.push_back(it == source.drive().dc_voltages.end() ? 0.0 : it->second);
    }
    c2_ = v1_ * delta_ * std::polar(1.0, theta_);
}

void LocalFieldModel::set_drive(double v1, double delta, double theta) {
    v1_ = v1;
    delta_ = delta;
    theta_ = theta;
    c2_ = v1_ * delta_ * std::polar(1.0, theta_);
}

void LocalFieldModel::set_dc_voltage(const std::string& id, double volts) {
    for (std::size_t i = 0; i < dc_ids_.size(); ++i) {
        if (dc_ids_[i] == id) {
            dc_volts_[i] = volts;
            return;
        }
    }
    throw FieldEvalError("local model has no DC electrode: " + id);
}

void LocalFieldModel::set_dc_voltages(const std::map<std::string, double>& v) {
    for (const auto& [id, volts] : v) set_dc_voltage(id, volts);
}

Vec3c LocalFieldModel::rf_phasor(const Vec3& r) const {
    const Vec3 dr = r - center_;
    const Vec3 e1 = rf1_.eval(dr);
    const Vec3 e2 = rf2_.eval(dr);
    Vec3c out;
    for (int i = 0; i < 3; ++i) out(i) = v1_ * e1(i) + c2_ * e2(i);
    return out;
}

Vec3 LocalFieldModel::rf_field_at(const Vec3& r, double coswt, double sinwt) const {
    const Vec3 dr = r - center_;
    const double a1 = v1_ * coswt;
    const double a2 = c2_.real() * coswt - c2_.imag() * sinwt;
    return a1 * rf1_.eval(dr) + a2 * rf2_.eval(dr);
}

Vec3 LocalFieldModel::dc_field(const Vec3& r) const {
    const Vec3 dr = r - center_;
    Vec3 e = bias_;
    for (std::size_t i = 0; i < dc_ids_.size(); ++i) {
        if (dc_volts_[i] != 0.0) e += dc_volts_[i] * dc_field_exp_[i].eval(dr);
    }
    return e;
}

double LocalFieldModel::dc_potential(const Vec3& r) const {
    const Vec3 dr = r - center_;
    double phi = -bias_.dot(dr);
    for (std::size_t i = 0; i < dc_ids_.size(); ++i) {
        if (dc_volts_[i] != 0.0) phi += dc_volts_[i] * dc_pot_exp_[i].eval(dr);
    }
    return phi;
}

}  // namespace ptrap
