#include "ptrap/rfnetwork.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include <Eigen/Dense>
#include <json.hpp>

#include "ptrap/constants.hpp"

namespace ptrap {

namespace {

using cplx = std::complex<double>;

struct NodeIndex {
    std::vector<std::string> names;
    std::vector<int> parent;  // union-find over names

    int add(const std::string& n) {
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (names[i] == n) return static_cast<int>(i);
        }
        names.push_back(n);
        parent.push_back(static_cast<int>(names.size()) - 1);
        return static_cast<int>(names.size()) - 1;
    }
    int find(int i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    }
    void merge(int a, int b) { parent[find(a)] = find(b); }
};

cplx admittance(const Branch& b, double omega) {
    if (b.kind == ElementKind::Capacitor) return cplx(0.0, omega * b.value);
    return cplx(1.0 / b.value, 0.0);
}

}  // namespace

std::map<std::string, cplx> solve(const Network& net, double omega) {
    if (!(omega > 0.0)) throw NetworkError("solve: omega must be > 0");
    NodeIndex idx;
    const int src = idx.add(net.source_node);
    const int gnd = idx.add(net.ground_node);
    for (const auto& b : net.branches) {
        const int a = idx.add(b.node_a);
        const int c = idx.add(b.node_b);
        if (b.kind == ElementKind::Capacitor && !(b.value > 0.0)) {
            throw NetworkError("capacitance must be > 0: " + b.name);
        }
        if (b.kind == ElementKind::Resistor && b.value < 0.0) {
            throw NetworkError("resistance must be >= 0: " + b.name);
        }
        if (b.kind == ElementKind::Resistor && b.value == 0.0) idx.merge(a, c);
    }
    if (idx.find(src) == idx.find(gnd)) throw NetworkError("singular-network: source shorted to ground");

    // map union-find roots to unknown indices (excluding source and ground)
    const int n_all = static_cast<int>(idx.names.size());
    std::vector<int> unknown(n_all, -1);
    int n_unknown = 0;
    for (int i = 0; i < n_all; ++i) {
        const int r = idx.find(i);
        if (r != i) continue;
        if (r == idx.find(src) || r == idx.find(gnd)) continue;
        unknown[r] = n_unknown++;
    }

    Eigen::MatrixXcd ymat = Eigen::MatrixXcd::Zero(n_unknown, n_unknown);
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(n_unknown);
    const cplx v_src(1.0, 0.0);
    for (const auto& b : net.branches) {
        if (b.kind == ElementKind::Resistor && b.value == 0.0) continue;
        const int ra = idx.find(idx.add(b.node_a));
        const int rb = idx.find(idx.add(b.node_b));
        if (ra == rb) continue;  // self loop after merging
        const cplx y = admittance(b, omega);
        auto stamp = [&](int r_this, int r_other) {
            if (unknown[r_this] < 0) return;
            const int i = unknown[r_this];
            ymat(i, i) += y;
            if (unknown[r_other] >= 0) {
                ymat(i, unknown[r_other]) -= y;
            } else if (r_other == idx.find(src)) {
                rhs(i) += y * v_src;
            }  // ground contributes nothing
        };
        stamp(ra, rb);
        stamp(rb, ra);
    }

    Eigen::VectorXcd sol;
    if (n_unknown > 0) {
        Eigen::FullPivLU<Eigen::MatrixXcd> lu(ymat);
        if (!lu.isInvertible()) throw NetworkError("singular-network: admittance matrix not invertible");
        sol = lu.solve(rhs);
        const double resid = (ymat * sol - rhs).norm();
        const double scale = std::max(rhs.norm(), 1.0e-300);
        if (resid / scale > 1.0e-10) throw NetworkError("singular-network: poor KCL residual");
    }

    std::map<std::string, cplx> out;
    for (int i = 0; i < n_all; ++i) {
        const int r = idx.find(i);
        if (r == idx.find(src)) out[idx.names[i]] = v_src;
        else if (r == idx.find(gnd)) out[idx.names[i]] = cplx(0.0, 0.0);
        else out[idx.names[i]] = sol(unknown[r]);
    }
    return out;
}

RatioResult ratio(const Network& net, double omega) {
    auto v = solve(net, omega);
    auto it1 = v.find(net.probe_v1);
    auto it2 = v.find(net.probe_v2);
    if (it1 == v.end() || it2 == v.end()) {
        throw NetworkError("probe-undefined: missing probe node " +
                           (it1 == v.end() ? net.probe_v1 : net.probe_v2));
    }
    if (std::abs(it1->second) == 0.0) throw NetworkError("probe-undefined: V1 is zero");
    const cplx q = it2->second / it1->second;
    RatioResult r;
    r.delta = std::abs(q);
    r.theta = std::arg(q);
    return r;
}

Sensitivity sensitivity(const Network& net, double omega, const std::string& element,
                        double relative_perturbation) {
    const double p = relative_perturbation;
    auto perturbed = [&](double sign) {
        Network n2 = net;
        bool found = false;
        for (auto& b : n2.branches) {
            if (b.name == element) {
                b.value *= (1.0 + sign * p);
                found = true;
            }
        }
        if (!found) throw NetworkError("no such element: " + element);
        return ratio(n2, omega);
    };
    const RatioResult hi = perturbed(+1.0);
    const RatioResult lo = perturbed(-1.0);
    const RatioResult mid = ratio(net, omega);
    Sensitivity s;
    s.ddelta_rel = (hi.delta - lo.delta) / (2.0 * std::max(mid.delta, 1.0e-300));
    double dth = hi.theta - lo.theta;
    if (dth > kPi) dth -= 2.0 * kPi;
    if (dth < -kPi) dth += 2.0 * kPi;
    s.dtheta = dth / 2.0;
    return s;
}

Network default_paper_network(double cv, double r1, double r2) {
    if (cv < 0.5e-12 || cv > 30.0e-12) {
        std::cerr << "warning: Cv = " << cv * 1e12 << " pF outside the tuning range [0.5, 30] pF\n";
    }
    Network net;
    net.branches = {
        {"R1", "src", "v1", ElementKind::Resistor, r1},
        {"Cv", "src", "w2", ElementKind::Capacitor, cv},
        {"R2", "w2", "v2", ElementKind::Resistor, r2},
        {"C12", "v1", "v2", ElementKind::Capacitor, 3.0e-12},
        {"C1", "v1", "gnd", ElementKind::Capacitor, 30.0e-12},
        {"C2", "v2", "gnd", ElementKind::Capacitor, 30.0e-12},
    };
    return net;
}

namespace {
using nlohmann::json;
}

std::string network_to_json(const Network& net) {
    json j;
    j["source"] = net.source_node;
    j["ground"] = net.ground_node;
    j["probe_v1"] = net.probe_v1;
    j["probe_v2"] = net.probe_v2;
    json branches = json::array();
    for (const auto& b : net.branches) {
        branches.push_back({{"name", b.name},
                            {"nodes", {b.node_a, b.node_b}},
                            {"kind", b.kind == ElementKind::Capacitor ? "capacitor" : "resistor"},
                            {"value", b.value}});
    }
    j["branches"] = branches;
    return j.dump(2);
}

Network network_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw NetworkError(std::string("netlist parse error: ") + e.what());
    }
    Network net;
    net.source_node = j.value("source", "src");
    net.ground_node = j.value("ground", "gnd");
    net.probe_v1 = j.value("probe_v1", "v1");
    net.probe_v2 = j.value("probe_v2", "v2");
    for (const auto& jb : j.at("branches")) {
        Branch b;
        b.name = jb.value("name", "");
        b.node_a = jb.at("nodes").at(0).get<std::string>();
        b.node_b = jb.at("nodes").at(1).get<std::string>();
        const std::string kind = jb.at("kind").get<std::string>();
        if (kind == "capacitor") b.kind = ElementKind::Capacitor;
        else if (kind == "resistor") b.kind = ElementKind::Resistor;
        else throw NetworkError("unknown element kind: " + kind);
        b.value = jb.at("value").get<double>();
        net.branches.push_back(b);
    }
    return net;
}

}  // namespace ptrap
