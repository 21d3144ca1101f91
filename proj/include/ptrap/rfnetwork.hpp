#pragma once

#include <complex>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace ptrap {

struct NetworkError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class ElementKind { Capacitor, Resistor };

struct Branch {
    std::string name;  // element id, e.g. "Cv"
    std::string node_a, node_b;
    ElementKind kind = ElementKind::Capacitor;
    double value = 0.0;  // farads or ohms
};

// Linear AC network driven by a unit-amplitude ideal source. Zero-ohm
// resistors are treated as ideal wires (nodes merged before assembly).
struct Network {
    std::vector<Branch> branches;
    std::string source_node = "src";
    std::string ground_node = "gnd";
    std::string probe_v1 = "v1";
    std::string probe_v2 = "v2";
};

struct RatioResult {
    double delta = 0.0;  // |V2/V1|
    double theta = 0.0;  // arg(V2/V1), in (-pi, pi]
};

// Complex nodal analysis at angular frequency omega; source at 1 + 0i.
// Throws NetworkError("singular-network") if not uniquely solvable.
std::map<std::string, std::complex<double>> solve(const Network& net, double omega);

// Throws NetworkError("probe-undefined") if a probe node is missing.
RatioResult ratio(const Network& net, double omega);

struct Sensitivity {
    double ddelta_rel = 0.0;  // response of delta/delta to the perturbation
    double dtheta = 0.0;      // rad
};

// Central-difference response of the ratio to a relative perturbation of the
// named element's value.
Sensitivity sensitivity(const Network& net, double omega, const std::string& element,
                        double relative_perturbation = 1.0e-6);

// The drive network of the paper: source feeds electrode 1 directly through
// its wire (r1) and electrode 2 through the tuning capacitor Cv and its wire
// (r2); C1, C2 shunt the electrodes, C12 couples them. With r1 = r2 = 0 this
// reduces to delta = (Cv + C12) / (Cv + C12 + C2), theta = 0.
Network default_paper_network(double cv, double r1 = 0.0, double r2 = 0.0);

// Structured-text (JSON) netlist documents; schema in the README.
std::string network_to_json(const Network& net);
Network network_from_json(const std::string& text);

}  // namespace ptrap
