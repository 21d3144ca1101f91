#pragma once

#include <algorithm>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace ptrap {

struct SimplexResult {
    Eigen::VectorXd x;
    double fval = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Nelder-Mead with standard coefficients. Deterministic: ties broken by index.
inline SimplexResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                                 const Eigen::VectorXd& x0, const Eigen::VectorXd& scale,
                                 double xtol, int max_iter) {
    const int n = static_cast<int>(x0.size());
    std::vector<Eigen::VectorXd> pts(n + 1, x0);
    std::vector<double> fv(n + 1);
    for (int i = 0; i < n; ++i) pts[i + 1](i) += scale(i);
    for (int i = 0; i <= n; ++i) fv[i] = f(pts[i]);

    std::vector<int> order(n + 1);
    SimplexResult res;
    for (res.iterations = 0; res.iterations < max_iter; ++res.iterations) {
        for (int i = 0; i <= n; ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return fv[a] < fv[b]; });
        const int best = order[0], worst = order[n], second = order[n - 1];

        double diam = 0.0;
        for (int i = 1; i <= n; ++i) {
            diam = std::max(diam, (pts[order[i]] - pts[best]).cwiseQuotient(scale).lpNorm<Eigen::Infinity>());
        }
        if (diam < xtol) {
            res.converged = true;
            break;
        }

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (int i = 0; i <= n; ++i) {
            if (i != worst) centroid += pts[i];
        }
        centroid /= n;

        const Eigen::VectorXd xr = centroid + (centroid - pts[worst]);
        const double fr = f(xr);
        if (fr < fv[best]) {
            const Eigen::VectorXd xe = centroid + 2.0 * (centroid - pts[worst]);
            const double fe = f(xe);
            if (fe < fr) {
                pts[worst] = xe;
                fv[worst] = fe;
            } else {
                pts[worst] = xr;
                fv[worst] = fr;
            }
        } else if (fr < fv[second]) {
            pts[worst] = xr;
            fv[worst] = fr;
        } else {
            const bool outside = fr < fv[worst];
            const Eigen::VectorXd xc = outside ? centroid + 0.5 * (xr - centroid)
                                               : centroid - 0.5 * (centroid - pts[worst]);
            const double fc = f(xc);
            if (fc < (outside ? fr : fv[worst])) {
                pts[worst] = xc;
                fv[worst] = fc;
            } else {
                for (int i = 0; i <= n; ++i) {
                    if (i == best) continue;
                    pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
                    fv[i] = f(pts[i]);
                }
            }
        }
    }
    int ibest = 0;
    for (int i = 1; i <= n; ++i) {
        if (fv[i] < fv[ibest]) ibest = i;
    }
    res.x = pts[ibest];
    res.fval = fv[ibest];
    return res;
}

}  // namespace ptrap
