#ifndef WCLAB_DAVIES_HPP
#define WCLAB_DAVIES_HPP

#include <functional>
#include <vector>

#include "wclab/model.hpp"

namespace wclab::davies {

using linalg::cx;
using linalg::Mat;

// Principal value integral P int_a^b f(x)/(x - e) dx for e in (a, b),
// via adaptive Gauss-Kronrod on (f(x) - f(e))/(x - e) plus the exact log term.
Mat pv_integral(const std::function<Mat(double)>& f, double e, double a, double b,
                double tol = 1e-10, int max_panels = 4000);

// Effective generator at eigenvalue e (index into small.eigenvalues):
// Gamma_e = P_e (-PV int v*v/(x-e) dx - i pi v*(e) v(e)) P_e over the window.
Mat closed_form(const model::FriedrichsModel& m, int e_index, double tol = 1e-10);

// Coupling value at e restricted to the eigenspace: nu = v(e) P_e.
Mat extract_nu(const model::FriedrichsModel& m, int e_index);

struct DaviesOptions {
    std::vector<double> epsilons = {0.1, 0.05, 0.025};  // descending
    std::vector<cx> zs = {cx(0, 1), cx(1, 1)};          // upper half plane probes
    double grid_h = 4e-4;                               // fine background spacing
    double T = 1e3;                                     // dynamic route horizon
};

struct StationaryResult {
    Mat gamma;                  // Richardson-extrapolated, at zs[0]
    Mat raw_finest;             // unextrapolated value at the smallest epsilon
    double z_independence = 0;  // max deviation between extrapolations across zs
    double richardson_residual = 0;
};

// Stationary route: Gamma(eps, z) = P_e V*(e + eps z - H_R)^{-1} V P_e on a
// fine background grid, extrapolated in eps with exponents (delta, 2 delta).
StationaryResult stationary(const model::FriedrichsModel& m, int e_index,
                            const DaviesOptions& opts = {});

struct DynamicResult {
    Mat gamma;       // horizon T
    Mat gamma_half;  // horizon T/2, convergence diagnostic
    double half_diff = 0;
};

// Dynamic route: Gamma = -i int_0^T e^{i e s} C(s) ds with the node-wise
// time integral done in closed form.
DynamicResult dynamic_route(const model::FriedrichsModel& m, int e_index,
                            const DaviesOptions& opts = {});

}  // namespace wclab::davies

#endif
