#include "wclab/davies.hpp"

#include <algorithm>
#include <cmath>

#include "wclab/errors.hpp"

namespace wclab::davies {

namespace {

// QUADPACK 15-point Kronrod nodes with the embedded 7-point Gauss rule.
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    double a, b;
    Mat value;
    double err;
};

Panel eval_panel(const std::function<Mat(double)>& g, double a, double b) {
    double c = 0.5 * (a + b), h = 0.5 * (b - a);
    Mat k15, g7;
    for (int i = 0; i < 8; ++i) {
        Mat lo, sum;
        if (i < 7) {
            lo = g(c - h * kXgk[i]);
            sum = lo + g(c + h * kXgk[i]);
        } else {
            sum = g(c);
        }
        if (i == 0) {
            k15 = kWgk[i] * sum;
            g7 = Mat::zeros(sum.rows(), sum.cols());
        } else {
            k15 = k15 + kWgk[i] * sum;
        }
        if (i % 2 == 1) g7 = g7 + kWg[i / 2] * sum;
    }
    Panel p;
    p.a = a;
    p.b = b;
    p.value = h * k15;
    p.err = h * linalg::frob_norm(k15 - g7);
    return p;
}

}  // namespace

Mat pv_integral(const std::function<Mat(double)>& f, double e, double a, double b,
                double tol, int max_panels) {
    if (!(a < e && e < b)) throw ConditionViolated("pv_integral needs e inside (a, b)");
    Mat fe = f(e);
    auto g = [&f, &fe, e](double x) { return (1.0 / (x - e)) * (f(x) - fe); };

    std::vector<Panel> panels;
    panels.push_back(eval_panel(g, a, e));
    panels.push_back(eval_panel(g, e, b));
    while (true) {
        double total_err = 0;
        size_t worst = 0;
        for (size_t i = 0; i < panels.size(); ++i) {
            total_err += panels[i].err;
            if (panels[i].err > panels[worst].err) worst = i;
        }
        if (total_err <= tol) break;
        if (static_cast<int>(panels.size()) >= max_panels)
            throw QuadratureFailure("pv_integral: panel budget exhausted at error " +
                                    std::to_string(total_err));
        Panel old = panels[worst];
        double mid = 0.5 * (old.a + old.b);
        panels[worst] = eval_panel(g, old.a, mid);
        panels.push_back(eval_panel(g, mid, old.b));
    }
    Mat out = std::log((b - e) / (e - a)) * fe;
    for (const auto& p : panels) out = out + p.value;
    return out;
}

namespace {

Mat vv_of(const model::FriedrichsModel& m, double x) {
    Mat v = m.coupling.evaluate(x);
    return v.adjoint() * v;
}

struct Sandwich {
    double e;
    Mat P;
};

Sandwich eigen_data(const model::FriedrichsModel& m, int e_index) {
    if (e_index < 0 || e_index >= static_cast<int>(m.small.eigenvalues.size()))
        throw ConditionViolated("eigenvalue index out of range");
    return {m.small.eigenvalues[e_index], m.small.projections[e_index]};
}

// Fine uniform background grid with cached v*v values at every node.
struct FineGrid {
    std::vector<double> x, w;
    std::vector<Mat> vv;
};

FineGrid fine_grid(const model::FriedrichsModel& m, double h) {
    model::GridPolicy pol;
    pol.with_asymptotic = false;
    pol.h_bg = h;
    auto grid = model::build_grid(m, 0.0, pol);
    FineGrid fg;
    fg.x = grid.nodes;
    fg.w = grid.weights;
    fg.vv.reserve(grid.nodes.size());
    for (double x : grid.nodes) fg.vv.push_back(vv_of(m, x));
    return fg;
}

}  // namespace

Mat closed_form(const model::FriedrichsModel& m, int e_index, double tol) {
    auto [e, P] = eigen_data(m, e_index);
    auto vv = [&m](double x) { return vv_of(m, x); };
    Mat pv = pv_integral(vv, e, m.partition.window_lo, m.partition.window_hi, tol);
    double asym = linalg::frob_norm(pv - pv.adjoint());
    if (asym > std::max(20.0 * tol, 1e-12) * std::max(1.0, linalg::frob_norm(pv)))
        throw QuadratureFailure("principal value lost Hermiticity");
    pv = 0.5 * (pv + pv.adjoint());
    Mat nu = m.coupling.evaluate(e);
    Mat g = (-1.0) * pv - cx(0, M_PI) * (nu.adjoint() * nu);
    return P * g * P;
}

Mat extract_nu(const model::FriedrichsModel& m, int e_index) {
    auto [e, P] = eigen_data(m, e_index);
    return m.coupling.evaluate(e) * P;
}

namespace {

// Two-stage elimination for T(eps) = A + a eps^d + b eps^{2d}: the first stage
// leaves A - b (eps_i eps_{i+1})^d, the second interpolates that away exactly.
Mat neville_2stage(const std::vector<double>& eps, const std::vector<Mat>& T, double d,
                   double* residual) {
    size_t n = eps.size();
    std::vector<Mat> t1;
    std::vector<double> mnode;
    for (size_t i = 0; i + 1 < n; ++i) {
        double pi = std::pow(eps[i], d), pj = std::pow(eps[i + 1], d);
        t1.push_back((1.0 / (pi - pj)) * (pi * T[i + 1] - pj * T[i]));
        mnode.push_back(pi * pj);
    }
    if (t1.size() == 1) {
        if (residual) *residual = linalg::frob_norm(t1[0] - T.back());
        return t1[0];
    }
    size_t k = t1.size() - 1;
    double m0 = mnode[k - 1], m1 = mnode[k];
    Mat t2 = (1.0 / (m0 - m1)) * (m0 * t1[k] - m1 * t1[k - 1]);
    if (residual) *residual = linalg::frob_norm(t2 - t1[k]);
    return t2;
}

}  // namespace

StationaryResult stationary(const model::FriedrichsModel& m, int e_index,
                            const DaviesOptions& opts) {
    auto [e, P] = eigen_data(m, e_index);
    if (opts.epsilons.size() < 2) throw ConditionViolated("stationary route needs >= 2 epsilons");
    for (size_t i = 0; i + 1 < opts.epsilons.size(); ++i)
        if (!(opts.epsilons[i] > opts.epsilons[i + 1]))
            throw ConditionViolated("epsilons must decrease");
    double eps_min = opts.epsilons.back();
    if (!(eps_min > 0) || eps_min < 10.0 * opts.grid_h)
        throw ConditionViolated("smallest eps must stay above 10 x grid spacing");
    for (cx z : opts.zs)
        if (!(z.imag() > 0)) throw ConditionViolated("stationary probes need Im z > 0");

    auto fg = fine_grid(m, opts.grid_h);
    double delta = m.coupling.holder_delta;

    std::vector<Mat> extrapolated;
    StationaryResult out;
    for (size_t zi = 0; zi < opts.zs.size(); ++zi) {
        cx z = opts.zs[zi];
        std::vector<Mat> raw;
        for (double eps : opts.epsilons) {
            Mat acc = Mat::zeros(m.small.dim, m.small.dim);
            for (size_t j = 0; j < fg.x.size(); ++j)
                acc = acc + (fg.w[j] / (e + eps * z - fg.x[j])) * fg.vv[j];
            raw.push_back(P * acc * P);
        }
        double resid = 0;
        Mat t2 = neville_2stage(opts.epsilons, raw, delta, &resid);
        double raw_scale = 0;
        for (const auto& r : raw) raw_scale = std::max(raw_scale, linalg::frob_norm(r));
        if (linalg::frob_norm(t2) > 10.0 * raw_scale + 1.0)
            throw ExtrapolationUnstable("stationary extrapolation diverged");
        double step1_gap = linalg::frob_norm(t2 - raw.back());
        if (resid > std::max(0.75 * step1_gap, 1e-10))
            throw ExtrapolationUnstable("stationary extrapolation failed to settle");
        if (zi == 0) {
            out.gamma = t2;
            out.raw_finest = raw.back();
            out.richardson_residual = resid;
        }
        extrapolated.push_back(t2);
    }
    for (size_t zi = 1; zi < extrapolated.size(); ++zi)
        out.z_independence =
            std::max(out.z_independence, linalg::frob_norm(extrapolated[zi] - extrapolated[0]));
    return out;
}

namespace {

// int_0^T exp(-i u s) ds, stable in the confluent limit u -> 0
cx time_kernel(double u, double T) {
    double w = u * T;
    if (std::abs(w) < 1e-6) return T * cx(1.0 - w * w / 6.0, -0.5 * w);
    return (1.0 - std::exp(cx(0, -w))) / cx(0, u);
}

}  // namespace

DynamicResult dynamic_route(const model::FriedrichsModel& m, int e_index,
                            const DaviesOptions& opts) {
    auto [e, P] = eigen_data(m, e_index);
    if (!(opts.T > 0)) throw ConditionViolated("dynamic route needs T > 0");
    if (opts.T * opts.grid_h > 0.5)
        throw RecurrenceGuard("horizon T reaches the discrete recurrence scale of the grid");
    auto fg = fine_grid(m, opts.grid_h);

    auto average = [&](double T) {
        Mat acc = Mat::zeros(m.small.dim, m.small.dim);
        for (size_t j = 0; j < fg.x.size(); ++j)
            acc = acc + (fg.w[j] * time_kernel(fg.x[j] - e, T)) * fg.vv[j];
        return Mat(cx(0, -1) * (P * acc * P));
    };

    DynamicResult out;
    out.gamma = average(opts.T);
    out.gamma_half = average(0.5 * opts.T);
    out.half_diff = linalg::frob_norm(out.gamma - out.gamma_half);
    return out;
}

}  // namespace wclab::davies
