#include <doctest.h>

#include <cmath>
#include <functional>

#include "oracle.hpp"
#include "wclab/davies.hpp"
#include "wclab/errors.hpp"
#include "wclab/wcl.hpp"

using namespace wclab;
using namespace wclab::wcl;
using linalg::cx;
using linalg::Mat;

namespace {

model::GridPolicy small_policy(double K = 6.0, double dy = 0.25, double h = 0.2) {
    model::GridPolicy p;
    p.K = K;
    p.dy = dy;
    p.h_bg = h;
    return p;
}

using model::FriedrichsModel;

FriedrichsModel scalar_zero_model(double e0) {
    FriedrichsModel m;
    m.name = "test-zero";
    m.small = model::make_small_system(Mat::diag({cx(e0, 0.0)}));
    m.partition.cells = {{-HUGE_VAL, HUGE_VAL, 1}};
    m.partition.window_lo = -20.0;
    m.partition.window_hi = 20.0;
    m.coupling.evaluate = [](double) { return Mat::zeros(1, 1); };
    m.coupling.holder_delta = 1.0;
    m.coupling.bound = 0.0;
    m.neighborhoods = model::default_neighborhoods(m.small, m.partition);
    return m;
}

// drop scaled nodes with |y_j| above cut, mimicking a clipped grid
model::ReservoirGrid clip_grid(const model::ReservoirGrid& g, const AsymptoticSystem& sys,
                               double cut) {
    model::ReservoirGrid out = g;
    out.nodes.clear();
    out.weights.clear();
    out.fiber_dims.clear();
    out.tags.clear();
    out.offsets.clear();
    out.total_fiber_dim = 0;
    for (size_t i = 0; i < g.nodes.size(); ++i) {
        if (g.tags[i].kind == model::NodeTag::Scaled &&
            std::abs(sys.policy.y_node(g.tags[i].j)) > cut)
            continue;
        out.nodes.push_back(g.nodes[i]);
        out.weights.push_back(g.weights[i]);
        out.fiber_dims.push_back(g.fiber_dims[i]);
        out.tags.push_back(g.tags[i]);
        out.offsets.push_back(out.total_fiber_dim);
        out.total_fiber_dim += g.fiber_dims[i];
    }
    return out;
}

double block_norm(const Mat& m, int r0, int nr, int c0, int nc) {
    return linalg::op_norm(m.block(r0, c0, nr, nc));
}

}  // namespace

TEST_CASE("asymptotic system layout") {
    auto pol = small_policy();
    auto sys = build_asymptotic(model::builtin_model("lorentzian"), pol);
    CHECK(sys.dimE == 1);
    CHECK(sys.sectors.size() == 1);
    CHECK(sys.dim() == 1 + 49);
    CHECK(sys.offsets[0] == 1);

    auto tl = build_asymptotic(model::builtin_model("two-level"), pol);
    CHECK(tl.dimE == 2);
    CHECK(tl.es.size() == 2);
    CHECK(tl.es[0] == doctest::Approx(-1.0));
    CHECK(tl.es[1] == doctest::Approx(1.0));
    CHECK(tl.dim() == 2 + 49 + 49);
    CHECK(tl.offsets[0] == 2);
    CHECK(tl.offsets[1] == 2 + 49);
}

TEST_CASE("scaling map is an exact partial isometry") {
    auto m = model::builtin_model("lorentzian");
    auto pol = small_policy();
    auto sys = build_asymptotic(m, pol);
    auto grid = model::build_grid(m, 0.4, pol);
    auto J = build_J(m, grid, sys, 0.4);
    CHECK(J.asym_dim == sys.dim());
    CHECK(J.phys_dim == 1 + grid.total_fiber_dim);

    Mat jm = J.to_matrix();
    for (int i = 0; i < jm.rows(); ++i)
        for (int j = 0; j < jm.cols(); ++j) {
            cx v = jm(i, j);
            CHECK((v == cx(0) || v == cx(1)));
        }
    // lambda^2 K < radius: every asymptotic node present
    Mat jtj = jm.adjoint() * jm;
    CHECK(linalg::frob_norm(jtj - Mat::identity(J.asym_dim)) == 0.0);
    Mat jjt = jm * jm.adjoint();
    CHECK(linalg::frob_norm(jjt * jjt - jjt) == 0.0);
    CHECK(linalg::frob_norm(jm.adjoint() * jjt - jm.adjoint()) == 0.0);

    auto psi = oracle::random_vector(J.asym_dim, 3);
    auto jpsi = J.apply(psi);
    CHECK(linalg::vec_norm(jpsi) == doctest::Approx(linalg::vec_norm(psi)).epsilon(1e-14));
    auto back = J.apply_adjoint(jpsi);
    double dev = 0;
    for (int i = 0; i < J.asym_dim; ++i) dev = std::max(dev, std::abs(back[i] - psi[i]));
    CHECK(dev == 0.0);
}

TEST_CASE("clipped grids create absent columns, isometry identities survive") {
    auto m = model::builtin_model("lorentzian");
    auto pol = small_policy();
    auto sys = build_asymptotic(m, pol);
    auto grid = clip_grid(model::build_grid(m, 0.4, pol), sys, 3.0);
    auto J = build_J(m, grid, sys, 0.4);

    Mat jm = J.to_matrix();
    Mat jtj = jm.adjoint() * jm;
    // diagonal indicator of |y_j| <= 3, identity on E
    for (int c = 0; c < J.asym_dim; ++c) {
        double expect = 1.0;
        if (c >= sys.dimE) {
            int j = c - sys.offsets[0];
            expect = std::abs(pol.y_node(j)) <= 3.0 ? 1.0 : 0.0;
        }
        CHECK(std::abs(jtj(c, c) - expect) == 0.0);
    }
    CHECK(linalg::frob_norm(jm.adjoint() * (jm * jm.adjoint()) - jm.adjoint()) == 0.0);

    // vector supported outside the clip is annihilated
    std::vector<cx> psi(J.asym_dim, cx(0));
    for (int j = 0; j < sys.sectors[0].n_nodes(); ++j)
        if (std::abs(pol.y_node(j)) > 3.0) psi[sys.offsets[0] + j] = 1.0;
    CHECK(linalg::vec_norm(J.apply(psi)) == 0.0);
}

TEST_CASE("grid mismatch is detected") {
    auto m = model::builtin_model("lorentzian");
    auto pol = small_policy();
    auto sys = build_asymptotic(m, pol);
    auto grid = model::build_grid(m, 0.4, pol);
    CHECK_THROWS_AS(build_J(m, grid, sys, 0.3), GridMismatch);

    auto pol2 = small_policy(6.0, 0.5, 0.2);
    auto grid2 = model::build_grid(m, 0.4, pol2);
    CHECK_THROWS_AS(build_J(m, grid2, sys, 0.4), GridMismatch);
}

TEST_CASE("decoupled model: reduced errors vanish") {
    auto m = scalar_zero_model(0.7);
    auto pol = small_policy();
    auto sys = build_asymptotic(m, pol);
    auto w = make_workspace(m, 0.3, sys, true);
    Mat gamma = davies::closed_form(m, 0);
    CHECK(linalg::frob_norm(gamma) < 1e-14);
    CHECK(reduced_resolvent_error(w, sys, 0, cx(0, 1), gamma) < 1e-13);
    std::vector<double> ts;
    for (int i = 0; i <= 20; ++i) ts.push_back(i / 20.0);
    CHECK(reduced_dynamics_error(w, sys, ts, davies_generator_sum(m)) < 1e-12);
}

TEST_CASE("reduced resolvent errors decrease with lambda") {
    auto m = model::builtin_model("lorentzian");
    auto pol = small_policy(12.0, 0.1, 0.1);
    auto sys = build_asymptotic(m, pol);
    Mat gamma = davies::closed_form(m, 0);
    std::vector<double> errs;
    for (double lam : {0.4, 0.3, 0.2}) {
        auto w = make_workspace(m, lam, sys, false);
        errs.push_back(reduced_resolvent_error(w, sys, 0, cx(0, 1), gamma));
    }
    CHECK(errs[0] > errs[1]);
    CHECK(errs[1] > errs[2]);
    CHECK(errs[2] < 0.05);
}

TEST_CASE("reduced dynamics errors decrease with lambda") {
    auto m = model::builtin_model("lorentzian");
    auto pol = small_policy(12.0, 0.2, 0.15);
    auto sys = build_asymptotic(m, pol);
    Mat gsum = davies_generator_sum(m);
    std::vector<double> ts;
    for (int i = 0; i <= 20; ++i) ts.push_back(i / 20.0);
    std::vector<double> errs;
    for (double lam : {0.4, 0.2}) {
        auto w = make_workspace(m, lam, sys, true);
        errs.push_back(reduced_dynamics_error(w, sys, ts, gsum));
    }
    CHECK(errs[0] > errs[1]);
    CHECK(errs[1] < 0.5);
}

TEST_CASE("extended resolvent: compression identity and decrease") {
    auto m = model::builtin_model("lorentzian");
    auto pol = small_policy();
    auto sys = build_asymptotic(m, pol);
    std::vector<double> errs;
    for (double lam : {0.4, 0.2}) {
        auto w = make_workspace(m, lam, sys, false);
        Mat ext = extended_resolvent_lhs(w, sys.es[0], cx(0, 1));
        Mat red = reduced_resolvent_lhs(w, sys.es[0], cx(0, 1));
        CHECK(linalg::frob_norm(ext.block(0, 0, sys.dimE, sys.dimE) - red) < 1e-12);
        errs.push_back(extended_resolvent_error(w, sys, 0, cx(0, 1)));
    }
    CHECK(errs[0] > errs[1]);
}

TEST_CASE("extended dynamics: compression identity, decrease, probe families") {
    auto m = model::builtin_model("lorentzian");
    auto pol = small_policy(12.0, 0.2, 0.15);
    auto sys = build_asymptotic(m, pol);
    auto probes = probe_family(sys, 11);
    REQUIRE(probes.size() == 1 + 3 + 1);
    CHECK(probes[0].kind == "basis");
    CHECK(probes[1].kind == "gauss");
    CHECK(probes[4].kind == "random");
    for (const auto& p : probes)
        CHECK(linalg::vec_norm(p.psi) == doctest::Approx(1.0).epsilon(1e-12));

    std::vector<double> errs;
    for (double lam : {0.4, 0.2}) {
        auto w = make_workspace(m, lam, sys, true);
        Mat ext = extended_dynamics_lhs(w, sys, 1.0);
        Mat red = reduced_dynamics_lhs(w, sys, 1.0);
        CHECK(linalg::frob_norm(ext.block(0, 0, sys.dimE, sys.dimE) - red) < 1e-12);
        errs.push_back(extended_dynamics_error(w, sys, 1.0, probes[0].psi));
        CHECK(std::isfinite(extended_dynamics_error(w, sys, 1.0, probes[1].psi)));
    }
    CHECK(errs[0] > errs[1]);
}

TEST_CASE("interaction picture differs from extended dynamics by exact phases") {
    auto m = model::builtin_model("lorentzian");
    auto pol = small_policy(12.0, 0.2, 0.15);
    auto sys = build_asymptotic(m, pol);
    auto probes = probe_family(sys, 11);
    for (double lam : {0.4, 0.2}) {
        auto w = make_workspace(m, lam, sys, true);
        for (int pi : {0, 2, 4}) {
            double ext = extended_dynamics_error(w, sys, 1.0, probes[pi].psi);
            double inter = interaction_picture_error(w, sys, 1.0, probes[pi].psi);
            CHECK(std::abs(inter - ext) < 1e-8);
            CHECK(auxiliary_limit_error(w, sys, 1.0, probes[pi].psi) < 1e-10);
        }
    }
}

TEST_CASE("laplace average: quadrature self-consistency and decrease") {
    auto m = model::builtin_model("lorentzian");
    auto pol = small_policy(12.0, 0.2, 0.15);
    auto sys = build_asymptotic(m, pol);
    auto hat = [](double t) { return t < 0.5 ? 2.0 * t : 2.0 * (1.0 - t); };
    auto grid_f = [&](int n) {
        std::pair<std::vector<double>, std::vector<double>> out;
        for (int i = 0; i < n; ++i) {
            double t = i / (n - 1.0);
            out.first.push_back(t);
            out.second.push_back(hat(t));
        }
        return out;
    };
    auto [t21, f21] = grid_f(21);
    auto [t41, f41] = grid_f(41);
    std::vector<double> errs;
    for (double lam : {0.4, 0.2}) {
        auto w = make_workspace(m, lam, sys, true);
        errs.push_back(laplace_averaged_error(w, sys, t21, f21));
        if (lam == 0.4) {
            double e41 = laplace_averaged_error(w, sys, t41, f41);
            CHECK(std::abs(e41 - errs.back()) < 0.1 * errs.back() + 1e-6);
        }
    }
    CHECK(errs[0] > errs[1]);
}

TEST_CASE("two-level cross blocks decay with lambda") {
    auto m = model::builtin_model("two-level");
    auto pol = small_policy(5.0, 0.25, 0.2);
    auto sys = build_asymptotic(m, pol);
    int e_hi = 1;  // sector at e = +1
    Mat emb = embedded_sector_resolvent(sys, e_hi, cx(0, 1));
    int n0 = sys.sectors[0].n_nodes() * sys.sectors[0].fiber;
    CHECK(block_norm(emb, sys.offsets[0], n0, sys.offsets[0], n0) == 0.0);

    std::vector<double> red_cross, ext_cross;
    for (double lam : {0.4, 0.3, 0.2}) {
        auto w = make_workspace(m, lam, sys, false);
        Mat red = reduced_resolvent_lhs(w, sys.es[e_hi], cx(0, 1));
        // eigenbasis of E = diag(1,-1): eigenvalue -1 lives on component 1
        red_cross.push_back(std::abs(red(1, 1)));
        Mat ext = extended_resolvent_lhs(w, sys.es[e_hi], cx(0, 1));
        ext_cross.push_back(block_norm(ext, sys.offsets[0], n0, sys.offsets[0], n0));
    }
    CHECK(red_cross[0] > red_cross[1]);
    CHECK(red_cross[1] > red_cross[2]);
    CHECK(ext_cross[0] > ext_cross[1]);
    CHECK(ext_cross[1] > ext_cross[2]);
}

TEST_CASE("error metrics do not grow under grid refinement") {
    auto m = model::builtin_model("lorentzian");
    Mat gamma = davies::closed_form(m, 0);
    double lam = 0.3;
    auto coarse_pol = small_policy(6.0, 0.5, 0.4);
    auto fine_pol = small_policy(12.0, 0.25, 0.2);
    auto sys_c = build_asymptotic(m, coarse_pol);
    auto sys_f = build_asymptotic(m, fine_pol);
    auto wc = make_workspace(m, lam, sys_c, false);
    auto wf = make_workspace(m, lam, sys_f, false);
    double ec = reduced_resolvent_error(wc, sys_c, 0, cx(0, 1), gamma);
    double ef = reduced_resolvent_error(wf, sys_f, 0, cx(0, 1), gamma);
    CHECK(ef <= ec * 1.05 + 1e-9);
}

TEST_CASE("run_sweep: report shape, order fit, determinism, failure capture") {
    auto m = model::builtin_model("lorentzian");
    SweepConfig cfg;
    cfg.experiment = "reduced-resolvent";
    cfg.model_ref = "builtin:lorentzian";
    cfg.lambdas = {0.4, 0.3, 0.2};
    cfg.zs = {cx(0, 1)};
    cfg.e_index = 0;
    cfg.policy = small_policy(12.0, 0.1, 0.1);

    auto rep = run_sweep(m, cfg);
    REQUIRE(rep.rows.size() == 3);
    CHECK(rep.failures.empty());
    CHECK(rep.rows[0].lambda == 0.4);
    CHECK(rep.rows[2].lambda == 0.2);
    CHECK(rep.rows[0].error > rep.rows[1].error);
    CHECK(rep.rows[1].error > rep.rows[2].error);
    CHECK(rep.order_defined);
    CHECK(rep.fitted_order > 0.0);
    CHECK(rep.fit_residual < 0.2);
    CHECK(rep.rows[0].probe_kind == "z");
    CHECK(rep.rows[0].seconds == 0.0);
    CHECK(rep.rows[0].grid_fingerprint != rep.rows[1].grid_fingerprint);

    auto rep2 = run_sweep(m, cfg);
    for (size_t i = 0; i < rep.rows.size(); ++i) {
        CHECK(rep.rows[i].error == rep2.rows[i].error);
        CHECK(rep.rows[i].grid_fingerprint == rep2.rows[i].grid_fingerprint);
    }

    SweepConfig one = cfg;
    one.lambdas = {0.3};
    auto rep1 = run_sweep(m, one);
    CHECK(!rep1.order_defined);

    SweepConfig bad = cfg;
    bad.lambdas = {};
    CHECK_THROWS_AS(run_sweep(m, bad), ConfigError);
    bad.lambdas = {0.2, 0.3};
    CHECK_THROWS_AS(run_sweep(m, bad), ConfigError);

    SweepConfig partial = cfg;
    partial.lambdas = {5.0, 0.3};  // first lambda overflows the neighborhood
    auto repp = run_sweep(m, partial);
    CHECK(repp.failures.size() == 1);
    REQUIRE(repp.rows.size() == 1);
    CHECK(repp.rows[0].lambda == 0.3);
}

TEST_CASE("order fit: slope, constant errors, degenerate input") {
    auto exact = fit_order({0.4, 0.2, 0.1}, {0.16, 0.04, 0.01});
    CHECK(exact.defined);
    CHECK(exact.order == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(exact.residual < 1e-12);

    auto flat = fit_order({0.4, 0.2, 0.1}, {0.5, 0.5, 0.5});
    CHECK(flat.defined);
    CHECK(flat.order == 0.0);

    CHECK(!fit_order({0.4}, {0.1}).defined);
    CHECK(!fit_order({0.4, 0.2}, {0.0, 0.1}).defined);
    CHECK_THROWS_AS(fit_order({0.4, 0.2}, {0.1}), DimensionMismatch);
}

TEST_CASE("weak uniformity probe decreases with lambda") {
    auto m = model::builtin_model("lorentzian");
    auto pol = small_policy(12.0, 0.2, 0.15);
    auto sys = build_asymptotic(m, pol);
    auto probes = probe_family(sys, 17);
    const auto& psi = probes[1].psi;   // gauss
    const auto& phi = probes[4].psi;   // random
    std::vector<double> sup;
    for (double lam : {0.4, 0.2}) {
        auto w = make_workspace(m, lam, sys, true);
        double worst = 0;
        for (int i = 0; i <= 20; ++i) {
            double t = i / 20.0;
            auto lhs = extended_dynamics_lhs(w, sys, t) * psi;
            auto lim = apply_group(sys, t, psi);
            for (size_t c = 0; c < lhs.size(); ++c) lhs[c] -= lim[c];
            worst = std::max(worst, std::abs(linalg::dot(phi, lhs)));
        }
        sup.push_back(worst);
    }
    CHECK(sup[0] > sup[1]);
}

TEST_CASE("sweep config parses from json") {
    std::string text = R"({
        "experiment": "extended-dynamics",
        "model": "builtin:lorentzian",
        "lambdas": [0.4, 0.2],
        "zs": [[0.0, 1.0], [1.0, 2.0]],
        "ts": [0.5, 1.0],
        "T": 2.0,
        "n_t": 11,
        "e_index": 0,
        "probe_seed": 9,
        "grid": {"K": 6.0, "dy": 0.25, "h_bg": 0.2}
    })";
    auto cfg = sweep_config_from_json(text);
    CHECK(cfg.experiment == "extended-dynamics");
    CHECK(cfg.model_ref == "builtin:lorentzian");
    CHECK(cfg.lambdas.size() == 2);
    CHECK(cfg.zs[1] == cx(1, 2));
    CHECK(cfg.ts.size() == 2);
    CHECK(cfg.T == 2.0);
    CHECK(cfg.n_t == 11);
    CHECK(cfg.probe_seed == 9);
    CHECK(cfg.policy.K == 6.0);
    CHECK(cfg.policy.dy == 0.25);
    CHECK(cfg.policy.h_bg == 0.2);

    CHECK_THROWS_AS(sweep_config_from_json("{\"experiment\": \"nope\", \"lambdas\": [0.1]}"),
                    ConfigError);
    CHECK_THROWS_AS(sweep_config_from_json("not json"), ConfigError);
}
