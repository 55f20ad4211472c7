#include <doctest.h>

#include <cmath>

#include "oracle.hpp"
#include "wclab/davies.hpp"
#include "wclab/errors.hpp"
#include "wclab/model.hpp"

using namespace wclab;
using namespace wclab::davies;
using model::builtin_model;
using linalg::cx;
using linalg::Mat;

namespace {

double lorentz2(double x) { return 1.0 / (M_PI * (1.0 + x * x)); }

std::function<Mat(double)> scalar_fn(std::function<double(double)> f) {
    return [f](double x) {
        Mat m(1, 1);
        m(0, 0) = f(x);
        return m;
    };
}

}  // namespace

TEST_CASE("pv_integral: exact log case and symmetric cancellation") {
    // P int_{-1}^{3} dx / x = ln 3
    Mat r = pv_integral(scalar_fn([](double) { return 1.0; }), 0.0, -1.0, 3.0);
    CHECK(std::abs(r(0, 0) - cx(std::log(3.0), 0)) < 1e-10);
    // symmetric window, even numerator: exactly cancelling principal value
    Mat s = pv_integral(scalar_fn(lorentz2), 0.0, -50.0, 50.0);
    CHECK(std::abs(s(0, 0)) < 1e-9);
}

TEST_CASE("pv_integral: Cauchy transform of the Lorentzian weight") {
    // P int f/(x-e) = -e/(1+e^2) over the line; [-200, 200] tail < 3e-8
    for (double e : {1.0, -0.7}) {
        Mat r = pv_integral(scalar_fn(lorentz2), e, -200.0, 200.0);
        CHECK(std::abs(r(0, 0) - cx(-e / (1.0 + e * e), 0)) < 1e-6);
    }
}

TEST_CASE("pv_integral agrees with the symmetric-pair oracle on an asymmetric function") {
    auto f = [](double x) { return (1.0 + 0.3 * x) * std::exp(-0.25 * x * x); };
    for (double e : {0.4, -1.2}) {
        Mat r = pv_integral(scalar_fn(f), e, -6.0, 8.0);
        double ref = oracle::pv_quad(f, e, -6.0, 8.0);
        CHECK(std::abs(r(0, 0) - cx(ref, 0)) < 1e-7);
    }
}

TEST_CASE("pv_integral handles an interior jump by refinement") {
    auto f = [](double x) { return x < 2.0 ? 1.0 : 0.5; };
    Mat r = pv_integral(scalar_fn(f), 0.0, -1.0, 3.0, 1e-9, 20000);
    // P int = int_{-1}^{2} 1/x + int_2^3 0.5/x = ln 2 + 0.5 ln(3/2)
    double exact = std::log(2.0) + 0.5 * std::log(1.5);
    CHECK(std::abs(r(0, 0) - cx(exact, 0)) < 1e-8);
}

TEST_CASE("pv_integral exhausts its budget on a hostile integrand") {
    // oscillation far faster than the panel budget can resolve
    auto f = [](double x) { return std::sin(1e6 * x); };
    CHECK_THROWS_AS(pv_integral(scalar_fn(f), 0.0, -1.0, 1.0, 1e-12, 8), QuadratureFailure);
}

TEST_CASE("boundary limit has dissipative signs: lim int f/(e + i eps - x)") {
    // The limit equals -PV - i pi f(e); checked against a small-eps quadrature.
    auto f = [](double x) { return (1.0 + 0.3 * x) * std::exp(-0.25 * x * x); };
    double e = 0.4, eps = 1e-3;
    auto g = [&](double x) { return cx(f(x), 0) / (cx(e, eps) - cx(x, 0)); };
    cx lim = oracle::simpson(g, -10.0, 10.0, 2000000);
    Mat pv = pv_integral(scalar_fn(f), e, -10.0, 10.0);
    cx expected = -pv(0, 0) - cx(0, M_PI) * f(e);
    CHECK(std::abs(lim - expected) < 5e-3);  // limit is O(eps) away
    // refine eps to confirm the remaining gap shrinks linearly
    auto g2 = [&](double x) { return cx(f(x), 0) / (cx(e, eps / 4) - cx(x, 0)); };
    cx lim2 = oracle::simpson(g2, -10.0, 10.0, 2000000);
    CHECK(std::abs(lim2 - expected) < std::abs(lim - expected));
    CHECK(std::abs(lim2 - expected) < 2e-3);
}

TEST_CASE("closed_form: Lorentzian generator is exactly -i") {
    auto m = builtin_model("lorentzian");
    Mat g = closed_form(m, 0);
    REQUIRE(g.rows() == 1);
    CHECK(std::abs(g(0, 0) - cx(0, -1)) < 1e-6);
}

TEST_CASE("closed_form: dissipativity and the imaginary-part identity") {
    for (const char* name : {"lorentzian", "two-level", "fiber-jump", "rank-deficient"}) {
        auto m = builtin_model(name);
        for (size_t ei = 0; ei < m.small.eigenvalues.size(); ++ei) {
            Mat g = closed_form(m, (int)ei);
            Mat nu = extract_nu(m, (int)ei);
            // (Gamma - Gamma*)/2i = -pi nu* nu
            Mat im = (1.0 / cx(0, 2)) * (g - g.adjoint());
            Mat target = cx(-M_PI, 0) * (nu.adjoint() * nu);
            CHECK(linalg::frob_norm(im - target) < 1e-10);
            // dissipative: <u, Im u> <= 0 for the basis directions
            auto eig = linalg::hermitian_eig(im);
            for (double v : eig.eigenvalues) CHECK(v <= 1e-12);
        }
    }
}

TEST_CASE("closed_form: two-level block values and eigenspace confinement") {
    auto m = builtin_model("two-level");
    // e-index 1 is e = +1; projection is onto basis vector 0
    Mat g = closed_form(m, 1);
    double pv = oracle::pv_quad(lorentz2, 1.0, -20.0, 20.0);
    CHECK(std::abs(g(0, 0) - cx(-pv, -M_PI * lorentz2(1.0))) < 1e-7);
    CHECK(std::abs(g(0, 0) - cx(0.5, -0.5)) < 2e-4);  // windowed Cauchy transform
    CHECK(std::abs(g(0, 1)) == 0.0);
    CHECK(std::abs(g(1, 0)) == 0.0);
    CHECK(std::abs(g(1, 1)) == 0.0);

    Mat gm = closed_form(m, 0);  // e = -1 lives on basis vector 1
    CHECK(std::abs(gm(0, 0)) == 0.0);
    CHECK(std::abs(gm(1, 1) - cx(-0.5, -0.5)) < 2e-4);
}

TEST_CASE("extract_nu shapes and values") {
    auto m = builtin_model("lorentzian");
    Mat nu = extract_nu(m, 0);
    REQUIRE(nu.rows() == 1);
    REQUIRE(nu.cols() == 1);
    CHECK(std::abs(nu(0, 0) - cx(1.0 / std::sqrt(M_PI), 0)) < 1e-15);

    auto tl = builtin_model("two-level");
    Mat nu1 = extract_nu(tl, 1);
    REQUIRE(nu1.rows() == 1);
    REQUIRE(nu1.cols() == 2);
    CHECK(std::abs(nu1(0, 0) - cx(1.0 / std::sqrt(2.0 * M_PI), 0)) < 1e-12);
    CHECK(std::abs(nu1(0, 1)) == 0.0);
}

TEST_CASE("stationary route: Lorentzian extrapolation and diagnostics") {
    auto m = builtin_model("lorentzian");
    auto r = stationary(m, 0);
    CHECK(std::abs(r.gamma(0, 0) - cx(0, -1)) < 5e-4);
    // raw value at eps = 0.025 sits at its known O(eps) distance
    double raw_err = std::abs(r.raw_finest(0, 0) - cx(0, -1));
    CHECK(raw_err > 0.015);
    CHECK(raw_err < 0.04);
    CHECK(std::abs(r.gamma(0, 0) - cx(0, -1)) < raw_err / 10.0);
    CHECK(r.z_independence < 3e-2);
    CHECK(r.richardson_residual < 5e-3);
}

TEST_CASE("stationary route agrees with closed form on builtins") {
    for (const char* name : {"lorentzian", "two-level"}) {
        auto m = builtin_model(name);
        for (size_t ei = 0; ei < m.small.eigenvalues.size(); ++ei) {
            Mat ref = closed_form(m, (int)ei);
            auto r = stationary(m, (int)ei);
            CHECK(linalg::frob_norm(r.gamma - ref) < 1e-3);
        }
    }
}

TEST_CASE("stationary route rejects eps below the grid resolution") {
    auto m = builtin_model("lorentzian");
    DaviesOptions o;
    o.epsilons = {1e-3, 5e-4};  // < 10 h for h = 4e-4
    CHECK_THROWS_AS(stationary(m, 0, o), ConditionViolated);
}

TEST_CASE("dynamic route: Lorentzian value and horizon diagnostic") {
    auto m = builtin_model("lorentzian");
    auto r = dynamic_route(m, 0);
    CHECK(std::abs(r.gamma(0, 0) - cx(0, -1)) < 1e-3);
    CHECK(r.half_diff < 5e-3);
}

TEST_CASE("dynamic route agrees with closed form on builtins") {
    for (const char* name : {"lorentzian", "two-level"}) {
        auto m = builtin_model(name);
        for (size_t ei = 0; ei < m.small.eigenvalues.size(); ++ei) {
            Mat ref = closed_form(m, (int)ei);
            auto r = dynamic_route(m, (int)ei);
            CHECK(linalg::frob_norm(r.gamma - ref) < 5e-3);
        }
    }
}

TEST_CASE("dynamic route guards against grid recurrences") {
    auto m = builtin_model("lorentzian");
    DaviesOptions o;
    o.T = 2000.0;  // T h = 0.8 > 1/2
    CHECK_THROWS_AS(dynamic_route(m, 0, o), RecurrenceGuard);
}
