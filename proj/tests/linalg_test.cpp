#include <doctest.h>

#include <cmath>

#include "oracle.hpp"
#include "wclab/linalg.hpp"

using namespace wclab::linalg;
using oracle::phi1_quad;
using oracle::phi2_quad;

static const cx I(0.0, 1.0);

TEST_CASE("hermitian_eig identity and Pauli") {
    Mat id = Mat::identity(3);
    auto e = hermitian_eig(id);
    for (double w : e.eigenvalues) CHECK(w == doctest::Approx(1.0).epsilon(1e-14));

    Mat sx(2, 2);
    sx(0, 1) = 1.0;
    sx(1, 0) = 1.0;
    auto ex = hermitian_eig(sx);
    CHECK(ex.eigenvalues[0] == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(ex.eigenvalues[1] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("hermitian_eig residual and orthonormality on random 50x50") {
    Mat m = oracle::random_hermitian(50, 7);
    auto e = hermitian_eig(m);
    Mat d = Mat::zeros(50, 50);
    for (int i = 0; i < 50; ++i) d(i, i) = e.eigenvalues[i];
    Mat resid = m * e.vectors - e.vectors * d;
    CHECK(frob_norm(resid) <= 1e-10);
    Mat gram = e.vectors.adjoint() * e.vectors - Mat::identity(50);
    CHECK(frob_norm(gram) <= 1e-12 * 50);
}

TEST_CASE("hermitian_eig rejects non-Hermitian input") {
    Mat m(2, 2);
    m(0, 1) = 1.0;
    CHECK_THROWS_AS(hermitian_eig(m), wclab::NotHermitian);
}

TEST_CASE("propagate basics") {
    Mat z = Mat::zeros(2, 2);
    Mat x = oracle::random_matrix(2, 2, 3);
    Mat r = propagate(z, 1.7, x);
    CHECK(frob_norm(r - x) <= 1e-14);

    Mat one(1, 1);
    one(0, 0) = 1.0;
    Mat v(1, 1);
    v(0, 0) = 1.0;
    Mat p = propagate(one, M_PI, v);
    CHECK(std::abs(p(0, 0) - cx(-1.0, 0.0)) <= 1e-13);

    Mat sx(2, 2);
    sx(0, 1) = 1.0;
    sx(1, 0) = 1.0;
    Mat u = propagate(sx, M_PI / 2, Mat::identity(2));
    // closed form cos(t) I - i sin(t) M
    CHECK(std::abs(u(0, 0)) <= 1e-13);
    CHECK(std::abs(u(0, 1) + I) <= 1e-13);
}

TEST_CASE("propagate forward then backward is identity") {
    int n = 14;
    Mat m = oracle::random_hermitian(n, 21);
    Mat u = propagate(m, 0.9, Mat::identity(n));
    Mat ub = propagate(m, -0.9, Mat::identity(n));
    CHECK(frob_norm(u * ub - Mat::identity(n)) <= 1e-10 * n);
    // norm preservation on a column
    auto v = oracle::random_vector(n, 5);
    Mat vc = Mat::column(v);
    Mat w = propagate(m, 0.9, vc);
    CHECK(frob_norm(w) == doctest::Approx(frob_norm(vc)).epsilon(1e-10));
}

TEST_CASE("resolve basics and spectral bound") {
    Mat z2 = Mat::zeros(2, 2);
    Mat r = resolve(z2, I, Mat::identity(2));
    CHECK(std::abs(r(0, 0) + I) <= 1e-14);

    Mat d(1, 1);
    d(0, 0) = 2.0;
    Mat b(1, 1);
    b(0, 0) = 1.0;
    Mat rr = resolve(d, I, b);
    CHECK(std::abs(rr(0, 0) - 1.0 / (I - 2.0)) <= 1e-14);

    Mat m = oracle::random_hermitian(30, 11);
    Mat rm = resolve(m, 2.0 * I, Mat::identity(30));
    CHECK(op_norm(rm) <= 0.5 + 1e-12);
    // residual contract
    Mat lhs = Mat::zeros(30, 30);
    for (int i = 0; i < 30; ++i) lhs(i, i) = 2.0 * I;
    lhs -= m;
    CHECK(frob_norm(lhs * rm - Mat::identity(30)) <= 1e-10 * std::sqrt(30.0));
}

TEST_CASE("resolve throws Singular at a real eigenvalue") {
    Mat d(1, 1);
    d(0, 0) = 1.0;
    CHECK_THROWS_AS(resolve(d, cx(1.0, 0.0), Mat::identity(1)), wclab::Singular);
}

TEST_CASE("first resolvent identity on random Hermitian 20x20") {
    Mat m = oracle::random_hermitian(20, 13);
    cx z1(0.3, 1.1), z2(-0.4, 0.7);
    Mat r1 = resolve(m, z1, Mat::identity(20));
    Mat r2 = resolve(m, z2, Mat::identity(20));
    Mat lhs = r1 - r2;
    Mat rhs = (z2 - z1) * (r1 * r2);
    CHECK(frob_norm(lhs - rhs) <= 1e-9);
}

TEST_CASE("exp_generator closed forms") {
    Mat z = Mat::zeros(3, 3);
    CHECK(frob_norm(exp_generator(z, 2.0) - Mat::identity(3)) <= 1e-14);

    Mat g(1, 1);
    g(0, 0) = -I;
    CHECK(std::abs(exp_generator(g, 1.0)(0, 0) - std::exp(-1.0)) <= 1e-13);

    Mat d(2, 2);
    d(0, 0) = 1.0 - I;
    d(1, 1) = -1.0;
    Mat e = exp_generator(d, 0.7);
    CHECK(std::abs(e(0, 0) - std::exp(-I * 0.7 * (1.0 - I))) <= 1e-12);
    CHECK(std::abs(e(1, 1) - std::exp(I * 0.7)) <= 1e-12);
    CHECK(std::abs(e(0, 1)) <= 1e-14);
}

TEST_CASE("exp_generator contraction and semigroup law") {
    Mat g = oracle::random_dissipative(6, 31);
    CHECK(op_norm(exp_generator(g, 1.3)) <= 1.0 + 1e-10);
    Mat a = exp_generator(g, 0.4);
    Mat b = exp_generator(g, 0.9);
    Mat cso = exp_generator(g, 1.3);
    CHECK(frob_norm(a * b - cso) <= 1e-9);
    CHECK_THROWS(exp_generator(g, 1e7));
}

TEST_CASE("general_eig reconstructs") {
    Mat g = oracle::random_dissipative(6, 17);
    auto ge = general_eig(g);
    Mat d = Mat::zeros(6, 6);
    for (int i = 0; i < 6; ++i) d(i, i) = ge.eigenvalues[i];
    Mat rec = ge.vectors * d * ge.inverse_vectors;
    CHECK(frob_norm(rec - g) <= 1e-10 * frob_norm(g) * ge.condition);
    CHECK(ge.condition >= 1.0);
}

TEST_CASE("phi1 trivial and derived values") {
    CHECK(std::abs(phi1(0.0, 0.0, 1.7) - cx(1.7, 0.0)) <= 1e-14);
    cx a(0.4, -0.3);
    CHECK(std::abs(phi1(a, a, 2.0) - 2.0 * std::exp(-I * a * 2.0)) <= 1e-12);
    cx v = phi1(1.0, 0.0, 1.0);
    cx expect(std::sin(1.0), -(1.0 - std::cos(1.0)));
    CHECK(std::abs(v - expect) <= 1e-13);
    CHECK(std::abs(v - phi1_quad(1.0, 0.0, 1.0)) <= 1e-10);
    CHECK(std::abs(phi1(0.3, -0.8, 0.0)) == 0.0);
}

TEST_CASE("phi2 trivial values and symmetry") {
    CHECK(std::abs(phi2(0.0, 0.0, 0.0, 1.4) - cx(1.4 * 1.4 / 2, 0.0)) <= 1e-13);
    cx a(0.9, 0.0), b(0.1, -0.5), c(-1.2, 0.0);
    CHECK(std::abs(phi2(a, b, c, 1.1) - phi2(c, b, a, 1.1)) <= 1e-14);
    cx w = phi2(1.0, 0.0, -1.0, 1.0);
    CHECK(std::abs(w - phi2_quad(1.0, 0.0, -1.0, 1.0)) <= 1e-8);
}

TEST_CASE("phi1 and phi2 match quadrature on random triples incl near-confluent") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> ur(-3.0, 3.0);
    std::uniform_real_distribution<double> ui(-1.0, 0.0);
    std::uniform_real_distribution<double> ut(0.2, 2.5);
    const double seps[] = {1e-3, 1e-6, 0.0};
    for (int trial = 0; trial < 100; ++trial) {
        double t = ut(rng);
        cx b(ur(rng), ui(rng));
        cx a, c;
        if (trial % 3 == 0) {
            double s = seps[(trial / 3) % 3];
            a = b + cx(s, 0.0);  // near-confluent pair
            c = ur(rng);
        } else {
            a = ur(rng);
            c = ur(rng);
        }
        CHECK(std::abs(phi1(a, b, t) - phi1_quad(a, b, t)) <= 1e-8);
        CHECK(std::abs(phi2(a, b, c, t) - phi2_quad(a, b, c, t)) <= 1e-8);
    }
}

TEST_CASE("phi2 all-confluent and divided-difference helpers") {
    cx a(0.5, -0.2);
    // all three equal: (t^2/2) e^{-iat}
    cx v = phi2(a, a, a, 1.3);
    CHECK(std::abs(v - 0.5 * 1.3 * 1.3 * std::exp(-I * a * 1.3)) <= 1e-11);
    // two equal within 1e-9, third far
    cx w1 = phi2(a, a + cx(1e-9, 0.0), 2.0, 1.0);
    cx w2 = phi2_quad(a, a + cx(1e-9, 0.0), 2.0, 1.0);
    CHECK(std::abs(w1 - w2) <= 1e-8);
    // exp_dd1 against direct formula at wide separation
    cx d = exp_dd1(2.0, -1.0, 0.7);
    cx direct = (std::exp(-I * 2.0 * 0.7) - std::exp(-I * cx(-1.0) * 0.7)) / cx(3.0);
    CHECK(std::abs(d - direct) <= 1e-13);
}
