#include "wclab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <cblas.h>
#include <lapacke.h>

namespace wclab::linalg {

static const cx IM(0.0, 1.0);

Mat Mat::identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Mat Mat::diag(const std::vector<cx>& d) {
    Mat m(static_cast<int>(d.size()), static_cast<int>(d.size()));
    for (size_t i = 0; i < d.size(); ++i) m(static_cast<int>(i), static_cast<int>(i)) = d[i];
    return m;
}

Mat Mat::column(const std::vector<cx>& v) {
    Mat m(static_cast<int>(v.size()), 1);
    for (size_t i = 0; i < v.size(); ++i) m(static_cast<int>(i), 0) = v[i];
    return m;
}

Mat Mat::adjoint() const {
    Mat m(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < cols_; ++j) m(j, i) = std::conj((*this)(i, j));
    return m;
}

Mat Mat::transpose() const {
    Mat m(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < cols_; ++j) m(j, i) = (*this)(i, j);
    return m;
}

Mat Mat::conj() const {
    Mat m(rows_, cols_);
    for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < cols_; ++j) m(i, j) = std::conj((*this)(i, j));
    return m;
}

Mat& Mat::operator+=(const Mat& o) {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw DimensionMismatch("operator+=");
    for (size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
    return *this;
}

Mat& Mat::operator-=(const Mat& o) {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw DimensionMismatch("operator-=");
    for (size_t i = 0; i < a_.size(); ++i) a_[i] -= o.a_[i];
    return *this;
}

Mat& Mat::operator*=(cx s) {
    for (auto& v : a_) v *= s;
    return *this;
}

std::vector<cx> Mat::col(int j) const {
    std::vector<cx> v(rows_);
    for (int i = 0; i < rows_; ++i) v[i] = (*this)(i, j);
    return v;
}

void Mat::set_col(int j, const std::vector<cx>& v) {
    for (int i = 0; i < rows_; ++i) (*this)(i, j) = v[i];
}

Mat Mat::block(int i0, int j0, int nr, int nc) const {
    Mat m(nr, nc);
    for (int i = 0; i < nr; ++i)
        for (int j = 0; j < nc; ++j) m(i, j) = (*this)(i0 + i, j0 + j);
    return m;
}

void Mat::set_block(int i0, int j0, const Mat& b) {
    for (int i = 0; i < b.rows(); ++i)
        for (int j = 0; j < b.cols(); ++j) (*this)(i0 + i, j0 + j) = b(i, j);
}

bool Mat::finite() const {
    for (const auto& v : a_)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
}

Mat operator+(Mat a, const Mat& b) { return a += b; }
Mat operator-(Mat a, const Mat& b) { return a -= b; }
Mat operator*(cx s, Mat a) { return a *= s; }

Mat operator*(const Mat& a, const Mat& b) {
    if (a.cols() != b.rows()) throw DimensionMismatch("operator*");
    Mat c(a.rows(), b.cols());
    if (a.rows() == 0 || b.cols() == 0 || a.cols() == 0) return c;
    const cx one(1.0, 0.0), zero(0.0, 0.0);
    cblas_zgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, a.rows(), b.cols(), a.cols(), &one,
                a.data(), a.cols(), b.data(), b.cols(), &zero, c.data(), c.cols());
    return c;
}

std::vector<cx> operator*(const Mat& a, const std::vector<cx>& v) {
    if (a.cols() != static_cast<int>(v.size())) throw DimensionMismatch("matvec");
    std::vector<cx> out(a.rows());
    if (a.rows() == 0 || a.cols() == 0) return out;
    const cx one(1.0, 0.0), zero(0.0, 0.0);
    cblas_zgemv(CblasRowMajor, CblasNoTrans, a.rows(), a.cols(), &one, a.data(), a.cols(), v.data(),
                1, &zero, out.data(), 1);
    return out;
}

double frob_norm(const Mat& m) {
    double s = 0.0;
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) s += std::norm(m(i, j));
    return std::sqrt(s);
}

double vec_norm(const std::vector<cx>& v) {
    double s = 0.0;
    for (const auto& x : v) s += std::norm(x);
    return std::sqrt(s);
}

cx dot(const std::vector<cx>& a, const std::vector<cx>& b) {
    if (a.size() != b.size()) throw DimensionMismatch("dot");
    cx s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
    return s;
}

std::vector<double> singular_values(const Mat& m) {
    if (m.rows() == 0 || m.cols() == 0) return {};
    Mat a = m;
    int mn = std::min(m.rows(), m.cols());
    std::vector<double> s(mn), superb(mn);
    int info = LAPACKE_zgesvd(LAPACK_ROW_MAJOR, 'N', 'N', m.rows(), m.cols(), a.data(), m.cols(),
                              s.data(), nullptr, 1, nullptr, 1, superb.data());
    if (info != 0) throw NoConvergence("zgesvd info=" + std::to_string(info));
    return s;
}

double op_norm(const Mat& m) {
    auto s = singular_values(m);
    return s.empty() ? 0.0 : s.front();
}

double min_singular(const Mat& m) {
    auto s = singular_values(m);
    return s.empty() ? 0.0 : s.back();
}

double op_norm_est(const Mat& m, int iters, unsigned seed) {
    if (m.rows() == 0 || m.cols() == 0) return 0.0;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist;
    std::vector<cx> v(m.cols());
    for (auto& c : v) c = cx(dist(rng), dist(rng));
    Mat ma = m.adjoint();
    double sigma = 0.0;
    for (int it = 0; it < iters; ++it) {
        double nv = vec_norm(v);
        if (nv == 0.0) return 0.0;
        for (auto& c : v) c /= nv;
        std::vector<cx> u = m * v;
        sigma = vec_norm(u);
        v = ma * u;
    }
    return sigma;
}

HermitianEig hermitian_eig(const Mat& M) {
    if (M.rows() != M.cols()) throw NotHermitian("matrix not square");
    double nf = frob_norm(M);
    double asym = frob_norm(M - M.adjoint());
    if (asym > 1e-12 * std::max(nf, 1.0))
        throw NotHermitian("||M - M*|| = " + std::to_string(asym));
    HermitianEig e;
    e.vectors = M;
    // exact symmetrization so zheevd sees clean input
    for (int i = 0; i < M.rows(); ++i)
        for (int j = i; j < M.cols(); ++j) {
            cx v = 0.5 * (M(i, j) + std::conj(M(j, i)));
            e.vectors(i, j) = v;
            e.vectors(j, i) = std::conj(v);
        }
    e.eigenvalues.resize(M.rows());
    if (M.rows() == 0) return e;
    int info = LAPACKE_zheevd(LAPACK_ROW_MAJOR, 'V', 'U', M.rows(), e.vectors.data(), M.cols(),
                              e.eigenvalues.data());
    if (info != 0) throw NoConvergence("zheevd info=" + std::to_string(info));
    return e;
}

Mat propagate(const HermitianEig& eig, double t, const Mat& X) {
    int n = eig.vectors.rows();
    if (X.rows() != n) throw DimensionMismatch("propagate");
    Mat y = eig.vectors.adjoint() * X;
    for (int i = 0; i < n; ++i) {
        cx ph = std::exp(-IM * (t * eig.eigenvalues[i]));
        for (int j = 0; j < y.cols(); ++j) y(i, j) *= ph;
    }
    return eig.vectors * y;
}

std::vector<cx> propagate(const HermitianEig& eig, double t, const std::vector<cx>& x) {
    Mat r = propagate(eig, t, Mat::column(x));
    return r.col(0);
}

Mat propagate(const Mat& M, double t, const Mat& X) { return propagate(hermitian_eig(M), t, X); }

Mat resolve(const Mat& M, cx z, const Mat& B) {
    if (M.rows() != M.cols() || M.rows() != B.rows()) throw DimensionMismatch("resolve");
    int n = M.rows();
    Mat a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = (i == j ? z : cx(0.0)) - M(i, j);
    Mat x = B;
    std::vector<lapack_int> ipiv(n);
    int info = LAPACKE_zgesv(LAPACK_ROW_MAJOR, n, x.cols(), a.data(), n, ipiv.data(), x.data(),
                             x.cols());
    if (info > 0) throw Singular("zI - M singular (zgesv info=" + std::to_string(info) + ")");
    if (info < 0) throw std::runtime_error("zgesv bad argument");
    return x;
}

static double norm_1(const Mat& m) {
    double best = 0.0;
    for (int j = 0; j < m.cols(); ++j) {
        double s = 0.0;
        for (int i = 0; i < m.rows(); ++i) s += std::abs(m(i, j));
        best = std::max(best, s);
    }
    return best;
}

// e^A by Pade-13 with scaling and squaring (Higham 2005).
static Mat expm(Mat A) {
    static const double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                               1187353796428800.0,  129060195264000.0,   10559470521600.0,
                               670442572800.0,      33522128640.0,       1323241920.0,
                               40840800.0,          960960.0,            16380.0,
                               182.0,               1.0};
    const double theta13 = 5.371920351148152;
    int n = A.rows();
    double nrm = norm_1(A);
    int s = 0;
    if (nrm > theta13) {
        s = static_cast<int>(std::ceil(std::log2(nrm / theta13)));
        A *= cx(std::ldexp(1.0, -s), 0.0);
    }
    Mat I = Mat::identity(n);
    Mat A2 = A * A;
    Mat A4 = A2 * A2;
    Mat A6 = A2 * A4;
    Mat U = A * (A6 * (cx(b[13]) * A6 + cx(b[11]) * A4 + cx(b[9]) * A2) + cx(b[7]) * A6 +
                 cx(b[5]) * A4 + cx(b[3]) * A2 + cx(b[1]) * I);
    Mat V = A6 * (cx(b[12]) * A6 + cx(b[10]) * A4 + cx(b[8]) * A2) + cx(b[6]) * A6 +
            cx(b[4]) * A4 + cx(b[2]) * A2 + cx(b[0]) * I;
    Mat P = V + U;
    Mat Q = V - U;
    // solve Q X = P
    std::vector<lapack_int> ipiv(n);
    int info = LAPACKE_zgesv(LAPACK_ROW_MAJOR, n, n, Q.data(), n, ipiv.data(), P.data(), n);
    if (info != 0) throw Singular("expm Pade solve failed");
    for (int k = 0; k < s; ++k) P = P * P;
    return P;
}

Mat exp_generator(const Mat& G, double t) {
    if (G.rows() != G.cols()) throw DimensionMismatch("exp_generator");
    if (t * frob_norm(G) > 1e6) throw std::overflow_error("exp_generator: t*||G|| > 1e6");
    Mat A = G;
    A *= -IM * t;
    return expm(A);
}

GeneralEig general_eig(const Mat& G) {
    int n = G.rows();
    if (n != G.cols()) throw DimensionMismatch("general_eig");
    GeneralEig ge;
    ge.eigenvalues.resize(n);
    ge.vectors = Mat(n, n);
    Mat a = G;
    int info = LAPACKE_zgeev(LAPACK_ROW_MAJOR, 'N', 'V', n, a.data(), n, ge.eigenvalues.data(),
                             nullptr, n, ge.vectors.data(), n);
    if (info != 0) throw NoConvergence("zgeev info=" + std::to_string(info));
    ge.inverse_vectors = Mat::identity(n);
    Mat s = ge.vectors;
    std::vector<lapack_int> ipiv(n);
    info = LAPACKE_zgesv(LAPACK_ROW_MAJOR, n, n, s.data(), n, ipiv.data(),
                         ge.inverse_vectors.data(), n);
    if (info != 0) throw Singular("eigenvector matrix singular");
    auto sv = singular_values(ge.vectors);
    ge.condition = (sv.back() > 0.0) ? sv.front() / sv.back() : 1e300;
    return ge;
}

// sin(w)/w, stable for small |w|, valid for complex w.
static cx sinc_c(cx w) {
    if (std::abs(w) < 1e-3) {
        cx w2 = w * w;
        return 1.0 - w2 / 6.0 + w2 * w2 / 120.0 - w2 * w2 * w2 / 5040.0;
    }
    return std::sin(w) / w;
}

cx exp_dd1(cx x, cx y, double t) {
    cx m = 0.5 * (x + y);
    cx w = 0.5 * (x - y) * t;
    return -IM * t * std::exp(-IM * m * t) * sinc_c(w);
}

cx phi1(cx a, cx b, double t) {
    cx m = 0.5 * (a + b);
    cx w = 0.5 * (a - b) * t;
    return t * std::exp(-IM * m * t) * sinc_c(w);
}

// complete homogeneous symmetric polynomial of degree k in three variables
static cx hpoly(int k, cx x, cx y, cx z) {
    cx s = 0.0;
    for (int p = 0; p <= k; ++p)
        for (int q = 0; q <= k - p; ++q) {
            int r = k - p - q;
            cx term = 1.0;
            for (int i = 0; i < p; ++i) term *= x;
            for (int i = 0; i < q; ++i) term *= y;
            for (int i = 0; i < r; ++i) term *= z;
            s += term;
        }
    return s;
}

cx exp_dd2(cx x, cx y, cx w, double t) {
    const double theta = 1e-4;  // switch threshold on |separation| * t
    double sxy = std::abs(x - y), syw = std::abs(y - w), sxw = std::abs(x - w);
    double smax = std::max({sxy, syw, sxw});
    if (smax * t >= theta) {
        // divide by the widest pair, pivot on the remaining argument
        if (sxw >= sxy && sxw >= syw) return (exp_dd1(x, y, t) - exp_dd1(y, w, t)) / (x - w);
        if (sxy >= syw) return (exp_dd1(x, w, t) - exp_dd1(w, y, t)) / (x - y);
        return (exp_dd1(y, x, t) - exp_dd1(x, w, t)) / (y - w);
    }
    // all arguments nearly confluent: Taylor about the centroid
    cx mu = (x + y + w) / 3.0;
    cx dx = x - mu, dy = y - mu, dw = w - mu;
    cx pref = std::exp(-IM * mu * t);
    cx it = -IM * t;
    cx acc = 0.0;
    double fact = 2.0;  // (2+k)! running
    cx itpow = it * it;
    for (int k = 0; k <= 6; ++k) {
        acc += itpow / fact * hpoly(k, dx, dy, dw);
        itpow *= it;
        fact *= (3 + k);
    }
    return pref * acc;
}

cx phi2(cx a, cx b, cx c, double t) {
    if (t == 0.0) return 0.0;
    return -exp_dd2(a, b, c, t);
}

}  // namespace wclab::linalg
