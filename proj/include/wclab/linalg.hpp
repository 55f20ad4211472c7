#ifndef WCLAB_LINALG_HPP
#define WCLAB_LINALG_HPP

#include <complex>
#include <vector>

#include "wclab/errors.hpp"

namespace wclab::linalg {

using cx = std::complex<double>;

// Dense complex matrix, row major. Small and dumb on purpose; all heavy
// lifting goes through LAPACK/BLAS in linalg.cpp.
class Mat {
  public:
    Mat() : rows_(0), cols_(0) {}
    Mat(int rows, int cols) : rows_(rows), cols_(cols), a_(static_cast<size_t>(rows) * cols) {}

    static Mat identity(int n);
    static Mat zeros(int rows, int cols) { return Mat(rows, cols); }
    static Mat diag(const std::vector<cx>& d);
    static Mat column(const std::vector<cx>& v);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    cx& operator()(int i, int j) { return a_[static_cast<size_t>(i) * cols_ + j]; }
    const cx& operator()(int i, int j) const { return a_[static_cast<size_t>(i) * cols_ + j]; }
    cx* data() { return a_.data(); }
    const cx* data() const { return a_.data(); }

    Mat adjoint() const;
    Mat transpose() const;
    Mat conj() const;

    Mat& operator+=(const Mat& o);
    Mat& operator-=(const Mat& o);
    Mat& operator*=(cx s);

    std::vector<cx> col(int j) const;
    void set_col(int j, const std::vector<cx>& v);
    Mat block(int i0, int j0, int nr, int nc) const;
    void set_block(int i0, int j0, const Mat& b);

    bool finite() const;

  private:
    int rows_, cols_;
    std::vector<cx> a_;
};

Mat operator+(Mat a, const Mat& b);
Mat operator-(Mat a, const Mat& b);
Mat operator*(const Mat& a, const Mat& b);              // zgemm
Mat operator*(cx s, Mat a);
std::vector<cx> operator*(const Mat& a, const std::vector<cx>& v);  // zgemv

double frob_norm(const Mat& m);
double op_norm(const Mat& m);       // largest singular value (zgesdd)
double op_norm_est(const Mat& m, int iters = 120, unsigned seed = 1);  // power iteration
double min_singular(const Mat& m);  // smallest singular value
std::vector<double> singular_values(const Mat& m);  // descending
double vec_norm(const std::vector<cx>& v);
cx dot(const std::vector<cx>& a, const std::vector<cx>& b);  // conjugate-linear in a

struct HermitianEig {
    std::vector<double> eigenvalues;  // ascending
    Mat vectors;                      // columns orthonormal
};

// Eigendecomposition of a Hermitian matrix (zheevd). Throws NotHermitian when
// ||M - M*||_F > 1e-12 ||M||_F, NoConvergence when LAPACK fails to converge.
HermitianEig hermitian_eig(const Mat& M);

// e^{-itM} X for Hermitian M, via eigendecomposition.
Mat propagate(const Mat& M, double t, const Mat& X);
Mat propagate(const HermitianEig& eig, double t, const Mat& X);
std::vector<cx> propagate(const HermitianEig& eig, double t, const std::vector<cx>& x);

// (zI - M)^{-1} B by LU solve (zgesv). M need not be Hermitian.
Mat resolve(const Mat& M, cx z, const Mat& B);

// e^{-itG} for general square G, t >= 0, scaling-and-squaring Pade.
// Rejects t*||G|| > 1e6.
Mat exp_generator(const Mat& G, double t);

// Eigendecomposition of a general (non-normal) matrix: G = S diag(w) S^{-1}.
// Returns eigenvalues w, eigenvector matrix S, its inverse, and the condition
// number of S. Used for functions of the Davies generator.
struct GeneralEig {
    std::vector<cx> eigenvalues;
    Mat vectors;
    Mat inverse_vectors;
    double condition;
};
GeneralEig general_eig(const Mat& G);

// phi1(a,b;t) = int_0^t e^{-i(t-u)a} e^{-iub} du
//             = t e^{-i(a+b)t/2} sinc((a-b)t/2).
cx phi1(cx a, cx b, double t);

// phi2(a,b,c;t) = double integral over {u1,u2>=0, u1+u2<=t} of
// e^{-iu2 a} e^{-i(t-u1-u2)b} e^{-iu1 c}; equals minus the second divided
// difference of x -> e^{-ixt} on (a,b,c). Symmetric under a <-> c.
cx phi2(cx a, cx b, cx c, double t);

// First divided difference of x -> e^{-ixt}: (e^{-ixt} - e^{-iyt})/(x-y),
// confluent value -it e^{-ixt}. Stable for all separations.
cx exp_dd1(cx x, cx y, double t);

// Second divided difference of x -> e^{-ixt} on (x,y,w).
cx exp_dd2(cx x, cx y, cx w, double t);

}  // namespace wclab::linalg

#endif
