#ifndef WCLAB_DILATION_HPP
#define WCLAB_DILATION_HPP

#include <vector>

#include "wclab/linalg.hpp"
#include "wclab/model.hpp"

namespace wclab::dilation {

using linalg::cx;
using linalg::Mat;

struct AsymptoticGrid {
    std::vector<double> y;  // ascending nodes
    std::vector<double> u;  // positive weights
};

AsymptoticGrid uniform_grid(const model::GridPolicy& pol);

// Asymptotic-space system on E_e + l2(grid) x fiber. Gamma is expressed in an
// orthonormal basis of the eigenspace (dimension dE), nu maps it to the fiber.
struct DilationSystem {
    Mat Gamma;  // dE x dE, dissipative
    Mat nu;     // fiber x dE
    AsymptoticGrid grid;
    int dE = 0, fiber = 0;
    Mat W;                        // (n fiber) x dE, node rows sqrt(u_j) nu
    std::vector<double> zr_diag;  // y_j repeated fiber times
    linalg::GeneralEig geig;      // eigen data of Gamma
    bool use_quadrature = false;  // Gamma eigenbasis too ill-conditioned

    int n_nodes() const { return static_cast<int>(grid.y.size()); }
    int dim() const { return dE + n_nodes() * fiber; }
    int node_row(int j, int r = 0) const { return dE + j * fiber + r; }
};

// Checks the structural condition (Gamma - Gamma*)/2i = -pi nu* nu to tol;
// throws ConditionViolated otherwise.
DilationSystem build_system(const Mat& Gamma, const Mat& nu, const AsymptoticGrid& grid,
                            double tol = 1e-8);

// Convenience route: closed-form generator of the model at an eigenvalue,
// compressed to its eigenspace basis.
DilationSystem build_system(const model::FriedrichsModel& m, int e_index,
                            const model::GridPolicy& pol, double tol = 1e-8);

// Block resolvent of the renormalized generator; Im z != 0, and the lower half
// plane is reached through Q(conj z)*.
Mat resolvent_Q(const DilationSystem& s, cx z);

// Boundary-value generators as matrices: Z+ = [[Gamma, W*], [W, Z_R]] and
// Z- with Gamma* in place of Gamma.
Mat forms_Zplus(const DilationSystem& s);
Mat forms_Zminus(const DilationSystem& s);

struct TruncatedZ {
    Mat Z;                  // Hermitian: [[Re Gamma, W_k*], [W_k, Z_Rk]]
    std::vector<int> rows;  // positions in the full system ordering
    double k = 0;
};

TruncatedZ truncate(const DilationSystem& s, double k);

// (z - Z_k)^{-1} with a Feshbach cross-check of the E block against
// (z - Re Gamma - W_k*(z - Z_Rk)^{-1} W_k)^{-1}.
Mat resolvent_Zk(const TruncatedZ& t, int dE, cx z, double check_tol = 1e-9);

// Restrict a full-system matrix to the rows/columns of the truncation.
Mat restrict_to(const Mat& full, const TruncatedZ& t);

// exp(-i time Z_k); pass a precomputed eigendecomposition when sharing it.
Mat group_via_Zk(const TruncatedZ& t, double time);
Mat group_via_Zk(const linalg::HermitianEig& eig, double time);

// Asymptotic evolution U_t from its five-term representation; U_{-t} = U_t*.
Mat group_Ut(const DilationSystem& s, double t);
std::vector<cx> apply_Ut(const DilationSystem& s, double t, const std::vector<cx>& psi);

struct DomainVector {
    std::vector<cx> psi;   // (u, (z0 - Z_R)^{-1} W u + g)
    std::vector<cx> zpsi;  // (Gamma u + W* g, z0 (z0 - Z_R)^{-1} W u + Z_R g)
};

DomainVector domain_vector(const DilationSystem& s, cx z0, const std::vector<cx>& u,
                           const std::vector<cx>& g);

struct MinimalityReport {
    int nu_rank = 0;
    int fiber = 0;
    bool minimal = false;
    std::vector<double> nu_singular_values;
};

// The reachable subspace from E has node blocks Ran(nu); the dilation is
// minimal exactly when nu has full fiber rank.
MinimalityReport minimality(const DilationSystem& s, double rank_tol = 1e-10);

// Builds the companion generator on the scaled grid lambda^2 Y (weights
// lambda^2 u, corner lambda^2 Re Gamma, coupling lambda nu), conjugates back
// by lambda^{-2} through the index bijection, and returns the operator norm of
// the resolvent difference against Z at z. lambda^2 must sit on a power of
// two (within rounding) so the grid maps into a lattice of itself; otherwise
// GridIncompatible is thrown.
double scaling_check(const DilationSystem& s, double lambda, cx z);

}  // namespace wclab::dilation

#endif
