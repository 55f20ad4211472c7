#ifndef WCLAB_WCL_HPP
#define WCLAB_WCL_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "wclab/dilation.hpp"
#include "wclab/linalg.hpp"
#include "wclab/model.hpp"

namespace wclab::wcl {

using linalg::cx;
using linalg::Mat;

// Direct sum over eigenvalue sectors of the compressed asymptotic systems.
// Ordering: E block in the original basis, then each sector's node block in
// ascending eigenvalue order.
struct AsymptoticSystem {
    model::GridPolicy policy;
    std::vector<double> es;
    std::vector<dilation::DilationSystem> sectors;
    std::vector<Mat> bases;    // orthonormal eigenbasis columns per sector
    std::vector<int> offsets;  // start row of each sector's node block
    int dimE = 0;
    int total = 0;

    int dim() const { return total; }
};

AsymptoticSystem build_asymptotic(const model::FriedrichsModel& m, const model::GridPolicy& pol);

// Exact 0/1 map between the asymptotic space and the lambda-adapted physical
// grid: identity on E, node (e, y_j) to the physical node at e + lambda^2 y_j,
// absent when that node is not in the grid.
struct ScalingMap {
    double lambda = 0;
    int dimE = 0, phys_dim = 0, asym_dim = 0;
    std::vector<int> row_of;  // physical row per asymptotic slot, -1 if absent

    Mat to_matrix() const;
    std::vector<cx> apply(const std::vector<cx>& z) const;
    std::vector<cx> apply_adjoint(const std::vector<cx>& h) const;
};

// Integer index bookkeeping only; GridMismatch when the grid disagrees with
// sys (different lambda, Y lattice, node values or fiber layout).
ScalingMap build_J(const model::FriedrichsModel& m, const model::ReservoirGrid& grid,
                   const AsymptoticSystem& sys, double lambda);

// Per-lambda assembled state shared by the experiment evaluators.
struct LambdaWorkspace {
    double lambda = 0;
    model::ReservoirGrid grid;
    Mat H;
    int dimE = 0;
    ScalingMap J;
    bool has_eig = false;
    linalg::HermitianEig eig;
    uint64_t fingerprint = 0;
};

LambdaWorkspace make_workspace(const model::FriedrichsModel& m, double lambda,
                               const AsymptoticSystem& sys, bool need_eig);

// Left-hand sides of the limit statements.
Mat reduced_resolvent_lhs(const LambdaWorkspace& w, double e, cx z);
Mat reduced_dynamics_lhs(const LambdaWorkspace& w, const AsymptoticSystem& sys, double t);
Mat extended_resolvent_lhs(const LambdaWorkspace& w, double e, cx z);
Mat extended_dynamics_lhs(const LambdaWorkspace& w, const AsymptoticSystem& sys, double t);

// Limit-side objects.
Mat embed_sector(const AsymptoticSystem& sys, int e_index, const Mat& sector_mat);
Mat embedded_sector_resolvent(const AsymptoticSystem& sys, int e_index, cx z);
std::vector<cx> apply_group(const AsymptoticSystem& sys, double t, const std::vector<cx>& psi);
Mat davies_generator_sum(const model::FriedrichsModel& m, double tol = 1e-10);

// Error metrics: operator norm on the compressed blocks for the norm limits,
// vector norm for the strong-limit probes.
double reduced_resolvent_error(const LambdaWorkspace& w, const AsymptoticSystem& sys, int e_index,
                               cx z, const Mat& gamma);
double reduced_dynamics_error(const LambdaWorkspace& w, const AsymptoticSystem& sys,
                              const std::vector<double>& ts, const Mat& gamma_sum);
double extended_resolvent_error(const LambdaWorkspace& w, const AsymptoticSystem& sys, int e_index,
                                cx z);
double laplace_averaged_error(const LambdaWorkspace& w, const AsymptoticSystem& sys,
                              const std::vector<double>& tgrid, const std::vector<double>& f);
double extended_dynamics_error(const LambdaWorkspace& w, const AsymptoticSystem& sys, double t,
                               const std::vector<cx>& psi);
double interaction_picture_error(const LambdaWorkspace& w, const AsymptoticSystem& sys, double t,
                                 const std::vector<cx>& psi);
double auxiliary_limit_error(const LambdaWorkspace& w, const AsymptoticSystem& sys, double t,
                             const std::vector<cx>& psi);

struct Probe {
    int id = 0;
    std::string kind;  // basis | gauss | random
    std::vector<cx> psi;
};

// E basis vectors, Gaussian packets at three widths, one seeded random vector.
std::vector<Probe> probe_family(const AsymptoticSystem& sys, unsigned seed);

struct SweepConfig {
    std::string experiment;  // reduced-resolvent | reduced-dynamics | extended-resolvent |
                             // laplace | extended-dynamics | interaction | auxiliary
    std::string model_ref;
    std::vector<double> lambdas;  // strictly decreasing
    std::vector<cx> zs;
    std::vector<double> ts;
    double T = 1.0;
    int n_t = 21;
    int e_index = 0;
    unsigned probe_seed = 7;
    double tol = 1e-10;
    int jobs = 1;  // worker threads over lambda; report assembly stays ordered
    std::string out_dir;
    model::GridPolicy policy;
};

SweepConfig sweep_config_from_json(const std::string& text);

struct SweepRow {
    double lambda = 0;
    int probe_id = 0;
    std::string probe_kind;
    double error = 0;
    uint64_t grid_fingerprint = 0;
    double seconds = 0;  // time coordinate of the probe; 0 for stationary rows
};

struct OrderFit {
    bool defined = false;
    double order = 0;
    double residual = 0;
};

// Least-squares slope of log(error) against log(lambda); points with
// nonpositive error are skipped, and at least two must remain.
OrderFit fit_order(const std::vector<double>& lambdas, const std::vector<double>& errors);

struct ConvergenceReport {
    std::string experiment;
    std::vector<double> lambdas;
    std::vector<SweepRow> rows;  // ordered by lambda descending, then probe
    std::vector<std::string> failures;
    bool order_defined = false;
    double fitted_order = 0;
    double fit_residual = 0;  // rms residual of the log-log fit
    double wall_seconds = 0;
    std::string grid_note;
};

ConvergenceReport run_sweep(const model::FriedrichsModel& m, const SweepConfig& cfg);

}  // namespace wclab::wcl

#endif
