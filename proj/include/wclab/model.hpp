#ifndef WCLAB_MODEL_HPP
#define WCLAB_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "wclab/linalg.hpp"

namespace wclab::model {

using linalg::cx;
using linalg::Mat;

// Partition cell [a,b) with a fixed fiber dimension. Infinite endpoints are
// encoded as +-HUGE_VAL.
struct Cell {
    double a, b;
    int fiber_dim;
};

struct SpectralPartition {
    std::vector<Cell> cells;        // ascending, disjoint, covering R
    double window_lo, window_hi;    // coupling treated as zero outside

    const Cell& cell_at(double x) const;
    int fiber_dim_at(double x) const { return cell_at(x).fiber_dim; }
};

struct CouplingFunction {
    std::function<Mat(double)> evaluate;  // fiber_dim(x) x dimE matrix
    double holder_delta = 1.0;
    double bound = 0.0;                   // sup_x ||v(x)||
};

struct SmallSystem {
    int dim = 0;
    Mat E;
    std::vector<double> eigenvalues;  // distinct, ascending
    std::vector<Mat> projections;     // spectral projections, same order
    std::vector<Mat> bases;           // orthonormal eigenbasis columns per eigenvalue
};

// Build eigenvalues/projections from a Hermitian E; eigenvalues closer than
// cluster_tol are treated as one (degenerate) eigenvalue.
SmallSystem make_small_system(const Mat& E, double cluster_tol = 1e-10);

struct Interval {
    double lo, hi;
    double radius_about(double e) const { return std::min(e - lo, hi - e); }
    bool contains(double x) const { return lo < x && x < hi; }
};

struct FriedrichsModel {
    std::string name;
    SmallSystem small;
    SpectralPartition partition;
    CouplingFunction coupling;
    std::vector<Interval> neighborhoods;  // aligned with small.eigenvalues

    const Interval& neighborhood_of(double e) const;
};

// Default neighborhoods: symmetric interval about e with radius half the
// distance to the nearest other eigenvalue, cell boundary or window edge.
std::vector<Interval> default_neighborhoods(const SmallSystem& s, const SpectralPartition& p);

struct ValidationReport {
    struct PerEigenvalue {
        double e;
        bool interior;
        double holder_constant;      // estimated c-hat
        bool holder_ok;
        double coupling_norm_at_e;
    };
    std::vector<PerEigenvalue> per_e;
    bool a1_ok = true, a2_ok = true, a3_ok = true;
    bool neighborhoods_disjoint = true;
    double measured_bound = 0.0;
    bool bound_ok = true;
    std::string detail;

    bool passed() const { return a1_ok && a2_ok && a3_ok && neighborhoods_disjoint && bound_ok; }
};

// Runs all assumption checks and fills a report; never throws on violations.
ValidationReport check_assumptions(const FriedrichsModel& m, int samples, double tol);

// Same checks, but throws AssumptionViolated on the first failing assumption.
ValidationReport validate_assumptions(const FriedrichsModel& m, int samples, double tol);

struct GridPolicy {
    double K = 200.0;     // asymptotic grid extent
    double dy = 0.2;      // asymptotic grid spacing; N_Y = 2K/dy + 1
    double h_bg = 0.04;   // background spacing within the window
    bool with_asymptotic = true;

    int n_y() const { return with_asymptotic ? static_cast<int>(std::lround(2.0 * K / dy)) + 1 : 0; }
    double y_node(int j) const { return -K + j * dy; }
};

struct NodeTag {
    enum Kind { Background, Scaled } kind = Background;
    int e_index = -1;  // index into small.eigenvalues
    int j = -1;        // asymptotic grid index
};

struct ReservoirGrid {
    double lambda = 0.0;
    GridPolicy policy;
    std::vector<double> nodes;    // ascending
    std::vector<double> weights;  // positive quadrature weights
    std::vector<int> fiber_dims;
    std::vector<NodeTag> tags;
    std::vector<int> offsets;     // row offset of each node's fiber block
    int total_fiber_dim = 0;

    uint64_t fingerprint() const;  // FNV-1a over nodes and weights
};

// Build the lambda-adapted grid: scaled nodes x = e + lambda^2 y_j inside each
// neighborhood, background fill elsewhere in the window. Throws GridConflict
// when lambda^2 K exceeds a neighborhood radius.
ReservoirGrid build_grid(const FriedrichsModel& m, double lambda, const GridPolicy& policy);

struct DiscretizedFriedrichs {
    double lambda = 0.0;
    Mat H;
    ReservoirGrid grid;
    int dimE = 0;  // the E block occupies rows [0, dimE)
};

DiscretizedFriedrichs assemble(const FriedrichsModel& m, const ReservoirGrid& grid, double lambda);

// The (sum fiber_dims) x dimE coupling block with node-j rows sqrt(w_j) v(x_j).
Mat coupling_matrix(const FriedrichsModel& m, const ReservoirGrid& grid);

// Built-in model library: lorentzian, two-level, fiber-jump, rank-deficient,
// boundary-eigenvalue.
FriedrichsModel builtin_model(const std::string& name);
std::vector<std::string> builtin_names();

// Model definition file (JSON).
FriedrichsModel load_model(const std::string& path);
FriedrichsModel model_from_json_text(const std::string& text);

// Resolves "builtin:<name>" or a file path.
FriedrichsModel resolve_model(const std::string& ref);

}  // namespace wclab::model

#endif
