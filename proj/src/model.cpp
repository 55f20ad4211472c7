#include "wclab/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include <json.hpp>

#include "wclab/errors.hpp"

namespace wclab::model {

using wclab::AssumptionViolated;
using wclab::ConfigError;
using wclab::DimensionMismatch;
using wclab::GridConflict;
using json = nlohmann::json;

const Cell& SpectralPartition::cell_at(double x) const {
    for (const auto& c : cells)
        if (c.a <= x && x < c.b) return c;
    // fall back to the nearest cell so probes on malformed partitions still work
    return x < cells.front().a ? cells.front() : cells.back();
}

SmallSystem make_small_system(const Mat& E, double cluster_tol) {
    SmallSystem s;
    s.dim = E.rows();
    auto eig = linalg::hermitian_eig(E);  // throws NotHermitian if needed
    s.E = 0.5 * (E + E.adjoint());
    size_t i = 0;
    double scale = std::max(1.0, linalg::frob_norm(E));
    while (i < eig.eigenvalues.size()) {
        size_t j = i;
        while (j + 1 < eig.eigenvalues.size() &&
               eig.eigenvalues[j + 1] - eig.eigenvalues[j] <= cluster_tol * scale)
            ++j;
        double mean = 0;
        Mat P = Mat::zeros(s.dim, s.dim);
        Mat B(s.dim, static_cast<int>(j - i + 1));
        for (size_t k = i; k <= j; ++k) {
            mean += eig.eigenvalues[k];
            Mat v = Mat::column(eig.vectors.col(static_cast<int>(k)));
            P = P + v * v.adjoint();
            B.set_block(0, static_cast<int>(k - i), v);
        }
        s.eigenvalues.push_back(mean / static_cast<double>(j - i + 1));
        s.projections.push_back(P);
        s.bases.push_back(B);
        i = j + 1;
    }
    return s;
}

const Interval& FriedrichsModel::neighborhood_of(double e) const {
    for (size_t i = 0; i < small.eigenvalues.size(); ++i)
        if (std::abs(small.eigenvalues[i] - e) < 1e-9 * std::max(1.0, std::abs(e)))
            return neighborhoods[i];
    throw ConfigError("no neighborhood for eigenvalue " + std::to_string(e));
}

std::vector<Interval> default_neighborhoods(const SmallSystem& s, const SpectralPartition& p) {
    std::vector<Interval> out;
    for (double e : s.eigenvalues) {
        double d = std::min(e - p.window_lo, p.window_hi - e);
        for (double e2 : s.eigenvalues)
            if (e2 != e) d = std::min(d, std::abs(e2 - e));
        bool interior = false;
        for (const auto& c : p.cells) {
            if (c.a < e && e < c.b) {
                if (std::isfinite(c.a)) d = std::min(d, e - c.a);
                if (std::isfinite(c.b)) d = std::min(d, c.b - e);
                interior = true;
            }
        }
        double r = interior ? 0.5 * std::max(d, 0.0) : 0.0;
        out.push_back({e - r, e + r});
    }
    return out;
}

namespace {

// Holder quotients ||v*v(e+s) - v*v(e)|| / |s|^delta on a dyadic ladder; a
// diverging fine-scale maximum signals a violation at e.
struct HolderScan {
    double constant = 0.0;
    bool ok = true;
};

HolderScan holder_scan(const FriedrichsModel& m, double e, double radius) {
    HolderScan h;
    if (radius <= 0) return h;
    double delta = m.coupling.holder_delta;
    Mat vv_e = m.coupling.evaluate(e).adjoint() * m.coupling.evaluate(e);
    double r0 = std::min(radius, 1.0);
    double coarse = 0.0, fine = 0.0;
    for (int k = 4; k <= 20; ++k) {
        double s = r0 * std::pow(2.0, -k);
        double q = 0.0;
        for (double sgn : {-1.0, 1.0}) {
            Mat v = m.coupling.evaluate(e + sgn * s);
            Mat d = v.adjoint() * v - vv_e;
            q = std::max(q, linalg::frob_norm(d) / std::pow(s, delta));
        }
        h.constant = std::max(h.constant, q);
        if (k <= 12) coarse = std::max(coarse, q);
        if (k >= 16) fine = std::max(fine, q);
    }
    h.ok = fine <= std::max(50.0 * coarse, 1e-6);
    return h;
}

void append_detail(std::string& detail, const std::string& line) {
    if (!detail.empty()) detail += "; ";
    detail += line;
}

}  // namespace

ValidationReport check_assumptions(const FriedrichsModel& m, int samples, double tol) {
    ValidationReport rep;
    const auto& p = m.partition;

    // A1: ordered cells covering R, finite nonnegative fiber dimensions
    if (p.cells.empty()) {
        rep.a1_ok = false;
        append_detail(rep.detail, "A1: empty partition");
    } else {
        if (p.cells.front().a != -HUGE_VAL || p.cells.back().b != HUGE_VAL) {
            rep.a1_ok = false;
            append_detail(rep.detail, "A1: partition does not cover the line");
        }
        for (size_t i = 0; i < p.cells.size(); ++i) {
            const auto& c = p.cells[i];
            if (!(c.a < c.b)) {
                rep.a1_ok = false;
                append_detail(rep.detail, "A1: empty or inverted cell");
            }
            if (c.fiber_dim < 0) {
                rep.a1_ok = false;
                append_detail(rep.detail, "A1: fiber dimension must be finite and nonnegative");
            }
            if (i + 1 < p.cells.size()) {
                double gap = p.cells[i + 1].a - c.b;
                if (std::abs(gap) > 1e-12 * std::max(1.0, std::abs(c.b))) {
                    rep.a1_ok = false;
                    append_detail(rep.detail, "A1: gap or overlap between cells");
                }
            }
        }
    }

    // A2: every eigenvalue interior to its cell and window, neighborhoods fit
    for (size_t i = 0; i < m.small.eigenvalues.size(); ++i) {
        double e = m.small.eigenvalues[i];
        ValidationReport::PerEigenvalue pe;
        pe.e = e;
        double scale = std::max(1.0, std::abs(e));
        pe.interior = false;
        for (const auto& c : p.cells) {
            if (c.a + 1e-12 * scale < e && e < c.b - 1e-12 * scale) {
                pe.interior = c.fiber_dim > 0;
                break;
            }
        }
        if (e <= p.window_lo || e >= p.window_hi) pe.interior = false;
        const Interval& nb = m.neighborhoods.at(i);
        double radius = nb.radius_about(e);
        if (pe.interior && radius <= 0) {
            pe.interior = false;
            append_detail(rep.detail, "A2: degenerate neighborhood at e=" + std::to_string(e));
        }
        if (pe.interior) {
            const Cell& c = p.cell_at(e);
            if (nb.lo < std::max(c.a, p.window_lo) - 1e-12 * scale ||
                nb.hi > std::min(c.b, p.window_hi) + 1e-12 * scale) {
                pe.interior = false;
                append_detail(rep.detail, "A2: neighborhood leaves the cell at e=" + std::to_string(e));
            }
        }
        if (!pe.interior) {
            rep.a2_ok = false;
            if (rep.detail.find("A2") == std::string::npos)
                append_detail(rep.detail, "A2: eigenvalue not interior at e=" + std::to_string(e));
        }

        auto hs = pe.interior ? holder_scan(m, e, radius) : HolderScan{};
        pe.holder_constant = hs.constant;
        pe.holder_ok = hs.ok;
        if (!hs.ok) {
            rep.a3_ok = false;
            append_detail(rep.detail, "A3: Holder quotient diverges at e=" + std::to_string(e));
        }
        pe.coupling_norm_at_e = pe.interior ? linalg::frob_norm(m.coupling.evaluate(e)) : 0.0;
        rep.per_e.push_back(pe);
    }

    // neighborhoods pairwise disjoint
    std::vector<Interval> nb = m.neighborhoods;
    std::sort(nb.begin(), nb.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    for (size_t i = 0; i + 1 < nb.size(); ++i) {
        if (nb[i].hi > nb[i + 1].lo + tol) {
            rep.neighborhoods_disjoint = false;
            append_detail(rep.detail, "A2: neighborhoods overlap");
        }
    }

    // A3 side condition: v bounded over the window
    int n = std::max(samples, 16);
    for (int k = 0; k < n; ++k) {
        double x = p.window_lo + (p.window_hi - p.window_lo) * (k + 0.5) / n;
        if (p.fiber_dim_at(x) == 0) continue;
        rep.measured_bound = std::max(rep.measured_bound, linalg::frob_norm(m.coupling.evaluate(x)));
    }
    if (m.coupling.bound > 0 && rep.measured_bound > 1.05 * m.coupling.bound + tol) {
        rep.bound_ok = false;
        append_detail(rep.detail, "A3: coupling exceeds its declared bound");
    }
    return rep;
}

ValidationReport validate_assumptions(const FriedrichsModel& m, int samples, double tol) {
    ValidationReport rep = check_assumptions(m, samples, tol);
    if (!rep.a1_ok) throw AssumptionViolated("A1", rep.detail);
    if (!rep.a2_ok || !rep.neighborhoods_disjoint) throw AssumptionViolated("A2", rep.detail);
    if (!rep.a3_ok || !rep.bound_ok) throw AssumptionViolated("A3", rep.detail);
    return rep;
}

uint64_t ReservoirGrid::fingerprint() const {
    uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const void* p, size_t n) {
        const unsigned char* b = static_cast<const unsigned char*>(p);
        for (size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 1099511628211ULL;
        }
    };
    mix(nodes.data(), nodes.size() * sizeof(double));
    mix(weights.data(), weights.size() * sizeof(double));
    mix(fiber_dims.data(), fiber_dims.size() * sizeof(int));
    return h;
}

ReservoirGrid build_grid(const FriedrichsModel& m, double lambda, const GridPolicy& policy) {
    ReservoirGrid g;
    g.lambda = lambda;
    g.policy = policy;
    const auto& p = m.partition;

    struct Span {
        double a, b;
        int e_index;
    };
    std::vector<Span> spans;
    if (policy.with_asymptotic) {
        if (lambda <= 0) throw GridConflict("asymptotic grid needs lambda > 0");
        for (size_t i = 0; i < m.small.eigenvalues.size(); ++i) {
            double e = m.small.eigenvalues[i];
            double radius = m.neighborhoods.at(i).radius_about(e);
            double ext = lambda * lambda * policy.K;
            if (ext >= radius)
                throw GridConflict("scaled zone of extent " + std::to_string(ext) +
                                   " does not fit the neighborhood of e=" + std::to_string(e));
            spans.push_back({e - ext, e + ext, static_cast<int>(i)});
        }
        std::sort(spans.begin(), spans.end(), [](const Span& a, const Span& b) { return a.a < b.a; });
        for (size_t i = 0; i + 1 < spans.size(); ++i)
            if (spans[i].b >= spans[i + 1].a) throw GridConflict("scaled zones overlap");
    }

    auto push_node = [&](double x, double w, NodeTag tag) {
        int fd = p.fiber_dim_at(x);
        if (tag.kind == NodeTag::Scaled && fd <= 0)
            throw GridConflict("zero fiber dimension inside a scaled zone");
        if (fd <= 0) return;
        g.nodes.push_back(x);
        g.weights.push_back(w);
        g.fiber_dims.push_back(fd);
        g.tags.push_back(tag);
    };

    auto fill_background = [&](double a, double b) {
        double len = b - a;
        if (!(len > 0)) return;
        int n = static_cast<int>(std::lround(len / policy.h_bg));
        if (n < 1) {
            if (len < 0.5 * policy.h_bg) return;
            n = 1;
        }
        double h = len / n;
        for (int k = 0; k < n; ++k) push_node(a + h * (k + 0.5), h, {NodeTag::Background, -1, -1});
    };

    double cursor = p.window_lo;
    for (const auto& sp : spans) {
        fill_background(cursor, sp.a);
        double e = m.small.eigenvalues[sp.e_index];
        int ny = policy.n_y();
        for (int j = 0; j < ny; ++j) {
            double x = e + lambda * lambda * policy.y_node(j);
            push_node(x, lambda * lambda * policy.dy, {NodeTag::Scaled, sp.e_index, j});
        }
        cursor = sp.b;
    }
    fill_background(cursor, p.window_hi);

    g.offsets.resize(g.nodes.size());
    int off = 0;
    for (size_t i = 0; i < g.nodes.size(); ++i) {
        g.offsets[i] = off;
        off += g.fiber_dims[i];
    }
    g.total_fiber_dim = off;
    return g;
}

Mat coupling_matrix(const FriedrichsModel& m, const ReservoirGrid& grid) {
    Mat V = Mat::zeros(grid.total_fiber_dim, m.small.dim);
    for (size_t i = 0; i < grid.nodes.size(); ++i) {
        Mat v = m.coupling.evaluate(grid.nodes[i]);
        if (v.rows() != grid.fiber_dims[i] || v.cols() != m.small.dim)
            throw DimensionMismatch("coupling value has shape " + std::to_string(v.rows()) + "x" +
                                    std::to_string(v.cols()) + " at x=" + std::to_string(grid.nodes[i]));
        double sw = std::sqrt(grid.weights[i]);
        for (int r = 0; r < v.rows(); ++r)
            for (int c = 0; c < v.cols(); ++c) V(grid.offsets[i] + r, c) = sw * v(r, c);
    }
    return V;
}

DiscretizedFriedrichs assemble(const FriedrichsModel& m, const ReservoirGrid& grid, double lambda) {
    DiscretizedFriedrichs d;
    d.lambda = lambda;
    d.grid = grid;
    d.dimE = m.small.dim;
    int n = d.dimE + grid.total_fiber_dim;
    d.H = Mat::zeros(n, n);
    d.H.set_block(0, 0, m.small.E);
    Mat V = coupling_matrix(m, grid);
    for (size_t i = 0; i < grid.nodes.size(); ++i)
        for (int r = 0; r < grid.fiber_dims[i]; ++r) {
            int row = d.dimE + grid.offsets[i] + r;
            d.H(row, row) = grid.nodes[i];
        }
    if (lambda != 0.0) {
        for (int r = 0; r < V.rows(); ++r)
            for (int c = 0; c < d.dimE; ++c) {
                cx val = lambda * V(r, c);
                d.H(d.dimE + r, c) = val;
                d.H(c, d.dimE + r) = std::conj(val);
            }
    }
    return d;
}

namespace {

double lorentz_shape(double x) { return 1.0 / std::sqrt(M_PI * (1.0 + x * x)); }

FriedrichsModel finish(FriedrichsModel m) {
    if (m.neighborhoods.empty()) m.neighborhoods = default_neighborhoods(m.small, m.partition);
    return m;
}

}  // namespace

std::vector<std::string> builtin_names() {
    return {"lorentzian", "two-level", "fiber-jump", "rank-deficient", "boundary-eigenvalue"};
}

FriedrichsModel builtin_model(const std::string& name) {
    FriedrichsModel m;
    m.name = name;
    m.partition.window_lo = -20.0;
    m.partition.window_hi = 20.0;
    m.coupling.holder_delta = 1.0;
    if (name == "lorentzian") {
        m.small = make_small_system(Mat::zeros(1, 1));
        m.partition.cells = {{-HUGE_VAL, HUGE_VAL, 1}};
        m.coupling.evaluate = [](double x) {
            Mat v(1, 1);
            v(0, 0) = lorentz_shape(x);
            return v;
        };
        m.coupling.bound = 1.0 / std::sqrt(M_PI);
    } else if (name == "two-level") {
        m.small = make_small_system(Mat::diag({cx(1, 0), cx(-1, 0)}));
        m.partition.cells = {{-HUGE_VAL, HUGE_VAL, 1}};
        m.coupling.evaluate = [](double x) {
            Mat v(1, 2);
            v(0, 0) = lorentz_shape(x);
            v(0, 1) = lorentz_shape(x);
            return v;
        };
        m.coupling.bound = std::sqrt(2.0 / M_PI);
    } else if (name == "fiber-jump") {
        m.small = make_small_system(Mat::zeros(1, 1));
        m.partition.cells = {{-HUGE_VAL, 3.0, 1}, {3.0, HUGE_VAL, 2}};
        m.coupling.evaluate = [](double x) {
            if (x < 3.0) {
                Mat v(1, 1);
                v(0, 0) = lorentz_shape(x);
                return v;
            }
            Mat v(2, 1);
            v(0, 0) = lorentz_shape(x) / std::sqrt(2.0);
            v(1, 0) = lorentz_shape(x) / std::sqrt(2.0);
            return v;
        };
        m.coupling.bound = 1.0 / std::sqrt(M_PI);
    } else if (name == "rank-deficient") {
        m.small = make_small_system(Mat::zeros(2, 2));
        m.partition.cells = {{-HUGE_VAL, HUGE_VAL, 2}};
        m.coupling.evaluate = [](double x) {
            Mat v = Mat::zeros(2, 2);
            v(0, 0) = lorentz_shape(x);
            v(1, 0) = lorentz_shape(x);
            return v;
        };
        m.coupling.bound = std::sqrt(2.0 / M_PI);
    } else if (name == "boundary-eigenvalue") {
        m.small = make_small_system(Mat::zeros(1, 1));
        m.partition.cells = {{-HUGE_VAL, 0.0, 1}, {0.0, HUGE_VAL, 1}};
        m.coupling.evaluate = [](double x) {
            Mat v(1, 1);
            v(0, 0) = lorentz_shape(x);
            return v;
        };
        m.coupling.bound = 1.0 / std::sqrt(M_PI);
    } else {
        throw ConfigError("unknown builtin model: " + name);
    }
    return finish(std::move(m));
}

namespace {

double endpoint(const json& j) {
    if (j.is_string()) {
        std::string s = j.get<std::string>();
        if (s == "inf" || s == "+inf") return HUGE_VAL;
        if (s == "-inf") return -HUGE_VAL;
        throw ConfigError("bad interval endpoint: " + s);
    }
    return j.get<double>();
}

cx complex_of(const json& j) {
    if (j.is_number()) return cx(j.get<double>(), 0.0);
    if (j.is_array() && j.size() == 2) return cx(j[0].get<double>(), j[1].get<double>());
    throw ConfigError("complex entries must be numbers or [re, im] pairs");
}

Mat matrix_of(const json& j) {
    if (!j.is_array() || j.empty()) throw ConfigError("matrix must be a nonempty array of rows");
    int rows = static_cast<int>(j.size());
    int cols = static_cast<int>(j[0].size());
    Mat m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        if (static_cast<int>(j[r].size()) != cols) throw ConfigError("ragged matrix rows");
        for (int c = 0; c < cols; ++c) m(r, c) = complex_of(j[r][c]);
    }
    return m;
}

CouplingFunction coupling_of(const json& j, const SpectralPartition& part, int dimE) {
    CouplingFunction cf;
    if (j.contains("table")) {
        struct Samp {
            double x;
            Mat v;
        };
        auto samples = std::make_shared<std::vector<Samp>>();
        for (const auto& row : j.at("table"))
            samples->push_back({row.at(0).get<double>(), matrix_of(row.at(1))});
        std::sort(samples->begin(), samples->end(),
                  [](const Samp& a, const Samp& b) { return a.x < b.x; });
        if (samples->size() < 2) throw ConfigError("coupling table needs at least two samples");
        std::string interp = j.value("interpolation", "linear");
        if (interp != "linear") throw ConfigError("unsupported interpolation: " + interp);
        cf.evaluate = [samples](double x) {
            const auto& s = *samples;
            if (x < s.front().x || x > s.back().x)
                return Mat::zeros(s.front().v.rows(), s.front().v.cols());
            auto it = std::upper_bound(s.begin(), s.end(), x,
                                       [](double xv, const Samp& sm) { return xv < sm.x; });
            if (it == s.begin()) return s.front().v;
            if (it == s.end()) return s.back().v;
            const Samp& hi = *it;
            const Samp& lo = *(it - 1);
            double t = (x - lo.x) / (hi.x - lo.x);
            return (1.0 - t) * lo.v + t * hi.v;
        };
    } else if (j.contains("family")) {
        std::string family = j.at("family").get<std::string>();
        json params = j.value("params", json::object());
        double amp = params.value("amplitude", 1.0);
        double center = params.value("center", 0.0);
        double width = params.value("width", 1.0);
        if (width <= 0) throw ConfigError("coupling width must be positive");
        std::function<double(double)> shape;
        if (family == "lorentzian") {
            shape = [amp, center, width](double x) {
                double u = (x - center) / width;
                return amp / std::sqrt(M_PI * width * (1.0 + u * u));
            };
        } else if (family == "gaussian") {
            shape = [amp, center, width](double x) {
                double u = (x - center) / width;
                return amp * std::pow(2.0 * M_PI * width * width, -0.25) * std::exp(-0.25 * u * u);
            };
        } else if (family == "zero") {
            shape = [](double) { return 0.0; };
        } else {
            throw ConfigError("unknown coupling family: " + family);
        }
        std::optional<Mat> fixed;
        if (j.contains("matrix")) fixed = matrix_of(j.at("matrix"));
        // copy what the lambda needs; the partition outlives the model loader
        SpectralPartition pcopy = part;
        cf.evaluate = [shape, fixed, pcopy, dimE](double x) {
            int fd = pcopy.fiber_dim_at(x);
            Mat base = fixed ? *fixed : Mat::zeros(fd, dimE);
            if (!fixed)
                for (int r = 0; r < fd; ++r)
                    for (int c = 0; c < dimE; ++c) base(r, c) = 1.0;
            return shape(x) * base;
        };
    } else {
        throw ConfigError("coupling needs either a family or a table");
    }
    return cf;
}

}  // namespace

FriedrichsModel model_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("model JSON parse error: ") + e.what());
    }
    try {
        FriedrichsModel m;
        m.name = j.value("name", "model");
        m.small = make_small_system(matrix_of(j.at("small").at("E")));
        for (const auto& c : j.at("partition").at("cells")) {
            const auto& iv = c.at("interval");
            int fd;
            if (c.at("fiber_dim").is_string()) {
                fd = -1;  // "inf" and friends: rejected by validation
            } else {
                fd = c.at("fiber_dim").get<int>();
            }
            m.partition.cells.push_back({endpoint(iv.at(0)), endpoint(iv.at(1)), fd});
        }
        std::sort(m.partition.cells.begin(), m.partition.cells.end(),
                  [](const Cell& a, const Cell& b) { return a.a < b.a; });
        const auto& w = j.at("window");
        m.partition.window_lo = w.at(0).get<double>();
        m.partition.window_hi = w.at(1).get<double>();
        if (!(m.partition.window_lo < m.partition.window_hi))
            throw ConfigError("window must be a nonempty interval");
        m.coupling = coupling_of(j.at("coupling"), m.partition, m.small.dim);
        m.coupling.holder_delta = j.at("holder_delta").get<double>();
        if (!(m.coupling.holder_delta > 0 && m.coupling.holder_delta <= 1))
            throw ConfigError("holder_delta must lie in (0, 1]");
        if (j.contains("neighborhoods")) {
            m.neighborhoods.assign(m.small.eigenvalues.size(), Interval{0, 0});
            std::vector<bool> seen(m.small.eigenvalues.size(), false);
            for (const auto& nb : j.at("neighborhoods")) {
                double e = nb.at("e").get<double>();
                size_t best = 0;
                double bestd = HUGE_VAL;
                for (size_t i = 0; i < m.small.eigenvalues.size(); ++i) {
                    double d = std::abs(m.small.eigenvalues[i] - e);
                    if (d < bestd) {
                        bestd = d;
                        best = i;
                    }
                }
                if (bestd > 1e-9 * std::max(1.0, std::abs(e)))
                    throw ConfigError("neighborhood names unknown eigenvalue " + std::to_string(e));
                m.neighborhoods[best] = {nb.at("interval").at(0).get<double>(),
                                         nb.at("interval").at(1).get<double>()};
                seen[best] = true;
            }
            auto defaults = default_neighborhoods(m.small, m.partition);
            for (size_t i = 0; i < seen.size(); ++i)
                if (!seen[i]) m.neighborhoods[i] = defaults[i];
        }
        m = finish(std::move(m));
        // measure the coupling bound over the window if not supplied
        double b = j.value("coupling_bound", 0.0);
        if (b <= 0) {
            for (int k = 0; k < 4001; ++k) {
                double x = m.partition.window_lo +
                           (m.partition.window_hi - m.partition.window_lo) * k / 4000.0;
                if (m.partition.fiber_dim_at(x) <= 0) continue;
                b = std::max(b, linalg::frob_norm(m.coupling.evaluate(x)));
            }
        }
        m.coupling.bound = b;
        return m;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("model JSON is missing or mistypes a field: ") + e.what());
    }
}

FriedrichsModel load_model(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open model file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return model_from_json_text(ss.str());
}

FriedrichsModel resolve_model(const std::string& ref) {
    const std::string prefix = "builtin:";
    if (ref.rfind(prefix, 0) == 0) return builtin_model(ref.substr(prefix.size()));
    return load_model(ref);
}

}  // namespace wclab::model
