#include "wclab/dilation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "wclab/davies.hpp"
#include "wclab/errors.hpp"

namespace wclab::dilation {

namespace {

// Spectral components of Gamma: P_m = S e_m e_m^T S^{-1}, with the fiber
// contractions used by every term of the evolution.
struct Spectral {
    std::vector<cx> gam;
    std::vector<Mat> P;      // dE x dE
    std::vector<Mat> nuP;    // fiber x dE
    std::vector<Mat> Pnu;    // dE x fiber
    std::vector<Mat> nuPnu;  // fiber x fiber
};

Spectral spectral_parts(const DilationSystem& s) {
    Spectral sp;
    const auto& ge = s.geig;
    for (int m = 0; m < s.dE; ++m) {
        Mat P(s.dE, s.dE);
        for (int i = 0; i < s.dE; ++i)
            for (int j = 0; j < s.dE; ++j) P(i, j) = ge.vectors(i, m) * ge.inverse_vectors(m, j);
        sp.gam.push_back(ge.eigenvalues[m]);
        sp.nuP.push_back(s.nu * P);
        sp.Pnu.push_back(P * s.nu.adjoint());
        sp.nuPnu.push_back(s.nu * sp.Pnu.back());
        sp.P.push_back(std::move(P));
    }
    return sp;
}

Mat hermitian_part(const Mat& g) { return cx(0.5) * (g + g.adjoint()); }

Mat assemble_Z(const DilationSystem& s, const Mat& corner) {
    Mat z = Mat::zeros(s.dim(), s.dim());
    z.set_block(0, 0, corner);
    z.set_block(s.dE, 0, s.W);
    z.set_block(0, s.dE, s.W.adjoint());
    for (int i = 0; i < s.n_nodes() * s.fiber; ++i) z(s.dE + i, s.dE + i) = s.zr_diag[i];
    return z;
}

// Gauss-Legendre 8 on [-1,1]
const double kGLx[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                        0.9602898564975363};
const double kGLw[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                        0.1012285362903763};

void gl_nodes(double len, std::vector<double>& xs, std::vector<double>& ws) {
    int panels = std::max(1, (int)std::ceil(5.0 * len));
    double h = len / panels;
    for (int p = 0; p < panels; ++p) {
        double c = (p + 0.5) * h, r = 0.5 * h;
        for (int q = 0; q < 4; ++q) {
            xs.push_back(c - r * kGLx[q]);
            ws.push_back(r * kGLw[q]);
            xs.push_back(c + r * kGLx[q]);
            ws.push_back(r * kGLw[q]);
        }
    }
}

// Quadrature route for defective Gamma: the free and E-block terms stay
// exact, the convolution kernels are integrated with composite GL-8.
Mat dense_quadrature(const DilationSystem& s, double t) {
    int dE = s.dE, f = s.fiber, n = s.n_nodes();
    Mat U = Mat::zeros(s.dim(), s.dim());
    U.set_block(0, 0, linalg::exp_generator(s.Gamma, t));
    for (int j = 0; j < n; ++j)
        for (int r = 0; r < f; ++r)
            U(s.node_row(j, r), s.node_row(j, r)) = std::exp(cx(0, -t * s.grid.y[j]));

    std::vector<double> us, ws;
    gl_nodes(t, us, ws);
    std::vector<Mat> eg;  // e^{-i(t-u)Gamma} at the outer nodes
    for (double u : us) eg.push_back(linalg::exp_generator(s.Gamma, t - u));

    const cx mi(0, -1);
    for (int j = 0; j < n; ++j) {
        Mat m1 = Mat::zeros(dE, dE);
        for (size_t q = 0; q < us.size(); ++q)
            m1 += (ws[q] * std::exp(cx(0, -us[q] * s.grid.y[j]))) * eg[q];
        double sj = std::sqrt(s.grid.u[j]);
        Mat ur = (mi * sj) * (m1 * s.nu.adjoint());
        Mat ll = (mi * sj) * (s.nu * m1);
        U.set_block(0, s.node_row(j), ur);
        U.set_block(s.node_row(j), 0, ll);
    }

    // pairs (u1, u2) in the simplex u1 + u2 <= t, with nu E nu* precomputed
    struct Pair {
        double u1, u2, w;
        Mat F;  // fiber x fiber
    };
    std::vector<Pair> pairs;
    for (size_t a = 0; a < us.size(); ++a) {
        std::vector<double> vs, vw;
        gl_nodes(t - us[a], vs, vw);
        for (size_t b = 0; b < vs.size(); ++b) {
            Mat e = linalg::exp_generator(s.Gamma, t - us[a] - vs[b]);
            pairs.push_back({us[a], vs[b], ws[a] * vw[b], s.nu * (e * s.nu.adjoint())});
        }
    }
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
            double c = -std::sqrt(s.grid.u[j] * s.grid.u[k]);
            Mat blk = Mat::zeros(f, f);
            for (const auto& p : pairs)
                blk += (p.w * std::exp(cx(0, -p.u2 * s.grid.y[j] - p.u1 * s.grid.y[k]))) * p.F;
            for (int r = 0; r < f; ++r)
                for (int cc = 0; cc < f; ++cc)
                    U(s.node_row(j, r), s.node_row(k, cc)) += c * blk(r, cc);
        }
    return U;
}

}  // namespace

AsymptoticGrid uniform_grid(const model::GridPolicy& pol) {
    AsymptoticGrid g;
    int n = pol.n_y();
    g.y.resize(n);
    g.u.assign(n, pol.dy);
    for (int j = 0; j < n; ++j) g.y[j] = pol.y_node(j);
    return g;
}

DilationSystem build_system(const Mat& Gamma, const Mat& nu, const AsymptoticGrid& grid,
                            double tol) {
    if (Gamma.rows() != Gamma.cols() || nu.cols() != Gamma.rows())
        throw DimensionMismatch("build_system: Gamma " + std::to_string(Gamma.rows()) + "x" +
                                std::to_string(Gamma.cols()) + ", nu cols " +
                                std::to_string(nu.cols()));
    if (grid.y.size() != grid.u.size() || grid.y.empty())
        throw DimensionMismatch("build_system: grid");

    Mat anti = cx(0, -0.5) * (Gamma - Gamma.adjoint());
    Mat target = cx(-M_PI) * (nu.adjoint() * nu);
    double dev = linalg::frob_norm(anti - target);
    if (dev > tol * std::max(1.0, linalg::frob_norm(target)))
        throw ConditionViolated("build_system: (Gamma - Gamma*)/2i != -pi nu*nu, deviation " +
                                std::to_string(dev));

    DilationSystem s;
    s.Gamma = Gamma;
    s.nu = nu;
    s.grid = grid;
    s.dE = Gamma.rows();
    s.fiber = nu.rows();
    int n = s.n_nodes();
    s.W = Mat::zeros(n * s.fiber, s.dE);
    s.zr_diag.resize(n * s.fiber);
    for (int j = 0; j < n; ++j) {
        double sj = std::sqrt(grid.u[j]);
        for (int r = 0; r < s.fiber; ++r) {
            for (int c = 0; c < s.dE; ++c) s.W(j * s.fiber + r, c) = sj * nu(r, c);
            s.zr_diag[j * s.fiber + r] = grid.y[j];
        }
    }
    try {
        s.geig = linalg::general_eig(Gamma);
        s.use_quadrature = s.geig.condition > 1e8;
    } catch (const Singular&) {
        s.use_quadrature = true;
    } catch (const NoConvergence&) {
        s.use_quadrature = true;
    }
    return s;
}

DilationSystem build_system(const model::FriedrichsModel& m, int e_index,
                            const model::GridPolicy& pol, double tol) {
    Mat g = davies::closed_form(m, e_index);
    Mat nu = davies::extract_nu(m, e_index);
    const Mat& b = m.small.bases.at(e_index);
    Mat gc = b.adjoint() * (g * b);
    Mat nuc = nu * b;
    return build_system(gc, nuc, uniform_grid(pol), tol);
}

Mat resolvent_Q(const DilationSystem& s, cx z) {
    if (z.imag() == 0.0) throw ConditionViolated("resolvent_Q: z on the real axis");
    if (z.imag() < 0.0) return resolvent_Q(s, std::conj(z)).adjoint();
    int dE = s.dE, f = s.fiber, n = s.n_nodes();
    Mat re = linalg::resolve(s.Gamma, z, Mat::identity(dE));
    Mat renu = re * s.nu.adjoint();
    Mat nure = s.nu * re;
    Mat nurenu = s.nu * renu;
    Mat q = Mat::zeros(s.dim(), s.dim());
    q.set_block(0, 0, re);
    std::vector<cx> d(n);
    std::vector<double> sq(n);
    for (int j = 0; j < n; ++j) {
        d[j] = 1.0 / (z - s.grid.y[j]);
        sq[j] = std::sqrt(s.grid.u[j]);
    }
    for (int j = 0; j < n; ++j) {
        cx c = sq[j] * d[j];
        for (int r = 0; r < dE; ++r)
            for (int cc = 0; cc < f; ++cc) q(r, s.node_row(j, cc)) = c * renu(r, cc);
        for (int r = 0; r < f; ++r)
            for (int cc = 0; cc < dE; ++cc) q(s.node_row(j, r), cc) = c * nure(r, cc);
    }
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
            cx c = sq[j] * sq[k] * d[j] * d[k];
            for (int r = 0; r < f; ++r)
                for (int cc = 0; cc < f; ++cc)
                    q(s.node_row(j, r), s.node_row(k, cc)) = c * nurenu(r, cc);
        }
    for (int j = 0; j < n; ++j)
        for (int r = 0; r < f; ++r) q(s.node_row(j, r), s.node_row(j, r)) += d[j];
    return q;
}

Mat forms_Zplus(const DilationSystem& s) { return assemble_Z(s, s.Gamma); }

Mat forms_Zminus(const DilationSystem& s) { return assemble_Z(s, s.Gamma.adjoint()); }

TruncatedZ truncate(const DilationSystem& s, double k) {
    TruncatedZ t;
    t.k = k;
    std::vector<int> nodes;
    for (int j = 0; j < s.n_nodes(); ++j)
        if (std::abs(s.grid.y[j]) <= k + 1e-12) nodes.push_back(j);
    if (nodes.empty()) throw GridIncompatible("truncate: no nodes below " + std::to_string(k));
    int dE = s.dE, f = s.fiber, nt = (int)nodes.size();
    for (int c = 0; c < dE; ++c) t.rows.push_back(c);
    for (int j : nodes)
        for (int r = 0; r < f; ++r) t.rows.push_back(s.node_row(j, r));
    t.Z = Mat::zeros(dE + nt * f, dE + nt * f);
    t.Z.set_block(0, 0, hermitian_part(s.Gamma));
    for (int a = 0; a < nt; ++a) {
        int j = nodes[a];
        for (int r = 0; r < f; ++r) {
            for (int c = 0; c < dE; ++c) {
                cx w = s.W(j * f + r, c);
                t.Z(dE + a * f + r, c) = w;
                t.Z(c, dE + a * f + r) = std::conj(w);
            }
            t.Z(dE + a * f + r, dE + a * f + r) = s.grid.y[j];
        }
    }
    return t;
}

Mat resolvent_Zk(const TruncatedZ& t, int dE, cx z, double check_tol) {
    int n = t.Z.rows(), nr = n - dE;
    Mat r = linalg::resolve(t.Z, z, Mat::identity(n));
    // Feshbach reconstruction of the E corner through the Schur complement
    Mat wk = t.Z.block(dE, 0, nr, dE);
    Mat eff = t.Z.block(0, 0, dE, dE);
    for (int i = 0; i < nr; ++i) {
        cx di = 1.0 / (z - t.Z(dE + i, dE + i));
        for (int a = 0; a < dE; ++a)
            for (int b = 0; b < dE; ++b) eff(a, b) += std::conj(wk(i, a)) * di * wk(i, b);
    }
    Mat rf = linalg::resolve(eff, z, Mat::identity(dE));
    double dev = linalg::frob_norm(r.block(0, 0, dE, dE) - rf);
    if (dev > check_tol * std::max(1.0, linalg::frob_norm(rf)))
        throw NoConvergence("resolvent_Zk: Feshbach cross-check deviates by " +
                            std::to_string(dev));
    return r;
}

Mat restrict_to(const Mat& full, const TruncatedZ& t) {
    int n = (int)t.rows.size();
    if (full.rows() < t.rows.back() + 1 || full.rows() != full.cols())
        throw DimensionMismatch("restrict_to");
    Mat out(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out(i, j) = full(t.rows[i], t.rows[j]);
    return out;
}

Mat group_via_Zk(const TruncatedZ& t, double time) {
    return group_via_Zk(linalg::hermitian_eig(t.Z), time);
}

Mat group_via_Zk(const linalg::HermitianEig& eig, double time) {
    return linalg::propagate(eig, time, Mat::identity(eig.vectors.rows()));
}

Mat group_Ut(const DilationSystem& s, double t) {
    if (t == 0.0) return Mat::identity(s.dim());
    if (t < 0.0) return group_Ut(s, -t).adjoint();
    if (s.use_quadrature) return dense_quadrature(s, t);

    auto sp = spectral_parts(s);
    int dE = s.dE, f = s.fiber, n = s.n_nodes();
    Mat u = Mat::zeros(s.dim(), s.dim());

    Mat ul = Mat::zeros(dE, dE);
    for (int m = 0; m < dE; ++m) ul += std::exp(cx(0, -t) * sp.gam[m]) * sp.P[m];
    u.set_block(0, 0, ul);

    for (int j = 0; j < n; ++j)
        for (int r = 0; r < f; ++r)
            u(s.node_row(j, r), s.node_row(j, r)) = std::exp(cx(0, -t * s.grid.y[j]));

    const cx mi(0, -1);
    std::vector<double> sq(n);
    for (int j = 0; j < n; ++j) sq[j] = std::sqrt(s.grid.u[j]);
    for (int j = 0; j < n; ++j) {
        Mat ur = Mat::zeros(dE, f), ll = Mat::zeros(f, dE);
        for (int m = 0; m < dE; ++m) {
            cx p = mi * sq[j] * linalg::phi1(sp.gam[m], s.grid.y[j], t);
            ur += p * sp.Pnu[m];
            ll += p * sp.nuP[m];
        }
        u.set_block(0, s.node_row(j), ur);
        u.set_block(s.node_row(j), 0, ll);
    }

    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
            double c = -sq[j] * sq[k];
            for (int m = 0; m < dE; ++m) {
                cx p = c * linalg::phi2(s.grid.y[j], sp.gam[m], s.grid.y[k], t);
                const Mat& a = sp.nuPnu[m];
                for (int r = 0; r < f; ++r)
                    for (int cc = 0; cc < f; ++cc)
                        u(s.node_row(j, r), s.node_row(k, cc)) += p * a(r, cc);
            }
        }
    return u;
}

std::vector<cx> apply_Ut(const DilationSystem& s, double t, const std::vector<cx>& psi) {
    if ((int)psi.size() != s.dim()) throw DimensionMismatch("apply_Ut");
    if (t == 0.0) return psi;
    if (t < 0.0) {
        Mat u = group_Ut(s, -t);
        return u.adjoint() * psi;
    }
    if (s.use_quadrature) return group_Ut(s, t) * psi;

    auto sp = spectral_parts(s);
    int dE = s.dE, f = s.fiber, n = s.n_nodes();
    std::vector<cx> uvec(psi.begin(), psi.begin() + dE);
    bool has_g = false;
    for (int i = dE; i < s.dim(); ++i)
        if (psi[i] != cx(0)) {
            has_g = true;
            break;
        }
    std::vector<double> sq(n);
    for (int j = 0; j < n; ++j) sq[j] = std::sqrt(s.grid.u[j]);

    std::vector<std::vector<cx>> pu(dE), npu(dE);
    for (int m = 0; m < dE; ++m) {
        pu[m] = sp.P[m] * uvec;
        npu[m] = s.nu * pu[m];
    }

    std::vector<cx> out(s.dim(), cx(0));
    const cx mi(0, -1);
    for (int m = 0; m < dE; ++m) {
        cx ph = std::exp(cx(0, -t) * sp.gam[m]);
        for (int i = 0; i < dE; ++i) out[i] += ph * pu[m][i];
    }
    if (has_g) {
        for (int m = 0; m < dE; ++m) {
            std::vector<cx> acc(f, cx(0));
            for (int j = 0; j < n; ++j) {
                cx p = sq[j] * linalg::phi1(sp.gam[m], s.grid.y[j], t);
                for (int r = 0; r < f; ++r) acc[r] += p * psi[s.node_row(j, r)];
            }
            std::vector<cx> e = sp.Pnu[m] * acc;
            for (int i = 0; i < dE; ++i) out[i] += mi * e[i];
        }
    }

    for (int j = 0; j < n; ++j) {
        cx free = std::exp(cx(0, -t * s.grid.y[j]));
        for (int r = 0; r < f; ++r) out[s.node_row(j, r)] = free * psi[s.node_row(j, r)];
        for (int m = 0; m < dE; ++m) {
            cx p = mi * sq[j] * linalg::phi1(s.grid.y[j], sp.gam[m], t);
            for (int r = 0; r < f; ++r) out[s.node_row(j, r)] += p * npu[m][r];
        }
        if (has_g) {
            for (int m = 0; m < dE; ++m) {
                std::vector<cx> b(f, cx(0));
                for (int k = 0; k < n; ++k) {
                    cx p = sq[k] * linalg::phi2(s.grid.y[j], sp.gam[m], s.grid.y[k], t);
                    for (int r = 0; r < f; ++r) b[r] += p * psi[s.node_row(k, r)];
                }
                std::vector<cx> w = sp.nuPnu[m] * b;
                for (int r = 0; r < f; ++r) out[s.node_row(j, r)] -= sq[j] * w[r];
            }
        }
    }
    return out;
}

DomainVector domain_vector(const DilationSystem& s, cx z0, const std::vector<cx>& u,
                           const std::vector<cx>& g) {
    if (z0.imag() == 0.0) throw ConditionViolated("domain_vector: z0 on the real axis");
    int dE = s.dE, f = s.fiber, n = s.n_nodes();
    if ((int)u.size() != dE || (int)g.size() != n * f) throw DimensionMismatch("domain_vector");
    std::vector<cx> nuu = s.nu * u;
    std::vector<cx> gamu = s.Gamma * u;
    std::vector<cx> wg(dE, cx(0));
    for (int j = 0; j < n; ++j) {
        double sj = std::sqrt(s.grid.u[j]);
        for (int r = 0; r < f; ++r)
            for (int c = 0; c < dE; ++c) wg[c] += sj * std::conj(s.nu(r, c)) * g[j * f + r];
    }
    DomainVector dv;
    dv.psi.resize(s.dim());
    dv.zpsi.resize(s.dim());
    for (int i = 0; i < dE; ++i) {
        dv.psi[i] = u[i];
        dv.zpsi[i] = gamu[i] + wg[i];
    }
    for (int j = 0; j < n; ++j) {
        cx d = std::sqrt(s.grid.u[j]) / (z0 - s.grid.y[j]);
        for (int r = 0; r < f; ++r) {
            int row = s.node_row(j, r);
            dv.psi[row] = d * nuu[r] + g[j * f + r];
            dv.zpsi[row] = z0 * d * nuu[r] + s.grid.y[j] * g[j * f + r];
        }
    }
    return dv;
}

MinimalityReport minimality(const DilationSystem& s, double rank_tol) {
    MinimalityReport rep;
    rep.fiber = s.fiber;
    rep.nu_singular_values = linalg::singular_values(s.nu);
    if (!rep.nu_singular_values.empty()) {
        double top = rep.nu_singular_values.front();
        for (double v : rep.nu_singular_values)
            if (v > rank_tol * top) ++rep.nu_rank;
    }
    rep.minimal = rep.nu_rank == s.fiber;
    return rep;
}

double scaling_check(const DilationSystem& s, double lambda, cx z) {
    if (!(lambda > 0.0)) throw ConditionViolated("scaling_check: lambda must be positive");
    if (z.imag() == 0.0) throw ConditionViolated("scaling_check: z on the real axis");
    double raw = lambda * lambda;
    double lam2 = std::ldexp(1.0, (int)std::lround(std::log2(raw)));
    if (std::abs(raw - lam2) > 8 * std::numeric_limits<double>::epsilon() * lam2)
        throw GridIncompatible("scaling_check: lambda^2 = " + std::to_string(raw) +
                               " does not map the grid into itself");
    int dE = s.dE, f = s.fiber, n = s.n_nodes();
    DilationSystem c;
    c.dE = dE;
    c.fiber = f;
    c.Gamma = lam2 * hermitian_part(s.Gamma);
    c.nu = cx(lambda) * s.nu;
    c.grid.y.resize(n);
    c.grid.u.resize(n);
    for (int j = 0; j < n; ++j) {
        c.grid.y[j] = lam2 * s.grid.y[j];
        c.grid.u[j] = lam2 * s.grid.u[j];
    }
    c.W = Mat::zeros(n * f, dE);
    c.zr_diag.resize(n * f);
    for (int j = 0; j < n; ++j) {
        double sj = std::sqrt(c.grid.u[j]);
        for (int r = 0; r < f; ++r) {
            for (int cc = 0; cc < dE; ++cc) c.W(j * f + r, cc) = sj * c.nu(r, cc);
            c.zr_diag[j * f + r] = c.grid.y[j];
        }
    }
    Mat zc = (1.0 / lam2) * assemble_Z(c, c.Gamma);
    Mat zh = assemble_Z(s, hermitian_part(s.Gamma));
    Mat id = Mat::identity(s.dim());
    return linalg::op_norm(linalg::resolve(zc, z, id) - linalg::resolve(zh, z, id));
}

}  // namespace wclab::dilation
