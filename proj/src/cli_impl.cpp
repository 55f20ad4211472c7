#include "wclab/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "wclab/davies.hpp"
#include "wclab/dilation.hpp"
#include "wclab/errors.hpp"
#include "wclab/model.hpp"
#include "wclab/wcl.hpp"

namespace wclab::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using linalg::cx;
using linalg::Mat;

std::string fmt_g(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general);
    return std::string(buf, res.ptr);
}

std::string hash_hex(uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string iso_now() {
    std::time_t tt = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

fs::path prepare_out_dir(const std::string& dir) {
    fs::path p = dir.empty() ? fs::path(".") : fs::path(dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw ConfigError("cannot create output directory " + p.string() + ": " + ec.message());
    return p;
}

void write_text(const fs::path& p, const std::string& text, std::vector<std::string>& outputs) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + p.string());
    out << text;
    outputs.push_back(p.string());
}

json mat_json(const Mat& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        json r = json::array();
        for (int j = 0; j < m.cols(); ++j)
            r.push_back(json::array({m(i, j).real(), m(i, j).imag()}));
        rows.push_back(std::move(r));
    }
    return rows;
}

void write_manifest(const fs::path& dir, const std::string& command, uint64_t config_hash,
                    const std::string& started, double wall_seconds,
                    const std::vector<std::string>& failures, CommandResult& res) {
    json man;
    man["command"] = command;
    man["config_hash"] = hash_hex(config_hash);
    man["tool_version"] = tool_version();
    man["started_at"] = started;
    man["finished_at"] = iso_now();
    man["wall_seconds"] = wall_seconds;
    man["outputs"] = res.outputs;
    man["failures"] = failures;
    fs::path p = dir / (command + "_manifest.json");
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + p.string());
    out << man.dump(2) << "\n";
    res.outputs.push_back(p.string());
}

struct Check {
    std::string name;
    double value = 0;
    double tol = 0;
    bool gated = true;
    bool pass = true;
};

json check_json(const Check& c) {
    json j;
    j["name"] = c.name;
    j["value"] = c.value;
    if (c.gated) {
        j["tol"] = c.tol;
        j["pass"] = c.pass;
    } else {
        j["informational"] = true;
    }
    return j;
}

}  // namespace

std::string tool_version() { return "0.1.0"; }

uint64_t fnv1a_hash(const std::string& text) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

CommandResult cmd_validate(const Options& opt) {
    CommandResult res;
    model::FriedrichsModel m;
    try {
        m = model::resolve_model(opt.model_ref);
    } catch (const std::exception& e) {
        res.exit_code = 2;
        res.report = std::string("error: ") + e.what() + "\n";
        return res;
    }
    model::ValidationReport rep;
    try {
        rep = model::check_assumptions(m, 2000, 1e-8);
    } catch (const std::exception& e) {
        res.exit_code = 1;
        res.report = std::string("validation aborted: ") + e.what() + "\n";
        return res;
    }
    std::ostringstream os;
    os << "model: " << m.name << "\n";
    os << "A1 coupling/partition structure: " << (rep.a1_ok ? "pass" : "FAIL") << "\n";
    os << "A2 eigenvalues interior + coupling bound: " << (rep.a2_ok ? "pass" : "FAIL") << "\n";
    os << "A3 Holder continuity at eigenvalues: " << (rep.a3_ok ? "pass" : "FAIL") << "\n";
    os << "neighborhoods disjoint: " << (rep.neighborhoods_disjoint ? "pass" : "FAIL") << "\n";
    os << "measured coupling bound: " << fmt_g(rep.measured_bound)
       << (rep.bound_ok ? " (pass)" : " (FAIL)") << "\n";
    for (const auto& pe : rep.per_e)
        os << "  e=" << fmt_g(pe.e) << " interior=" << (pe.interior ? "yes" : "no")
           << " holder_constant=" << fmt_g(pe.holder_constant)
           << (pe.holder_ok ? " (pass)" : " (FAIL)")
           << " |v(e)|=" << fmt_g(pe.coupling_norm_at_e) << "\n";
    if (!rep.detail.empty()) os << "detail: " << rep.detail << "\n";
    os << (rep.passed() ? "all assumptions hold\n" : "assumption check FAILED\n");
    res.report = os.str();
    res.exit_code = rep.passed() ? 0 : 1;
    return res;
}

CommandResult cmd_davies(const Options& opt) {
    CommandResult res;
    model::FriedrichsModel m;
    try {
        m = model::resolve_model(opt.model_ref);
    } catch (const std::exception& e) {
        res.exit_code = 2;
        res.report = std::string("error: ") + e.what() + "\n";
        return res;
    }
    std::vector<std::string> routes;
    if (opt.route == "all")
        routes = {"closed", "stationary", "dynamic"};
    else if (opt.route == "closed" || opt.route == "stationary" || opt.route == "dynamic")
        routes = {opt.route};
    else {
        res.exit_code = 2;
        res.report = "error: unknown route '" + opt.route + "'\n";
        return res;
    }

    std::string started = iso_now();
    auto t0 = std::chrono::steady_clock::now();
    json report;
    report["model"] = m.name;
    report["tol"] = opt.tol;
    report["routes_requested"] = routes;
    json blocks = json::array();
    std::vector<std::string> failures;
    bool some_e_has_no_route = false;
    std::ostringstream os;
    os << "model: " << m.name << "\n";
    for (size_t e = 0; e < m.small.eigenvalues.size(); ++e) {
        json blk;
        blk["e"] = m.small.eigenvalues[e];
        Mat nu = davies::extract_nu(m, static_cast<int>(e));
        blk["nu"] = mat_json(nu);
        Mat pole = cx(M_PI, 0) * (nu.adjoint() * nu);
        std::map<std::string, Mat> gammas;
        json routes_json;
        for (const auto& r : routes) {
            json rj;
            try {
                Mat g;
                if (r == "closed") {
                    g = davies::closed_form(m, static_cast<int>(e), opt.tol);
                } else if (r == "stationary") {
                    auto st = davies::stationary(m, static_cast<int>(e));
                    g = st.gamma;
                    rj["z_independence"] = st.z_independence;
                    rj["richardson_residual"] = st.richardson_residual;
                } else {
                    auto dy = davies::dynamic_route(m, static_cast<int>(e));
                    g = dy.gamma;
                    rj["half_horizon_difference"] = dy.half_diff;
                }
                rj["gamma"] = mat_json(g);
                Mat anti = cx(0.0, -0.5) * (g - g.adjoint());
                rj["dissipativity_residual"] = linalg::op_norm(anti + pole);
                rj["ok"] = true;
                gammas.emplace(r, std::move(g));
            } catch (const std::exception& ex) {
                rj["ok"] = false;
                rj["error"] = ex.what();
                failures.push_back("e=" + fmt_g(m.small.eigenvalues[e]) + " " + r + ": " +
                                   ex.what());
            }
            routes_json[r] = std::move(rj);
        }
        blk["routes"] = std::move(routes_json);
        json cross;
        for (auto a = gammas.begin(); a != gammas.end(); ++a)
            for (auto b = std::next(a); b != gammas.end(); ++b)
                cross[a->first + "-" + b->first] = linalg::op_norm(a->second - b->second);
        blk["route_cross_differences"] = std::move(cross);
        blocks.push_back(std::move(blk));
        os << "  e=" << fmt_g(m.small.eigenvalues[e]) << ": " << gammas.size() << "/"
           << routes.size() << " routes succeeded\n";
        if (gammas.empty()) some_e_has_no_route = true;
    }
    report["eigenvalues"] = std::move(blocks);

    try {
        fs::path dir = prepare_out_dir(opt.out_dir);
        write_text(dir / "davies_report.json", report.dump(2) + "\n", res.outputs);
        double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        uint64_t h = fnv1a_hash("model=" + opt.model_ref + ";route=" + opt.route +
                                ";tol=" + fmt_g(opt.tol));
        write_manifest(dir, "davies", h, started, wall, failures, res);
    } catch (const std::exception& e) {
        res.exit_code = 2;
        res.report = std::string("error: ") + e.what() + "\n";
        return res;
    }
    os << "report: " << res.outputs.front() << "\n";
    res.report = os.str();
    res.exit_code = some_e_has_no_route ? 1 : 0;
    return res;
}

CommandResult cmd_dilation(const Options& opt) {
    CommandResult res;
    model::FriedrichsModel m;
    try {
        m = model::resolve_model(opt.model_ref);
    } catch (const std::exception& e) {
        res.exit_code = 2;
        res.report = std::string("error: ") + e.what() + "\n";
        return res;
    }

    std::string started = iso_now();
    auto t0 = std::chrono::steady_clock::now();
    model::GridPolicy pol;
    pol.K = 20.0;
    pol.dy = 0.25;
    cx z(0.0, 1.0);
    double t = 0.7;

    json report;
    report["model"] = m.name;
    report["grid"] = {{"K", pol.K}, {"dy", pol.dy}};
    json blocks = json::array();
    std::vector<std::string> failures;
    bool all_pass = true;
    std::ostringstream os;
    os << "model: " << m.name << "\n";

    for (size_t e = 0; e < m.small.eigenvalues.size(); ++e) {
        json blk;
        blk["e"] = m.small.eigenvalues[e];
        try {
            auto s = dilation::build_system(m, static_cast<int>(e), pol);
            std::vector<Check> checks;
            auto gate = [&](const std::string& name, double value, double tol) {
                Check c{name, value, tol, true, value <= tol};
                checks.push_back(c);
                if (!c.pass) all_pass = false;
            };

            // resolvent convergence over the cutoff ladder
            Mat q = dilation::resolvent_Q(s, z);
            json ktab = json::array();
            std::vector<double> kerrs;
            for (double k : {pol.K / 4.0, pol.K / 2.0, pol.K}) {
                auto tr = dilation::truncate(s, k);
                double err =
                    linalg::op_norm(dilation::resolvent_Zk(tr, s.dE, z) - dilation::restrict_to(q, tr));
                ktab.push_back({{"k", k}, {"error", err}});
                kerrs.push_back(err);
            }
            blk["resolvent_k_table"] = ktab;
            bool decreasing = kerrs[0] > kerrs[1] && kerrs[1] > kerrs[2];
            Check kc{"resolvent k-table decreasing", kerrs.back(), kerrs.front(), true, decreasing};
            checks.push_back(kc);
            if (!decreasing) all_pass = false;

            // group identities
            Mat ut = dilation::group_Ut(s, t);
            Mat id = Mat::identity(s.dim());
            gate("unitarity defect |U U* - 1|", linalg::op_norm(ut * ut.adjoint() - id), 0.15);
            gate("group defect |U_2t - U_t U_t|",
                 linalg::op_norm(dilation::group_Ut(s, 2 * t) - ut * ut), 0.1);
            gate("adjoint defect |U_-t - U_t*|",
                 linalg::op_norm(dilation::group_Ut(s, -t) - ut.adjoint()), 1e-12);
            double dil_tol = s.use_quadrature ? 1e-6 : 1e-8;
            gate("dilation identity |1_E U_t 1_E - e^{-it Gamma}|",
                 linalg::op_norm(ut.block(0, 0, s.dE, s.dE) - linalg::exp_generator(s.Gamma, t)),
                 dil_tol);

            // boundary forms and their one-sided derivatives
            Mat zp = dilation::forms_Zplus(s);
            Mat zm = dilation::forms_Zminus(s);
            Mat want = Mat::zeros(s.dim(), s.dim());
            want.set_block(0, 0, cx(0.0, -2.0 * M_PI) * (s.nu.adjoint() * s.nu));
            gate("forms difference |Z+ - Z- + 2 pi i nu* nu|",
                 linalg::frob_norm(zp - zm - want), 1e-10);

            std::vector<cx> psi(s.dim(), cx(0)), phi(s.dim(), cx(0));
            psi[0] = 1.0;
            phi[s.dE > 1 ? 1 : 0] = 1.0;
            for (int j = 0; j < s.n_nodes(); ++j) {
                double y = s.grid.y[j];
                if (std::abs(y) > 5.0) continue;
                psi[s.node_row(j)] = 0.4 * std::exp(-y * y / 4.0);
                phi[s.node_row(j)] = cx(0.0, 0.3) * std::exp(-y * y / 8.0);
            }
            double h = 1e-3;
            cx f0 = linalg::dot(psi, phi);
            cx dplus = (linalg::dot(psi, dilation::apply_Ut(s, h, phi)) - f0) / h;
            cx dminus = (f0 - linalg::dot(psi, dilation::apply_Ut(s, -h, phi))) / h;
            cx refp = cx(0, -1) * linalg::dot(psi, zp * phi);
            cx refm = cx(0, -1) * linalg::dot(psi, zm * phi);
            gate("Z+ right derivative", std::abs(dplus - refp) / (1.0 + std::abs(refp)), 2e-2);
            gate("Z- left derivative", std::abs(dminus - refm) / (1.0 + std::abs(refm)), 2e-2);

            gate("scaling covariance residual (lambda^2 = 1/4)",
                 dilation::scaling_check(s, 0.5, z), 1e-12);

            auto mr = dilation::minimality(s);
            Check mc{"minimality (informational)", mr.minimal ? 1.0 : 0.0, 0, false, true};
            checks.push_back(mc);
            blk["minimality"] = {{"minimal", mr.minimal},
                                 {"nu_rank", mr.nu_rank},
                                 {"fiber", mr.fiber},
                                 {"nu_singular_values", mr.nu_singular_values}};

            json cj = json::array();
            int failed_here = 0;
            for (const auto& c : checks) {
                cj.push_back(check_json(c));
                if (c.gated && !c.pass) ++failed_here;
            }
            blk["checks"] = cj;
            os << "  e=" << fmt_g(m.small.eigenvalues[e]) << ": " << checks.size() - failed_here
               << "/" << checks.size() << " checks pass, minimal="
               << (mr.minimal ? "yes" : "no") << "\n";
        } catch (const std::exception& ex) {
            blk["error"] = ex.what();
            failures.push_back("e=" + fmt_g(m.small.eigenvalues[e]) + ": " + ex.what());
            all_pass = false;
            os << "  e=" << fmt_g(m.small.eigenvalues[e]) << ": FAILED (" << ex.what() << ")\n";
        }
        blocks.push_back(std::move(blk));
    }
    report["eigenvalues"] = std::move(blocks);

    try {
        fs::path dir = prepare_out_dir(opt.out_dir);
        write_text(dir / "dilation_report.json", report.dump(2) + "\n", res.outputs);
        double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        uint64_t h = fnv1a_hash("model=" + opt.model_ref + ";tol=" + fmt_g(opt.tol));
        write_manifest(dir, "dilation", h, started, wall, failures, res);
    } catch (const std::exception& e) {
        res.exit_code = 2;
        res.report = std::string("error: ") + e.what() + "\n";
        return res;
    }
    os << "report: " << res.outputs.front() << "\n";
    res.report = os.str();
    res.exit_code = all_pass ? 0 : 1;
    return res;
}

CommandResult cmd_sweep(const Options& opt) {
    CommandResult res;
    std::string text;
    wcl::SweepConfig cfg;
    try {
        text = read_file(opt.config_path);
        cfg = wcl::sweep_config_from_json(text);
    } catch (const std::exception& e) {
        res.exit_code = 2;
        res.report = std::string("error: ") + e.what() + "\n";
        return res;
    }
    std::string mref = !opt.model_ref.empty() ? opt.model_ref : cfg.model_ref;
    if (mref.empty()) {
        res.exit_code = 2;
        res.report = "error: no model given (config \"model\" or --model)\n";
        return res;
    }
    model::FriedrichsModel m;
    try {
        m = model::resolve_model(mref);
    } catch (const std::exception& e) {
        res.exit_code = 2;
        res.report = std::string("error: ") + e.what() + "\n";
        return res;
    }
    if (opt.jobs > 0) cfg.jobs = opt.jobs;
    std::string out = !opt.out_dir.empty() ? opt.out_dir : cfg.out_dir;

    std::string started = iso_now();
    auto t0 = std::chrono::steady_clock::now();
    wcl::ConvergenceReport rep;
    try {
        rep = wcl::run_sweep(m, cfg);
    } catch (const ConfigError& e) {
        res.exit_code = 2;
        res.report = std::string("error: ") + e.what() + "\n";
        return res;
    } catch (const std::exception& e) {
        res.exit_code = 1;
        res.report = std::string("sweep failed: ") + e.what() + "\n";
        return res;
    }

    std::ostringstream csv;
    csv << "experiment,lambda,probe_id,probe_kind,error,grid_fingerprint,seconds\n";
    for (const auto& r : rep.rows)
        csv << rep.experiment << ',' << fmt_g(r.lambda) << ',' << r.probe_id << ','
            << r.probe_kind << ',' << fmt_g(r.error) << ',' << r.grid_fingerprint << ','
            << fmt_g(r.seconds) << "\n";

    json sum;
    sum["experiment"] = rep.experiment;
    sum["model"] = m.name;
    sum["lambdas"] = rep.lambdas;
    sum["rows"] = rep.rows.size();
    sum["order_defined"] = rep.order_defined;
    sum["fitted_order"] = rep.fitted_order;
    sum["fit_residual"] = rep.fit_residual;
    sum["failures"] = rep.failures;
    sum["grid_note"] = rep.grid_note;
    sum["config_hash"] = hash_hex(fnv1a_hash(text));
    sum["tool_version"] = tool_version();

    try {
        fs::path dir = prepare_out_dir(out);
        write_text(dir / "sweep.csv", csv.str(), res.outputs);
        write_text(dir / "sweep_summary.json", sum.dump(2) + "\n", res.outputs);
        double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        write_manifest(dir, "sweep", fnv1a_hash(text), started, wall, rep.failures, res);
    } catch (const std::exception& e) {
        res.exit_code = 2;
        res.report = std::string("error: ") + e.what() + "\n";
        return res;
    }

    std::ostringstream os;
    os << "experiment: " << rep.experiment << " on " << m.name << "\n";
    os << "rows: " << rep.rows.size() << ", failures: " << rep.failures.size() << "\n";
    if (rep.order_defined)
        os << "fitted order: " << fmt_g(rep.fitted_order) << " (log-log rms residual "
           << fmt_g(rep.fit_residual) << ")\n";
    else
        os << "fitted order: undefined (need >= 2 positive errors)\n";
    for (const auto& f : rep.failures) os << "failed: " << f << "\n";
    os << "outputs in " << (out.empty() ? "." : out) << "\n";
    res.report = os.str();
    res.exit_code = rep.rows.empty() ? 1 : 0;
    return res;
}

}  // namespace wclab::cli
