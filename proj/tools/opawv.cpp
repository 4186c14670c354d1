// opawv: conditional signal-field statistics of a high-gain OPA whose
// idler is counted by an inefficient detector. Emits figure-ready tables
// (quadrature / photon-number / Mandel-Q / Wigner) from the truncated
// Fock-space numerics side by side with the closed-form predictions, and
// runs the cross-verification suite.
//
// Exit codes: 0 success, 1 configuration error, 2 numerical or
// truncation failure.

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "opa/opa.hpp"

namespace {

using nlohmann::json;

std::string fmt_sci(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::scientific, 16);
    return std::string(buf, res.ptr);
}

std::string fmt_short(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

struct CommonOpts {
    double alpha = 5.0;
    double r = 1.5;
    std::vector<double> etas;
    int ndet = 0;
    int nmax = 0;  // 0 = automatic per eta
    double tail_tol = 1e-12;
    std::string grid;     // "min:max:step"
    std::string grid_im;  // wigner only
    std::string out;      // empty = stdout
    std::string format = "csv";
    int threads = 0;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_grid) {
    cmd->add_option("--alpha", o.alpha, "Signal coherent amplitude (real, >= 0)");
    cmd->add_option("--r", o.r, "OPA gain parameter (>= 0)");
    cmd->add_option("--eta", o.etas, "Detector efficiency in [0,1]; repeatable");
    cmd->add_option("--ndet", o.ndet, "Detected idler photon count (>= 0)");
    cmd->add_option("--nmax", o.nmax, "Fock truncation cutoff (default: automatic)");
    cmd->add_option("--tail-tol", o.tail_tol, "Maximum neglected probability mass");
    if (with_grid)
        cmd->add_option("--grid", o.grid, "Evaluation grid as min:max:step");
    cmd->add_option("--out", o.out, "Output path (default: stdout)");
    cmd->add_option("--format", o.format, "Output format: csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--threads", o.threads, "Worker thread cap (0 = all cores)");
}

int env_nmax_cap() {
    const char* s = std::getenv("OPAWV_NMAX_CAP");
    if (!s) return 0;
    char* end = nullptr;
    const long v = std::strtol(s, &end, 10);
    if (end == s || *end != '\0' || v < 1)
        throw std::invalid_argument("OPAWV_NMAX_CAP must be a positive integer");
    return static_cast<int>(v);
}

opa::SchemeParams make_params(const CommonOpts& o, double eta) {
    opa::SchemeParams p;
    p.alpha = o.alpha;
    p.r = o.r;
    p.eta = eta;
    p.n_det = o.ndet;
    p.n_max = o.nmax;
    p.tail_tol = o.tail_tol;
    if (const int cap = env_nmax_cap(); cap > 0) p.n_max_cap = cap;
    p.validate_physical();
    if (p.n_max < 1) p.n_max = opa::choose_truncation(p);
    return p;
}

opa::GridSpec parse_grid(const std::string& s) {
    opa::GridSpec g;
    std::istringstream in(s);
    std::string a, b, c;
    if (!std::getline(in, a, ':') || !std::getline(in, b, ':') || !std::getline(in, c))
        throw std::invalid_argument("grid must be min:max:step");
    try {
        g.lo = std::stod(a);
        g.hi = std::stod(b);
        g.step = std::stod(c);
    } catch (const std::exception&) {
        throw std::invalid_argument("grid must be min:max:step with numeric fields");
    }
    g.validate();
    return g;
}

void emit(const std::string& out_path, const std::string& text) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(out_path, std::ios::binary);
    if (!f) throw std::invalid_argument("cannot open output path: " + out_path);
    f << text;
}

std::string join_shorts(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        s += fmt_short(v[i]);
    }
    return s;
}

std::string join_ints(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        s += std::to_string(v[i]);
    }
    return s;
}

std::string provenance(const char* command, const CommonOpts& o,
                       const std::vector<double>& etas, const std::vector<int>& nmaxes) {
    std::string h;
    h += std::string("# opawv ") + command + " version=" + opa::version + "\n";
    h += "# alpha=" + fmt_short(o.alpha) + " r=" + fmt_short(o.r) + " eta=" +
         join_shorts(etas) + " n_det=" + std::to_string(o.ndet) + " n_max=" +
         join_ints(nmaxes) + " tail_tol=" + fmt_short(o.tail_tol) + "\n";
    return h;
}

json params_json(const char* command, const CommonOpts& o, const std::vector<double>& etas,
                 const std::vector<int>& nmaxes) {
    return json{{"tool", "opawv"},
                {"version", opa::version},
                {"command", command},
                {"alpha", o.alpha},
                {"r", o.r},
                {"eta", etas},
                {"n_det", o.ndet},
                {"n_max", nmaxes},
                {"tail_tol", o.tail_tol}};
}

struct Series {
    double eta = 0.0;
    opa::SchemeParams params;
    opa::DensityMatrix rho;
};

std::vector<Series> build_states(const CommonOpts& o, const std::vector<double>& etas) {
    opa::set_thread_limit(o.threads);
    std::vector<Series> out;
    out.reserve(etas.size());
    for (double eta : etas) {
        Series s;
        s.eta = eta;
        s.params = make_params(o, eta);
        s.rho = opa::ensemble_to_density(opa::condition_on_idler(s.params),
                                         s.params.n_max, s.params.tail_tol);
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<int> nmax_list(const std::vector<Series>& series) {
    std::vector<int> v;
    for (const auto& s : series) v.push_back(s.params.n_max);
    return v;
}

// -------------------------------------------------------------------------
// quadrature

int cmd_quadrature(const CommonOpts& o) {
    const std::vector<double> etas =
        o.etas.empty() ? std::vector<double>{0.1, 0.33, 0.66, 1.0} : o.etas;
    auto series = build_states(o, etas);

    opa::GridSpec grid;
    if (!o.grid.empty()) {
        grid = parse_grid(o.grid);
    } else {
        grid = opa::suggest_quadrature_grid(series[0].rho);
        for (const auto& s : series) {
            const auto g = opa::suggest_quadrature_grid(s.rho);
            grid.lo = std::min(grid.lo, g.lo);
            grid.hi = std::max(grid.hi, g.hi);
        }
    }

    std::vector<opa::Distribution1D> dists;
    for (int attempt = 0;; ++attempt) {
        try {
            dists.clear();
            for (const auto& s : series)
                dists.push_back(opa::quadrature_distribution(s.rho, grid));
            break;
        } catch (const opa::grid_error&) {
            if (attempt >= 8) throw;
            const double span = grid.hi - grid.lo;
            grid.lo = std::floor((grid.lo - 0.25 * span) / grid.step) * grid.step;
            grid.hi = std::ceil((grid.hi + 0.25 * span) / grid.step) * grid.step;
        }
    }

    const bool analytic = o.ndet == 0;
    if (o.format == "json") {
        json j = params_json("quadrature", o, etas, nmax_list(series));
        j["grid"] = {{"lo", grid.lo}, {"hi", grid.hi}, {"step", grid.step}};
        j["series"] = json::array();
        for (std::size_t s = 0; s < series.size(); ++s) {
            json e{{"eta", series[s].eta},
                   {"n_max", series[s].params.n_max},
                   {"x", dists[s].coords},
                   {"p_numeric", dists[s].probs},
                   {"norm_residual", dists[s].norm_residual}};
            if (analytic) {
                const auto ctx = opa::ClosedFormContext::from(series[s].params);
                std::vector<double> pa(dists[s].coords.size());
                for (std::size_t i = 0; i < pa.size(); ++i)
                    pa[i] = opa::quad_pdf(ctx, dists[s].coords[i]);
                e["p_analytic"] = pa;
            }
            j["series"].push_back(std::move(e));
        }
        emit(o.out, j.dump(2) + "\n");
        return 0;
    }

    std::string text = provenance("quadrature", o, etas, nmax_list(series));
    text += "# grid=" + fmt_short(grid.lo) + ":" + fmt_short(grid.hi) + ":" +
            fmt_short(grid.step) + "\n";
    text += "x";
    for (const auto& s : series) {
        text += ",P_num[eta=" + fmt_short(s.eta) + "]";
        if (analytic) text += ",P_ana[eta=" + fmt_short(s.eta) + "]";
    }
    text += "\n";
    std::vector<opa::ClosedFormContext> ctxs;
    if (analytic)
        for (const auto& s : series) ctxs.push_back(opa::ClosedFormContext::from(s.params));
    for (std::size_t i = 0; i < dists[0].coords.size(); ++i) {
        text += fmt_sci(dists[0].coords[i]);
        for (std::size_t s = 0; s < series.size(); ++s) {
            text += "," + fmt_sci(dists[s].probs[i]);
            if (analytic) text += "," + fmt_sci(opa::quad_pdf(ctxs[s], dists[0].coords[i]));
        }
        text += "\n";
    }
    emit(o.out, text);
    return 0;
}

// -------------------------------------------------------------------------
// photons

int cmd_photons(const CommonOpts& o) {
    const std::vector<double> etas =
        o.etas.empty() ? std::vector<double>{0.1, 0.33, 0.66, 1.0} : o.etas;
    auto series = build_states(o, etas);

    int n_lo = 0;
    int n_hi = 0;
    for (const auto& s : series) n_hi = std::max(n_hi, s.rho.n_max());
    if (!o.grid.empty()) {
        const auto g = parse_grid(o.grid);
        n_lo = std::max(0, static_cast<int>(std::floor(g.lo)));
        n_hi = std::min(n_hi, static_cast<int>(std::ceil(g.hi)));
    }

    std::vector<opa::Distribution1D> dists;
    for (const auto& s : series) dists.push_back(opa::photon_distribution(s.rho));

    const bool analytic = o.ndet == 0;
    std::vector<opa::ClosedFormContext> ctxs;
    if (analytic)
        for (const auto& s : series) ctxs.push_back(opa::ClosedFormContext::from(s.params));

    auto p_num = [&](std::size_t s, int n) {
        return n < static_cast<int>(dists[s].probs.size()) ? dists[s].probs[std::size_t(n)]
                                                           : 0.0;
    };

    if (o.format == "json") {
        json j = params_json("photons", o, etas, nmax_list(series));
        j["series"] = json::array();
        for (std::size_t s = 0; s < series.size(); ++s) {
            std::vector<int> ns;
            std::vector<double> pn, pa;
            for (int n = n_lo; n <= n_hi; ++n) {
                ns.push_back(n);
                pn.push_back(p_num(s, n));
                if (analytic) pa.push_back(opa::photon_pmf(ctxs[s], n));
            }
            json e{{"eta", series[s].eta},
                   {"n_max", series[s].params.n_max},
                   {"n", ns},
                   {"p_numeric", pn},
                   {"norm_residual", dists[s].norm_residual}};
            if (analytic) e["p_analytic"] = pa;
            j["series"].push_back(std::move(e));
        }
        emit(o.out, j.dump(2) + "\n");
        return 0;
    }

    std::string text = provenance("photons", o, etas, nmax_list(series));
    text += "n";
    for (const auto& s : series) {
        text += ",P_num[eta=" + fmt_short(s.eta) + "]";
        if (analytic) text += ",P_ana[eta=" + fmt_short(s.eta) + "]";
    }
    text += "\n";
    for (int n = n_lo; n <= n_hi; ++n) {
        text += std::to_string(n);
        for (std::size_t s = 0; s < series.size(); ++s) {
            text += "," + fmt_sci(p_num(s, n));
            if (analytic) text += "," + fmt_sci(opa::photon_pmf(ctxs[s], n));
        }
        text += "\n";
    }
    emit(o.out, text);
    return 0;
}

// -------------------------------------------------------------------------
// mandel

int cmd_mandel(const CommonOpts& o) {
    std::vector<double> etas = o.etas;
    if (etas.empty())
        for (int i = 1; i <= 20; ++i) etas.push_back(0.05 * i);
    auto series = build_states(o, etas);

    const bool analytic = o.ndet == 0;
    std::vector<double> q_num(series.size()), q_ana(series.size());
    std::vector<bool> defined(series.size());
    for (std::size_t s = 0; s < series.size(); ++s) {
        const auto mom = opa::moments(series[s].rho);
        defined[s] = mom.mandel_q.has_value();
        q_num[s] = mom.mandel_q.value_or(0.0);
        if (analytic) {
            const auto qa = opa::mandel_q(opa::ClosedFormContext::from(series[s].params));
            q_ana[s] = qa.value_or(0.0);
        }
    }

    if (o.format == "json") {
        json j = params_json("mandel", o, etas, nmax_list(series));
        j["rows"] = json::array();
        for (std::size_t s = 0; s < series.size(); ++s) {
            json row{{"eta", series[s].eta}, {"q_defined", bool(defined[s])},
                     {"Q_num", q_num[s]}};
            if (analytic) row["Q_ana"] = q_ana[s];
            j["rows"].push_back(std::move(row));
        }
        emit(o.out, j.dump(2) + "\n");
        return 0;
    }

    std::string text = provenance("mandel", o, etas, nmax_list(series));
    text += analytic ? "eta,Q_num,Q_ana\n" : "eta,Q_num\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
        text += fmt_sci(series[s].eta) + "," + (defined[s] ? fmt_sci(q_num[s]) : "undefined");
        if (analytic) text += "," + fmt_sci(q_ana[s]);
        text += "\n";
    }
    emit(o.out, text);
    return 0;
}

// -------------------------------------------------------------------------
// wigner

int cmd_wigner(const CommonOpts& o) {
    const std::vector<double> etas =
        o.etas.empty() ? std::vector<double>{0.1, 1.0} : o.etas;
    auto series = build_states(o, etas);
    const bool analytic = o.ndet == 0;

    struct Block {
        opa::WignerGrid grid;
        double peak_num = 0.0;
        opa::cplx center_num;
    };
    std::vector<Block> blocks;
    for (const auto& s : series) {
        opa::WignerGridSpec spec;
        if (!o.grid.empty()) {
            spec.re = parse_grid(o.grid);
            spec.im = o.grid_im.empty() ? opa::suggest_wigner_grid(s.rho, spec.re.step).im
                                        : parse_grid(o.grid_im);
        } else {
            spec = opa::suggest_wigner_grid(s.rho);
        }
        Block b;
        for (int attempt = 0;; ++attempt) {
            try {
                b.grid = opa::wigner(s.rho, spec);
                break;
            } catch (const opa::grid_error&) {
                if (attempt >= 8) throw;
                for (opa::GridSpec* g : {&spec.re, &spec.im}) {
                    const double span = g->hi - g->lo;
                    g->lo = std::floor((g->lo - 0.25 * span) / g->step) * g->step;
                    g->hi = std::ceil((g->hi + 0.25 * span) / g->step) * g->step;
                }
            }
        }
        const int ni = b.grid.im.count();
        std::size_t best = 0;
        for (std::size_t i = 0; i < b.grid.values.size(); ++i)
            if (b.grid.values[i] > b.grid.values[best]) best = i;
        b.peak_num = b.grid.values[best];
        b.center_num = opa::cplx(b.grid.re.point(static_cast<int>(best) / ni),
                                 b.grid.im.point(static_cast<int>(best) % ni));
        blocks.push_back(std::move(b));
    }

    if (o.format == "json") {
        json j = params_json("wigner", o, etas, nmax_list(series));
        j["series"] = json::array();
        for (std::size_t s = 0; s < series.size(); ++s) {
            const auto& b = blocks[s];
            json e{{"eta", series[s].eta},
                   {"grid_re", {{"lo", b.grid.re.lo}, {"hi", b.grid.re.hi}, {"step", b.grid.re.step}}},
                   {"grid_im", {{"lo", b.grid.im.lo}, {"hi", b.grid.im.hi}, {"step", b.grid.im.step}}},
                   {"w_numeric", b.grid.values},
                   {"center_num", {b.center_num.real(), b.center_num.imag()}},
                   {"peak_num", b.peak_num},
                   {"integral", b.grid.integral()}};
            if (analytic) {
                const auto ctx = opa::ClosedFormContext::from(series[s].params);
                std::vector<double> wa(b.grid.values.size());
                const int ni = b.grid.im.count();
                for (std::size_t i = 0; i < wa.size(); ++i) {
                    const opa::cplx g(b.grid.re.point(static_cast<int>(i) / ni),
                                      b.grid.im.point(static_cast<int>(i) % ni));
                    wa[i] = opa::wigner_gaussian(ctx, g);
                }
                e["w_analytic"] = wa;
                e["center_ana"] = {opa::wigner_center(ctx).real(), 0.0};
                e["peak_ana"] = opa::wigner_peak(ctx);
            }
            j["series"].push_back(std::move(e));
        }
        emit(o.out, j.dump(2) + "\n");
        return 0;
    }

    std::string text = provenance("wigner", o, etas, nmax_list(series));
    for (std::size_t s = 0; s < series.size(); ++s) {
        const auto& b = blocks[s];
        text += "# eta=" + fmt_short(series[s].eta) +
                " center_num=(" + fmt_short(b.center_num.real()) + "," +
                fmt_short(b.center_num.imag()) + ") peak_num=" + fmt_short(b.peak_num);
        if (analytic) {
            const auto ctx = opa::ClosedFormContext::from(series[s].params);
            text += " center_ana=(" + fmt_short(opa::wigner_center(ctx).real()) +
                    ",0) peak_ana=" + fmt_short(opa::wigner_peak(ctx));
        }
        text += "\n";
    }
    text += analytic ? "eta,re,im,W_num,W_ana\n" : "eta,re,im,W_num\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
        const auto& b = blocks[s];
        std::optional<opa::ClosedFormContext> ctx;
        if (analytic) ctx = opa::ClosedFormContext::from(series[s].params);
        const int nr = b.grid.re.count(), ni = b.grid.im.count();
        for (int i = 0; i < nr; ++i) {
            for (int jdx = 0; jdx < ni; ++jdx) {
                text += fmt_sci(series[s].eta) + "," + fmt_sci(b.grid.re.point(i)) + "," +
                        fmt_sci(b.grid.im.point(jdx)) + "," + fmt_sci(b.grid.value(i, jdx));
                if (analytic)
                    text += "," + fmt_sci(opa::wigner_gaussian(
                                      *ctx, opa::cplx(b.grid.re.point(i), b.grid.im.point(jdx))));
                text += "\n";
            }
        }
    }
    emit(o.out, text);
    return 0;
}

// -------------------------------------------------------------------------
// verify

int cmd_verify(const CommonOpts& o, bool quick) {
    opa::set_thread_limit(o.threads);
    const double eta = o.etas.empty() ? 0.1 : o.etas.front();
    opa::SchemeParams p = make_params(o, eta);
    const auto results = opa::run_verification(
        p, quick ? opa::VerifyLevel::quick : opa::VerifyLevel::full);

    bool all_pass = true;
    if (o.format == "json") {
        json j = params_json("verify", o, {eta}, {p.n_max});
        j["checks"] = json::array();
        for (const auto& r : results) {
            all_pass = all_pass && r.pass;
            j["checks"].push_back(json{{"id", r.id},
                                       {"pass", r.pass},
                                       {"measured", r.measured},
                                       {"threshold", r.threshold},
                                       {"note", r.note}});
        }
        j["all_pass"] = all_pass;
        emit(o.out, j.dump(2) + "\n");
    } else {
        std::string text;
        for (const auto& r : results) {
            all_pass = all_pass && r.pass;
            text += std::string(r.pass ? "PASS" : "FAIL") + " " + r.id +
                    " measured=" + fmt_short(r.measured) +
                    " threshold=" + fmt_short(r.threshold);
            if (!r.note.empty()) text += " note=\"" + r.note + "\"";
            text += "\n";
        }
        text += std::string(all_pass ? "OK" : "FAILED") + " " +
                std::to_string(results.size()) + " checks\n";
        emit(o.out, text);
    }
    return all_pass ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Conditional signal-field statistics of a high-gain OPA "
                 "with inefficient idler detection"};
    app.set_config("--config", "", "Read options from a config file");
    app.require_subcommand(1);

    CommonOpts q_opts, p_opts, m_opts, w_opts, v_opts;
    bool v_quick = false;

    auto* q = app.add_subcommand("quadrature", "Quadrature distribution table");
    add_common(q, q_opts, true);
    auto* ph = app.add_subcommand("photons", "Photon-number distribution table");
    add_common(ph, p_opts, true);
    auto* ma = app.add_subcommand("mandel", "Mandel Q across detector efficiencies");
    add_common(ma, m_opts, false);
    auto* wi = app.add_subcommand("wigner", "Wigner function grid dump");
    add_common(wi, w_opts, true);
    wi->add_option("--grid-im", w_opts.grid_im, "Imaginary-axis grid as min:max:step");
    auto* ve = app.add_subcommand("verify", "Run the cross-verification suite");
    add_common(ve, v_opts, false);
    ve->add_flag("--quick", v_quick, "Skip the parameter sweeps");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << "error: config: " << e.what() << std::endl;
        return 1;
    }

    try {
        if (q->parsed()) return cmd_quadrature(q_opts);
        if (ph->parsed()) return cmd_photons(p_opts);
        if (ma->parsed()) return cmd_mandel(m_opts);
        if (wi->parsed()) return cmd_wigner(w_opts);
        if (ve->parsed()) return cmd_verify(v_opts, v_quick);
        std::cerr << "error: config: no subcommand given" << std::endl;
        return 1;
    } catch (const opa::numeric_error& e) {
        std::cerr << "error: numeric: " << e.what() << std::endl;
        return 2;
    } catch (const opa::truncation_error& e) {
        std::cerr << "error: numeric: " << e.what() << std::endl;
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: config: " << e.what() << std::endl;
        return 1;
    } catch (const std::domain_error& e) {
        std::cerr << "error: config: " << e.what() << std::endl;
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << std::endl;
        return 2;
    }
}
