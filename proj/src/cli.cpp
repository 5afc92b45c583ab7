#include "thetalat/cli.hpp"

#include "thetalat/bco.hpp"
#include "thetalat/jacobi.hpp"
#include "thetalat/lattice.hpp"
#include "thetalat/layered.hpp"
#include "thetalat/theta_sum.hpp"
#include "thetalat/translation.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace thetalat {

namespace {

using nlohmann::json;

struct Params {
    std::string lattice;
    double alpha = 1.0;
    double t = 1.0;
    double y = 1.0;
    double delta = 0.0;
    std::string shift;
    int grid = 512;
    int rounds = 2;
    std::string range;
    int points = 50;
    double rtol = 1e-13;
    std::string format = "json";
    int jobs = 1;
    long seed = 0;
    int kind = 3;
    double x = 1.0;
    int deriv = 0;
    std::string preset = "fcc-hcp";
    std::string alphas = "0.5,1,2,4";
    std::string family = "U3";
    std::string c_list;
    std::string method = "auto";
    bool normalize = false;
    int max_layers = 12;
    int random = 0;
};

std::vector<double> parse_reals(const std::string& s, const char* what) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            throw std::invalid_argument(std::string(what) + ": cannot parse '" + item + "'");
        }
        if (used != item.size()) throw std::invalid_argument(std::string(what) + ": cannot parse '" + item + "'");
        out.push_back(v);
    }
    if (out.empty()) throw std::invalid_argument(std::string(what) + ": empty list");
    return out;
}

std::pair<double, double> parse_range(const std::string& s) {
    const auto v = parse_reals(s, "--range");
    if (v.size() != 2 || !(v[0] < v[1])) throw std::invalid_argument("--range must be a,b with a < b");
    return {v[0], v[1]};
}

std::vector<double> linspace(double a, double b, int n) {
    if (n < 1) throw std::invalid_argument("--points must be >= 1");
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) out[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
    return out;
}

Vector to_vector(const std::vector<double>& v) {
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json vec_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

class Emitter {
public:
    Emitter(const Params& p, std::ostream& out) : p_(p), out_(out) {}

    void header() const {
        out_ << "# seed=" << p_.seed << ", rtol=" << std::setprecision(12) << p_.rtol << ", version=" << kVersion << "\n";
    }
    json base() const { return json{{"seed", p_.seed}, {"rtol", p_.rtol}, {"version", kVersion}}; }
    void emit_json(const json& j) const { out_ << j.dump(2) << "\n"; }

    // Rows of numbers as csv (12 significant digits) or a whitespace table.
    void emit_rows(const std::vector<std::string>& cols, const std::vector<std::vector<double>>& rows) const {
        if (p_.format == "json") {
            json j = base();
            j["columns"] = cols;
            j["rows"] = rows;
            emit_json(j);
            return;
        }
        header();
        const bool csv = p_.format == "csv";
        for (std::size_t i = 0; i < cols.size(); ++i) out_ << (i ? (csv ? "," : " ") : "") << cols[i];
        out_ << "\n";
        for (const auto& r : rows) {
            for (std::size_t i = 0; i < r.size(); ++i)
                out_ << (i ? (csv ? "," : " ") : "") << std::setprecision(12) << r[i];
            out_ << "\n";
        }
    }

private:
    const Params& p_;
    std::ostream& out_;
};

void check_common(const Params& p) {
    if (!(p.rtol > 0.0 && p.rtol <= 1e-3)) throw std::invalid_argument("--rtol must lie in (0, 1e-3]");
    if (p.format != "json" && p.format != "csv" && p.format != "table")
        throw std::invalid_argument("--format must be json, csv or table");
    if (p.jobs < 1) throw std::invalid_argument("--jobs must be >= 1");
}

// Evaluates f over the inputs with up to `jobs` workers; results keep the input order.
template <class F>
std::vector<std::vector<double>> parallel_rows(const std::vector<double>& xs, int jobs, F f) {
    std::vector<std::vector<double>> rows(xs.size());
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), std::max<std::size_t>(1, xs.size()));
    std::vector<std::future<void>> tasks;
    for (std::size_t w = 0; w < workers; ++w) {
        tasks.push_back(std::async(std::launch::async, [&, w] {
            for (std::size_t i = w; i < xs.size(); i += workers) rows[i] = f(xs[i]);
        }));
    }
    for (auto& t : tasks) t.get();
    return rows;
}

struct Inconclusive {};

}  // namespace

std::vector<std::string> read_config_args(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file " + path);
    std::vector<std::string> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": expected key=value");
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.rfind("--", 0) == 0) key = key.substr(2);
        if (key.empty()) throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": empty key");
        out.push_back("--" + key);
        if (value != "true") out.push_back(value);
    }
    return out;
}

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
    Params p;
    std::vector<std::string> args;
    try {
        std::string config;
        for (std::size_t i = 0; i < raw_args.size(); ++i) {
            if (raw_args[i] == "--config" && i + 1 < raw_args.size()) {
                config = raw_args[++i];
            } else if (raw_args[i].rfind("--config=", 0) == 0) {
                config = raw_args[i].substr(9);
            } else {
                args.push_back(raw_args[i]);
            }
        }
        if (!config.empty()) {
            const auto extra = read_config_args(config);
            for (std::size_t i = 0; i < extra.size(); ++i) {
                const std::string& key = extra[i];
                const bool has_value = i + 1 < extra.size() && extra[i + 1].rfind("--", 0) != 0;
                const bool given = std::any_of(args.begin(), args.end(), [&](const std::string& a) {
                    return a == key || a.rfind(key + "=", 0) == 0;
                });
                if (!given) {
                    args.push_back(key);
                    if (has_value) args.push_back(extra[i + 1]);
                }
                if (has_value) ++i;
            }
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitParameter;
    }

    CLI::App app{"Lattice theta functions: evaluation, certification and minimization", "thetalat"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    auto common = [&](CLI::App* c) {
        c->add_option("--rtol", p.rtol, "relative tolerance in (0, 1e-3]");
        c->add_option("--format", p.format, "json, csv or table");
        c->add_option("--seed", p.seed, "seed recorded in the output header");
        c->add_option("--jobs", p.jobs, "worker count for sweeps");
    };

    auto* jac = app.add_subcommand("jacobi", "Jacobi theta functions and derivatives");
    common(jac);
    jac->add_option("--kind", p.kind, "2, 3 or 4")->required();
    jac->add_option("--x", p.x, "argument x > 0");
    jac->add_option("--deriv", p.deriv, "derivative order 0..3");
    jac->add_option("--range", p.range, "a,b sweep of x");
    jac->add_option("--points", p.points, "sweep points");

    auto* th = app.add_subcommand("theta", "Lattice theta functions");
    th->require_subcommand(1);
    auto* th_eval = th->add_subcommand("eval", "theta_{L+u}(alpha)");
    common(th_eval);
    th_eval->add_option("--lattice", p.lattice, "preset:NAME[:params] or JSON basis")->required();
    th_eval->add_option("--alpha", p.alpha, "alpha > 0");
    th_eval->add_option("--shift", p.shift, "x,y[,z] Cartesian shift");
    th_eval->add_option("--method", p.method, "auto, direct or poisson");
    th_eval->add_option("--delta", p.delta, "Ho-Mueller weight of the shifted copy in [-1,1]");
    th_eval->add_flag("--normalize", p.normalize, "rescale to unit covolume first");

    auto* lay = app.add_subcommand("layered", "Layered stackings");
    lay->require_subcommand(1);
    auto* lay_cmp = lay->add_subcommand("compare", "FCC against HCP at unit density");
    common(lay_cmp);
    lay_cmp->add_option("--preset", p.preset, "fcc-hcp");
    lay_cmp->add_option("--alphas", p.alphas, "comma-separated alpha values");

    auto* bco = app.add_subcommand("bco", "Body-centred-orthorhombic family");
    bco->require_subcommand(1);
    auto* b_cert = bco->add_subcommand("certify", "certify y -> E_t(y, alpha) increasing on [1, sqrt 3]");
    common(b_cert);
    b_cert->add_option("--alpha", p.alpha, "alpha > 0");
    b_cert->add_option("--t", p.t, "t > 0");
    auto* b_t0 = bco->add_subcommand("t0", "t0(alpha), a single value or a sweep");
    common(b_t0);
    b_t0->add_option("--alpha", p.alpha, "alpha > 0");
    b_t0->add_option("--range", p.range, "a,b sweep of alpha");
    b_t0->add_option("--points", p.points, "sweep points");
    auto* b_a1 = bco->add_subcommand("alpha1", "root of h_alpha(1) = rho_{1,alpha}");
    common(b_a1);
    auto* b_scan = bco->add_subcommand("scan", "products of theta functions at c_i^t alpha");
    common(b_scan);
    b_scan->add_option("--family", p.family, "U2, U3, U4, Q, P34 or P23");
    b_scan->add_option("--c", p.c_list, "comma-separated c_i with product 1")->required();
    b_scan->add_option("--alpha", p.alpha, "alpha > 0");
    b_scan->add_option("--range", p.range, "a,b range of t")->required();
    b_scan->add_option("--points", p.points, "grid points");
    auto* b_et = bco->add_subcommand("etilde", "reduced energy and its y-derivatives");
    common(b_et);
    b_et->add_option("--alpha", p.alpha, "alpha > 0");
    b_et->add_option("--t", p.t, "t > 0");
    b_et->add_option("--y", p.y, "y >= 1");
    b_et->add_option("--range", p.range, "a,b sweep of y");
    b_et->add_option("--points", p.points, "sweep points");
    auto* b_g = bco->add_subcommand("gmin", "argmin of f_3 + f_2 over [1, 3]");
    common(b_g);
    b_g->add_option("--alpha", p.alpha, "alpha > 0");

    auto* cls = app.add_subcommand("classify2d", "small-alpha minimizers of u -> theta_{L+u}");
    common(cls);
    cls->add_option("--lattice", p.lattice, "2D lattice spec")->required();
    cls->add_option("--max-layers", p.max_layers, "layers for the deciding-layer scan (0 skips it)");
    cls->add_option("--grid", p.grid, "grid for the deciding-layer scan");

    auto* am = app.add_subcommand("argmin-shift", "grid minimizers of u -> theta_{L+u}(alpha)");
    common(am);
    am->add_option("--lattice", p.lattice, "lattice spec")->required();
    am->add_option("--alpha", p.alpha, "alpha > 0");
    am->add_option("--grid", p.grid, "grid points per axis");
    am->add_option("--rounds", p.rounds, "x4 refinement rounds");

    auto* sw = app.add_subcommand("sweep", "theta_{L+u}(alpha) over an alpha range");
    common(sw);
    sw->add_option("--lattice", p.lattice, "lattice spec")->required();
    sw->add_option("--range", p.range, "a,b range of alpha")->required();
    sw->add_option("--points", p.points, "grid points");
    sw->add_option("--shift", p.shift, "x,y[,z] Cartesian shift");
    sw->add_option("--delta", p.delta, "Ho-Mueller weight of the shifted copy");
    sw->add_option("--random", p.random, "instead: rho at this many seeded random shifts, alpha = first range end");

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, err, err);
        err << app.help();
        return kExitParameter;
    }

    Emitter em(p, out);
    try {
        check_common(p);
        if (*jac) {
            const JacobiKind kind = jacobi_kind(p.kind);
            if (!p.range.empty()) {
                const auto [a, b] = parse_range(p.range);
                const auto rows = parallel_rows(linspace(a, b, p.points), p.jobs, [&](double x) {
                    const SeriesValue v = jacobi_theta(kind, x, p.deriv, p.rtol);
                    return std::vector<double>{x, v.value, v.abs_error};
                });
                em.emit_rows({"x", "value", "abs_error"}, rows);
            } else {
                const SeriesValue v = jacobi_theta(kind, p.x, p.deriv, p.rtol);
                if (p.format == "json") {
                    json j = em.base();
                    j.update({{"kind", p.kind}, {"x", p.x}, {"deriv", p.deriv}, {"value", v.value},
                              {"abs_error", v.abs_error}, {"terms", v.terms_used}});
                    em.emit_json(j);
                } else {
                    em.emit_rows({"x", "value", "abs_error"}, {{p.x, v.value, v.abs_error}});
                }
            }
        } else if (*th_eval) {
            BravaisLattice L = parse_lattice_spec(p.lattice);
            if (p.normalize) L = normalize_density(L);
            Vector u = Vector::Zero(L.dim());
            if (!p.shift.empty()) {
                u = to_vector(parse_reals(p.shift, "--shift"));
                if (u.size() != L.dim()) throw std::invalid_argument("--shift has the wrong dimension");
            }
            ThetaResult r;
            if (p.delta != 0.0) {
                r = ho_mueller_energy(L, u, p.delta, p.alpha, p.rtol);
            } else if (p.method == "direct") {
                r = theta_direct(L, u, p.alpha, p.rtol);
            } else if (p.method == "poisson") {
                r = theta_poisson(L, u, p.alpha, p.rtol);
            } else if (p.method == "auto") {
                r = theta(L, u, p.alpha, p.rtol);
            } else {
                throw std::invalid_argument("--method must be auto, direct or poisson");
            }
            if (p.format == "json") {
                json j = em.base();
                j.update({{"alpha", p.alpha}, {"value", r.value}, {"abs_error", r.abs_error},
                          {"method", to_string(r.method)}, {"points_summed", r.points_summed},
                          {"covolume", L.covolume()}});
                em.emit_json(j);
            } else {
                em.emit_rows({"alpha", "value", "abs_error"}, {{p.alpha, r.value, r.abs_error}});
            }
        } else if (*lay_cmp) {
            if (p.preset != "fcc-hcp") throw std::invalid_argument("--preset must be fcc-hcp");
            const LayeredConfig fcc = preset_layered("fcc", true), hcp = preset_layered("hcp", true);
            const auto rows = parallel_rows(parse_reals(p.alphas, "--alphas"), p.jobs, [&](double a) {
                const ThetaResult f = layered_theta(fcc, a, p.rtol), h = layered_theta(hcp, a, p.rtol);
                const ThetaResult g = layered_theta_gap(fcc, hcp, a, p.rtol);
                return std::vector<double>{a, f.value, h.value, g.value, g.abs_error};
            });
            em.emit_rows({"alpha", "theta_fcc", "theta_hcp", "gap", "gap_error"}, rows);
        } else if (*b_cert) {
            const Certificate c = certify_increasing(p.alpha, p.t);
            if (p.format == "json") {
                json j = em.base();
                json steps = json::array();
                for (const auto& s : c.steps) steps.push_back({{"y", s.y}, {"a", s.a}, {"b", s.b}});
                j.update({{"alpha", c.alpha}, {"t", c.t}, {"k_alpha", c.k_alpha}, {"steps", steps},
                          {"final_y", c.final_y}, {"verdict", to_string(c.verdict)}, {"reason", c.reason}});
                em.emit_json(j);
            } else if (p.format == "csv") {
                em.header();
                out << "step,y,a,b\n";
                for (std::size_t i = 0; i < c.steps.size(); ++i)
                    out << i << "," << std::setprecision(12) << c.steps[i].y << "," << c.steps[i].a << ","
                        << c.steps[i].b << "\n";
                out << "# final_y=" << c.final_y << ", k_alpha=" << c.k_alpha << ", verdict=" << to_string(c.verdict) << "\n";
            } else {
                em.header();
                out << std::fixed << std::setprecision(4);
                out << std::setw(6) << "step" << std::setw(10) << "y" << std::setw(10) << "a" << std::setw(10) << "b" << "\n";
                for (std::size_t i = 0; i < c.steps.size(); ++i)
                    out << std::setw(6) << i << std::setw(10) << c.steps[i].y << std::setw(10) << c.steps[i].a
                        << std::setw(10) << c.steps[i].b << "\n";
                out << "final y " << c.final_y << ", K_alpha " << c.k_alpha << "\n";
                out << (c.verdict == Verdict::CertifiedIncreasing ? "certified" : "inconclusive: " + c.reason) << "\n";
                out << std::defaultfloat;
            }
            if (c.verdict != Verdict::CertifiedIncreasing) throw Inconclusive{};
        } else if (*b_t0) {
            if (!p.range.empty()) {
                const auto [a, b] = parse_range(p.range);
                const auto rows = parallel_rows(linspace(a, b, p.points), p.jobs, [&](double al) {
                    return std::vector<double>{al, t0(al)};
                });
                em.emit_rows({"alpha", "t0"}, rows);
            } else {
                em.emit_rows({"alpha", "t0"}, {{p.alpha, t0(p.alpha)}});
            }
        } else if (*b_a1) {
            const double a1 = alpha1();
            if (p.format == "json") {
                json j = em.base();
                j.update({{"alpha1", a1}, {"inverse", 1.0 / a1}});
                em.emit_json(j);
            } else {
                em.emit_rows({"alpha1", "inverse"}, {{a1, 1.0 / a1}});
            }
        } else if (*b_scan) {
            const auto [a, b] = parse_range(p.range);
            const auto res = diagonal_flow_scan(parse_reals(p.c_list, "--c"), p.alpha, flow_family(p.family), linspace(a, b, p.points));
            std::vector<std::vector<double>> rows;
            for (const auto& [t, v] : res) rows.push_back({t, v});
            em.emit_rows({"t", "value"}, rows);
        } else if (*b_et) {
            std::vector<double> ys{p.y};
            if (!p.range.empty()) {
                const auto [a, b] = parse_range(p.range);
                ys = linspace(a, b, p.points);
            }
            const auto rows = parallel_rows(ys, p.jobs, [&](double y) {
                const auto e = e_tilde_all({y, p.t, p.alpha});
                return std::vector<double>{y, e[0].value, e[1].value, e[2].value, e[0].abs_error, e[1].abs_error, e[2].abs_error};
            });
            em.emit_rows({"y", "e", "e1", "e2", "e_err", "e1_err", "e2_err"}, rows);
        } else if (*b_g) {
            const GArgmin g = g_alpha_argmin(p.alpha);
            em.emit_rows({"alpha", "argmin", "g2_at_one"}, {{p.alpha, g.argmin, g.g2_at_one}});
        } else if (*cls) {
            const BravaisLattice L = parse_lattice_spec(p.lattice);
            const ClassificationResult c = classify_asymptotic_2d(L);
            json j = em.base();
            json cs = json::array();
            for (const Vector& v : c.C) cs.push_back(vec_json(v));
            j.update({{"case", to_string(c.case_label)}, {"C", cs}, {"deciding_shell", c.deciding_shell},
                      {"c1_size", c.c1_size}, {"c2_size", c.c2_size}, {"canonical_x", c.canonical_x},
                      {"subcase", c.subcase}});
            if (p.max_layers > 0) {
                const DecidingLayerResult d = deciding_layer_2d(L, p.max_layers, p.grid);
                json ref = json::array();
                for (const Vector& v : d.refined) ref.push_back(vec_json(v));
                j["deciding_layer"] = {{"layer_index", d.layer_index}, {"layers_scanned", d.survivor_sets.size()},
                                       {"refined_survivors", ref}};
            }
            if (p.format == "json") {
                em.emit_json(j);
            } else {
                em.header();
                out << "case " << to_string(c.case_label) << "\n";
                for (const Vector& v : c.C) out << "C " << std::setprecision(12) << v[0] << " " << v[1] << "\n";
                out << "deciding_shell " << c.deciding_shell << "\n";
                if (!c.subcase.empty()) out << "subcase " << c.subcase << "\n";
            }
        } else if (*am) {
            const BravaisLattice L = parse_lattice_spec(p.lattice);
            const MinimizerReport r = argmin_shift_grid(L, p.alpha, p.grid, p.rounds);
            json j = em.base();
            json ms = json::array();
            for (const Vector& v : r.minimizers) ms.push_back(vec_json(v));
            j.update({{"minimizers", ms}, {"value", r.value}, {"alpha", r.alpha}, {"resolution", r.resolution},
                      {"precision_digits", r.precision_digits}});
            em.emit_json(j);
        } else if (*sw) {
            const BravaisLattice L = parse_lattice_spec(p.lattice);
            const auto [a, b] = parse_range(p.range);
            Vector u = Vector::Zero(L.dim());
            if (!p.shift.empty()) {
                u = to_vector(parse_reals(p.shift, "--shift"));
                if (u.size() != L.dim()) throw std::invalid_argument("--shift has the wrong dimension");
            }
            if (p.random > 0) {
                std::mt19937_64 rng(static_cast<std::uint64_t>(p.seed));
                std::uniform_real_distribution<double> unif(0.0, 1.0);
                std::vector<std::vector<double>> rows;
                for (int i = 0; i < p.random; ++i) {
                    Vector c(L.dim());
                    for (int k = 0; k < L.dim(); ++k) c[k] = unif(rng);
                    std::vector<double> row(c.data(), c.data() + c.size());
                    row.push_back(rho(L, L.to_cartesian(c), a, p.rtol));
                    rows.push_back(std::move(row));
                }
                std::vector<std::string> cols;
                for (int k = 0; k < L.dim(); ++k) cols.push_back("c" + std::to_string(k + 1));
                cols.push_back("rho");
                em.emit_rows(cols, rows);
            } else {
                const auto rows = parallel_rows(linspace(a, b, p.points), p.jobs, [&](double al) {
                    const ThetaResult r = p.delta != 0.0 ? ho_mueller_energy(L, u, p.delta, al, p.rtol) : theta(L, u, al, p.rtol);
                    return std::vector<double>{al, r.value, r.abs_error};
                });
                em.emit_rows({"alpha", "value", "abs_error"}, rows);
            }
        }
    } catch (const Inconclusive&) {
        return kExitInconclusive;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kExitParameter;
    } catch (const std::domain_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitParameter;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitOk;
}

}  // namespace thetalat
