// sandpile: command-line experiment runner. Reports go to stdout as JSON,
// artifacts to --out. Exit 2 on usage errors, 1 on engine errors.

#include "sandpile/carrier.hpp"
#include "sandpile/group.hpp"
#include "sandpile/harmonic.hpp"
#include "sandpile/pile.hpp"
#include "sandpile/poisson.hpp"
#include "sandpile/relax.hpp"
#include "sandpile/state_io.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace sandpile;

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::vector<std::int64_t> ints(const std::string& text, std::size_t count, const std::string& flag) {
    std::vector<std::int64_t> out;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stoll(part, &used));
            if (used != part.size()) throw UsageError("");
        } catch (const std::exception&) {
            throw UsageError(flag + ": '" + text + "' is not a list of integers");
        }
    }
    if (count && out.size() != count)
        throw UsageError(flag + " expects " + std::to_string(count) + " comma-separated integers");
    return out;
}

Coord coord(const std::string& text, const std::string& flag) {
    const auto v = ints(text, 2, flag);
    return {v[0], v[1]};
}

Rect rect(const std::string& text, const std::string& flag) {
    const auto v = ints(text, 4, flag);
    return {v[0], v[1], v[2], v[3]};
}

BigInt bigint_arg(const std::string& text, const std::string& flag) {
    try {
        return parse_bigint(text);
    } catch (const std::exception&) {
        throw UsageError(flag + ": '" + text + "' is not a decimal integer");
    }
}

void emit(const Json& j) { std::cout << j.dump(2) << "\n"; }

// Sink selection shared by several subcommands.
struct SinkArgs {
    std::string period, torus, torus_sinks, spec_json;
    std::int64_t ray = 0;

    void add(CLI::App* app) {
        app->add_option("--sink-period", period, "periodic sinks (m i, n j), as m,n");
        app->add_option("--ray", ray, "truncated ray of this length");
        app->add_option("--torus", torus, "torus quotient Z_m x Z_n, as m,n");
        app->add_option("--torus-sinks", torus_sinks, "torus sinks x,y;x,y;... (default 0,0)");
        app->add_option("--sink-spec-json", spec_json, "sink spec as JSON text or a file holding it");
    }

    [[nodiscard]] std::optional<SinkSpec> get() const {
        int given = (!period.empty()) + (ray != 0) + (!torus.empty()) + (!spec_json.empty());
        if (given > 1) throw UsageError("give only one of --sink-period, --ray, --torus, --sink-spec-json");
        if (!period.empty()) {
            const auto v = ints(period, 2, "--sink-period");
            return SinkSpec{sinks::PeriodicLattice{v[0], v[1]}};
        }
        if (ray != 0) return SinkSpec{sinks::TruncatedRay{ray}};
        if (!torus.empty()) {
            const auto v = ints(torus, 2, "--torus");
            std::vector<Coord> cs;
            if (torus_sinks.empty()) {
                cs.push_back({0, 0});
            } else {
                std::stringstream ss(torus_sinks);
                std::string part;
                while (std::getline(ss, part, ';')) cs.push_back(coord(part, "--torus-sinks"));
            }
            return SinkSpec{make_torus_quotient(v[0], v[1], cs)};
        }
        if (!spec_json.empty()) {
            std::string text = spec_json;
            if (fs::exists(spec_json)) {
                std::ifstream in(spec_json);
                text.assign(std::istreambuf_iterator<char>(in), {});
            }
            try {
                return sink_spec_from_json(Json::parse(text));
            } catch (const nlohmann::json::exception& e) {
                throw UsageError(std::string("--sink-spec-json: ") + e.what());
            }
        }
        return std::nullopt;
    }
};

// Values along the ray cells 1..L of a carrier configuration.
std::vector<std::int64_t> ray_values(const FiniteSandpile& g, const Config& x, std::int64_t L) {
    std::vector<std::int64_t> out;
    for (std::int64_t n = 1; n <= L; ++n) out.push_back(x[*g.index_of({n, 0})]);
    return out;
}

Json state_json(const FiniteSandpile& g, const Config& x) { return state_to_json(g.to_state(x), true); }

// Loads a state file and the carrier its group lives on.
struct LoadedElement {
    SandState state;
    FiniteSandpile carrier;
    Config config;
};

LoadedElement load_element(const std::string& path, const Rect* window = nullptr) {
    auto st = read_state(path);
    if (!st.is_stable()) throw Error(path + ": state is not stable");
    auto g = FiniteSandpile::for_spec(st.sinks(), window ? *window : st.window());
    Config x = g.read_config(st);
    return {std::move(st), std::move(g), std::move(x)};
}

void write_out(const std::string& out, const std::string& text, Json& report) {
    if (out.empty()) return;
    write_text(out, text);
    report["artifacts"].push_back(out);
}

std::string harmonic_block(const HarmonicModK& h) { return harmonic_table(h); }

int run(int argc, char** argv) {
    CLI::App app{"Abelian sandpiles on Z^2 with a sink net"};
    app.require_subcommand(1);

    // relax
    auto* relax = app.add_subcommand("relax", "relax a state (or N grains on one cell)");
    std::string r_state, r_grains, r_center = "0,0", r_out, r_strategy = "bulk", r_window;
    std::int64_t r_background = 0;
    SinkArgs r_sinks;
    relax->add_option("--state", r_state, "state file to relax");
    relax->add_option("--grains", r_grains, "grains to drop at --center");
    relax->add_option("--center", r_center, "cell receiving the grains, as x,y");
    relax->add_option("--window", r_window, "initial window x0,y0,x1,y1");
    relax->add_option("--background", r_background, "constant value outside the window");
    relax->add_option("--strategy", r_strategy, "bulk or naive")->check(CLI::IsMember({"bulk", "naive"}));
    relax->add_option("--out", r_out, "write the relaxed state (with odometer) here");
    r_sinks.add(relax);

    // bigpile
    auto* big = app.add_subcommand("bigpile", "relax N grains at one cell and measure the toppled disk");
    std::string b_grains, b_center = "3,3", b_out, b_format = "pgm", b_period = "6,6";
    double b_overlay = -1;
    int b_scale = 4;
    big->add_option("--grains", b_grains, "number of grains N")->required();
    big->add_option("--center", b_center, "cell receiving the grains, as x,y");
    big->add_option("--sink-period", b_period, "periodic sinks, as m,n");
    big->add_option("--out", b_out, "directory for state.json, report.json and the figure");
    big->add_option("--format", b_format, "figure format: ascii, pgm or svg");
    big->add_option("--overlay", b_overlay, "overlay circle radius (default: outer radius)");
    big->add_option("--scale", b_scale, "PGM pixels per cell");

    // identity
    auto* ident = app.add_subcommand("identity", "neutral element of the sandpile group");
    SinkArgs i_sinks;
    std::string i_window, i_out;
    std::int64_t i_margin = 20, i_length = 0;
    i_sinks.add(ident);
    ident->add_option("--length", i_length, "truncated ray length (same as --ray)");
    ident->add_option("--window", i_window, "window x0,y0,x1,y1 for infinite sink specs");
    ident->add_option("--margin", i_margin, "boundary margin excluded from plane certification");
    ident->add_option("--out", i_out, "write the state here");

    // add / inverse / order
    auto* add = app.add_subcommand("add", "group sum of two recurrent states");
    std::string a_a, a_b, a_out;
    add->add_option("--a", a_a, "first state file")->required();
    add->add_option("--b", a_b, "second state file")->required();
    add->add_option("--out", a_out, "write the sum here");

    auto* inv = app.add_subcommand("inverse", "group inverse of a recurrent state");
    std::string v_a, v_out;
    inv->add_option("--a", v_a, "state file")->required();
    inv->add_option("--out", v_out, "write the inverse here");

    auto* ord = app.add_subcommand("order", "order of a recurrent state");
    std::string o_a;
    std::int64_t o_max = 100000;
    bool o_tree = false;
    ord->add_option("--a", o_a, "state file")->required();
    ord->add_option("--max", o_max, "largest order tried by repeated addition");
    ord->add_flag("--tree-count", o_tree, "use the spanning tree count as a known multiple");

    // recurrent-check
    auto* rec = app.add_subcommand("recurrent-check", "is a stable state recurrent?");
    std::string c_state;
    std::int64_t c_margin = 20;
    rec->add_option("--state", c_state, "state file")->required();
    rec->add_option("--margin", c_margin, "boundary margin for plane windows");

    // ray-torsion
    auto* ray = app.add_subcommand("ray-torsion", "order-k element on the ray from a_n = c b_n / k");
    std::int64_t t_k = 2, t_c = 1, t_len = 200;
    std::string t_out, t_format = "json";
    ray->add_option("--modulus", t_k, "k >= 2")->required();
    ray->add_option("--numerator", t_c, "c_num in [1, k)");
    ray->add_option("--length", t_len, "minimal ray length (rounded up so that d(k) | L + 1)");
    ray->add_option("--format", t_format, "json or table")->check(CLI::IsMember({"json", "table"}));
    ray->add_option("--out", t_out, "write the state here");
    std::string t_seq;
    ray->add_option("--sequence", t_seq, "write c_num b_n mod k, n = 0..L+1, as a sequence table here");

    // dk-table
    auto* dk = app.add_subcommand("dk-table", "rank d(k) and pair period pi(k) of b_{n+1} = 4 b_n - b_{n-1}");
    std::int64_t d_min = 2, d_max = 50;
    std::string d_format = "json";
    dk->add_option("--min", d_min, "first k");
    dk->add_option("--max", d_max, "last k");
    dk->add_option("--format", d_format, "json or table")->check(CLI::IsMember({"json", "table"}));

    // kernel-modp
    auto* ker = app.add_subcommand("kernel-modp", "harmonic functions mod p on a finite carrier");
    SinkArgs k_sinks;
    std::int64_t k_p = 2;
    std::string k_periods, k_format = "json", k_out;
    ker->add_option("--modulus", k_p, "prime p")->required();
    k_sinks.add(ker);
    ker->add_option("--periods", k_periods, "torus periods P,Q for --sink-period");
    ker->add_option("--format", k_format, "json or table")->check(CLI::IsMember({"json", "table"}));
    ker->add_option("--out", k_out, "directory for one table per basis vector");

    // cylinder-harmonic
    auto* cyl = app.add_subcommand("cylinder-harmonic", "periodic harmonic function mod p by the column walk");
    std::string y_period = "2,2", y_format = "json";
    std::int64_t y_p = 2, y_cap = 1'000'000;
    cyl->add_option("--sink-period", y_period, "sinks (m i, 0) on the height-n cylinder, as m,n");
    cyl->add_option("--modulus", y_p, "prime p")->required();
    cyl->add_option("--cap", y_cap, "largest number of boundary vectors walked");
    cyl->add_option("--format", y_format, "json or table")->check(CLI::IsMember({"json", "table"}));

    // no-torsion-prefix
    auto* nt = app.add_subcommand("no-torsion-prefix", "ray with intervals free of p_1..p_J torsion");
    std::int64_t n_steps = 3, n_bound = 6;
    nt->add_option("--steps", n_steps, "J");
    nt->add_option("--bound", n_bound, "largest J accepted");

    // poisson
    auto* poi = app.add_subcommand("poisson", "bounded solution of Delta phi = psi");
    std::string p_period = "2,2", p_psi, p_window, p_points;
    double p_tol = std::ldexp(1.0, -40);
    std::int64_t p_margin = 16;
    bool p_plane = false;
    poi->add_option("--sink-period", p_period, "periodic sinks, as m,n");
    poi->add_option("--psi", p_psi, "psi values, rows separated by ';', entries by ','");
    poi->add_option("--window", p_window, "window x0,y0,x1,y1 for --psi (default: one period)");
    poi->add_option("--points", p_points, "psi as x,y,v;x,y,v;... (zero elsewhere)");
    poi->add_flag("--plane", p_plane, "psi is compact (zero off the window); default is periodic");
    poi->add_option("--tolerance", p_tol, "target accuracy, rounded down to a power of two");
    poi->add_option("--margin", p_margin, "initial padding for --plane");

    // render
    auto* ren = app.add_subcommand("render", "draw a stable state");
    std::string g_state, g_format = "ascii", g_out, g_region, g_overlay;
    int g_scale = 1;
    ren->add_option("--state", g_state, "state file")->required();
    ren->add_option("--format", g_format, "ascii, pgm or svg");
    ren->add_option("--out", g_out, "output file (default stdout)");
    ren->add_option("--region", g_region, "cells x0,y0,x1,y1 to draw");
    ren->add_option("--overlay", g_overlay, "circle cx,cy,r");
    ren->add_option("--scale", g_scale, "PGM pixels per cell");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    Json report;
    report["artifacts"] = Json::array();

    if (*relax) {
        SandState st;
        if (!r_state.empty()) {
            if (!r_grains.empty()) throw UsageError("give --state or --grains, not both");
            st = read_state(r_state);
        } else {
            if (r_grains.empty()) throw UsageError("relax needs --state or --grains");
            auto spec = r_sinks.get();
            if (!spec) throw UsageError("relax --grains needs a sink option");
            const Coord c = coord(r_center, "--center");
            const Rect w = r_window.empty() ? Rect::around(c, 8) : rect(r_window, "--window");
            st = SandState(*spec, w, r_background);
            if (!w.contains(c)) throw UsageError("--center lies outside --window");
            st.add(c, bigint_arg(r_grains, "--grains"));
        }
        const auto rep = r_strategy == "naive" ? relax_naive(st) : relax_bulk(st);
        const auto cert = check_relaxation_certificate(st, rep);
        report["topple_events"] = to_decimal(rep.topple_events);
        report["sweeps"] = std::to_string(rep.sweeps);
        const Rect w = rep.stable.window();
        report["window"] = Json::array({w.x0, w.y0, w.x1, w.y1});
        report["certificate"] = cert.ok;
        if (!cert.ok) report["certificate_failure"] = cert.reason;
        write_out(r_out, report_to_json(rep).dump(1) + "\n", report);
        emit(report);
        return cert.ok ? 0 : 1;
    }

    if (*big) {
        const auto pv = ints(b_period, 2, "--sink-period");
        const SinkSpec spec = sinks::PeriodicLattice{pv[0], pv[1]};
        const Coord c = coord(b_center, "--center");
        const auto fmt = parse_figure_format(b_format);
        auto run = run_bigpile(bigint_arg(b_grains, "--grains"), c, spec);
        auto& r = run.report;
        if (!b_out.empty()) {
            fs::create_directories(b_out);
            const auto state_path = (fs::path(b_out) / "state.json").string();
            write_text(state_path, report_to_json(run.relax).dump(1) + "\n");
            r.artifacts.push_back(state_path);
            FigureOptions fo;
            fo.overlay = Overlay{static_cast<double>(c.x), static_cast<double>(c.y),
                                 b_overlay >= 0 ? b_overlay : r.toppled.outer};
            fo.pgm_scale = b_scale;
            const auto fig_path = (fs::path(b_out) / ("figure." + b_format)).string();
            write_text(fig_path, render_figure(run.relax.stable, fmt, fo));
            r.artifacts.push_back(fig_path);
            const auto rep_path = (fs::path(b_out) / "report.json").string();
            r.artifacts.push_back(rep_path);
            write_text(rep_path, pile_report_json(r).dump(2) + "\n");
        }
        emit(pile_report_json(r));
        return 0;
    }

    if (*ident) {
        if (i_length != 0) {
            if (i_sinks.ray != 0 && i_sinks.ray != i_length) throw UsageError("--length and --ray disagree");
            i_sinks.ray = i_length;
        }
        auto spec = i_sinks.get();
        if (!spec) throw UsageError("identity needs a sink option");
        const Rect fallback = i_window.empty() ? default_probe_window(*spec) : rect(i_window, "--window");
        const auto g = FiniteSandpile::for_spec(*spec, fallback);
        const SandpileGroup G(g);
        const Config& e = G.neutral();
        report["exact"] = g.exact();
        if (!g.exact()) {
            report["margin"] = i_margin;
            const Rect c = g.rect().shrunk(i_margin);
            report["certified_window"] = Json::array({c.x0, c.y0, c.x1, c.y1});
        }
        if (const auto* tr = std::get_if<sinks::TruncatedRay>(&*spec)) report["values"] = ray_values(g, e, tr->length);
        report["state"] = state_json(g, e);
        write_out(i_out, state_json(g, e).dump(1) + "\n", report);
        emit(report);
        return 0;
    }

    if (*add) {
        const auto a = load_element(a_a);
        const auto b = load_element(a_b, &a.carrier.rect());
        if (!(a.state.sinks() == b.state.sinks())) throw Error("states have different sink specs");
        const SandpileGroup G(a.carrier);
        if (!G.is_recurrent(a.config) || !G.is_recurrent(b.config)) report["warning"] = "input not recurrent";
        const Config s = G.add(a.config, b.config);
        report["state"] = state_json(a.carrier, s);
        write_out(a_out, state_json(a.carrier, s).dump(1) + "\n", report);
        emit(report);
        return 0;
    }

    if (*inv) {
        const auto a = load_element(v_a);
        const SandpileGroup G(a.carrier);
        const Config s = G.inverse(a.config);
        report["state"] = state_json(a.carrier, s);
        write_out(v_out, state_json(a.carrier, s).dump(1) + "\n", report);
        emit(report);
        return 0;
    }

    if (*ord) {
        const auto a = load_element(o_a);
        const SandpileGroup G(a.carrier);
        if (!G.is_recurrent(a.config)) throw Error("state is not recurrent on its carrier");
        if (o_tree) {
            const BigInt n = G.spanning_tree_count();
            report["tree_count"] = to_decimal(n);
            report["order"] = to_decimal(G.order_dividing(a.config, n));
        } else {
            const auto k = G.order(a.config, o_max);
            report["order"] = k ? Json(*k) : Json(nullptr);
            if (!k) report["searched_up_to"] = o_max;
        }
        report["exact"] = a.carrier.exact();
        emit(report);
        return 0;
    }

    if (*rec) {
        const auto st = read_state(c_state);
        const auto v = is_recurrent(st, c_margin);
        report["stable"] = st.is_stable();
        report["recurrent"] = v.recurrent;
        report["exact"] = v.exact;
        if (!v.exact) report["margin"] = v.margin;
        if (st.is_stable()) {
            report["certified_window"] = Json::array({v.certified.x0, v.certified.y0, v.certified.x1, v.certified.y1});
            const auto g = FiniteSandpile::for_spec(st.sinks(), st.window());
            if (g.exact()) report["burning_test"] = SandpileGroup(g).burning_test(g.read_config(st));
        }
        emit(report);
        return 0;
    }

    if (*ray) {
        const auto r = ray_state_from_torsion(t_k, t_c, t_len);
        const SandpileGroup G(r.carrier);
        const auto vals = ray_values(r.carrier, r.state, r.length);
        if (t_format == "table") {
            std::cout << "# n grains (order-" << t_k << " element, numerator " << t_c << ")\n";
            for (std::size_t i = 0; i < vals.size(); ++i) std::cout << i + 1 << " " << vals[i] << "\n";
        } else {
            report["modulus"] = t_k;
            report["numerator"] = t_c;
            report["length"] = r.length;
            report["order"] = G.order(r.state, t_k) ? Json(*G.order(r.state, t_k)) : Json(nullptr);
            report["values"] = vals;
            report["a_numerators"] = r.a.numerators;
            report["phi"] = r.phi;
        }
        write_out(t_out, state_json(r.carrier, r.state).dump(1) + "\n", report);
        write_out(t_seq, sequence_table(ray_mod_k(t_k, t_c, r.length + 2)), report);
        if (t_format == "json") emit(report);
        return 0;
    }

    if (*dk) {
        if (d_min < 2 || d_max < d_min) throw UsageError("need 2 <= --min <= --max");
        if (d_format == "table") std::cout << "# k d pi\n";
        Json rows = Json::array();
        for (std::int64_t k = d_min; k <= d_max; ++k) {
            const auto rp = rank_and_period(k);
            if (d_format == "table")
                std::cout << k << " " << rp.d << " " << rp.pi << "\n";
            else
                rows.push_back({{"k", k}, {"d", rp.d}, {"pi", rp.pi}});
        }
        if (d_format == "json") emit(Json{{"rows", rows}});
        return 0;
    }

    if (*ker) {
        auto spec = k_sinks.get();
        if (!spec) throw UsageError("kernel-modp needs a sink option");
        FiniteSandpile g;
        if (const auto* pl = std::get_if<sinks::PeriodicLattice>(&*spec)) {
            const auto pq = k_periods.empty() ? std::vector<std::int64_t>{pl->m, pl->n} : ints(k_periods, 2, "--periods");
            g = periodic_quotient(pl->m, pl->n, pq[0], pq[1]);
        } else {
            if (!k_periods.empty()) throw UsageError("--periods needs --sink-period");
            if (!std::holds_alternative<sinks::TorusQuotient>(*spec) && !nonsink_bounds(*spec))
                throw UsageError("kernel-modp needs a torus or a finite carrier");
            g = FiniteSandpile::for_spec(*spec, Rect{});
        }
        const auto basis = laplacian_kernel_mod_p(g, k_p);
        report["modulus"] = k_p;
        report["vertices"] = g.size();
        report["dimension"] = basis.size();
        if (k_format == "table") {
            std::cout << "# kernel dimension " << basis.size() << "\n";
            for (const auto& h : basis) std::cout << harmonic_block(h) << "\n";
        } else {
            report["basis"] = Json::array();
            for (const auto& h : basis) report["basis"].push_back(harmonic_block(h));
        }
        if (!k_out.empty()) {
            fs::create_directories(k_out);
            for (std::size_t i = 0; i < basis.size(); ++i)
                write_out((fs::path(k_out) / ("kernel_" + std::to_string(i) + ".txt")).string(),
                          harmonic_block(basis[i]), report);
        }
        if (k_format == "json") emit(report);
        return 0;
    }

    if (*cyl) {
        const auto mn = ints(y_period, 2, "--sink-period");
        const auto c = cylinder_transfer_harmonic(mn[0], mn[1], y_p, y_cap);
        if (y_format == "table") {
            if (!c) throw Error("no nonzero periodic harmonic function found within the cap");
            std::cout << harmonic_block(c->harmonic);
            return 0;
        }
        report["modulus"] = y_p;
        report["found"] = c.has_value();
        if (c) {
            report["depth"] = c->depth;
            report["preperiod"] = c->preperiod;
            report["period_blocks"] = c->period_blocks;
            report["torus"] = Json::array({c->harmonic.carrier.rect().width(), c->harmonic.carrier.rect().height()});
            report["table"] = harmonic_block(c->harmonic);
        }
        emit(report);
        return c ? 0 : 1;
    }

    if (*nt) {
        const auto r = no_torsion_prefix(n_steps, n_bound);
        report["ok"] = r.ok;
        if (!r.ok) report["failure"] = r.failure;
        report["steps"] = Json::array();
        for (const auto& s : r.steps)
            report["steps"].push_back({{"prime", s.prime},
                                       {"column", s.column},
                                       {"height", s.height},
                                       {"sign", s.sign == 0 ? "" : (s.sign > 0 ? "+" : "-")},
                                       {"kernel_dims", s.kernel_dims}});
        report["sink_spec"] = sink_spec_to_json(r.spec);
        emit(report);
        return r.ok ? 0 : 1;
    }

    if (*poi) {
        const auto mn = ints(p_period, 2, "--sink-period");
        const SinkSpec spec = sinks::PeriodicLattice{mn[0], mn[1]};
        if (!(p_tol > 0)) throw UsageError("--tolerance must be positive");
        PoissonOptions opt;
        opt.scale_bits = static_cast<int>(std::ceil(-std::log2(p_tol)));
        opt.scale_bits = std::clamp(opt.scale_bits, 1, 60);
        opt.margin = p_margin;
        const Rect w = p_window.empty() ? Rect{0, 0, mn[0] - 1, mn[1] - 1} : rect(p_window, "--window");
        std::vector<BigInt> psi(static_cast<std::size_t>(w.area()), 0);
        if (!p_psi.empty()) {
            std::stringstream rows(p_psi);
            std::string row;
            std::int64_t y = w.y0;
            while (std::getline(rows, row, ';')) {
                const auto v = ints(row, static_cast<std::size_t>(w.width()), "--psi");
                if (y > w.y1) throw UsageError("--psi has more rows than the window");
                for (std::int64_t x = 0; x < w.width(); ++x)
                    psi[static_cast<std::size_t>((y - w.y0) * w.width() + x)] = v[static_cast<std::size_t>(x)];
                ++y;
            }
            if (y != w.y1 + 1) throw UsageError("--psi has fewer rows than the window");
        }
        if (!p_points.empty()) {
            std::stringstream pts(p_points);
            std::string p;
            while (std::getline(pts, p, ';')) {
                const auto v = ints(p, 3, "--points");
                if (!w.contains(Coord{v[0], v[1]})) throw UsageError("--points entry outside the window");
                psi[static_cast<std::size_t>((v[1] - w.y0) * w.width() + (v[0] - w.x0))] += v[2];
            }
        }
        for (std::int64_t i = 0; i < w.area(); ++i)
            if (psi[static_cast<std::size_t>(i)] != 0 && is_sink(spec, {w.x0 + i % w.width(), w.y0 + i / w.width()}))
                throw UsageError("psi must vanish on sinks");
        PoissonResult res;
        if (p_plane) {
            res = poisson_solve_plane(spec, w, psi, opt);
        } else {
            if (w.width() != mn[0] || w.height() != mn[1]) throw UsageError("periodic psi must cover one period");
            const TorusSandpile t(sinks::PeriodicLattice{mn[0], mn[1]});
            std::vector<BigInt> local(t.size());
            for (std::size_t i = 0; i < t.size(); ++i) {
                const Coord z = t.cells()[i];
                const Coord rep{w.x0 + floor_mod(z.x - w.x0, mn[0]), w.y0 + floor_mod(z.y - w.y0, mn[1])};
                local[i] = psi[static_cast<std::size_t>((rep.y - w.y0) * w.width() + (rep.x - w.x0))];
            }
            res = poisson_solve(t, local, opt);
        }
        report["periodic"] = !p_plane;
        report["scale_bits"] = res.scale_bits;
        report["sweeps"] = res.sweeps;
        report["monotone"] = res.monotone;
        report["bounded"] = res.bounded;
        report["max_residual"] = res.max_residual;
        report["C"] = res.C;
        report["L"] = to_decimal(res.L);
        const Rect cr = res.carrier.rect();
        report["carrier_window"] = Json::array({cr.x0, cr.y0, cr.x1, cr.y1});
        Json cells = Json::array();
        for (std::size_t i = 0; i < res.carrier.size(); ++i) {
            const Coord z = res.carrier.cells()[i];
            if (!p_plane || w.contains(z))
                cells.push_back({{"x", z.x}, {"y", z.y}, {"phi", res.phi[i]}, {"numerator", to_decimal(res.numerators[i])}});
        }
        report["phi"] = cells;
        emit(report);
        return 0;
    }

    if (*ren) {
        const auto st = read_state(g_state);
        const auto fmt = parse_figure_format(g_format);
        FigureOptions fo;
        if (!g_region.empty()) fo.region = rect(g_region, "--region");
        if (!g_overlay.empty()) {
            std::stringstream ss(g_overlay);
            std::vector<double> v;
            std::string part;
            while (std::getline(ss, part, ',')) {
                try {
                    v.push_back(std::stod(part));
                } catch (const std::exception&) {
                    throw UsageError("--overlay expects cx,cy,r");
                }
            }
            if (v.size() != 3) throw UsageError("--overlay expects cx,cy,r");
            fo.overlay = Overlay{v[0], v[1], v[2]};
        }
        fo.pgm_scale = g_scale;
        const auto text = render_figure(st, fmt, fo);
        if (g_out.empty()) {
            std::cout << text;
        } else {
            write_out(g_out, text, report);
            emit(report);
        }
        return 0;
    }
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
