#pragma once
// File formats: the JSON state file (with an optional relaxation sidecar)
// and the plain text tables for harmonic functions and mod-k sequences.
// The grammar is documented in docs/formats.md.

#include "sandpile/bigint.hpp"
#include "sandpile/carrier.hpp"
#include "sandpile/grid.hpp"
#include "sandpile/harmonic.hpp"
#include "sandpile/lattice.hpp"
#include "sandpile/relax.hpp"

#include <json.hpp>

#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace sandpile {

class FormatError : public Error {
public:
    using Error::Error;
};

using Json = nlohmann::ordered_json;

inline constexpr int kStateFormatVersion = 1;

struct RelaxSidecar {
    BigInt topple_events = 0;
    std::int64_t sweeps = 0;
    Rect peak_window;
};

struct StateFile {
    SandState state;
    std::optional<bool> stable_at_infinity;
    std::optional<RelaxSidecar> relax;
};

namespace detail {

inline Json rect_json(const Rect& r) { return Json::array({r.x0, r.y0, r.x1, r.y1}); }

inline Json coords_json(const std::vector<Coord>& cs) {
    Json a = Json::array();
    for (const Coord c : cs) a.push_back(Json::array({c.x, c.y}));
    return a;
}

template <class J>
std::int64_t int_field(const J& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_number_integer())
        throw FormatError(std::string("missing or non-integer field '") + key + "'");
    return j.at(key).template get<std::int64_t>();
}

template <class J>
Rect rect_of(const J& j, const char* what) {
    if (!j.is_array() || j.size() != 4) throw FormatError(std::string(what) + " must be [x0, y0, x1, y1]");
    for (const auto& v : j)
        if (!v.is_number_integer()) throw FormatError(std::string(what) + " entries must be integers");
    return {j[0].template get<std::int64_t>(), j[1].template get<std::int64_t>(), j[2].template get<std::int64_t>(),
            j[3].template get<std::int64_t>()};
}

template <class J>
std::vector<Coord> coords_of(const J& j, const char* what) {
    if (!j.is_array()) throw FormatError(std::string(what) + " must be a list of [x, y]");
    std::vector<Coord> out;
    for (const auto& c : j) {
        if (!c.is_array() || c.size() != 2 || !c[0].is_number_integer() || !c[1].is_number_integer())
            throw FormatError(std::string(what) + " entries must be [x, y]");
        out.push_back({c[0].template get<std::int64_t>(), c[1].template get<std::int64_t>()});
    }
    return out;
}

template <class J>
BigInt bigint_of(const J& v, const char* what) {
    if (v.is_string()) {
        try {
            return parse_bigint(v.template get<std::string>());
        } catch (const std::exception& e) {
            throw FormatError(std::string(what) + ": " + e.what());
        }
    }
    if (v.is_number_integer()) return BigInt(v.template get<std::int64_t>());
    throw FormatError(std::string(what) + " must be a decimal string");
}

}  // namespace detail

inline Json sink_spec_to_json(const SinkSpec& spec) {
    return std::visit(
        [](const auto& s) -> Json {
            using S = std::decay_t<decltype(s)>;
            Json j;
            if constexpr (std::is_same_v<S, sinks::PeriodicLattice>) {
                j["type"] = "periodic_lattice";
                j["m"] = s.m;
                j["n"] = s.n;
            } else if constexpr (std::is_same_v<S, sinks::RayComplement>) {
                j["type"] = "ray_complement";
            } else if constexpr (std::is_same_v<S, sinks::TruncatedRay>) {
                j["type"] = "truncated_ray";
                j["length"] = s.length;
            } else if constexpr (std::is_same_v<S, sinks::FullLineComplement>) {
                j["type"] = "full_line_complement";
            } else if constexpr (std::is_same_v<S, sinks::LineWithIntervals>) {
                j["type"] = "line_with_intervals";
                j["intervals"] = Json::array();
                for (const auto& iv : s.intervals) j["intervals"].push_back(Json::array({iv.column, iv.height}));
                j["x_limit"] = s.x_limit ? Json(*s.x_limit) : Json(nullptr);
            } else if constexpr (std::is_same_v<S, sinks::TorusQuotient>) {
                j["type"] = "torus_quotient";
                j["m"] = s.m;
                j["n"] = s.n;
                j["sinks"] = detail::coords_json(s.sinks);
            } else {
                j["type"] = "explicit";
                j["window"] = detail::rect_json(s.window);
                j["cells"] = detail::coords_json(s.cells);
            }
            return j;
        },
        spec);
}

template <class J>
SinkSpec sink_spec_from_json(const J& j) {
    if (!j.is_object() || !j.contains("type") || !j.at("type").is_string())
        throw FormatError("sink_spec must be an object with a string 'type'");
    const auto type = j.at("type").template get<std::string>();
    SinkSpec spec;
    if (type == "periodic_lattice") {
        spec = sinks::PeriodicLattice{detail::int_field(j, "m"), detail::int_field(j, "n")};
    } else if (type == "ray_complement") {
        spec = sinks::RayComplement{};
    } else if (type == "truncated_ray") {
        spec = sinks::TruncatedRay{detail::int_field(j, "length")};
    } else if (type == "full_line_complement") {
        spec = sinks::FullLineComplement{};
    } else if (type == "line_with_intervals") {
        sinks::LineWithIntervals l;
        for (const Coord c : detail::coords_of(j.value("intervals", J::array()), "intervals"))
            l.intervals.push_back({c.x, c.y});
        if (j.contains("x_limit") && !j.at("x_limit").is_null()) l.x_limit = detail::int_field(j, "x_limit");
        spec = l;
    } else if (type == "torus_quotient") {
        spec = make_torus_quotient(detail::int_field(j, "m"), detail::int_field(j, "n"),
                                   detail::coords_of(j.value("sinks", J::array()), "sinks"));
    } else if (type == "explicit") {
        if (!j.contains("window")) throw FormatError("explicit sink spec needs 'window'");
        spec = make_explicit(detail::rect_of(j.at("window"), "window"),
                             detail::coords_of(j.value("cells", J::array()), "cells"));
    } else {
        throw FormatError("unknown sink_spec type '" + type + "'");
    }
    try {
        validate(spec);
    } catch (const std::invalid_argument& e) {
        throw FormatError(e.what());
    }
    return spec;
}

/// Rows of decimal strings, y ascending, x ascending within a row.
inline Json grid_rows(const Grid<BigInt>& g) {
    const Rect& w = g.window();
    Json rows = Json::array();
    for (std::int64_t y = w.y0; y <= w.y1; ++y) {
        Json row = Json::array();
        for (std::int64_t x = w.x0; x <= w.x1; ++x) row.push_back(to_decimal(g[{x, y}]));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Json state_to_json(const SandState& st, std::optional<bool> stable_at_infinity = std::nullopt,
                          const std::optional<RelaxSidecar>& relax = std::nullopt) {
    Json j;
    j["format_version"] = kStateFormatVersion;
    j["sink_spec"] = sink_spec_to_json(st.sinks());
    j["window"] = detail::rect_json(st.window());
    j["background"] = st.background();
    if (stable_at_infinity) j["stable_at_infinity"] = *stable_at_infinity;
    j["cells"] = grid_rows(st.cells());
    if (relax) {
        j["relax"]["topple_events"] = to_decimal(relax->topple_events);
        j["relax"]["sweeps"] = std::to_string(relax->sweeps);
        j["relax"]["peak_window"] = detail::rect_json(relax->peak_window);
    }
    return j;
}

inline Json report_to_json(const RelaxReport& r) {
    Json j = state_to_json(r.stable, r.stable.background() <= 3,
                           RelaxSidecar{r.topple_events, r.sweeps, r.peak_window});
    j["relax"]["odometer_window"] = detail::rect_json(r.odometer.window());
    j["relax"]["odometer"] = grid_rows(r.odometer);
    return j;
}

inline StateFile state_from_json(const Json& j) {
    if (!j.is_object()) throw FormatError("state file must be a JSON object");
    if (detail::int_field(j, "format_version") != kStateFormatVersion)
        throw FormatError("unsupported format_version");
    if (!j.contains("sink_spec")) throw FormatError("missing 'sink_spec'");
    if (!j.contains("window")) throw FormatError("missing 'window'");
    if (!j.contains("cells") || !j.at("cells").is_array()) throw FormatError("missing 'cells' rows");
    const SinkSpec spec = sink_spec_from_json(j.at("sink_spec"));
    const Rect w = detail::rect_of(j.at("window"), "window");
    if (w.empty()) throw FormatError("window is empty");
    const std::int64_t bg = detail::int_field(j, "background");
    if (bg < 0) throw FormatError("background must be non-negative");
    StateFile out;
    if (j.contains("stable_at_infinity")) {
        if (!j.at("stable_at_infinity").is_boolean()) throw FormatError("stable_at_infinity must be a boolean");
        out.stable_at_infinity = j.at("stable_at_infinity").get<bool>();
        if (*out.stable_at_infinity && bg > 3) throw FormatError("background exceeds 3 on a state declared stable");
    }
    const auto& rows = j.at("cells");
    if (static_cast<std::int64_t>(rows.size()) != w.height())
        throw FormatError("cells has " + std::to_string(rows.size()) + " rows, window has " +
                          std::to_string(w.height()));
    out.state = SandState(spec, w, bg);
    for (std::int64_t r = 0; r < w.height(); ++r) {
        const auto& row = rows[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<std::int64_t>(row.size()) != w.width())
            throw FormatError("row " + std::to_string(r) + " does not have " + std::to_string(w.width()) + " cells");
        for (std::int64_t c = 0; c < w.width(); ++c) {
            const Coord z{w.x0 + c, w.y0 + r};
            const BigInt v = detail::bigint_of(row[static_cast<std::size_t>(c)], "cell value");
            if (v < 0) throw FormatError("negative value at (" + std::to_string(z.x) + ", " + std::to_string(z.y) + ")");
            if (v != 0 && is_sink(spec, z))
                throw FormatError("grains on sink cell (" + std::to_string(z.x) + ", " + std::to_string(z.y) + ")");
            out.state.set(z, v);
        }
    }
    if (j.contains("relax")) {
        const auto& r = j.at("relax");
        RelaxSidecar s;
        s.topple_events = detail::bigint_of(r.at("topple_events"), "topple_events");
        s.sweeps = narrow<std::int64_t>(detail::bigint_of(r.at("sweeps"), "sweeps"));
        if (r.contains("peak_window")) s.peak_window = detail::rect_of(r.at("peak_window"), "peak_window");
        out.relax = s;
    }
    return out;
}

inline StateFile read_state_file(std::istream& in) {
    Json j;
    try {
        j = Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed state file: ") + e.what());
    }
    try {
        return state_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed state file: ") + e.what());
    }
}

inline StateFile read_state_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path);
    return read_state_file(in);
}

inline SandState read_state(const std::string& path) { return read_state_file(path).state; }

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << text;
    if (!out) throw Error("write failed: " + path);
}

inline void write_state(const SandState& st, const std::string& path,
                        std::optional<bool> stable_at_infinity = std::nullopt) {
    write_text(path, state_to_json(st, stable_at_infinity).dump(1) + "\n");
}

// ---- text tables ----

/// "modulus k" header, then "n value" rows from n = first.
inline std::string sequence_table(const ModKSequence& s, std::int64_t first = 0) {
    std::ostringstream o;
    o << "modulus " << s.modulus << "\n";
    for (std::size_t i = static_cast<std::size_t>(first); i < s.values.size(); ++i)
        o << i << " " << s.values[i] << "\n";
    return o.str();
}

inline ModKSequence read_sequence_table(std::istream& in) {
    std::string word;
    ModKSequence s;
    if (!(in >> word >> s.modulus) || word != "modulus" || s.modulus < 2)
        throw FormatError("sequence table must start with 'modulus k'");
    std::int64_t n = 0, v = 0;
    while (in >> n >> v) {
        if (n < 0 || v < 0 || v >= s.modulus) throw FormatError("sequence entry out of range");
        if (static_cast<std::size_t>(n) >= s.values.size()) s.values.resize(static_cast<std::size_t>(n) + 1, 0);
        s.values[static_cast<std::size_t>(n)] = v;
    }
    if (!in.eof()) throw FormatError("malformed sequence row");
    return s;
}

/// Header "modulus k" and "torus m n" or "window x0 y0 x1 y1", then one row
/// per y (ascending) with values for x ascending; sinks print as '.'.
inline std::string harmonic_table(const HarmonicModK& h) {
    std::ostringstream o;
    const Rect& r = h.carrier.rect();
    o << "modulus " << h.modulus << "\n";
    if (h.carrier.kind() == FiniteSandpile::Kind::Torus)
        o << "torus " << r.width() << " " << r.height() << "\n";
    else
        o << "window " << r.x0 << " " << r.y0 << " " << r.x1 << " " << r.y1 << "\n";
    for (std::int64_t y = r.y0; y <= r.y1; ++y) {
        for (std::int64_t x = r.x0; x <= r.x1; ++x) {
            if (x > r.x0) o << ' ';
            if (const auto i = h.carrier.index_of({x, y}))
                o << h.values[*i];
            else
                o << '.';
        }
        o << "\n";
    }
    return o.str();
}

/// Parsed table. Torus tables rebuild the carrier from the '.' cells;
/// window tables need the sink spec, which the table does not carry.
struct HarmonicTable {
    std::int64_t modulus = 2;
    bool torus = false;
    Rect rect;
    std::vector<std::vector<std::optional<std::int64_t>>> rows;

    [[nodiscard]] HarmonicModK to_harmonic(const std::optional<SinkSpec>& spec = std::nullopt) const {
        std::vector<Coord> dots;
        for (std::int64_t y = rect.y0; y <= rect.y1; ++y)
            for (std::int64_t x = rect.x0; x <= rect.x1; ++x)
                if (!rows[static_cast<std::size_t>(y - rect.y0)][static_cast<std::size_t>(x - rect.x0)])
                    dots.push_back({x, y});
        FiniteSandpile g;
        if (torus) {
            g = FiniteSandpile::torus(rect.width(), rect.height(), dots);
        } else {
            if (!spec) throw FormatError("window tables need a sink spec");
            g = FiniteSandpile::window(*spec, rect);
        }
        HarmonicModK h{g, modulus, std::vector<std::int64_t>(g.size(), 0)};
        for (std::size_t i = 0; i < g.size(); ++i) {
            const Coord z = g.cells()[i];
            const auto v = rows[static_cast<std::size_t>(z.y - rect.y0)][static_cast<std::size_t>(z.x - rect.x0)];
            if (!v) throw FormatError("table marks a carrier vertex as sink");
            h.values[i] = *v;
        }
        if (!torus)
            for (const Coord z : dots)
                if (g.index_of(z)) throw FormatError("table marks a carrier vertex as sink");
        return h;
    }
};

inline HarmonicTable read_harmonic_table(std::istream& in) {
    HarmonicTable t;
    std::string word, kind;
    if (!(in >> word >> t.modulus) || word != "modulus" || t.modulus < 2)
        throw FormatError("harmonic table must start with 'modulus k'");
    if (!(in >> kind)) throw FormatError("missing carrier line");
    if (kind == "torus") {
        std::int64_t m = 0, n = 0;
        if (!(in >> m >> n) || m < 2 || n < 2) throw FormatError("bad torus line");
        t.torus = true;
        t.rect = {0, 0, m - 1, n - 1};
    } else if (kind == "window") {
        if (!(in >> t.rect.x0 >> t.rect.y0 >> t.rect.x1 >> t.rect.y1) || t.rect.empty())
            throw FormatError("bad window line");
    } else {
        throw FormatError("carrier line must be 'torus' or 'window'");
    }
    for (std::int64_t y = 0; y < t.rect.height(); ++y) {
        auto& row = t.rows.emplace_back();
        for (std::int64_t x = 0; x < t.rect.width(); ++x) {
            std::string tok;
            if (!(in >> tok)) throw FormatError("table has too few cells");
            if (tok == ".") {
                row.emplace_back();
                continue;
            }
            std::int64_t v = 0;
            try {
                std::size_t used = 0;
                v = std::stoll(tok, &used);
                if (used != tok.size()) throw FormatError("");
            } catch (const std::exception&) {
                throw FormatError("bad table cell '" + tok + "'");
            }
            if (v < 0 || v >= t.modulus) throw FormatError("table value outside [0, modulus)");
            row.emplace_back(v);
        }
    }
    std::string extra;
    if (in >> extra) throw FormatError("table has too many cells");
    return t;
}

}  // namespace sandpile
