#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "coarse_trees/bass_serre.hpp"
#include "coarse_trees/errors.hpp"
#include "coarse_trees/graph.hpp"
#include "coarse_trees/invariants.hpp"
#include "coarse_trees/local_type.hpp"
#include "coarse_trees/oriented_tree.hpp"
#include "coarse_trees/qi_builder.hpp"

namespace coarse_trees {

using nlohmann::json;

/// Shortest-width deterministic float formatting for text artifacts.
inline std::string fmt_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline json parse_json_text(const std::string& text, const std::string& origin) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::BadInput, origin + ": " + e.what());
    }
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::BadInput, "cannot open \"" + path + "\"");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------
// Graph files: {"vertices": [labels], "edges": [{"u","v","iu","iv"}]}
// ---------------------------------------------------------------------------

inline GraphOfZs parse_graph_json(const json& j, const std::string& origin = "graph") {
    const auto fail = [&](const std::string& where, const std::string& what) -> Error {
        return Error(ErrorCode::BadInput, origin + ": " + where + ": " + what);
    };
    if (!j.is_object()) throw fail("$", "expected an object");
    if (!j.contains("vertices") || !j["vertices"].is_array()) {
        throw fail("$.vertices", "expected an array of labels");
    }
    RawGraph raw;
    for (std::size_t i = 0; i < j["vertices"].size(); ++i) {
        const auto& v = j["vertices"][i];
        if (v.is_string()) {
            raw.vertices.push_back(v.get<std::string>());
        } else if (v.is_number_integer()) {
            raw.vertices.push_back(std::to_string(v.get<std::int64_t>()));
        } else {
            throw fail("$.vertices[" + std::to_string(i) + "]", "labels are strings or integers");
        }
    }
    if (!j.contains("edges") || !j["edges"].is_array()) {
        throw fail("$.edges", "expected an array of edge records");
    }
    for (std::size_t i = 0; i < j["edges"].size(); ++i) {
        const auto& e = j["edges"][i];
        const std::string where = "$.edges[" + std::to_string(i) + "]";
        if (!e.is_object()) throw fail(where, "expected an object {u,v,iu,iv}");
        RawEdge edge;
        for (const char* key : {"u", "v", "iu", "iv"}) {
            if (!e.contains(key)) throw fail(where + "." + key, "missing field");
        }
        const auto label = [&](const json& x, const char* key) -> std::string {
            if (x.is_string()) return x.get<std::string>();
            if (x.is_number_integer()) return std::to_string(x.get<std::int64_t>());
            throw fail(where + "." + key, "expected a vertex label");
        };
        edge.u = label(e["u"], "u");
        edge.v = label(e["v"], "v");
        if (!e["iu"].is_number_integer()) throw fail(where + ".iu", "expected an integer");
        if (!e["iv"].is_number_integer()) throw fail(where + ".iv", "expected an integer");
        edge.iu = e["iu"].get<std::int64_t>();
        edge.iv = e["iv"].get<std::int64_t>();
        raw.edges.push_back(edge);
    }
    return validate_graph(raw);
}

inline GraphOfZs load_graph(const std::string& path) {
    return parse_graph_json(parse_json_text(read_file(path), path), path);
}

inline json graph_to_json(const GraphOfZs& g) {
    json j;
    j["vertices"] = g.labels;
    j["edges"] = json::array();
    for (const auto& e : g.edges) {
        j["edges"].push_back(
            {{"u", g.labels[e.u]}, {"v", g.labels[e.v]}, {"iu", e.iu}, {"iv", e.iv}});
    }
    return j;
}

// ---------------------------------------------------------------------------
// Height values and local types: exact prime-exponent coefficients.
// ---------------------------------------------------------------------------

inline json height_to_json(const HeightValue& h) {
    json coeffs = json::object();
    for (const auto& [p, e] : h.coeffs()) coeffs[std::to_string(p)] = e;
    return {{"coeffs", coeffs}, {"approx", h.approx()}};
}

inline HeightValue height_from_json(const json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("coeffs") || !j["coeffs"].is_object()) {
        throw Error(ErrorCode::BadInput, where + ": expected {\"coeffs\": {prime: exponent}}");
    }
    HeightValue::Coeffs coeffs;
    for (const auto& [key, value] : j["coeffs"].items()) {
        if (!value.is_number_integer()) {
            throw Error(ErrorCode::BadInput, where + ".coeffs." + key + ": expected an integer");
        }
        std::int64_t prime = 0;
        try {
            prime = std::stoll(key);
        } catch (...) {
            throw Error(ErrorCode::BadInput, where + ".coeffs: key \"" + key + "\" is not a prime");
        }
        // Key 1 is the unit orientation step; everything else must be prime.
        if (prime != 1) {
            const auto f = prime >= 2 ? factorize(prime) : HeightValue::Coeffs{};
            if (prime < 2 || f.size() != 1 || f[0].second != 1) {
                throw Error(ErrorCode::BadInput, where + ".coeffs: " + key + " is not prime");
            }
        }
        coeffs.emplace_back(prime, value.get<std::int32_t>());
    }
    return HeightValue::from_coeffs(std::move(coeffs));
}

inline json local_type_to_json(const LocalType& t) {
    json changes = json::array();
    for (const auto& [value, mult] : t.runs()) {
        json entry = height_to_json(value);
        entry["multiplicity"] = mult;
        changes.push_back(entry);
    }
    return {{"changes", changes}};
}

inline LocalType local_type_from_json(const json& j, const std::string& origin = "local type") {
    if (!j.is_object() || !j.contains("changes") || !j["changes"].is_array()) {
        throw Error(ErrorCode::BadInput, origin + ": expected {\"changes\": [...]}");
    }
    std::vector<std::pair<HeightValue, std::uint32_t>> pairs;
    for (std::size_t i = 0; i < j["changes"].size(); ++i) {
        const auto& e = j["changes"][i];
        const std::string where = origin + ".changes[" + std::to_string(i) + "]";
        const HeightValue h = height_from_json(e, where);
        std::uint32_t mult = 1;
        if (e.contains("multiplicity")) {
            if (!e["multiplicity"].is_number_integer() || e["multiplicity"].get<std::int64_t>() < 1) {
                throw Error(ErrorCode::BadInput, where + ".multiplicity: expected a positive integer");
            }
            mult = e["multiplicity"].get<std::uint32_t>();
        }
        pairs.emplace_back(h, mult);
    }
    return LocalType::from_pairs(pairs);
}

inline LocalType load_local_type(const std::string& path) {
    return local_type_from_json(parse_json_text(read_file(path), path), path);
}

// ---------------------------------------------------------------------------
// Ball exports.
// ---------------------------------------------------------------------------

inline std::string ball_to_dot(const TreeBall& ball) {
    std::ostringstream out;
    out << "graph ball {\n  node [shape=circle];\n";
    for (std::uint32_t v = 0; v < ball.size(); ++v) {
        out << "  v" << v << " [label=\"" << ball.graph().labels[ball.orbit(v)] << "\\nh="
            << fmt_double(ball.height(v)) << "\"];\n";
    }
    for (std::uint32_t v = 1; v < ball.size(); ++v) {
        out << "  v" << ball.parent(v) << " -- v" << v << " [label=\""
            << fmt_double(ball.height(v) - ball.height(ball.parent(v))) << "\"];\n";
    }
    out << "}\n";
    return out.str();
}

inline json ball_to_json(const TreeBall& ball) {
    json verts = json::array();
    for (std::uint32_t v = 0; v < ball.size(); ++v) {
        json rec = {{"id", v},
                    {"orbit", ball.graph().labels[ball.orbit(v)]},
                    {"depth", ball.depth(v)},
                    {"height", height_to_json(ball.height_exact(v))}};
        if (v != ball.root()) rec["parent"] = ball.parent(v);
        verts.push_back(rec);
    }
    return {{"radius", ball.radius()}, {"vertices", verts}};
}

// ---------------------------------------------------------------------------
// Lamination exports.
// ---------------------------------------------------------------------------

inline json lamination_to_json(const LazyTree& tree, const Lamination& lam) {
    json lines = json::array();
    for (std::uint32_t id = 0; id < lam.line_count(); ++id) {
        const LineView line(lam, id);
        json verts = json::array(), heights = json::array(), exact = json::array();
        for (std::int32_t p = line.param_min(); p <= line.param_max(); ++p) {
            const std::uint32_t v = line.vertex(p);
            verts.push_back(v);
            heights.push_back(tree.height(v));
            exact.push_back(height_to_json(tree.height_exact(v)));
        }
        lines.push_back({{"id", id},
                         {"param_min", line.param_min()},
                         {"vertices", verts},
                         {"heights", heights},
                         {"exact_heights", exact}});
    }
    json vertex_lines = json::array();
    for (std::uint32_t v = 0; v < lam.region_size; ++v) vertex_lines.push_back(lam.line_of[v]);
    return {{"beta", lam.beta},
            {"bound_c", lam.bound_c},
            {"region_size", lam.region_size},
            {"vertex_line", vertex_lines},
            {"lines", lines}};
}

inline std::string lamination_to_dot(const LazyTree& tree, const Lamination& lam) {
    static const char* palette[] = {"red",    "blue",   "green3", "orange", "purple",
                                    "brown",  "cyan3",  "magenta", "gold3", "gray40"};
    std::ostringstream out;
    out << "graph lamination {\n  node [shape=point];\n";
    for (std::uint32_t v = 0; v < lam.region_size; ++v) {
        out << "  v" << v << " [color=" << palette[lam.line_of[v] % 10] << " xlabel=\""
            << fmt_double(tree.height(v)) << "\"];\n";
    }
    for (std::uint32_t v = 1; v < lam.region_size; ++v) {
        const std::uint32_t p = tree.parent(v);
        const bool same = lam.line_of[v] == lam.line_of[p];
        out << "  v" << p << " -- v" << v;
        if (same) out << " [color=" << palette[lam.line_of[v] % 10] << " penwidth=2]";
        out << ";\n";
    }
    out << "}\n";
    return out.str();
}

// ---------------------------------------------------------------------------
// Matrices: {"rows": [[entry, ...], ...]}, entry = integer or [num, den].
// ---------------------------------------------------------------------------

inline RationalMatrix matrix_from_json(const json& j, const std::string& origin = "matrix") {
    if (!j.is_object() || !j.contains("rows") || !j["rows"].is_array()) {
        throw Error(ErrorCode::BadInput, origin + ": expected {\"rows\": [[...], ...]}");
    }
    RationalMatrix m;
    for (std::size_t i = 0; i < j["rows"].size(); ++i) {
        const auto& row = j["rows"][i];
        const std::string where = origin + ".rows[" + std::to_string(i) + "]";
        if (!row.is_array()) throw Error(ErrorCode::BadInput, where + ": expected an array");
        std::vector<Rational> out;
        for (std::size_t k = 0; k < row.size(); ++k) {
            const auto& cell = row[k];
            if (cell.is_number_integer()) {
                out.push_back(Rational{cell.get<std::int64_t>(), 1});
            } else if (cell.is_array() && cell.size() == 2 && cell[0].is_number_integer() &&
                       cell[1].is_number_integer() && cell[1].get<std::int64_t>() != 0) {
                out.push_back(Rational{cell[0].get<std::int64_t>(), cell[1].get<std::int64_t>()});
            } else {
                throw Error(ErrorCode::BadInput,
                            where + "[" + std::to_string(k) + "]: expected integer or [num, den]");
            }
        }
        m.rows.push_back(std::move(out));
    }
    if (m.rows.empty()) throw Error(ErrorCode::BadInput, origin + ": matrix is empty");
    for (const auto& r : m.rows) {
        if (r.size() != m.rows.size()) {
            throw Error(ErrorCode::BadInput, origin + ": matrix is not square");
        }
    }
    return m;
}

inline RationalMatrix load_matrix(const std::string& path) {
    return matrix_from_json(parse_json_text(read_file(path), path), path);
}

// ---------------------------------------------------------------------------
// Reports.
// ---------------------------------------------------------------------------

inline json qi_report_to_json(const QiReport& r) {
    return {{"mult_a", r.mult_a},
            {"add_b", r.add_b},
            {"orientation_c", r.orientation_c},
            {"ladder_k", r.ladder_k},
            {"samples", r.sample_count},
            {"seed", r.seed},
            {"excluded", r.excluded}};
}

inline std::string qi_samples_to_csv(const std::vector<QiSample>& rows,
                                     const std::string& provenance) {
    std::ostringstream out;
    out << "# " << provenance << "\n";
    out << "u,v,fu,fv,d1,d2,dh1,dh2\n";
    for (const auto& r : rows) {
        out << r.u << ',' << r.v << ',' << r.fu << ',' << r.fv << ',' << r.d1 << ',' << r.d2 << ','
            << fmt_double(r.dh1) << ',' << fmt_double(r.dh2) << "\n";
    }
    return out.str();
}

inline std::string qi_map_to_csv(const QiMap& map, const std::string& provenance) {
    std::ostringstream out;
    out << "# " << provenance << "\n";
    out << "source,target\n";
    for (std::uint32_t v = 0; v < map.region_size; ++v) {
        if (map.target_of[v] == kNoVertex) continue;
        out << v << ',' << map.target_of[v] << "\n";
    }
    return out.str();
}

inline json abs_jordan_to_json(const AbsJordanForm& f) {
    json groups = json::array();
    for (const auto& g : f.groups) {
        groups.push_back({{"norm", g.norm}, {"blocks", g.block_sizes}});
    }
    return {{"dim", f.dim}, {"groups", groups}};
}

}  // namespace coarse_trees
