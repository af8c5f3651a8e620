#include "tubekernel/json_io.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace tubekernel {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
    throw SpecError("at " + (path.empty() ? std::string("/") : path) + ": " + msg);
}

const Json& field(const Json& j, const std::string& path, const char* key) {
    if (!j.is_object()) fail(path, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) fail(path, std::string("missing field \"") + key + "\"");
    return *it;
}

double number(const Json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) fail(path, "expected a finite number");
    return v;
}

std::size_t dimension(const Json& j, const std::string& path) {
    const Json& d = field(j, path, "dim");
    if (!d.is_number_integer() || d.get<long long>() < 1) fail(path + "/dim", "expected a positive integer");
    return static_cast<std::size_t>(d.get<long long>());
}

Vector vector_of(const Json& j, const std::string& path, std::size_t expected) {
    if (!j.is_array()) fail(path, "expected an array");
    if (expected != 0 && j.size() != expected)
        fail(path, "expected " + std::to_string(expected) + " entries, got " + std::to_string(j.size()));
    Vector v;
    v.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v.push_back(number(j[i], path + "/" + std::to_string(i)));
    return v;
}

std::vector<Vector> rows_of(const Json& j, const std::string& path, std::size_t width) {
    if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array");
    std::vector<Vector> rows;
    for (std::size_t i = 0; i < j.size(); ++i) rows.push_back(vector_of(j[i], path + "/" + std::to_string(i), width));
    return rows;
}

std::string kind_of(const Json& j, const std::string& path) {
    const Json& k = field(j, path, "kind");
    if (!k.is_string()) fail(path + "/kind", "expected a string");
    return k.get<std::string>();
}

Json json_number(double v) {
    if (std::isinf(v) && v > 0) return Json("inf");
    return Json(v);
}

// Runs a constructor and relabels its validation errors with the path.
template <class F>
auto guarded(const std::string& path, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const SpecError&) {
        throw;
    } catch (const InvalidArgument& e) {
        fail(path, e.what());
    }
}

}  // namespace

Json to_json(const Body& k) {
    Json j;
    j["dim"] = k.dim();
    switch (k.kind()) {
        case Body::Kind::HPolytope: {
            j["kind"] = "hpoly";
            Json normals = Json::array(), offsets = Json::array();
            for (std::size_t i = 0; i < k.num_facets(); ++i) {
                const auto a = k.facet_normal(i);
                normals.push_back(Json(Vector(a.begin(), a.end())));
                offsets.push_back(k.facet_offset(i));
            }
            j["normals"] = normals;
            j["offsets"] = offsets;
            break;
        }
        case Body::Kind::VPolytope: {
            j["kind"] = "vpoly";
            Json vs = Json::array();
            for (const auto& v : k.vertices()) vs.push_back(Json(v));
            j["vertices"] = vs;
            break;
        }
        case Body::Kind::PBall:
            j["kind"] = "pball";
            j["p"] = json_number(k.p());
            j["radius"] = k.radius();
            break;
    }
    return j;
}

Body body_from_json(const Json& j, const std::string& path) {
    const std::size_t n = dimension(j, path);
    const std::string kind = kind_of(j, path);
    if (kind == "hpoly") {
        auto normals = rows_of(field(j, path, "normals"), path + "/normals", n);
        auto offsets = vector_of(field(j, path, "offsets"), path + "/offsets", normals.size());
        return guarded(path, [&] { return Body::hpolytope(normals, offsets); });
    }
    if (kind == "vpoly") {
        auto vertices = rows_of(field(j, path, "vertices"), path + "/vertices", n);
        return guarded(path, [&] { return Body::vpolytope(vertices); });
    }
    if (kind == "pball") {
        const Json& pj = field(j, path, "p");
        double p = 0.0;
        if (pj.is_string() && pj.get<std::string>() == "inf")
            p = kInf;
        else
            p = number(pj, path + "/p");
        double r = 1.0;
        if (j.contains("radius")) r = number(j["radius"], path + "/radius");
        return guarded(path, [&] { return Body::pball(n, p, r); });
    }
    fail(path + "/kind", "unknown body kind \"" + kind + "\" (expected hpoly, vpoly or pball)");
}

Json to_json(const ConvexFunction& phi) {
    using K = ConvexFunction::Kind;
    Json j;
    j["dim"] = phi.dim();
    switch (phi.kind()) {
        case K::Indicator:
            j["kind"] = "indicator";
            j["body"] = to_json(phi.body());
            break;
        case K::Support:
            j["kind"] = "support";
            j["body"] = to_json(phi.body());
            break;
        case K::Quadratic: {
            j["kind"] = "quadratic";
            const auto& m = phi.matrix();
            Json rows = Json::array();
            for (Eigen::Index r = 0; r < m.rows(); ++r) {
                Json row = Json::array();
                for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
                rows.push_back(row);
            }
            j["matrix"] = rows;
            break;
        }
        case K::GaugePower:
            j["kind"] = "gauge_power";
            j["body"] = to_json(phi.body());
            j["p"] = phi.order();
            break;
        case K::Dilate:
            j["kind"] = "dilate";
            j["inner"] = to_json(phi.inner());
            j["factor"] = phi.factor();
            break;
        case K::Sum: {
            j["kind"] = "sum";
            Json terms = Json::array();
            for (const auto& t : phi.terms()) terms.push_back(to_json(t));
            j["terms"] = terms;
            break;
        }
        case K::Grid: {
            j["kind"] = "grid";
            const auto& g = phi.grid_function();
            Json axes = Json::array();
            for (const auto& a : g.axes()) axes.push_back(Json(a));
            j["axes"] = axes;
            Json values = Json::array();
            for (double v : g.values()) values.push_back(std::isfinite(v) ? Json(v) : Json(nullptr));
            j["values"] = values;
            break;
        }
    }
    return j;
}

ConvexFunction function_from_json(const Json& j, const std::string& path) {
    const std::size_t n = dimension(j, path);
    const std::string kind = kind_of(j, path);
    auto body_field = [&] {
        Body k = body_from_json(field(j, path, "body"), path + "/body");
        if (k.dim() != n) fail(path + "/body/dim", "body dimension differs from function dimension");
        return k;
    };
    auto check_dim = [&](const ConvexFunction& f, const std::string& where) {
        if (f.dim() != n) fail(where, "dimension " + std::to_string(f.dim()) + " differs from " + std::to_string(n));
        return f;
    };
    if (kind == "indicator") return ConvexFunction::indicator(body_field());
    if (kind == "support") return ConvexFunction::support(body_field());
    if (kind == "quadratic") {
        auto rows = rows_of(field(j, path, "matrix"), path + "/matrix", n);
        if (rows.size() != n) fail(path + "/matrix", "expected " + std::to_string(n) + " rows");
        Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
        return guarded(path + "/matrix", [&] { return ConvexFunction::quadratic(m); });
    }
    if (kind == "gauge_power") {
        Body k = body_field();
        const double p = number(field(j, path, "p"), path + "/p");
        return guarded(path, [&] { return ConvexFunction::gauge_power(k, p); });
    }
    if (kind == "dilate") {
        auto inner = check_dim(function_from_json(field(j, path, "inner"), path + "/inner"), path + "/inner");
        const double s = number(field(j, path, "factor"), path + "/factor");
        return guarded(path + "/factor", [&] { return dilate(inner, s); });
    }
    if (kind == "sum") {
        const Json& ts = field(j, path, "terms");
        if (!ts.is_array() || ts.empty()) fail(path + "/terms", "expected a non-empty array");
        std::vector<ConvexFunction> terms;
        for (std::size_t i = 0; i < ts.size(); ++i) {
            const std::string p = path + "/terms/" + std::to_string(i);
            terms.push_back(check_dim(function_from_json(ts[i], p), p));
        }
        return guarded(path, [&] { return ConvexFunction::sum(terms); });
    }
    if (kind == "grid") {
        const Json& aj = field(j, path, "axes");
        if (!aj.is_array() || aj.size() != n) fail(path + "/axes", "expected " + std::to_string(n) + " axes");
        std::vector<Vector> axes;
        std::size_t total = 1;
        for (std::size_t i = 0; i < n; ++i) {
            axes.push_back(vector_of(aj[i], path + "/axes/" + std::to_string(i), 0));
            total *= axes.back().size();
        }
        const Json& vj = field(j, path, "values");
        if (!vj.is_array() || vj.size() != total)
            fail(path + "/values", "expected " + std::to_string(total) + " values");
        std::vector<double> values;
        values.reserve(total);
        for (std::size_t i = 0; i < total; ++i)
            values.push_back(vj[i].is_null() ? kInf : number(vj[i], path + "/values/" + std::to_string(i)));
        return guarded(path, [&] { return ConvexFunction::grid(GridFunction(std::move(axes), std::move(values))); });
    }
    fail(path + "/kind", "unknown function kind \"" + kind +
                             "\" (expected indicator, support, quadratic, gauge_power, dilate, sum or grid)");
}

Json to_json(const QuadSpec& spec) {
    Json j;
    if (spec.rel_tol)
        j["rel_tol"] = *spec.rel_tol;
    else
        j["rel_tol"] = nullptr;
    j["truncation_mass"] = spec.truncation_mass;
    j["method"] = std::string(method_name(spec.method));
    j["mc_samples"] = spec.mc_samples;
    j["seed"] = spec.seed;
    j["max_evals"] = spec.max_evals;
    return j;
}

Json to_json(const KernelValue& k) {
    Json j;
    j["value"] = k.value;
    j["error_estimate"] = k.error_estimate;
    j["method"] = std::string(kernel_method_name(k.method));
    j["evaluations"] = k.evaluations;
    return j;
}

Json to_json(const CheckReport& r) {
    auto num = [](double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); };
    Json j;
    j["name"] = r.name;
    j["subject"] = r.subject;
    j["relation"] = std::string(relation_symbol(r.relation));
    j["lhs"] = num(r.lhs);
    j["rhs"] = num(r.rhs);
    j["lhs_error"] = num(r.lhs_error);
    j["rhs_error"] = num(r.rhs_error);
    j["combined_error"] = num(r.combined_error);
    j["margin"] = num(r.margin);
    j["tolerance"] = r.relation == Relation::Equal ? num(r.tolerance) : Json(nullptr);
    j["verdict"] = std::string(verdict_name(r.verdict));
    j["pass"] = r.passed();
    if (r.constant_name.empty())
        j["constant"] = nullptr;
    else
        j["constant"] = Json{{"name", r.constant_name}, {"value", r.constant_value}};
    Json inputs = Json::object();
    for (const auto& [role, d] : r.inputs) inputs[role] = d;
    j["inputs"] = inputs;
    Json details = Json::object();
    for (const auto& [k, v] : r.details) details[k] = num(v);
    j["details"] = details;
    j["tolerances"] = Json{{"rel_tol", num(r.rel_tol)}, {"truncation_mass", num(r.truncation_mass)}};
    j["note"] = r.note;
    return j;
}

Json to_json(const std::vector<CheckReport>& reports) {
    Json a = Json::array();
    for (const auto& r : reports) a.push_back(to_json(r));
    return a;
}

Json to_json(const Constants& c) {
    Json j;
    j["C_general"] = Json{{"value", c.c_general}, {"error", c.c_general_error}, {"closed_form", c.c_general_closed}};
    j["C_hom1"] = Json{{"value", c.c_hom1}, {"error", c.c_hom1_error}, {"closed_form", c.c_hom1_closed}};
    j["C_hom2"] = c.c_hom2;
    j["nazarov_C"] = c.nazarov_c;
    j["kuperberg_ref"] = c.kuperberg_ref;
    j["residue_integral"] =
        Json{{"value", c.residue_integral}, {"error", c.residue_error}, {"closed_form", 2.0 * std::log(2.0)}};
    j["catalan"] = c.catalan;
    return j;
}

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string reports_csv(const std::vector<CheckReport>& reports) {
    std::string out = "name,subject,relation,lhs,rhs,margin,combined_error,verdict\n";
    for (const auto& r : reports) {
        out += r.name + "," + r.subject + "," + std::string(relation_symbol(r.relation)) + "," +
               format_number(r.lhs) + "," + format_number(r.rhs) + "," + format_number(r.margin) + "," +
               format_number(r.combined_error) + "," + std::string(verdict_name(r.verdict)) + "\n";
    }
    return out;
}

Json parse_json_text(std::string_view text, const std::string& source) {
    try {
        return Json::parse(text.begin(), text.end());
    } catch (const Json::parse_error& e) {
        // Byte offset -> line and column.
        std::size_t line = 1, col = 1;
        const std::size_t stop = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        for (std::size_t i = 0; i < stop; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::string msg = e.what();
        const auto pos = msg.find("syntax error");
        if (pos != std::string::npos) msg = msg.substr(pos);
        throw SpecError(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + msg);
    }
}

Json load_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SpecError(path + ": cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_json_text(ss.str(), path);
}

ConvexFunction load_function_file(const std::string& path) {
    const Json j = load_json_file(path);
    try {
        return function_from_json(j);
    } catch (const SpecError& e) {
        throw SpecError(path + ": " + e.what());
    }
}

std::string digest(const Json& j) {
    const std::string s = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string digest(const ConvexFunction& phi) { return digest(to_json(phi)); }
std::string digest(const Body& k) { return digest(to_json(k)); }

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace tubekernel
