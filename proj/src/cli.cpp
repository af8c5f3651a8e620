#include "tubekernel/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#include "tubekernel/bergman.hpp"
#include "tubekernel/bounds.hpp"
#include "tubekernel/corpus.hpp"
#include "tubekernel/errors.hpp"
#include "tubekernel/json_io.hpp"
#include "tubekernel/transforms.hpp"

namespace tubekernel {

namespace {

struct QuadFlags {
    std::optional<double> rel_tol;
    double truncation_mass = 1e-12;
    std::string method = "auto";
    std::uint64_t mc_samples = 1'000'000;
    std::uint64_t seed = 0;
    std::uint64_t max_evals = 20'000'000;

    QuadSpec spec() const {
        QuadSpec s;
        s.rel_tol = rel_tol;
        s.truncation_mass = truncation_mass;
        const auto m = parse_method(method);
        if (!m) throw InvalidArgument("unknown method \"" + method + "\"");
        s.method = *m;
        s.mc_samples = mc_samples;
        s.seed = seed;
        s.max_evals = max_evals;
        s.validate();
        return s;
    }
};

void add_quad_flags(CLI::App* app, QuadFlags& q) {
    app->add_option("--rel-tol", q.rel_tol, "Relative tolerance (default 1e-8 for n = 1, 1e-6 otherwise)");
    app->add_option("--truncation-mass", q.truncation_mass, "Tail mass allowed beyond the truncation radius")
        ->capture_default_str();
    app->add_option("--method", q.method, "auto, tensor_gauss, adaptive_1d, monte_carlo or polar")
        ->capture_default_str();
    app->add_option("--mc-samples", q.mc_samples, "Monte-Carlo sample count")->capture_default_str();
    app->add_option("--seed", q.seed, "Random seed")->capture_default_str();
    app->add_option("--max-evals", q.max_evals, "Evaluation budget per integral")->capture_default_str();
}

double parse_double(const std::string& s, const std::string& what) {
    double v = 0.0;
    const char* b = s.data();
    const char* e = b + s.size();
    while (b < e && *b == ' ') ++b;
    while (e > b && (e[-1] == ' ' || e[-1] == '\r')) --e;
    const auto [ptr, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || ptr != e || b == e) throw InvalidArgument(what + ": \"" + s + "\" is not a number");
    return v;
}

Vector parse_list(const std::string& s, const std::string& what) {
    Vector v;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) v.push_back(parse_double(tok, what));
    if (v.empty()) throw InvalidArgument(what + ": empty list");
    return v;
}

// "lo:hi:count" -> count equispaced nodes.
Vector parse_axis(const std::string& s) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ':')) parts.push_back(tok);
    if (parts.size() != 3) throw InvalidArgument("grid axis \"" + s + "\": expected lo:hi:count");
    const double lo = parse_double(parts[0], "grid axis"), hi = parse_double(parts[1], "grid axis");
    const double cnt = parse_double(parts[2], "grid axis");
    if (!(hi > lo) || cnt < 2 || cnt != std::floor(cnt))
        throw InvalidArgument("grid axis \"" + s + "\": need lo < hi and an integer count >= 2");
    const auto count = static_cast<std::size_t>(cnt);
    Vector v(count);
    for (std::size_t i = 0; i < count; ++i)
        v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    return v;
}

std::vector<Vector> parse_axes(const std::vector<std::string>& specs, std::size_t n) {
    if (specs.size() != 1 && specs.size() != n)
        throw InvalidArgument("expected 1 or " + std::to_string(n) + " grid axes, got " + std::to_string(specs.size()));
    std::vector<Vector> axes;
    for (std::size_t i = 0; i < n; ++i) axes.push_back(parse_axis(specs[specs.size() == 1 ? 0 : i]));
    return axes;
}

std::vector<Vector> read_points(const std::string& path, std::size_t n) {
    std::ifstream in(path);
    if (!in) throw SpecError(path + ": cannot open file");
    std::vector<Vector> pts;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        Vector p;
        try {
            p = parse_list(line, "point");
        } catch (const InvalidArgument& e) {
            if (pts.empty() && lineno == 1) continue;  // header row
            throw SpecError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        if (p.size() != n)
            throw SpecError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(n) + " coordinates, got " +
                            std::to_string(p.size()));
        pts.push_back(std::move(p));
    }
    return pts;
}

void write_output(const std::string& path, const std::string& content, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << content;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InvalidArgument(path + ": cannot open for writing");
    f << content;
}

std::string csv_header(std::size_t n, const char* prefix, const std::vector<std::string>& tail) {
    std::string h;
    for (std::size_t i = 0; i < n; ++i) h += std::string(prefix) + std::to_string(i + 1) + ",";
    for (std::size_t i = 0; i < tail.size(); ++i) h += tail[i] + (i + 1 < tail.size() ? "," : "\n");
    return h;
}

Json kernel_json(const KernelValue& k, const std::string& kind) {
    Json j;
    j["kernel"] = kind;
    const Json body = to_json(k);
    for (const auto& [key, v] : body.items()) j[key] = v;
    return j;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Bergman kernels of tube domains, convex duality transforms and their inequalities.", "tubekernel"};
    app.require_subcommand(1);
    app.fallthrough(false);

    // transform
    auto* transform = app.add_subcommand("transform", "Legendre and logarithmic Laplace transforms");
    transform->require_subcommand(1);

    std::string leg_fn, leg_out = "-";
    std::vector<std::string> leg_grid, leg_primal;
    bool leg_force = false;
    auto* legendre_cmd = transform->add_subcommand("legendre", "Legendre transform phi*(t) on a dual grid (CSV)");
    legendre_cmd->add_option("--fn", leg_fn, "Function spec (JSON)")->required();
    legendre_cmd->add_option("--grid", leg_grid, "Dual axis lo:hi:count (once for all axes, or once per axis)")
        ->required();
    legendre_cmd->add_option("--primal-grid", leg_primal, "Sampling axes for inputs without an analytic rule");
    legendre_cmd->add_flag("--force-grid", leg_force, "Use the grid algorithm even when an analytic rule exists");
    legendre_cmd->add_option("--out", leg_out, "Output file (- for stdout)")->capture_default_str();

    std::string ll_fn, ll_points, ll_out = "-";
    QuadFlags ll_q;
    auto* loglaplace_cmd = transform->add_subcommand("loglaplace", "log int e^{2 x.t - phi(x)} dx at points (CSV)");
    loglaplace_cmd->add_option("--fn", ll_fn, "Function spec (JSON)")->required();
    loglaplace_cmd->add_option("--points", ll_points, "CSV file, one point per row")->required();
    loglaplace_cmd->add_option("--out", ll_out, "Output file (- for stdout)")->capture_default_str();
    add_quad_flags(loglaplace_cmd, ll_q);

    // kernel
    auto* kernel = app.add_subcommand("kernel", "Bergman kernels at the origin (JSON)");
    kernel->require_subcommand(1);

    std::string kt_fn, kt_x, kt_out = "-";
    QuadFlags kt_q;
    auto* tube_cmd = kernel->add_subcommand("tube", "Kernel of A^2(e^{-phi}) on the tube over dom phi");
    tube_cmd->add_option("--fn", kt_fn, "Function spec (JSON)")->required();
    tube_cmd->add_option("--x", kt_x, "Real part of z, comma separated (default 0)");
    tube_cmd->add_option("--out", kt_out, "Output file (- for stdout)")->capture_default_str();
    add_quad_flags(tube_cmd, kt_q);

    std::string kf_fn1, kf_fn2, kf_out = "-";
    double kf_s = 1.0;
    QuadFlags kf_q;
    auto* family_cmd = kernel->add_subcommand("family", "B_s(0) for the weight phi1(s x) + phi2(x)");
    family_cmd->add_option("--fn1", kf_fn1, "Function spec for phi1 (JSON)")->required();
    family_cmd->add_option("--fn2", kf_fn2, "Function spec for phi2 (JSON)")->required();
    family_cmd->add_option("--s", kf_s, "Real nonzero parameter")->required();
    family_cmd->add_option("--out", kf_out, "Output file (- for stdout)")->capture_default_str();
    add_quad_flags(family_cmd, kf_q);

    std::string kg_weight, kg_out = "-";
    std::size_t kg_degree = 0;
    GramOptions kg_opts;
    auto* gram_cmd = kernel->add_subcommand("gram", "Polynomial-subspace kernel at 0 for a weight on C");
    gram_cmd->add_option("--weight", kg_weight, "{\"wx\": spec, \"wy\": spec} or one spec used for both (JSON)")
        ->required();
    gram_cmd->add_option("--degree", kg_degree, "Polynomial degree N")->required();
    gram_cmd->add_option("--radial-nodes", kg_opts.radial_nodes, "Gauss nodes per radial panel")->capture_default_str();
    gram_cmd->add_option("--angular-nodes", kg_opts.angular_nodes, "Gauss nodes per angular panel")
        ->capture_default_str();
    gram_cmd->add_option("--max-condition", kg_opts.max_condition, "Condition limit")->capture_default_str();
    gram_cmd->add_option("--out", kg_out, "Output file (- for stdout)")->capture_default_str();

    // verify
    auto* verify = app.add_subcommand("verify", "Inequality checks");
    verify->require_subcommand(1);
    std::string va_corpus = "default", va_out = "-", va_summary;
    std::size_t va_max_dim = 3;
    double va_kernel_tol = 1e-3;
    QuadFlags va_q;
    auto* all_cmd = verify->add_subcommand("all", "Run every check on a corpus (JSON report, CSV summary)");
    all_cmd->add_option("--corpus", va_corpus, "Corpus file (JSON) or \"default\"")->capture_default_str();
    all_cmd->add_option("--max-dim", va_max_dim, "Largest dimension of the default corpus")
        ->capture_default_str()
        ->check(CLI::Range(1, 3));
    all_cmd->add_option("--kernel-tol-3d", va_kernel_tol, "Kernel tolerance in dimension >= 3")
        ->capture_default_str();
    all_cmd->add_option("--out", va_out, "JSON report file (- for stdout)")->capture_default_str();
    all_cmd->add_option("--summary", va_summary, "CSV summary file (default: stdout when --out is a file)");
    add_quad_flags(all_cmd, va_q);

    // constants
    std::string c_out = "-";
    auto* constants_cmd = app.add_subcommand("constants", "Constants of the kernel comparison theorem (JSON)");
    constants_cmd->add_option("--out", c_out, "Output file (- for stdout)")->capture_default_str();

    // sweep
    std::string sw_fn, sw_fn1, sw_fn2, sw_s, sw_out = "-";
    double sw_min = 0.125, sw_max = 8.0;
    std::size_t sw_count = 25;
    QuadFlags sw_q;
    auto* sweep_cmd = app.add_subcommand("sweep", "b(s) = log B_s(0) and its envelope bound over s (CSV)");
    sweep_cmd->add_option("--fn", sw_fn, "Function spec used for phi1 and phi2 (JSON)");
    sweep_cmd->add_option("--fn1", sw_fn1, "Function spec for phi1 (JSON)");
    sweep_cmd->add_option("--fn2", sw_fn2, "Function spec for phi2 (JSON)");
    sweep_cmd->add_option("--s", sw_s, "Comma separated s values (overrides the range)");
    sweep_cmd->add_option("--s-min", sw_min, "Smallest s of the log-spaced range")->capture_default_str();
    sweep_cmd->add_option("--s-max", sw_max, "Largest s of the log-spaced range")->capture_default_str();
    sweep_cmd->add_option("--count", sw_count, "Number of s values")->capture_default_str();
    sweep_cmd->add_option("--out", sw_out, "Output file (- for stdout)")->capture_default_str();
    add_quad_flags(sweep_cmd, sw_q);

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        // Help of the deepest subcommand named on the line.
        const CLI::App* target = &app;
        while (true) {
            const auto subs = target->get_subcommands();
            if (subs.empty()) break;
            target = subs.front();
        }
        out << target->help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        err << "Run with --help for more information.\n";
        return 2;
    }

    try {
        if (legendre_cmd->parsed()) {
            const ConvexFunction phi = load_function_file(leg_fn);
            const std::size_t n = phi.dim();
            LegendreOptions opts;
            opts.dual_axes = parse_axes(leg_grid, n);
            if (!leg_primal.empty()) opts.primal_axes = parse_axes(leg_primal, n);
            opts.force_grid = leg_force;
            const TransformResult r = legendre(phi, opts);
            for (const auto& w : r.warnings) err << "warning: " << w << "\n";
            err << "provenance: " << provenance_name(r.provenance) << "\n";
            std::string csv = csv_header(n, "t", {"value"});
            const auto& axes = *opts.dual_axes;
            std::vector<std::size_t> idx(n, 0);
            Vector t(n);
            while (true) {
                for (std::size_t i = 0; i < n; ++i) t[i] = axes[i][idx[i]];
                for (double v : t) csv += format_number(v) + ",";
                csv += format_number(r.function.value(t)) + "\n";
                std::size_t k = n;
                while (k > 0 && ++idx[k - 1] == axes[k - 1].size()) idx[--k] = 0;
                if (k == 0) break;
            }
            write_output(leg_out, csv, out);
            return 0;
        }
        if (loglaplace_cmd->parsed()) {
            const ConvexFunction phi = load_function_file(ll_fn);
            const QuadSpec spec = ll_q.spec();
            const auto pts = read_points(ll_points, phi.dim());
            std::string csv = csv_header(phi.dim(), "t", {"value", "error"});
            for (const auto& p : pts) {
                const LogLaplaceValue v = log_laplace_detailed(phi, p, spec);
                for (double x : p) csv += format_number(x) + ",";
                csv += format_number(v.value) + "," + format_number(v.error) + "\n";
            }
            write_output(ll_out, csv, out);
            return 0;
        }
        if (tube_cmd->parsed()) {
            const ConvexFunction phi = load_function_file(kt_fn);
            const QuadSpec spec = kt_q.spec();
            Vector x(phi.dim(), 0.0);
            if (!kt_x.empty()) x = parse_list(kt_x, "--x");
            if (x.size() != phi.dim()) throw DimensionMismatch(phi.dim(), x.size());
            Json j = kernel_json(kernel_tube(phi, x, spec), "tube");
            j["x"] = x;
            j["function"] = digest(phi);
            j["quad"] = to_json(spec);
            write_output(kt_out, dump(j), out);
            return 0;
        }
        if (family_cmd->parsed()) {
            const ConvexFunction phi1 = load_function_file(kf_fn1);
            const ConvexFunction phi2 = load_function_file(kf_fn2);
            const QuadSpec spec = kf_q.spec();
            Json j = kernel_json(kernel_family_s(phi1, phi2, kf_s, spec), "family");
            j["s"] = kf_s;
            j["phi1"] = digest(phi1);
            j["phi2"] = digest(phi2);
            j["quad"] = to_json(spec);
            write_output(kf_out, dump(j), out);
            return 0;
        }
        if (gram_cmd->parsed()) {
            const Json wj = load_json_file(kg_weight);
            PlaneWeight w{function_from_json(wj.contains("wx") ? wj["wx"] : wj, wj.contains("wx") ? "/wx" : ""),
                          function_from_json(wj.contains("wy") ? wj["wy"] : wj, wj.contains("wy") ? "/wy" : "")};
            if (w.wx.dim() != 1 || w.wy.dim() != 1) throw InvalidArgument("gram weights must be one-dimensional");
            const GramResult g = gram_oracle(w, kg_degree, kg_opts);
            KernelValue k{g.kernel[kg_degree], g.error[kg_degree], KernelMethod::Gram, 0};
            Json j = kernel_json(k, "gram");
            j["degree"] = kg_degree;
            j["condition"] = g.condition[kg_degree];
            j["kernel_by_degree"] = g.kernel;
            j["truncation_radius"] = g.truncation_radius >= 0.0 ? Json(g.truncation_radius) : Json(nullptr);
            write_output(kg_out, dump(j), out);
            return 0;
        }
        if (all_cmd->parsed()) {
            VerifyOptions opts;
            opts.spec = va_q.spec();
            opts.kernel_tol_high = va_kernel_tol;
            std::vector<CorpusItem> corpus;
            if (va_corpus == "default") {
                corpus = default_corpus(va_max_dim, va_q.seed);
            } else {
                const Json cj = load_json_file(va_corpus);
                try {
                    corpus = corpus_from_json(cj);
                } catch (const SpecError& e) {
                    throw SpecError(va_corpus + ": " + e.what());
                }
            }
            const auto reports = verify_all(corpus, opts);
            write_output(va_out, dump(to_json(reports)), out);
            const std::string csv = reports_csv(reports);
            if (!va_summary.empty())
                write_output(va_summary, csv, out);
            else if (va_out != "-")
                out << csv;
            const bool ok = std::all_of(reports.begin(), reports.end(), [](const CheckReport& r) {
                return r.verdict == Verdict::Pass || r.verdict == Verdict::NotComputable;
            });
            return ok ? 0 : 1;
        }
        if (constants_cmd->parsed()) {
            write_output(c_out, dump(to_json(compute_constants())), out);
            return 0;
        }
        if (sweep_cmd->parsed()) {
            if (!sw_fn.empty() && (!sw_fn1.empty() || !sw_fn2.empty()))
                throw InvalidArgument("use either --fn or --fn1/--fn2");
            if (sw_fn.empty() && (sw_fn1.empty() || sw_fn2.empty()))
                throw InvalidArgument("sweep needs --fn or both --fn1 and --fn2");
            const ConvexFunction phi1 = load_function_file(sw_fn.empty() ? sw_fn1 : sw_fn);
            const ConvexFunction phi2 = sw_fn.empty() ? load_function_file(sw_fn2) : phi1;
            Vector s;
            if (!sw_s.empty()) {
                s = parse_list(sw_s, "--s");
            } else {
                if (!(sw_min > 0.0) || !(sw_max > sw_min) || sw_count < 2)
                    throw InvalidArgument("need 0 < --s-min < --s-max and --count >= 2");
                for (std::size_t i = 0; i < sw_count; ++i)
                    s.push_back(sw_min * std::pow(sw_max / sw_min, static_cast<double>(i) / (sw_count - 1)));
            }
            const auto rows = sweep_b(phi1, phi2, s, sw_q.spec());
            std::string csv = "s,b,error,envelope\n";
            for (const auto& r : rows)
                csv += format_number(r.s) + "," + format_number(r.b) + "," + format_number(r.error) + "," +
                       format_number(r.envelope) + "\n";
            write_output(sw_out, csv, out);
            return 0;
        }
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    err << "error: no command\n";
    return 2;
}

}  // namespace tubekernel
