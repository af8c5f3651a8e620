#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "support.hpp"
#include "tubekernel/cli.hpp"
#include "tubekernel/json_io.hpp"

using namespace tubekernel;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// Compares against tests/golden/<name>; TUBEKERNEL_UPDATE_GOLDEN=1 rewrites it.
void check_golden(const std::string& name, const std::string& actual) {
    const fs::path p = fs::path(TUBEKERNEL_GOLDEN_DIR) / name;
    if (const char* u = std::getenv("TUBEKERNEL_UPDATE_GOLDEN"); u && std::string(u) == "1") {
        std::ofstream(p, std::ios::binary) << actual;
        return;
    }
    REQUIRE_MESSAGE(fs::exists(p), "missing golden file " << p.string());
    CHECK(read_file(p) == actual);
}

class TempDir {
public:
    TempDir() {
        path_ = fs::temp_directory_path() / ("tubekernel_cli_" + std::to_string(std::rand()) + "_" +
                                             std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    std::string write(const std::string& name, const std::string& text) const {
        const fs::path p = path_ / name;
        std::ofstream(p, std::ios::binary) << text;
        return p.string();
    }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    fs::path path_;
};

std::string type_name(const Json& j) {
    if (j.is_object()) return "object";
    if (j.is_array()) return "array";
    if (j.is_string()) return "string";
    if (j.is_boolean()) return "bool";
    if (j.is_null()) return "null";
    return "number";
}

// One line per (path, type) pair; array indices collapse to [].
void collect_schema(const Json& j, const std::string& path, std::set<std::string>& out) {
    out.insert(path + ": " + type_name(j));
    if (j.is_object())
        for (const auto& [k, v] : j.items()) collect_schema(v, path + "/" + k, out);
    else if (j.is_array())
        for (const auto& v : j) collect_schema(v, path + "/[]", out);
}

std::string schema_of(const Json& j) {
    std::set<std::string> lines;
    collect_schema(j, "", lines);
    std::string s;
    for (const auto& l : lines) s += l + "\n";
    return s;
}

const char* kSquareHalf = R"({"dim": 1, "kind": "quadratic", "matrix": [[1]]})";
const char* kSegment = R"({"dim": 1, "kind": "indicator", "body": {"dim": 1, "kind": "pball", "p": "inf"}})";

}  // namespace

TEST_CASE("help text matches golden files") {
    const std::vector<std::pair<std::string, std::vector<std::string>>> cases = {
        {"help_root.txt", {"--help"}},
        {"help_transform.txt", {"transform", "--help"}},
        {"help_transform_legendre.txt", {"transform", "legendre", "--help"}},
        {"help_transform_loglaplace.txt", {"transform", "loglaplace", "--help"}},
        {"help_kernel.txt", {"kernel", "--help"}},
        {"help_kernel_tube.txt", {"kernel", "tube", "--help"}},
        {"help_kernel_family.txt", {"kernel", "family", "--help"}},
        {"help_kernel_gram.txt", {"kernel", "gram", "--help"}},
        {"help_verify.txt", {"verify", "--help"}},
        {"help_verify_all.txt", {"verify", "all", "--help"}},
        {"help_constants.txt", {"constants", "--help"}},
        {"help_sweep.txt", {"sweep", "--help"}},
    };
    for (const auto& [file, args] : cases) {
        CAPTURE(file);
        const Run r = run(args);
        CHECK(r.code == 0);
        CHECK(r.err.empty());
        CHECK_FALSE(r.out.empty());
        check_golden(file, r.out);
    }
}

TEST_CASE("default corpus report: schema, exit code and byte-identical reruns") {
    const Run a = run({"verify", "all", "--corpus", "default", "--max-dim", "1"});
    const Run b = run({"verify", "all", "--corpus", "default", "--max-dim", "1"});
    CHECK(a.code == 0);
    CHECK(a.out == b.out);
    const Json j = parse_json_text(a.out, "report");
    REQUIRE(j.is_array());
    CHECK(j.size() > 10);
    check_golden("report_schema.txt", schema_of(j));

    TempDir dir;
    const std::string out = dir.file("report.json"), summary = dir.file("summary.csv");
    const Run c = run({"verify", "all", "--max-dim", "1", "--out", out, "--summary", summary});
    CHECK(c.code == 0);
    CHECK(read_file(out) == a.out);
    const std::string csv = read_file(summary);
    CHECK(csv.rfind("name,", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<std::ptrdiff_t>(j.size() + 1));
}

TEST_CASE("corpus files") {
    TempDir dir;
    const std::string good = dir.write("corpus.json", std::string(R"({"items": [{"name": "g", "function": )") +
                                                          kSquareHalf + R"(}, {"name": "seg", "body": {"dim": 1, "kind": "pball", "p": "inf"}}]})");
    const Run r = run({"verify", "all", "--corpus", good});
    CHECK(r.code == 0);
    const Json j = parse_json_text(r.out, "report");
    std::set<std::string> subjects;
    for (const auto& e : j) subjects.insert(e["subject"].get<std::string>());
    CHECK(subjects.count("g") == 1);
    CHECK(subjects.count("seg") == 1);

    const std::string bad = dir.write("bad.json", "{\n  \"items\": [\n    {\"name\": \"x\",, }\n  ]\n}\n");
    const Run e = run({"verify", "all", "--corpus", bad});
    CHECK(e.code == 2);
    CHECK(e.err.find(bad + ":3:") != std::string::npos);

    const std::string wrong = dir.write("wrong.json", R"({"items": [{"function": {"dim": 1, "kind": "cone"}}]})");
    const Run w = run({"verify", "all", "--corpus", wrong});
    CHECK(w.code == 2);
    CHECK(w.err.find("/items/0/function/kind") != std::string::npos);
}

TEST_CASE("usage errors exit with 2") {
    CHECK(run({}).code == 2);
    CHECK(run({"frobnicate"}).code == 2);
    CHECK(run({"kernel", "tube"}).code == 2);
    CHECK(run({"verify", "all", "--max-dim", "5"}).code == 2);
    CHECK(run({"kernel", "tube", "--fn", "/nonexistent/fn.json"}).code == 2);
    TempDir dir;
    const std::string fn = dir.write("g.json", kSquareHalf);
    CHECK(run({"kernel", "tube", "--fn", fn, "--method", "simpson"}).code == 2);
    CHECK(run({"kernel", "tube", "--fn", fn, "--x", "1,2"}).code == 2);
    CHECK(run({"sweep", "--fn", fn, "--s-min", "2", "--s-max", "1"}).code == 2);
}

TEST_CASE("numerical failures exit with 1") {
    TempDir dir;
    const std::string flat = dir.write("flat.json", R"({"dim": 2, "kind": "quadratic", "matrix": [[1, 0], [0, 0]]})");
    const Run r = run({"kernel", "tube", "--fn", flat});
    CHECK(r.code == 1);
    CHECK(r.err.rfind("error: ", 0) == 0);
}

TEST_CASE("kernel commands") {
    TempDir dir;
    const std::string g = dir.write("g.json", kSquareHalf), seg = dir.write("seg.json", kSegment);
    // Weight a x^2 gives B(0) = a / (2 pi).
    const Run t = run({"kernel", "tube", "--fn", g});
    REQUIRE(t.code == 0);
    const Json tj = parse_json_text(t.out, "tube");
    CHECK(tj["value"].get<double>() == doctest::Approx(1.0 / (4.0 * testing_support::kPi)).epsilon(1e-8));
    CHECK(tj["kernel"] == "tube");
    CHECK(tj.contains("error_estimate"));

    const Run f = run({"kernel", "family", "--fn1", g, "--fn2", g, "--s", "2"});
    REQUIRE(f.code == 0);
    CHECK(parse_json_text(f.out, "family")["value"].get<double>() ==
          doctest::Approx(2.5 / (2.0 * testing_support::kPi)).epsilon(1e-7));

    const std::string w = dir.write("w.json", std::string(R"({"wx": )") + kSegment + R"(, "wy": )" + kSegment + "}");
    const Run gr = run({"kernel", "gram", "--weight", w, "--degree", "0"});
    REQUIRE(gr.code == 0);
    CHECK(parse_json_text(gr.out, "gram")["value"].get<double>() == doctest::Approx(0.25).epsilon(1e-10));

    const std::string out = dir.file("k.json");
    CHECK(run({"kernel", "tube", "--fn", g, "--out", out}).code == 0);
    CHECK(read_file(out) == t.out);
}

TEST_CASE("transform commands") {
    TempDir dir;
    const std::string g = dir.write("g.json", kSquareHalf);
    const Run l = run({"transform", "legendre", "--fn", g, "--grid", "-1:1:5"});
    REQUIRE(l.code == 0);
    CHECK(l.out == "t1,value\n-1,0.5\n-0.5,0.125\n0,0\n0.5,0.125\n1,0.5\n");
    CHECK(l.err.find("provenance: analytic") != std::string::npos);

    const std::string pts = dir.write("pts.csv", "0\n0.5\n");
    const Run ll = run({"transform", "loglaplace", "--fn", g, "--points", pts});
    REQUIRE(ll.code == 0);
    // log int e^{2xt - x^2/2} dx = 2 t^2 + log sqrt(2 pi).
    std::istringstream rows(ll.out);
    std::string line;
    std::getline(rows, line);
    CHECK(line == "t1,value,error");
    for (double t : {0.0, 0.5}) {
        REQUIRE(std::getline(rows, line));
        const double v = std::stod(line.substr(line.find(',') + 1));
        CHECK(v == doctest::Approx(2.0 * t * t + 0.5 * std::log(2.0 * testing_support::kPi)).epsilon(1e-9));
    }
}

TEST_CASE("constants and sweep output") {
    const Run a = run({"constants"}), b = run({"constants"});
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    const Json c = parse_json_text(a.out, "constants");
    CHECK(c["C_general"]["value"].get<double>() == doctest::Approx(3.2099).epsilon(1e-4));

    TempDir dir;
    const std::string seg = dir.write("seg.json", kSegment);
    const Run s = run({"sweep", "--fn", seg, "--s", "0.5,1,2"});
    REQUIRE(s.code == 0);
    std::istringstream rows(s.out);
    std::string line;
    std::getline(rows, line);
    CHECK(line == "s,b,error,envelope");
    int count = 0;
    while (std::getline(rows, line)) ++count;
    CHECK(count == 3);
    CHECK(run({"sweep", "--fn", seg, "--count", "4", "--s-min", "0.5", "--s-max", "2"}).out ==
          run({"sweep", "--fn", seg, "--count", "4", "--s-min", "0.5", "--s-max", "2"}).out);
}
