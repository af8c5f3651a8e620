#include "tubekernel/corpus.hpp"

#include <cmath>

#include "tubekernel/random.hpp"

namespace tubekernel {

Eigen::MatrixXd random_spd_matrix(std::size_t dim, std::uint64_t seed, double max_condition) {
    if (dim == 0) throw InvalidArgument("random matrix: zero dimension");
    if (!(max_condition >= 1.0)) throw InvalidArgument("random matrix: condition bound must be >= 1");
    const auto n = static_cast<Eigen::Index>(dim);
    Rng rng(seed);
    Eigen::MatrixXd g(n, n);
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c) g(r, c) = rng.normal();
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    const Eigen::MatrixXd q = qr.householderQ();
    Eigen::VectorXd lam(n);
    for (Eigen::Index i = 0; i < n; ++i) lam(i) = 0.5 * std::pow(max_condition, rng.uniform());
    Eigen::MatrixXd m = q * lam.asDiagonal() * q.transpose();
    return 0.5 * (m + m.transpose());
}

std::vector<CorpusItem> default_corpus(std::size_t max_dim, std::uint64_t seed) {
    std::vector<CorpusItem> out;
    for (std::size_t n = 1; n <= max_dim; ++n) {
        const std::string d = std::to_string(n);
        auto add_body = [&](std::string name, Body k) {
            out.push_back({std::move(name), ConvexFunction::indicator(k), k});
        };
        add_body("cube" + d, Body::cube(n));
        add_body("cross" + d, Body::cross_polytope(n));
        add_body("ball" + d, Body::euclidean_ball(n));
        for (std::uint64_t k = 0; k < 3; ++k)
            add_body("randpoly" + d + "_" + std::to_string(k),
                     random_symmetric_polytope(n, 2 * n, seed * 1000 + 100 * n + k + 1));
        for (std::uint64_t k = 0; k < 3; ++k)
            out.push_back({"randquad" + d + "_" + std::to_string(k),
                           ConvexFunction::quadratic(random_spd_matrix(n, seed * 1000 + 100 * n + 50 + k)),
                           std::nullopt});
    }
    return out;
}

std::vector<CorpusItem> corpus_from_json(const Json& j) {
    if (!j.is_object() || !j.contains("items") || !j["items"].is_array())
        throw SpecError("at /: expected an object with an \"items\" array");
    std::vector<CorpusItem> out;
    const Json& items = j["items"];
    for (std::size_t i = 0; i < items.size(); ++i) {
        const std::string path = "/items/" + std::to_string(i);
        const Json& it = items[i];
        if (!it.is_object()) throw SpecError("at " + path + ": expected an object");
        std::string name = "item" + std::to_string(i);
        if (it.contains("name")) {
            if (!it["name"].is_string()) throw SpecError("at " + path + "/name: expected a string");
            name = it["name"].get<std::string>();
        }
        const bool has_body = it.contains("body"), has_fn = it.contains("function");
        if (has_body == has_fn) throw SpecError("at " + path + ": expected exactly one of \"body\" or \"function\"");
        if (has_body) {
            Body k = body_from_json(it["body"], path + "/body");
            out.push_back({std::move(name), ConvexFunction::indicator(k), k});
        } else {
            out.push_back({std::move(name), function_from_json(it["function"], path + "/function"), std::nullopt});
        }
    }
    return out;
}

Json to_json(const std::vector<CorpusItem>& corpus) {
    Json items = Json::array();
    for (const auto& it : corpus) {
        Json e;
        e["name"] = it.name;
        if (it.body)
            e["body"] = to_json(*it.body);
        else
            e["function"] = to_json(it.phi);
        items.push_back(e);
    }
    return Json{{"items", items}};
}

}  // namespace tubekernel
