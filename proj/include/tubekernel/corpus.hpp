#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tubekernel/body.hpp"
#include "tubekernel/convex_function.hpp"
#include "tubekernel/json_io.hpp"

namespace tubekernel {

// A verification input: phi, and the body K when phi = I_K.
struct CorpusItem {
    std::string name;
    ConvexFunction phi;
    std::optional<Body> body;
};

// Random symmetric positive definite matrix with condition number <= bound.
Eigen::MatrixXd random_spd_matrix(std::size_t dim, std::uint64_t seed, double max_condition = 10.0);

// cube, cross-polytope, euclidean ball, 3 random symmetric polytopes and 3
// random quadratics in each dimension 1..max_dim.
std::vector<CorpusItem> default_corpus(std::size_t max_dim = 3, std::uint64_t seed = 0);

// {"items": [{"name": ..., "body": body spec} | {"name": ..., "function": function spec}, ...]}
std::vector<CorpusItem> corpus_from_json(const Json& j);
Json to_json(const std::vector<CorpusItem>& corpus);

}  // namespace tubekernel
