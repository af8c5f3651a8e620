#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace tubekernel {

using Vector = std::vector<double>;

struct VolumeResult {
    double value = 0.0;
    bool exact = false;
    double error_estimate = 0.0;
};

enum class VolumeMode { Auto, Exact, MonteCarlo };

struct MonteCarloOptions {
    std::uint64_t samples = 1'000'000;
    std::uint64_t seed = 0;
};

// A flat (n-1)-simplex lying in a facet plane {a.x = offset} of a polytope.
// Cones over these pieces tile R^n (n = 2: segments, n = 3: triangles).
struct FacetPiece {
    std::vector<Vector> points;
    Vector normal;
    double offset = 0.0;
};

// Symmetric convex body with the origin in its interior. Immutable; copies
// share storage.
//
// Polytopes in dimension <= 3 carry both representations (extreme vertices
// and irredundant facets), computed at construction. In higher dimension
// only the given representation is stored and the other side is reached by
// linear programming.
class Body {
public:
    enum class Kind { HPolytope, VPolytope, PBall };

    static constexpr double kMinInradius = 1e-9;

    // Facets {x : a_i.x <= b_i}; normals are normalized, pairs +-a_i required.
    static Body hpolytope(const std::vector<Vector>& normals, const std::vector<double>& offsets);
    // conv(vertices); the list must be closed under negation.
    static Body vpolytope(const std::vector<Vector>& vertices);
    // {x : ||x||_p <= radius}, p in [1, inf].
    static Body pball(std::size_t dim, double p, double radius = 1.0);

    static Body cube(std::size_t dim, double half_width = 1.0);
    static Body cross_polytope(std::size_t dim, double radius = 1.0);
    static Body euclidean_ball(std::size_t dim, double radius = 1.0);

    [[nodiscard]] std::size_t dim() const;
    [[nodiscard]] Kind kind() const;
    [[nodiscard]] double p() const;       // PBall only
    [[nodiscard]] double radius() const;  // PBall only

    [[nodiscard]] bool contains(std::span<const double> x) const;
    [[nodiscard]] double support(std::span<const double> x) const;
    [[nodiscard]] double gauge(std::span<const double> x) const;
    // sup{s >= 0 : s d in K} for nonzero d.
    [[nodiscard]] double radial_extent(std::span<const double> d) const;

    [[nodiscard]] Body polar() const;
    [[nodiscard]] Body scaled(double c) const;
    [[nodiscard]] Body linear_image(const Eigen::MatrixXd& t) const;

    [[nodiscard]] bool is_polytope() const { return kind() != Kind::PBall; }
    // Polytope equivalent of p = 1 and p = inf balls; the body itself for polytopes.
    [[nodiscard]] std::optional<Body> as_polytope() const;

    // Vertex/facet data; available for every polytope with dim <= 3, and for
    // the given representation otherwise.
    [[nodiscard]] bool has_vertices() const;
    [[nodiscard]] bool has_facets() const;
    [[nodiscard]] std::size_t num_vertices() const;
    [[nodiscard]] std::span<const double> vertex(std::size_t i) const;
    [[nodiscard]] std::vector<Vector> vertices() const;
    [[nodiscard]] std::size_t num_facets() const;
    [[nodiscard]] std::span<const double> facet_normal(std::size_t i) const;
    [[nodiscard]] double facet_offset(std::size_t i) const;
    [[nodiscard]] const std::vector<FacetPiece>& facet_pieces() const;

    [[nodiscard]] double inradius() const;
    [[nodiscard]] double circumradius() const;

    [[nodiscard]] bool same_storage(const Body& other) const { return data_ == other.data_; }

    struct Data;

private:
    explicit Body(std::shared_ptr<const Data> data) : data_(std::move(data)) {}
    std::shared_ptr<const Data> data_;
};

Body polar(const Body& k);
VolumeResult volume(const Body& k, VolumeMode mode = VolumeMode::Auto,
                    const MonteCarloOptions& mc = {});
double support_function(const Body& k, std::span<const double> x);
// |K| |K polar|; exact flag and error propagated from the two volumes.
VolumeResult mahler_product(const Body& k, VolumeMode mode = VolumeMode::Auto,
                            const MonteCarloOptions& mc = {});

// Closed-form volume of the p-ball of the given radius.
double pball_volume(std::size_t dim, double p, double radius);

// Symmetrized Gaussian vertex set, redrawn until the vertex covariance has
// condition number <= max_condition.
Body random_symmetric_polytope(std::size_t dim, std::size_t half_vertex_count,
                               std::uint64_t seed, double max_condition = 1e3);

}  // namespace tubekernel
