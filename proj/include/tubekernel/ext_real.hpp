#pragma once

#include <compare>
#include <limits>
#include <ostream>

namespace tubekernel {

// Real number or +infinity. Convex functions in this library take values in
// (-inf, +inf]; -inf and NaN are rejected at construction.
class ExtReal {
public:
    constexpr ExtReal() noexcept = default;
    ExtReal(double v);  // NOLINT: implicit from double is intended

    static constexpr ExtReal infinity() noexcept { return ExtReal(Raw{}, kInf); }

    [[nodiscard]] constexpr bool is_finite() const noexcept { return value_ != kInf; }
    [[nodiscard]] constexpr bool is_infinite() const noexcept { return value_ == kInf; }

    // The stored value; +inf for the infinite element.
    [[nodiscard]] constexpr double value() const noexcept { return value_; }

    // e^{-v}, exactly 0 for +inf.
    [[nodiscard]] double exp_neg() const noexcept;

    friend ExtReal operator+(ExtReal a, ExtReal b) noexcept;
    friend ExtReal operator*(double c, ExtReal a);

    friend constexpr bool operator==(ExtReal a, ExtReal b) noexcept { return a.value_ == b.value_; }
    friend constexpr std::partial_ordering operator<=>(ExtReal a, ExtReal b) noexcept {
        return a.value_ <=> b.value_;
    }

    friend std::ostream& operator<<(std::ostream& os, ExtReal v);

private:
    struct Raw {};
    static constexpr double kInf = std::numeric_limits<double>::infinity();
    constexpr ExtReal(Raw, double v) noexcept : value_(v) {}

    double value_ = 0.0;
};

}  // namespace tubekernel
