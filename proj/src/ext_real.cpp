#include "tubekernel/ext_real.hpp"

#include <cmath>

#include "tubekernel/errors.hpp"

namespace tubekernel {

ExtReal::ExtReal(double v) : value_(v) {
    if (std::isnan(v)) throw InvalidArgument("ExtReal: NaN is not an extended real");
    if (v == -kInf) throw InvalidArgument("ExtReal: -inf is not allowed");
}

double ExtReal::exp_neg() const noexcept { return is_infinite() ? 0.0 : std::exp(-value_); }

ExtReal operator+(ExtReal a, ExtReal b) noexcept {
    if (a.is_infinite() || b.is_infinite()) return ExtReal::infinity();
    return ExtReal(ExtReal::Raw{}, a.value_ + b.value_);
}

ExtReal operator*(double c, ExtReal a) {
    if (!(c >= 0.0)) throw InvalidArgument("ExtReal: only non-negative scaling is defined");
    if (a.is_infinite()) return c == 0.0 ? ExtReal(0.0) : ExtReal::infinity();
    return ExtReal(c * a.value_);
}

std::ostream& operator<<(std::ostream& os, ExtReal v) {
    if (v.is_infinite()) return os << "inf";
    return os << v.value_;
}

}  // namespace tubekernel
