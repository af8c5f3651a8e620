#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "tubekernel/errors.hpp"
#include "tubekernel/ext_real.hpp"
#include "tubekernel/random.hpp"

using namespace tubekernel;

TEST_CASE("infinity absorbs finite values under addition") {
    const ExtReal inf = ExtReal::infinity();
    CHECK((ExtReal(3.0) + inf).is_infinite());
    CHECK((inf + ExtReal(-7.5)).is_infinite());
    CHECK((inf + inf).is_infinite());
    CHECK((ExtReal(1.5) + ExtReal(2.0)).value() == 3.5);
}

TEST_CASE("exp of minus infinity is exactly zero") {
    CHECK(ExtReal::infinity().exp_neg() == 0.0);
    CHECK(ExtReal(0.0).exp_neg() == 1.0);
    CHECK(ExtReal(2.0).exp_neg() == doctest::Approx(std::exp(-2.0)));
}

TEST_CASE("NaN and minus infinity are rejected") {
    CHECK_THROWS_AS(ExtReal(std::numeric_limits<double>::quiet_NaN()), InvalidArgument);
    CHECK_THROWS_AS(ExtReal(-std::numeric_limits<double>::infinity()), InvalidArgument);
}

TEST_CASE("order is total and infinity is the top element") {
    Rng rng(11);
    for (int i = 0; i < 1000; ++i) {
        const ExtReal a(rng.uniform(-1e6, 1e6)), b(rng.uniform(-1e6, 1e6));
        const bool lt = a < b, gt = a > b, eq = a == b;
        CHECK(static_cast<int>(lt) + static_cast<int>(gt) + static_cast<int>(eq) == 1);
        CHECK(a < ExtReal::infinity());
    }
}

TEST_CASE("non-negative scaling") {
    CHECK((2.0 * ExtReal(3.0)).value() == 6.0);
    CHECK((2.0 * ExtReal::infinity()).is_infinite());
    CHECK((0.0 * ExtReal::infinity()).value() == 0.0);
    CHECK_THROWS_AS(-1.0 * ExtReal(1.0), InvalidArgument);
}

TEST_CASE("printing") {
    std::ostringstream os;
    os << ExtReal::infinity() << " " << ExtReal(1.5);
    CHECK(os.str() == "inf 1.5");
}
