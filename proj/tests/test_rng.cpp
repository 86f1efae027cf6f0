#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>
#include <vector>

#include "lls/rng.hpp"

using namespace lls;

TEST_CASE("same seed reproduces the stream") {
    Xoshiro256pp a(42), b(42);
    for (int i = 0; i < 1000; ++i) CHECK(a() == b());
}

TEST_CASE("derived streams differ and are order-free") {
    std::set<std::uint64_t> seeds;
    for (std::uint64_t r = 0; r < 1000; ++r) seeds.insert(derive_seed(99, r));
    CHECK(seeds.size() == 1000);
    CHECK(derive_seed(99, 3) == derive_seed(99, 3));
    CHECK(derive_seed(99, 3) != derive_seed(100, 3));
}

TEST_CASE("uniform01 stays in [0,1) and looks uniform") {
    Xoshiro256pp rng(7);
    double sum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform01();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    // mean within 5 sigma of 1/2 (sigma = 1/sqrt(12 n))
    CHECK(std::abs(sum / n - 0.5) < 5.0 / std::sqrt(12.0 * n));
}

TEST_CASE("categorical never picks zero-probability categories") {
    Xoshiro256pp rng(13);
    const std::vector<double> probs = {0.0, 0.3, 0.0, 0.7, 0.0};
    for (int i = 0; i < 5000; ++i) {
        const int pick = rng.categorical(probs);
        CHECK((pick == 1 || pick == 3));
    }
}

TEST_CASE("categorical frequencies match probabilities") {
    Xoshiro256pp rng(1234);
    const std::vector<double> probs = {0.2, 0.5, 0.3};
    std::vector<int> counts(3, 0);
    const int n = 100000;
    for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(rng.categorical(probs))];
    for (int c = 0; c < 3; ++c) {
        const double se = std::sqrt(probs[static_cast<std::size_t>(c)] *
                                    (1 - probs[static_cast<std::size_t>(c)]) / n);
        CHECK(std::abs(counts[static_cast<std::size_t>(c)] / double(n) -
                       probs[static_cast<std::size_t>(c)]) < 4 * se);
    }
}
