#include <cmath>

#include "doctest.h"
#include "rng.hpp"

using mapos::Rng;

TEST_CASE("same seed reproduces the stream") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("substreams with different ids diverge") {
    Rng a = Rng::substream(7, {1, 2});
    Rng b = Rng::substream(7, {1, 3});
    int same = 0;
    for (int i = 0; i < 32; ++i)
        if (a.next_u64() == b.next_u64()) ++same;
    CHECK(same == 0);
}

TEST_CASE("uniform01 stays in range and has ~1/2 mean") {
    Rng r(1);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        double u = r.uniform01();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    CHECK(std::abs(sum / n - 0.5) < 0.01);
}

TEST_CASE("normal variates have ~unit variance") {
    Rng r(2);
    const int n = 100000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        double z = r.normal();
        sum += z;
        sq += z * z;
    }
    double mean = sum / n;
    double var = sq / n - mean * mean;
    CHECK(std::abs(mean) < 0.02);
    CHECK(std::abs(var - 1.0) < 0.03);
}

TEST_CASE("complex normal total variance matches request") {
    Rng r(3);
    const int n = 50000;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += std::norm(r.complex_normal(2.0));
    CHECK(std::abs(acc / n - 2.0) < 0.1);
}
