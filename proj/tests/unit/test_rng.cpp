#include <catch2/catch_amalgamated.hpp>

#include "tsslab/errors.hpp"
#include "tsslab/rng.hpp"

using tsslab::RngStream;

TEST_CASE("seeded stream is reproducible and pinned", "[rng]") {
    RngStream a(42);
    CHECK(a.next_u64() == 15021278609987233951ull);
    CHECK(a.next_u64() == 5881210131331364753ull);
    CHECK(a.next_u64() == 18149643915985481100ull);

    RngStream b(42);
    CHECK(b.uniform() == Catch::Approx(0.81430514512290986).epsilon(0.0));
    CHECK(b.uniform() == Catch::Approx(0.31882104006166112).epsilon(0.0));
}

TEST_CASE("distinct seeds and substreams decorrelate", "[rng]") {
    RngStream a(1), b(2);
    bool all_equal = true;
    for (int i = 0; i < 16; ++i) all_equal = all_equal && a.next_u64() == b.next_u64();
    CHECK_FALSE(all_equal);

    RngStream s0 = RngStream::substream(7, 0);
    RngStream s1 = RngStream::substream(7, 1);
    CHECK(s0.next_u64() != s1.next_u64());

    // replicate streams must be recoverable independently of draw order
    RngStream again = RngStream::substream(7, 0);
    RngStream s0b = RngStream::substream(7, 0);
    CHECK(again.next_u64() == s0b.next_u64());
}

TEST_CASE("uniform lies in [0,1) with the right mean", "[rng]") {
    RngStream r(11);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double u = r.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    CHECK(sum / n == Catch::Approx(0.5).margin(0.005));
}

TEST_CASE("exponential has the requested mean and rejects bad rates", "[rng]") {
    RngStream r(13);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double e = r.exponential(2.0);
        REQUIRE(e >= 0.0);
        sum += e;
    }
    CHECK(sum / n == Catch::Approx(0.5).margin(0.01));
    CHECK_THROWS_AS(r.exponential(0.0), tsslab::PreconditionError);
    CHECK_THROWS_AS(r.exponential(-1.0), tsslab::PreconditionError);
}

TEST_CASE("normal moments match the standard law", "[rng]") {
    RngStream r(17);
    double sum = 0.0, sq = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double z = r.normal();
        sum += z;
        sq += z * z;
    }
    const double mean = sum / n;
    CHECK(mean == Catch::Approx(0.0).margin(0.02));
    CHECK(sq / n - mean * mean == Catch::Approx(1.0).margin(0.05));
}

TEST_CASE("uniform_index stays in range and is unbiased", "[rng]") {
    RngStream r(19);
    const std::uint64_t n = 7;
    std::uint64_t counts[7] = {0};
    const int draws = 70000;
    for (int i = 0; i < draws; ++i) {
        const std::uint64_t k = r.uniform_index(n);
        REQUIRE(k < n);
        ++counts[k];
    }
    // each bin ~ Binomial(draws, 1/7): sd ~ 92, allow 5 sd
    for (std::uint64_t c : counts) {
        CHECK(c > 10000 - 5 * 92);
        CHECK(c < 10000 + 5 * 92);
    }
}
