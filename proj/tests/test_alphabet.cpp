#include <catch2/catch_amalgamated.hpp>

#include "fiberlab/alphabet.hpp"
#include "oracles.hpp"

using namespace fiberlab;

TEST_CASE("qam alphabet levels and probabilities") {
    auto a1 = make_qam_alphabet(1);
    REQUIRE(a1.levels == std::vector<double>{1.0});
    REQUIRE(a1.probabilities == std::vector<double>{1.0});

    auto a2 = make_qam_alphabet(2);
    REQUIRE(a2.levels == std::vector<double>{1.0, 3.0});
    REQUIRE(a2.probabilities[0] == Catch::Approx(0.5));

    auto a4 = make_qam_alphabet(4);
    REQUIRE(a4.levels == std::vector<double>{1.0, 3.0, 5.0, 7.0});
    for (double p : a4.probabilities) REQUIRE(p == Catch::Approx(0.25));

    REQUIRE_THROWS_AS(make_qam_alphabet(0), std::invalid_argument);
}

TEST_CASE("mb alphabet hits the target entropy") {
    SECTION("maximum entropy gives the uniform distribution") {
        auto a = make_mb_alphabet(4, 2.0);
        for (double p : a.probabilities) REQUIRE(p == Catch::Approx(0.25).margin(1e-12));
    }
    SECTION("bisected lambda reproduces H = 1.6 within 1e-9 bits") {
        auto a = make_mb_alphabet(4, 1.6);
        double h = 0.0;
        for (double p : a.probabilities) h -= p * std::log2(p);  // direct oracle
        REQUIRE(std::abs(h - 1.6) < 1e-9);
        // Maxwell-Boltzmann shape: log-probabilities linear in a^2
        const double l1 = std::log(a.probabilities[0] / a.probabilities[1]) / (9.0 - 1.0);
        const double l2 = std::log(a.probabilities[1] / a.probabilities[2]) / (25.0 - 9.0);
        REQUIRE(l1 == Catch::Approx(l2).epsilon(1e-6));
    }
    SECTION("small targets concentrate on the lowest level") {
        auto a = make_mb_alphabet(4, 0.05);
        REQUIRE(a.probabilities[0] > 0.99);
    }
    SECTION("infeasible target") {
        REQUIRE_THROWS_AS(make_mb_alphabet(4, 2.5), std::invalid_argument);
    }
}

TEST_CASE("iid stream determinism and normalization") {
    auto a = make_qam_alphabet(4);
    auto s1 = draw_iid_stream(a, 5000, 42);
    auto s2 = draw_iid_stream(a, 5000, 42);
    REQUIRE(s1.x == s2.x);
    REQUIRE(s1.y == s2.y);

    auto s3 = draw_iid_stream(a, 5000, 43);
    REQUIRE(s1.x != s3.x);

    double mean = 0.0;
    for (std::size_t t = 0; t < s1.slots(); ++t) mean += std::norm(s1.x[t]) + std::norm(s1.y[t]);
    mean /= double(s1.slots());
    REQUIRE(mean == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("qpsk stream has constant per-polarization power") {
    auto s = draw_qpsk_stream(64, 7);
    for (std::size_t t = 0; t < s.slots(); ++t) {
        REQUIRE(std::norm(s.x[t]) == Catch::Approx(0.5).margin(1e-12));
        REQUIRE(std::norm(s.y[t]) == Catch::Approx(0.5).margin(1e-12));
    }
}

TEST_CASE("classical moments: QPSK") {
    auto m = classical_moments(draw_qpsk_stream(10000, 1));
    REQUIRE(m.mu4 == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(m.mu6 == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(m.m1 == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("classical moments: complex Gaussian") {
    auto m = classical_moments(draw_gaussian_stream(1000000, 3));
    REQUIRE(m.mu4 == Catch::Approx(2.0).margin(0.02));
    REQUIRE(m.mu6 == Catch::Approx(6.0).margin(0.25));
}

TEST_CASE("classical moments: uniform 64-QAM against enumeration") {
    auto a = make_qam_alphabet(4);

    // exact alphabet moments first
    REQUIRE(a.moment(2) == Catch::Approx(21.0));
    REQUIRE(a.moment(4) == Catch::Approx(777.0));
    REQUIRE(a.moment(6) == Catch::Approx(33501.0));
    auto ref = oracle::enumerate_complex_moments(a);
    REQUIRE(ref.mu4 == Catch::Approx(2436.0 / (42.0 * 42.0)).epsilon(1e-12));
    REQUIRE(ref.mu6 == Catch::Approx(164904.0 / (42.0 * 42.0 * 42.0)).epsilon(1e-12));

    auto closed = iid_complex_moments(a);
    REQUIRE(closed.mu4 == Catch::Approx(ref.mu4).epsilon(1e-12));
    REQUIRE(closed.mu6 == Catch::Approx(ref.mu6).epsilon(1e-12));

    auto m = classical_moments(draw_iid_stream(a, 1000000, 11));
    REQUIRE(m.mu4 == Catch::Approx(1.3810).margin(0.005));
    REQUIRE(m.mu6 == Catch::Approx(2.2258).margin(0.02));
}

TEST_CASE("moment identities with empirical centering") {
    auto m = classical_moments(draw_iid_stream(make_mb_alphabet(4, 1.6), 20000, 5));
    REQUIRE(m.m1 == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(m.mu4 == Catch::Approx(m.m2 + 1.0).margin(1e-12));
    REQUIRE(m.mu6 == Catch::Approx(m.m3 + 3.0 * m.m2 + 1.0).margin(1e-12));
}

TEST_CASE("Jensen orderings for unit-mean power") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        auto m = classical_moments(draw_iid_stream(make_mb_alphabet(4, 1.2), 5000, seed));
        REQUIRE(m.mu4 >= 1.0);
        REQUIRE(m.mu6 >= m.mu4);
    }
}

TEST_CASE("monte-carlo moments converge to alphabet moments") {
    auto a = make_mb_alphabet(4, 1.6);
    auto ref = oracle::enumerate_complex_moments(a);
    auto m = classical_moments(draw_iid_stream(a, 2000000, 99));
    REQUIRE(m.mu4 == Catch::Approx(ref.mu4).margin(0.01));
    REQUIRE(m.mu6 == Catch::Approx(ref.mu6).margin(0.06));
}

TEST_CASE("classical moments reject an empty stream") {
    PdmSymbolStream s;
    REQUIRE_THROWS_AS(classical_moments(s), std::invalid_argument);
}
