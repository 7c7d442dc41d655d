#include <catch2/catch_amalgamated.hpp>

#include "fiberlab/experiment.hpp"

using namespace fiberlab;

TEST_CASE("format ids") {
    REQUIRE(format_id({FormatSpec::Kind::kIidQam, 4}) == "iid-qam64");
    REQUIRE(format_id({FormatSpec::Kind::kIidMb, 4, 5, 1.6}) == "iid-mb64");
    REQUIRE(format_id({FormatSpec::Kind::kEss1D, 4, 10, 1.6}) == "ess1d-n10");
    REQUIRE(format_id({FormatSpec::Kind::kEss4D, 4, 20, 1.6}) == "ess4d-n20");
    REQUIRE(format_id({FormatSpec::Kind::kGaussian}) == "gaussian");
    REQUIRE(format_id({FormatSpec::Kind::kQpsk}) == "qpsk");
}

TEST_CASE("make_stream honors slot counts and seeds for every kind") {
    for (auto kind : {FormatSpec::Kind::kIidQam, FormatSpec::Kind::kIidMb,
                      FormatSpec::Kind::kGaussian, FormatSpec::Kind::kQpsk,
                      FormatSpec::Kind::kEss1D, FormatSpec::Kind::kEss4D}) {
        FormatSpec f{kind, 4, 5, 1.6};
        auto a = make_stream(f, 1234, 9);  // not a multiple of n: truncation path
        REQUIRE(a.slots() == 1234);
        auto b = make_stream(f, 1234, 9);
        REQUIRE(a.x == b.x);
        double p = 0;
        for (std::size_t t = 0; t < a.slots(); ++t) p += std::norm(a.x[t]) + std::norm(a.y[t]);
        REQUIRE(p / double(a.slots()) == Catch::Approx(1.0).margin(1e-12));
    }
}

TEST_CASE("format_moments at w=1 matches the alphabet values") {
    auto m = format_moments({FormatSpec::Kind::kIidQam, 4}, 1, 400000, 3);
    REQUIRE(m.mu4 == Catch::Approx(1.3810).margin(0.01));
    auto g = format_moments({FormatSpec::Kind::kGaussian}, 1, 400000, 3);
    REQUIRE(g.mu4 == Catch::Approx(2.0).margin(0.02));
}

TEST_CASE("run_experiment selects the snr-optimal launch power") {
    LinkConfig link;
    link.r_sym = 5.5e9;
    link.delta_f_abs = 100.0 / 88.0 * 5.5e9;
    link.n_span = 2;
    link.steps_per_span = 10;
    link.samples_per_symbol = 8;
    link.symbols = 2048;
    // raise the power so the NLI knee falls inside the sweep at desk scale
    const std::vector<double> launch{4.0, 7.0, 10.0, 13.0, 16.0};
    const std::vector<std::uint64_t> seeds{4};
    auto res = run_experiment(link, {FormatSpec::Kind::kQpsk}, launch, seeds, 2);
    REQUIRE(res.points.size() == launch.size());
    REQUIRE(res.optimal_index > 0);
    REQUIRE(res.optimal_index < launch.size() - 1);
    // snr rises to the optimum, then falls
    for (std::size_t i = 1; i <= res.optimal_index; ++i)
        REQUIRE(res.points[i].snr_eff >= res.points[i - 1].snr_eff);
    for (std::size_t i = res.optimal_index + 1; i < res.points.size(); ++i)
        REQUIRE(res.points[i].snr_eff <= res.points[i - 1].snr_eff);
}

TEST_CASE("xpm calibration requires a multi-channel link") {
    LinkConfig link;
    link.n_ch = 1;
    REQUIRE_THROWS_AS(calibrate_kappas_ssfm(link, NliScope::kXpm), std::invalid_argument);
}

TEST_CASE("calibration is stable across seed sets") {
    LinkConfig link;
    link.r_sym = 5.5e9;
    link.delta_f_abs = 100.0 / 88.0 * 5.5e9;
    link.n_span = 2;
    link.steps_per_span = 10;
    link.samples_per_symbol = 4;
    link.symbols = std::size_t(1) << 13;
    CalibrationOptions a;
    a.launch_dbm = {8.0, 10.0, 12.0};  // desk powers scaled for a clean fit
    a.seeds = {41, 42};
    a.threads = 2;
    CalibrationOptions b = a;
    b.seeds = {43, 44};
    const KappaSet ka = calibrate_kappas_ssfm(link, NliScope::kSpm, a);
    const KappaSet kb = calibrate_kappas_ssfm(link, NliScope::kSpm, b);
    REQUIRE(std::abs(ka.kappa1 / kb.kappa1 - 1.0) < 0.1);
    REQUIRE(std::abs(ka.kappa2 / kb.kappa2 - 1.0) < 0.3);
    REQUIRE(ka.kappa2 > 0.0);
    REQUIRE(kb.kappa2 > 0.0);
}
