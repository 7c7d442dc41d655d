#include <catch2/catch_amalgamated.hpp>

#include "fiberlab/experiment.hpp"
#include "fiberlab/ssfm.hpp"

using namespace fiberlab;

namespace {

LinkConfig desk_config() {
    LinkConfig cfg;
    cfg.r_sym = 5.5e9;
    cfg.n_ch = 1;
    cfg.delta_f_abs = 100.0 / 88.0 * 5.5e9;
    cfg.l_span = 60e3;
    cfg.n_span = 2;
    cfg.steps_per_span = 50;
    cfg.samples_per_symbol = 8;
    cfg.symbols = std::size_t(1) << 13;
    return cfg;
}

}  // namespace

TEST_CASE("config validation") {
    LinkConfig cfg = desk_config();
    REQUIRE_NOTHROW(cfg.validate());
    SECTION("aliasing rejected") {
        cfg.n_ch = 9;
        cfg.delta_f_abs = 6.25e9;
        REQUIRE_THROWS_AS(cfg.validate(), ConfigError);
    }
    SECTION("overlapping channels rejected") {
        cfg.n_ch = 2;
        cfg.delta_f_abs = 5.0e9;
        REQUIRE_THROWS_AS(cfg.validate(), ConfigError);
    }
    SECTION("non-power-of-two grid rejected") {
        cfg.symbols = 1000;
        REQUIRE_THROWS_AS(cfg.validate(), ConfigError);
    }
}

TEST_CASE("launch power convention and transmitter power accuracy") {
    LinkConfig cfg = desk_config();
    cfg.r_sym = 88e9;
    cfg.delta_f_abs = 100e9;
    cfg.n_span = 1;
    const double p_ch = cfg.channel_power_w(-2.0);
    // -2 dBm per 100 GHz at 88 GBd, 10% roll-off: occupied fraction 0.968
    REQUIRE(p_ch == Catch::Approx(dbm_to_watt(-2.0) * 0.968).epsilon(1e-12));

    auto s = draw_qpsk_stream(cfg.symbols, 5);
    auto field = synthesize(std::vector<PdmSymbolStream>{s}, cfg, p_ch);
    REQUIRE(db10(field.total_power_w() / p_ch) == Catch::Approx(0.0).margin(0.01));
}

TEST_CASE("rrc spectrum is confined to the occupied band") {
    LinkConfig cfg = desk_config();
    auto s = draw_qpsk_stream(cfg.symbols, 6);
    auto field = synthesize(std::vector<PdmSymbolStream>{s}, cfg, 1e-3);
    const double in_band = band_power_w(field, 0.0, cfg.occupied_bandwidth());
    const double full = band_power_w(field, 0.0, cfg.sample_rate() * 0.999);
    REQUIRE(in_band == Catch::Approx(full).epsilon(1e-9));
    REQUIRE(db10((full - in_band + 1e-30) / full) < -40.0);
}

TEST_CASE("two channels put their power at the configured offsets") {
    LinkConfig cfg = desk_config();
    cfg.n_ch = 2;
    std::vector<PdmSymbolStream> s{draw_qpsk_stream(cfg.symbols, 1), draw_qpsk_stream(cfg.symbols, 2)};
    auto field = synthesize(s, cfg, 1e-3);
    const double off = cfg.delta_f_abs / 2.0;
    const double p_lo = band_power_w(field, -off, cfg.occupied_bandwidth());
    const double p_hi = band_power_w(field, +off, cfg.occupied_bandwidth());
    REQUIRE(p_lo == Catch::Approx(1e-3).epsilon(1e-6));
    REQUIRE(p_hi == Catch::Approx(1e-3).epsilon(1e-6));
    REQUIRE(field.total_power_w() == Catch::Approx(2e-3).epsilon(1e-6));
}

TEST_CASE("dispersion-only propagation conserves power") {
    LinkConfig cfg = desk_config();
    cfg.alpha_db_per_km = 0.0;
    cfg.gamma_nl = 0.0;
    auto s = draw_iid_stream(make_qam_alphabet(4), cfg.symbols, 9);
    auto field = synthesize(std::vector<PdmSymbolStream>{s}, cfg, 1e-3);
    const double before = field.total_power_w();
    propagate_span(field, cfg);
    REQUIRE(std::abs(field.total_power_w() / before - 1.0) < 1e-12);
    // the pulse actually dispersed: time-domain field changed
    auto s2 = synthesize(std::vector<PdmSymbolStream>{s}, cfg, 1e-3);
    double diff = 0;
    for (std::size_t i = 0; i < field.size(); ++i) diff += std::norm(field.x[i] - s2.x[i]);
    REQUIRE(diff > 1e-6);
}

TEST_CASE("nonlinear step is phase-only") {
    LinkConfig cfg = desk_config();
    cfg.alpha_db_per_km = 0.0;
    cfg.beta2_mag = 0.0;
    cfg.steps_per_span = 4;
    auto s = draw_iid_stream(make_qam_alphabet(4), cfg.symbols, 3);
    auto field = synthesize(std::vector<PdmSymbolStream>{s}, cfg, 2e-3);
    auto before = field;
    propagate_span(field, cfg);
    for (std::size_t i = 0; i < field.size(); i += 97) {
        REQUIRE(std::abs(field.x[i]) == Catch::Approx(std::abs(before.x[i])).margin(1e-12));
        REQUIRE(std::abs(field.y[i]) == Catch::Approx(std::abs(before.y[i])).margin(1e-12));
    }
}

TEST_CASE("cw spm phase matches (8/9) gamma P L exactly") {
    LinkConfig cfg = desk_config();
    cfg.alpha_db_per_km = 0.0;
    cfg.beta2_mag = 0.0;
    cfg.steps_per_span = 37;
    const double p_total = 3e-3;
    FieldGrid field;
    field.sample_rate = cfg.sample_rate();
    field.x.assign(cfg.grid_size(), cplx(std::sqrt(p_total / 2.0), 0.0));
    field.y.assign(cfg.grid_size(), cplx(std::sqrt(p_total / 2.0), 0.0));
    propagate_span(field, cfg);
    const double expected = (8.0 / 9.0) * cfg.gamma_nl * p_total * cfg.l_span;
    const double got = std::arg(field.x[1234] / cplx(std::sqrt(p_total / 2.0), 0.0));
    REQUIRE(std::abs(got - expected) / expected < 1e-6);
}

TEST_CASE("amplifier: noiseless hook and seeded reproducibility") {
    LinkConfig cfg = desk_config();
    auto s = draw_qpsk_stream(cfg.symbols, 1);
    auto field = synthesize(std::vector<PdmSymbolStream>{s}, cfg, 1e-3);
    SECTION("noiseless gain exactly compensates span loss") {
        cfg.ase_enabled = false;
        auto f2 = field;
        propagate_span(f2, cfg);
        Rng noise(1);
        amplify(f2, cfg, noise);
        REQUIRE(f2.total_power_w() == Catch::Approx(field.total_power_w()).epsilon(1e-9));
    }
    SECTION("same seed, same noise") {
        auto f1 = field, f2 = field;
        Rng n1(7), n2(7);
        amplify(f1, cfg, n1);
        amplify(f2, cfg, n2);
        REQUIRE(f1.x == f2.x);
        REQUIRE(f1.y == f2.y);
    }
}

TEST_CASE("ase accumulation matches the analytic formula") {
    LinkConfig cfg = desk_config();
    cfg.n_span = 4;
    cfg.gamma_nl = 0.0;
    FieldGrid field;  // signal off
    field.sample_rate = cfg.sample_rate();
    field.x.assign(cfg.grid_size(), 0.0);
    field.y.assign(cfg.grid_size(), 0.0);
    Rng noise(42);
    for (int span = 0; span < cfg.n_span; ++span) {
        propagate_span(field, cfg);
        amplify(field, cfg, noise);
    }
    const double bw = 20e9;
    const double measured = band_power_w(field, 0.0, bw);  // both polarizations
    const double expected = 2.0 * cfg.n_span * (cfg.span_gain() - 1.0) * kPlanck * cfg.center_freq *
                            cfg.spontaneous_factor() * bw;
    REQUIRE(std::abs(db10(measured / expected)) < 0.2);
}

TEST_CASE("back-to-back chain is transparent") {
    LinkConfig cfg = desk_config();
    cfg.l_span = 0.0;  // zero-length link: receiver compensation is the identity
    auto s = draw_iid_stream(make_qam_alphabet(4), cfg.symbols, 21);
    auto field = synthesize(std::vector<PdmSymbolStream>{s}, cfg, 1e-3);
    auto run = receive(field, cfg, 0, s);
    REQUIRE(run.snr_eff_db() > 55.0);
}

TEST_CASE("linear noiseless link recovers the symbols") {
    LinkConfig cfg = desk_config();
    RunSpec spec;
    spec.launch_dbm = 0.0;
    spec.with_ase = false;
    spec.with_nonlinearity = false;
    auto run = run_link(cfg, FormatSpec{FormatSpec::Kind::kIidQam, 4}, spec);
    REQUIRE(run.snr_eff_db() > 50.0);

    SECTION("receiver does not distort the stream statistics") {
        auto tx = make_stream(FormatSpec{FormatSpec::Kind::kIidQam, 4}, cfg.symbols,
                              mix_seed(spec.data_seed, 101));
        for (int w : {1, 4, 16}) {
            auto mt = windowed_moments(tx, w);
            auto mr = windowed_moments(run.rx_symbols, w);
            REQUIRE(mr.mu4_bar == Catch::Approx(mt.mu4_bar).margin(1e-6));
        }
    }
}

TEST_CASE("full runs are bit-for-bit reproducible") {
    LinkConfig cfg = desk_config();
    RunSpec spec;
    spec.launch_dbm = 1.0;
    auto a = run_link(cfg, FormatSpec{FormatSpec::Kind::kQpsk}, spec);
    auto b = run_link(cfg, FormatSpec{FormatSpec::Kind::kQpsk}, spec);
    REQUIRE(a.snr_eff == b.snr_eff);
    REQUIRE(a.rx_symbols.x == b.rx_symbols.x);
}

TEST_CASE("ase-only snr matches the analytic budget") {
    LinkConfig cfg = desk_config();
    const double launch_dbm = 0.0;
    const double p_ase = measure_ase_power(cfg, FormatSpec{FormatSpec::Kind::kQpsk}, 3, launch_dbm);
    // matched-filter noise bandwidth of an RRC pair is exactly r_sym
    const double expected = 2.0 * cfg.n_span * (cfg.span_gain() - 1.0) * kPlanck * cfg.center_freq *
                            cfg.spontaneous_factor() * cfg.r_sym;
    REQUIRE(std::abs(db10(p_ase / expected)) < 0.2);
}

TEST_CASE("nli grows with the cube of the launch power") {
    LinkConfig cfg = desk_config();
    std::vector<double> launch{-2.0, -1.0, 0.0};
    std::vector<std::uint64_t> seeds{1};
    auto points = measure_nli_sweep(cfg, FormatSpec{FormatSpec::Kind::kIidQam, 4}, launch, seeds,
                                    /*with_ase=*/false);
    std::vector<double> lp, ln;
    for (const auto& p : points) {
        REQUIRE(p.p_nli_w > 0.0);
        lp.push_back(std::log(p.launch_w));
        ln.push_back(std::log(p.p_nli_w));
    }
    const double slope = fit_line(lp, ln).slope;
    REQUIRE(slope == Catch::Approx(3.0).margin(0.1));
}

TEST_CASE("step-size convergence at desk scale") {
    LinkConfig cfg = desk_config();
    cfg.symbols = std::size_t(1) << 12;
    std::vector<double> launch{0.0};
    std::vector<std::uint64_t> seeds{5};
    auto coarse = measure_nli_sweep(cfg, FormatSpec{FormatSpec::Kind::kIidQam, 4}, launch, seeds, false);
    cfg.steps_per_span *= 2;
    auto fine = measure_nli_sweep(cfg, FormatSpec{FormatSpec::Kind::kIidQam, 4}, launch, seeds, false);
    REQUIRE(std::abs(db10(coarse[0].p_nli_w / fine[0].p_nli_w)) < 0.1);
}
