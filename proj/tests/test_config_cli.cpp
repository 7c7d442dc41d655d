#include <catch2/catch_amalgamated.hpp>

#include "fiberlab/commands.hpp"
#include "fiberlab/config.hpp"

using namespace fiberlab;

namespace {

const char* kSampleConfig = R"(# sample experiment
[modulation]
type = ess1d
M = 4
n = 5
H = 1.6

[link]
r_sym = 5.5e9
n_ch = 1
delta_f = 1.136
n_span = 2
steps_per_span = 20
samples_per_symbol = 8
symbols = 4096

[analysis]
windows = 1,2,4,8, pow2:16:64
launch_dbm = -2:0:1
seeds = 3,4
slots = 50000
)";

}  // namespace

TEST_CASE("config parsing") {
    auto cfg = parse_experiment_config(ConfigParser(kSampleConfig, "sample"));
    REQUIRE(cfg.modulation.kind == FormatSpec::Kind::kEss1D);
    REQUIRE(cfg.modulation.n == 5);
    REQUIRE(cfg.link.r_sym == Catch::Approx(5.5e9));
    REQUIRE(cfg.link.delta_f_abs == Catch::Approx(1.136 * 5.5e9));
    REQUIRE(cfg.link.symbols == 4096);
    REQUIRE(cfg.analysis.windows == std::vector<int>{1, 2, 4, 8, 16, 32, 64});
    REQUIRE(cfg.analysis.launch_dbm == std::vector<double>{-2, -1, 0});
    REQUIRE(cfg.analysis.seeds == std::vector<std::uint64_t>{3, 4});
}

TEST_CASE("config errors carry line anchors") {
    SECTION("unknown key") {
        const std::string text = "[link]\nr_sym = 1e9\nbogus_key = 3\n";
        try {
            parse_experiment_config(ConfigParser(text, "bad.ini"));
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            REQUIRE(std::string(e.what()).find("bad.ini:3") != std::string::npos);
            REQUIRE(std::string(e.what()).find("bogus_key") != std::string::npos);
        }
    }
    SECTION("malformed line") {
        REQUIRE_THROWS_AS(ConfigParser("[link]\nr_sym\n", "x"), ConfigError);
    }
    SECTION("duplicate key") {
        REQUIRE_THROWS_AS(ConfigParser("[link]\na = 1\na = 2\n", "x"), ConfigError);
    }
    SECTION("bad number") {
        const std::string text = "[link]\nr_sym = fast\n";
        REQUIRE_THROWS_AS(parse_experiment_config(ConfigParser(text, "x")), ConfigError);
    }
    SECTION("infeasible H") {
        const std::string text = "[modulation]\ntype = ess1d\nH = 2.5\n";
        REQUIRE_THROWS_AS(parse_experiment_config(ConfigParser(text, "x")), ConfigError);
    }
}

TEST_CASE("effective config echo round-trips") {
    auto cfg = parse_experiment_config(ConfigParser(kSampleConfig, "sample"));
    const std::string echoed = echo_config(cfg);
    auto cfg2 = parse_experiment_config(ConfigParser(echoed, "echo"));
    REQUIRE(echo_config(cfg2) == echoed);
    REQUIRE(cfg2.link.delta_f_abs == cfg.link.delta_f_abs);
    REQUIRE(cfg2.analysis.windows == cfg.analysis.windows);
    REQUIRE(cfg2.compare.formats.size() == cfg.compare.formats.size());
}

TEST_CASE("kappa record round-trips through the text format") {
    KappaSet k;
    k.kappa1 = 123.456789012345;
    k.kappa2 = -7.25;
    k.kappa3 = 0.000123;
    k.scope = NliScope::kSpm;
    k.link_fingerprint = "rsym=5.5e+09;nch=1";
    k.seeds = {11, 12};
    k.max_fit_residual = 0.0123;
    std::ostringstream os;
    save_kappa_record(os, k);
    const std::string path = "test_kappa_record.txt";
    {
        std::ofstream f(path);
        f << os.str();
    }
    auto rec = load_kappa_record(path);
    std::remove(path.c_str());
    REQUIRE(rec.spm.kappa1 == k.kappa1);
    REQUIRE(rec.spm.kappa2 == k.kappa2);
    REQUIRE(rec.spm.kappa3 == k.kappa3);
    REQUIRE(rec.spm.link_fingerprint == k.link_fingerprint);
    REQUIRE(rec.spm.seeds == k.seeds);
    REQUIRE_FALSE(rec.xpm.has_value());
}

TEST_CASE("cmd_moments emits the profile csv") {
    auto cfg = parse_experiment_config(ConfigParser(kSampleConfig, "sample"));
    auto out = cmd_moments(cfg, 2);
    const auto& csv = out.content("moments_ess1d-n5.csv");
    REQUIRE(csv.rfind("w,m2_bar,m3_bar,mu4_bar,mu6_bar,n_positions\n", 0) == 0);
    REQUIRE(std::count(csv.begin(), csv.end(), '\n') == 1 + 7);
    // determinism: identical config + seeds -> byte-identical artifact
    auto out2 = cmd_moments(cfg, 1);
    REQUIRE(out2.content("moments_ess1d-n5.csv") == csv);
}

TEST_CASE("cmd_windows reproduces the closed-form anchors") {
    auto cfg = parse_experiment_config(ConfigParser(kSampleConfig, "sample"));
    cfg.windows_table.r_sym_gbd = {88.0};
    cfg.windows_table.n_span = {1, 72};
    auto out = cmd_windows(cfg, 1);
    const auto& csv = out.content("windows.csv");
    REQUIRE(csv.find("88,1,") != std::string::npos);
    REQUIRE(csv.find(",20,") != std::string::npos);    // w_spm at 1 span
    REQUIRE(csv.find("88,72,") != std::string::npos);
    REQUIRE(csv.find(",1471,") != std::string::npos);  // w_spm at 72 spans
}

TEST_CASE("cmd_shape_info emits codec summaries") {
    auto cfg = parse_experiment_config(ConfigParser(kSampleConfig, "sample"));
    auto out = cmd_shape_info(cfg, 1);
    const auto& csv = out.content("shape_info.csv");
    REQUIRE(csv.rfind(codec_summary_csv_header(), 0) == 0);
    REQUIRE(csv.find("4,5,0,") != std::string::npos);  // M=4, n=5, 1D
    REQUIRE(csv.find(",32,1.6,") != std::string::npos);  // 32-bit payload at H=1.6

    cfg.modulation.kind = FormatSpec::Kind::kIidQam;
    REQUIRE_THROWS_AS(cmd_shape_info(cfg, 1), ConfigError);
}

TEST_CASE("cmd_calibrate and cmd_compare on a tiny link") {
    auto cfg = parse_experiment_config(ConfigParser(kSampleConfig, "sample"));
    cfg.link.symbols = 4096;
    cfg.link.steps_per_span = 10;
    cfg.link.samples_per_symbol = 4;
    cfg.analysis.launch_dbm = {8.0, 10.0};
    cfg.analysis.seeds = {3};
    cfg.analysis.slots = 40000;
    cfg.analysis.kappa_file = "tiny_kappa.txt";
    cfg.compare.calibration.launch_dbm = {8.0, 10.0, 12.0};
    cfg.compare.calibration.seeds = {5};
    cfg.compare.formats = {parse_format_token("qpsk", cfg.modulation),
                           parse_format_token("iid-qam", cfg.modulation),
                           parse_format_token("ess1d:5", cfg.modulation)};

    auto cal = cmd_calibrate(cfg, 2);
    const auto& kappa_txt = cal.content("tiny_kappa.txt");
    REQUIRE(kappa_txt.find("[kappa.spm]") != std::string::npos);
    {
        std::ofstream f(cfg.analysis.kappa_file);
        f << kappa_txt;
    }
    auto rec = load_kappa_record(cfg.analysis.kappa_file);
    REQUIRE(rec.spm.kappa1 > 0.0);
    REQUIRE_FALSE(rec.xpm.has_value());  // single-channel link: SPM only

    // compare picks up the persisted record (fingerprint match, no recalibration)
    cfg.compare.auto_calibrate = false;
    auto out = cmd_compare(cfg, 2);
    std::remove(cfg.analysis.kappa_file.c_str());
    const auto& csv = out.content("compare.csv");
    REQUIRE(csv.rfind("format,n,launch_dbm,", 0) == 0);
    REQUIRE(csv.find("ess1d-n5") != std::string::npos);
    REQUIRE(csv.find("# spearman_nli_wopt") != std::string::npos);
    REQUIRE(csv.find("# max_abs_dsnr_wopt_db") != std::string::npos);

    // missing kappa without auto_calibrate is an actionable config error
    cfg.analysis.kappa_file = "no_such_kappa.txt";
    REQUIRE_THROWS_AS(cmd_compare(cfg, 1), ConfigError);
}

TEST_CASE("cmd_simulate emits one row per launch and seed") {
    auto cfg = parse_experiment_config(ConfigParser(kSampleConfig, "sample"));
    cfg.modulation = parse_format_token("qpsk", cfg.modulation);
    cfg.link.symbols = 2048;
    cfg.link.steps_per_span = 10;
    cfg.analysis.launch_dbm = {-1.0, 0.0};
    cfg.analysis.seeds = {3, 4};
    auto out = cmd_simulate(cfg, 2);
    const auto& csv = out.content("simulate_qpsk.csv");
    REQUIRE(csv.rfind("launch_dbm,snr_eff_db,p_ase_dbm,p_nli_dbm,channel,seed\n", 0) == 0);
    REQUIRE(std::count(csv.begin(), csv.end(), '\n') == 1 + 4 + 1);  // header + rows + optimum
    REQUIRE(csv.find("# optimal_launch_dbm") != std::string::npos);
    // determinism across thread counts
    auto out2 = cmd_simulate(cfg, 1);
    REQUIRE(out2.content("simulate_qpsk.csv") == csv);
}
