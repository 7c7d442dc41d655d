#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "fiberlab/egn.hpp"
#include "fiberlab/shaping.hpp"
#include "fiberlab/ssfm.hpp"
#include "fiberlab/util.hpp"
#include "fiberlab/windowed_moments.hpp"

namespace fiberlab {

/// Modulation selector used across the CLI, the simulator and the EGN
/// pipeline.
struct FormatSpec {
    enum class Kind { kIidQam, kIidMb, kGaussian, kQpsk, kEss1D, kEss4D };
    Kind kind = Kind::kIidQam;
    int M = 4;          // amplitude count per 1D dimension
    int n = 5;          // shaping block length in PDM slots (ESS kinds)
    double H = 1.6;     // bits per positive 1D symbol (MB and ESS kinds)
    long inner_cap = 0; // 4D inner slot-energy cap; 0 = smallest feasible
};

inline std::string format_id(const FormatSpec& f) {
    std::ostringstream os;
    switch (f.kind) {
        case FormatSpec::Kind::kIidQam: os << "iid-qam" << (f.M * f.M * 4); break;
        case FormatSpec::Kind::kIidMb: os << "iid-mb" << (f.M * f.M * 4); break;
        case FormatSpec::Kind::kGaussian: return "gaussian";
        case FormatSpec::Kind::kQpsk: return "qpsk";
        case FormatSpec::Kind::kEss1D: os << "ess1d-n" << f.n; break;
        case FormatSpec::Kind::kEss4D: os << "ess4d-n" << f.n; break;
    }
    return os.str();
}

namespace detail {

inline std::shared_ptr<const EssCodec1D> cached_codec_1d(int M, int n, double H) {
    static std::mutex mu;
    static std::map<std::tuple<int, int, long long>, std::shared_ptr<const EssCodec1D>> cache;
    const auto key = std::make_tuple(M, n, static_cast<long long>(std::llround(H * 1e9)));
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto codec = std::make_shared<const EssCodec1D>(EssCodec1D::for_rate(M, n, H));
    cache.emplace(key, codec);
    return codec;
}

inline std::shared_ptr<const EssCodec4D> cached_codec_4d(int M, int n, double H, long inner_cap) {
    static std::mutex mu;
    static std::map<std::tuple<int, int, long long, long>, std::shared_ptr<const EssCodec4D>> cache;
    const auto key = std::make_tuple(M, n, static_cast<long long>(std::llround(H * 1e9)), inner_cap);
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto codec = std::make_shared<const EssCodec4D>(EssCodec4D::for_rate(M, n, H, inner_cap));
    cache.emplace(key, codec);
    return codec;
}

inline PdmSymbolStream truncate_stream(PdmSymbolStream s, std::size_t slots) {
    if (s.slots() == slots) return s;
    s.x.resize(slots);
    s.y.resize(slots);
    return normalize_stream(std::move(s.x), std::move(s.y));
}

}  // namespace detail

inline PdmSymbolStream make_stream(const FormatSpec& f, std::size_t slots, std::uint64_t seed) {
    switch (f.kind) {
        case FormatSpec::Kind::kIidQam:
            return draw_iid_stream(make_qam_alphabet(f.M), slots, seed);
        case FormatSpec::Kind::kIidMb:
            return draw_iid_stream(make_mb_alphabet(f.M, f.H), slots, seed);
        case FormatSpec::Kind::kGaussian:
            return draw_gaussian_stream(slots, seed);
        case FormatSpec::Kind::kQpsk:
            return draw_qpsk_stream(slots, seed);
        case FormatSpec::Kind::kEss1D: {
            auto codec = detail::cached_codec_1d(f.M, f.n, f.H);
            const std::size_t blocks = (slots + f.n - 1) / f.n;
            return detail::truncate_stream(shaped_stream(*codec, blocks, seed), slots);
        }
        case FormatSpec::Kind::kEss4D: {
            auto codec = detail::cached_codec_4d(f.M, f.n, f.H, f.inner_cap);
            const std::size_t blocks = (slots + f.n - 1) / f.n;
            return detail::truncate_stream(shaped_stream(*codec, blocks, seed), slots);
        }
    }
    throw std::logic_error("make_stream: unknown format kind");
}

/// Windowed standardized moments of a freshly generated stream of the format.
inline MomentPair format_moments(const FormatSpec& f, int w, std::size_t slots, std::uint64_t seed) {
    const auto m = windowed_moments(make_stream(f, std::max<std::size_t>(slots, 100 * w), seed), w);
    return {m.mu4_bar, m.mu6_bar};
}

struct RunSpec {
    double launch_dbm = 0;  // per ref_bandwidth (spectral-density convention)
    std::uint64_t data_seed = 1;
    std::uint64_t noise_seed = 1;
    bool with_ase = true;
    bool with_nonlinearity = true;
};

/// Full TX -> fiber -> RX chain at one launch power. The channel under test is
/// the center one.
inline MeasuredRun run_link(const LinkConfig& link, const FormatSpec& format, const RunSpec& spec) {
    LinkConfig cfg = link;
    if (!spec.with_ase) cfg.ase_enabled = false;
    if (!spec.with_nonlinearity) cfg.gamma_nl = 0.0;
    cfg.validate();
    const double p_ch = cfg.channel_power_w(spec.launch_dbm);
    std::vector<PdmSymbolStream> streams;
    streams.reserve(cfg.n_ch);
    for (int ch = 0; ch < cfg.n_ch; ++ch)
        streams.push_back(make_stream(format, cfg.symbols, mix_seed(spec.data_seed, 101 + ch)));
    FieldGrid field = synthesize(streams, cfg, p_ch);
    Rng noise = Rng::fork(spec.noise_seed, 0xa5e);
    for (int span = 0; span < cfg.n_span; ++span) {
        propagate_span(field, cfg);
        amplify(field, cfg, noise);
    }
    const int cut = (cfg.n_ch - 1) / 2;
    MeasuredRun run = receive(field, cfg, cut, streams[cut]);
    run.launch_ch_w = p_ch;
    return run;
}

/// Filtered ASE power in the matched band of the channel under test, from a
/// gamma = 0 run (Eq.-(18)-style accounting: P_ASE = P / SNR_linear).
inline double measure_ase_power(const LinkConfig& link, const FormatSpec& format,
                                std::uint64_t seed, double launch_dbm) {
    RunSpec spec;
    spec.launch_dbm = launch_dbm;
    spec.data_seed = seed;
    spec.noise_seed = seed;
    spec.with_nonlinearity = false;
    const MeasuredRun r = run_link(link, format, spec);
    return r.launch_ch_w / r.snr_eff;
}

struct NliPoint {
    double launch_dbm = 0;
    double launch_w = 0;   // per-channel power of the channel under test
    double snr_eff = 0;    // linear, averaged over seeds
    double p_ase_w = 0;
    double p_nli_w = 0;
};

/// One seed of the launch-power sweep with NLI extraction. With ASE on, P_NLI
/// comes from P/SNR minus the ASE-only measurement at a matched noise seed;
/// without ASE the residual is the NLI directly.
inline std::vector<NliPoint> measure_nli_seed(const LinkConfig& link, const FormatSpec& format,
                                              std::span<const double> launch_dbm, std::uint64_t seed,
                                              bool with_ase) {
    std::vector<NliPoint> out(launch_dbm.size());
    const double p_ase = with_ase ? measure_ase_power(link, format, seed, launch_dbm[0]) : 0.0;
    for (std::size_t i = 0; i < launch_dbm.size(); ++i) {
        RunSpec spec;
        spec.launch_dbm = launch_dbm[i];
        spec.data_seed = seed;
        spec.noise_seed = seed;
        spec.with_ase = with_ase;
        const MeasuredRun r = run_link(link, format, spec);
        out[i].launch_dbm = launch_dbm[i];
        out[i].launch_w = r.launch_ch_w;
        out[i].snr_eff = r.snr_eff;
        out[i].p_ase_w = p_ase;
        out[i].p_nli_w = r.launch_ch_w / r.snr_eff - p_ase;
    }
    return out;
}

/// Seed-averaged sweep; independent seeds may run concurrently.
inline std::vector<NliPoint> measure_nli_sweep(const LinkConfig& link, const FormatSpec& format,
                                               std::span<const double> launch_dbm,
                                               std::span<const std::uint64_t> seeds, bool with_ase,
                                               int threads = 1) {
    if (launch_dbm.empty() || seeds.empty())
        throw std::invalid_argument("measure_nli_sweep: empty sweep or seed list");
    std::vector<std::vector<NliPoint>> per_seed(seeds.size());
    parallel_for(seeds.size(), threads, [&](std::size_t s) {
        per_seed[s] = measure_nli_seed(link, format, launch_dbm, seeds[s], with_ase);
    });
    std::vector<NliPoint> out(launch_dbm.size());
    for (std::size_t i = 0; i < launch_dbm.size(); ++i) {
        out[i].launch_dbm = launch_dbm[i];
        out[i].launch_w = per_seed[0][i].launch_w;
        for (const auto& ps : per_seed) {
            out[i].snr_eff += ps[i].snr_eff;
            out[i].p_ase_w += ps[i].p_ase_w;
            out[i].p_nli_w += ps[i].p_nli_w;
        }
        const double inv = 1.0 / static_cast<double>(seeds.size());
        out[i].snr_eff *= inv;
        out[i].p_ase_w *= inv;
        out[i].p_nli_w *= inv;
    }
    return out;
}

/// Spec'd experiment driver: sweep, extract, and report the SNR-optimal point.
struct ExperimentResult {
    std::vector<NliPoint> points;
    std::size_t optimal_index = 0;  // maximizes effective SNR
};

inline ExperimentResult run_experiment(const LinkConfig& link, const FormatSpec& format,
                                       std::span<const double> launch_dbm,
                                       std::span<const std::uint64_t> seeds, int threads = 1) {
    ExperimentResult res;
    res.points = measure_nli_sweep(link, format, launch_dbm, seeds, link.ase_enabled, threads);
    for (std::size_t i = 1; i < res.points.size(); ++i)
        if (res.points[i].snr_eff > res.points[res.optimal_index].snr_eff) res.optimal_index = i;
    return res;
}

struct CalibrationOptions {
    std::vector<double> launch_dbm{-2.0, -1.0, 0.0, 1.0};
    std::vector<std::uint64_t> seeds{11, 12};
    int threads = 1;
};

namespace detail {

inline FormatSpec reference_format_spec(const std::string& name) {
    FormatSpec f;
    if (name == "gaussian")
        f.kind = FormatSpec::Kind::kGaussian;
    else if (name == "qpsk")
        f.kind = FormatSpec::Kind::kQpsk;
    else if (name == "qam64") {
        f.kind = FormatSpec::Kind::kIidQam;
        f.M = 4;
    } else
        throw std::invalid_argument("unknown reference format: " + name);
    return f;
}

}  // namespace detail

/// Calibrates the kappa coefficients against the split-step simulator using
/// noiseless runs of the three i.i.d. references. SPM uses the single-channel
/// link; XPM uses the configured multi-channel link with the single-channel
/// contribution subtracted per launch power.
inline KappaSet calibrate_kappas_ssfm(const LinkConfig& link, NliScope scope,
                                      const CalibrationOptions& opt = {}) {
    LinkConfig single = link;
    single.n_ch = 1;
    LinkConfig multi = link;
    if (scope == NliScope::kXpm && link.n_ch < 2)
        throw std::invalid_argument("xpm calibration requires a multi-channel link");

    std::vector<double> launch_w;
    for (double dbm : opt.launch_dbm) launch_w.push_back(single.channel_power_w(dbm));

    NliMeasurer measure = [&](const ReferenceFormat& ref,
                              std::span<const double> /*launch*/) -> std::vector<double> {
        const FormatSpec fmt = detail::reference_format_spec(ref.name);
        const auto spm = measure_nli_sweep(single, fmt, opt.launch_dbm, opt.seeds,
                                           /*with_ase=*/false, opt.threads);
        std::vector<double> p_nli;
        if (scope == NliScope::kSpm) {
            for (const auto& p : spm) p_nli.push_back(p.p_nli_w);
        } else {
            const auto tot = measure_nli_sweep(multi, fmt, opt.launch_dbm, opt.seeds,
                                               /*with_ase=*/false, opt.threads);
            for (std::size_t i = 0; i < tot.size(); ++i)
                p_nli.push_back(tot[i].p_nli_w - spm[i].p_nli_w);
        }
        return p_nli;
    };

    const LinkConfig& scoped = (scope == NliScope::kSpm) ? single : multi;
    KappaSet k = calibrate_kappas(measure, launch_w, scope, scoped.fingerprint());
    k.seeds = opt.seeds;
    return k;
}

}  // namespace fiberlab
