#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fiberlab/alphabet.hpp"
#include "fiberlab/fft.hpp"
#include "fiberlab/rng.hpp"
#include "fiberlab/stats.hpp"

namespace fiberlab {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

constexpr double kPlanck = 6.62607015e-34;  // J s

/// Fiber/span/WDM/amplifier parameters (Table-I roles) plus the numerical
/// grid. The symbol block is one FFT period: circular boundary, no edge
/// artifacts, synchronous timing at the receiver.
struct LinkConfig {
    double r_sym = 88e9;       // Baud
    double rolloff = 0.1;      // RRC roll-off
    int n_ch = 1;              // WDM channels, center channel is under test
    double delta_f_abs = 100e9;  // Hz carrier spacing
    double center_freq = 193.4e12;
    double alpha_db_per_km = 0.2;
    double beta2_mag = 2.199e-26;  // s^2/m, applied with the anomalous sign
    double gamma_nl = 1.3e-3;      // 1/(W m), Manakov 8/9 applied internally
    double l_span = 60e3;          // m
    int n_span = 1;
    double noise_figure_db = 4.5;
    bool ase_enabled = true;  // test hook: false = noiseless amplification
    int steps_per_span = 100;
    int samples_per_symbol = 8;
    std::size_t symbols = std::size_t(1) << 15;  // per channel, one FFT period
    double ref_bandwidth = 100e9;  // launch powers are quoted per this bandwidth

    double sample_rate() const { return r_sym * samples_per_symbol; }
    std::size_t grid_size() const { return symbols * samples_per_symbol; }
    double alpha_per_m() const { return alpha_db_per_km / 1e3 * std::numbers::ln10 / 10.0; }
    double span_gain() const { return std::exp(alpha_per_m() * l_span); }
    double spontaneous_factor() const {
        return ase_enabled ? 0.5 * std::pow(10.0, noise_figure_db / 10.0) : 0.0;
    }
    double occupied_bandwidth() const { return r_sym * (1.0 + rolloff); }

    /// Launch power is a spectral-density convention: "x dBm per ref_bandwidth"
    /// scales with the occupied bandwidth of one channel.
    double channel_power_w(double launch_dbm_per_ref_bw) const {
        return dbm_to_watt(launch_dbm_per_ref_bw) * occupied_bandwidth() / ref_bandwidth;
    }

    double channel_offset_hz(int ch) const {
        return (ch - 0.5 * (n_ch - 1)) * delta_f_abs;
    }

    /// Channel offsets snapped to the circular frequency grid.
    long channel_offset_bins(int ch) const {
        const double df = sample_rate() / static_cast<double>(grid_size());
        return std::lround(channel_offset_hz(ch) / df);
    }

    void validate() const {
        if (!(r_sym > 0) || rolloff < 0 || rolloff > 1 || n_ch < 1 || n_span < 1 ||
            steps_per_span < 1 || samples_per_symbol < 1 || symbols < 2)
            throw ConfigError("link: nonpositive or out-of-range parameter");
        if ((symbols & (symbols - 1)) != 0 ||
            (std::size_t(samples_per_symbol) & (samples_per_symbol - 1)) != 0)
            throw ConfigError("link: symbols and samples_per_symbol must be powers of two");
        if (n_ch > 1 && delta_f_abs < occupied_bandwidth() - 1e-6)
            throw ConfigError("link: channel spacing below occupied bandwidth (channels overlap)");
        const double edge = std::abs(channel_offset_hz(n_ch - 1)) + occupied_bandwidth() / 2.0;
        if (edge >= sample_rate() / 2.0)
            throw ConfigError("link: occupied band exceeds the simulation bandwidth (aliasing)");
        // circular boundary is only representative when the block is long
        // against the dispersion-induced channel memory
        const double b_tot = 2.0 * edge;
        const double memory_symbols =
            beta2_mag * 2.0 * std::numbers::pi * b_tot * l_span * n_span * r_sym;
        if (static_cast<double>(symbols) < 4.0 * memory_symbols)
            throw ConfigError("link: symbol block shorter than 4x the dispersive channel memory");
    }

    std::string fingerprint() const {
        char buf[320];
        std::snprintf(buf, sizeof(buf),
                      "rsym=%.6g;rolloff=%.3g;nch=%d;df=%.6g;fc=%.6g;alpha=%.4g;beta2=%.6g;"
                      "gamma=%.4g;lspan=%.6g;nspan=%d;nf=%.4g;steps=%d;sps=%d;sym=%zu;refbw=%.4g",
                      r_sym, rolloff, n_ch, delta_f_abs, center_freq, alpha_db_per_km, beta2_mag,
                      gamma_nl, l_span, n_span, noise_figure_db, steps_per_span, samples_per_symbol,
                      symbols, ref_bandwidth);
        return buf;
    }
};

/// Dual-polarization complex baseband samples in sqrt(W).
struct FieldGrid {
    std::vector<cplx> x, y;
    double sample_rate = 0;

    std::size_t size() const { return x.size(); }
    double total_power_w() const {
        double p = 0;
        for (std::size_t i = 0; i < x.size(); ++i) p += std::norm(x[i]) + std::norm(y[i]);
        return p / static_cast<double>(x.size());
    }
};

namespace detail {

/// Baseband angular frequency of bin k on the wrapped grid.
inline double bin_omega(std::size_t k, std::size_t n, double sample_rate) {
    const double df = sample_rate / static_cast<double>(n);
    const double f = (k <= n / 2) ? static_cast<double>(k) * df
                                  : (static_cast<double>(k) - static_cast<double>(n)) * df;
    return 2.0 * std::numbers::pi * f;
}

/// Root-raised-cosine magnitude response on the grid (unit passband).
inline std::vector<double> rrc_response(const LinkConfig& cfg) {
    const std::size_t n = cfg.grid_size();
    const double f1 = (1.0 - cfg.rolloff) * cfg.r_sym / 2.0;
    const double f2 = (1.0 + cfg.rolloff) * cfg.r_sym / 2.0;
    std::vector<double> h(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        const double f = std::abs(bin_omega(k, n, cfg.sample_rate())) / (2.0 * std::numbers::pi);
        if (f <= f1)
            h[k] = 1.0;
        else if (f < f2)
            h[k] = std::sqrt(0.5 * (1.0 + std::cos(std::numbers::pi * (f - f1) / (cfg.rolloff * cfg.r_sym))));
    }
    return h;
}

/// Dispersion phase accumulated over length z at baseband frequency omega
/// (anomalous dispersion: beta2 = -beta2_mag).
inline double dispersion_phase(double omega, double z, double beta2_mag) {
    return -0.5 * beta2_mag * omega * omega * z;
}

inline void rotate_spectrum(std::vector<cplx>& spec, long bins) {
    if (bins == 0) return;
    const long n = static_cast<long>(spec.size());
    std::vector<cplx> out(spec.size());
    for (long k = 0; k < n; ++k) out[k] = spec[((k + bins) % n + n) % n];
    spec.swap(out);
}

}  // namespace detail

/// RRC-shaped, frequency-multiplexed dual-polarization field at the requested
/// per-channel launch power. One stream per channel, all at the same rate.
inline FieldGrid synthesize(std::span<const PdmSymbolStream> streams, const LinkConfig& cfg,
                            double launch_w_per_channel) {
    cfg.validate();
    if (streams.size() != static_cast<std::size_t>(cfg.n_ch))
        throw ConfigError("synthesize: one stream per channel required");
    const std::size_t n = cfg.grid_size();
    const std::size_t sps = cfg.samples_per_symbol;
    const Fft fft(n);
    const auto rrc = detail::rrc_response(cfg);

    std::vector<cplx> acc_x(n, 0.0), acc_y(n, 0.0), work(n);
    for (int ch = 0; ch < cfg.n_ch; ++ch) {
        const auto& s = streams[ch];
        if (s.slots() != cfg.symbols) throw ConfigError("synthesize: stream length != symbol count");
        const long off = cfg.channel_offset_bins(ch);
        double ch_power = 0.0;
        std::vector<cplx> spec_x(n), spec_y(n);
        for (int pol = 0; pol < 2; ++pol) {
            std::fill(work.begin(), work.end(), cplx(0.0));
            const auto& sym = (pol == 0) ? s.x : s.y;
            for (std::size_t m = 0; m < cfg.symbols; ++m) work[m * sps] = sym[m];
            fft.forward(work.data());
            for (std::size_t k = 0; k < n; ++k) work[k] *= rrc[k];
            auto& spec = (pol == 0) ? spec_x : spec_y;
            spec = work;
            detail::rotate_spectrum(spec, -off);  // shift channel up to +off
            for (std::size_t k = 0; k < n; ++k) ch_power += std::norm(spec[k]);
        }
        // Parseval: time-average power of this channel's contribution
        ch_power /= static_cast<double>(n) * static_cast<double>(n);
        const double scale = std::sqrt(launch_w_per_channel / ch_power);
        for (std::size_t k = 0; k < n; ++k) {
            acc_x[k] += spec_x[k] * scale;
            acc_y[k] += spec_y[k] * scale;
        }
    }
    fft.inverse(acc_x.data());
    fft.inverse(acc_y.data());
    FieldGrid f;
    f.x = std::move(acc_x);
    f.y = std::move(acc_y);
    f.sample_rate = cfg.sample_rate();
    return f;
}

/// Symmetric split-step integration of one span: attenuation + dispersion in
/// the frequency domain, Manakov nonlinearity exp(j (8/9) gamma h_eff
/// (|Ex|^2+|Ey|^2)) in the time domain. h_eff maps the mid-step power to the
/// exact effective length of the step.
inline void propagate_span(FieldGrid& field, const LinkConfig& cfg) {
    const std::size_t n = field.size();
    if (n != cfg.grid_size()) throw ConfigError("propagate_span: field/grid size mismatch");
    const Fft fft(n);
    const double h = cfg.l_span / cfg.steps_per_span;
    const double alpha = cfg.alpha_per_m();
    const double att_half = std::exp(-0.25 * alpha * h);  // amplitude, half step
    const double l_eff = (alpha > 0) ? (1.0 - std::exp(-alpha * h)) / alpha : h;
    const double h_eff = l_eff * std::exp(0.5 * alpha * h);
    const double gamma_eff = (8.0 / 9.0) * cfg.gamma_nl * h_eff;

    std::vector<cplx> half(n), full(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double w = detail::bin_omega(k, n, field.sample_rate);
        const double ph = detail::dispersion_phase(w, h / 2.0, cfg.beta2_mag);
        half[k] = std::polar(att_half, ph);
        full[k] = half[k] * half[k];
    }

    auto linear = [&](const std::vector<cplx>& op) {
        fft.forward(field.x.data());
        fft.forward(field.y.data());
        for (std::size_t k = 0; k < n; ++k) {
            field.x[k] *= op[k];
            field.y[k] *= op[k];
        }
        fft.inverse(field.x.data());
        fft.inverse(field.y.data());
    };
    auto nonlinear = [&]() {
        for (std::size_t k = 0; k < n; ++k) {
            const double phi = gamma_eff * (std::norm(field.x[k]) + std::norm(field.y[k]));
            const cplx rot = std::polar(1.0, phi);
            field.x[k] *= rot;
            field.y[k] *= rot;
        }
    };

    linear(half);
    for (int step = 0; step < cfg.steps_per_span; ++step) {
        nonlinear();
        linear(step + 1 < cfg.steps_per_span ? full : half);
    }
}

/// EDFA: gain recovers one span of loss; ASE is circular complex white
/// Gaussian per polarization with PSD (G-1) h nu n_sp.
inline void amplify(FieldGrid& field, const LinkConfig& cfg, Rng& noise) {
    const double g = cfg.span_gain();
    const double amp = std::sqrt(g);
    const double sigma2 = (g - 1.0) * kPlanck * cfg.center_freq * cfg.spontaneous_factor() *
                          field.sample_rate;  // W per complex sample, per polarization
    const double s = std::sqrt(sigma2);
    for (std::size_t k = 0; k < field.size(); ++k) {
        field.x[k] = field.x[k] * amp + noise.cgaussian() * s;
        field.y[k] = field.y[k] * amp + noise.cgaussian() * s;
    }
}

/// Power integrated over [f_center - bw/2, f_center + bw/2], both
/// polarizations summed.
inline double band_power_w(const FieldGrid& field, double f_center, double bandwidth) {
    const std::size_t n = field.size();
    const Fft fft(n);
    std::vector<cplx> sx = field.x, sy = field.y;
    fft.forward(sx.data());
    fft.forward(sy.data());
    double p = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double f = detail::bin_omega(k, n, field.sample_rate) / (2.0 * std::numbers::pi);
        if (std::abs(f - f_center) <= bandwidth / 2.0) p += std::norm(sx[k]) + std::norm(sy[k]);
    }
    return p / (static_cast<double>(n) * static_cast<double>(n));
}

/// Receiver output for the channel under test.
struct MeasuredRun {
    double snr_eff = 0;       // linear, data-aided
    double launch_ch_w = 0;   // per-channel launch power (filled by the caller)
    double p_ase_w = 0;       // filled by the caller from an ASE-only run
    double p_nli_w = 0;       // filled by the caller via Eq.-(18) accounting
    PdmSymbolStream rx_symbols;
    double snr_eff_db() const { return db10(snr_eff); }
};

/// Channel selection, full CD compensation, matched RRC filtering, symbol-rate
/// sampling and a data-aided single complex gain fit per polarization.
inline MeasuredRun receive(const FieldGrid& field, const LinkConfig& cfg, int channel,
                           const PdmSymbolStream& tx_reference) {
    const std::size_t n = cfg.grid_size();
    if (field.size() != n) throw ConfigError("receive: field/grid size mismatch");
    if (tx_reference.slots() != cfg.symbols)
        throw ConfigError("receive: reference length != symbol count");
    const Fft fft(n);
    const auto rrc = detail::rrc_response(cfg);
    const double l_total = cfg.l_span * cfg.n_span;
    const long off = cfg.channel_offset_bins(channel);
    const std::size_t sps = cfg.samples_per_symbol;

    std::vector<cplx> rx_sym[2];
    for (int pol = 0; pol < 2; ++pol) {
        std::vector<cplx> spec = (pol == 0) ? field.x : field.y;
        fft.forward(spec.data());
        for (std::size_t k = 0; k < n; ++k) {
            const double w = detail::bin_omega(k, n, field.sample_rate);
            spec[k] *= std::polar(1.0, -detail::dispersion_phase(w, l_total, cfg.beta2_mag));
        }
        detail::rotate_spectrum(spec, off);  // bring the channel to baseband
        for (std::size_t k = 0; k < n; ++k) spec[k] *= rrc[k];
        fft.inverse(spec.data());
        rx_sym[pol].resize(cfg.symbols);
        for (std::size_t m = 0; m < cfg.symbols; ++m) rx_sym[pol][m] = spec[m * sps];
    }

    double sig_power = 0.0, err_power = 0.0;
    for (int pol = 0; pol < 2; ++pol) {
        const auto& ref = (pol == 0) ? tx_reference.x : tx_reference.y;
        cplx num = 0.0;
        double den = 0.0;
        for (std::size_t m = 0; m < cfg.symbols; ++m) {
            num += rx_sym[pol][m] * std::conj(ref[m]);
            den += std::norm(ref[m]);
        }
        const cplx gain = num / den;
        for (std::size_t m = 0; m < cfg.symbols; ++m)
            err_power += std::norm(rx_sym[pol][m] - gain * ref[m]);
        sig_power += std::norm(gain) * den;
    }
    MeasuredRun out;
    out.snr_eff = sig_power / err_power;
    out.rx_symbols = normalize_stream(std::move(rx_sym[0]), std::move(rx_sym[1]));
    return out;
}

}  // namespace fiberlab
