#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "fiberlab/rng.hpp"

namespace fiberlab {

using cplx = std::complex<double>;

/// Positive amplitude set {1, 3, ..., 2M-1} (a.u.) with per-level
/// probabilities. Signs are applied separately and equiprobably.
struct AmplitudeAlphabet {
    std::vector<double> levels;         // strictly increasing, positive
    std::vector<double> probabilities;  // nonnegative, sum to 1

    std::size_t size() const { return levels.size(); }

    void validate() const {
        if (levels.empty() || levels.size() != probabilities.size())
            throw std::invalid_argument("alphabet: empty or mismatched level/probability lists");
        double prev = 0.0;
        for (double a : levels) {
            if (!(a > prev)) throw std::invalid_argument("alphabet: levels must be strictly increasing and positive");
            prev = a;
        }
        double sum = 0.0;
        for (double p : probabilities) {
            if (p < 0.0) throw std::invalid_argument("alphabet: negative probability");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("alphabet: probabilities must sum to 1");
    }

    /// E[a^k] over the level probabilities.
    double moment(int k) const {
        double m = 0.0;
        for (std::size_t i = 0; i < levels.size(); ++i) m += probabilities[i] * std::pow(levels[i], k);
        return m;
    }

    double entropy_bits() const {
        double h = 0.0;
        for (double p : probabilities)
            if (p > 0.0) h -= p * std::log2(p);
        return h;
    }
};

inline AmplitudeAlphabet make_qam_alphabet(int M) {
    if (M < 1) throw std::invalid_argument("make_qam_alphabet: M must be >= 1");
    AmplitudeAlphabet a;
    a.levels.reserve(M);
    a.probabilities.assign(M, 1.0 / M);
    for (int i = 0; i < M; ++i) a.levels.push_back(2.0 * i + 1.0);
    return a;
}

/// Maxwell-Boltzmann weighting Pr(a) ~ exp(-lambda a^2) with lambda >= 0
/// chosen by bisection so the alphabet entropy hits `target_entropy_bits`.
inline AmplitudeAlphabet make_mb_alphabet(int M, double target_entropy_bits) {
    AmplitudeAlphabet a = make_qam_alphabet(M);
    const double h_max = std::log2(static_cast<double>(M));
    if (!(target_entropy_bits > 0.0) || target_entropy_bits > h_max + 1e-12)
        throw std::invalid_argument("make_mb_alphabet: target entropy must be in (0, log2(M)]");

    auto with_lambda = [&](double lambda) {
        std::vector<double> p(a.levels.size());
        double sum = 0.0;
        for (std::size_t i = 0; i < a.levels.size(); ++i) {
            // weights relative to the lowest level keep the exponents bounded
            p[i] = std::exp(-lambda * (a.levels[i] * a.levels[i] - 1.0));
            sum += p[i];
        }
        for (double& v : p) v /= sum;
        return p;
    };
    auto entropy_of = [](const std::vector<double>& p) {
        double h = 0.0;
        for (double v : p)
            if (v > 0.0) h -= v * std::log2(v);
        return h;
    };

    if (target_entropy_bits >= h_max - 1e-12) return a;  // lambda = 0, uniform

    double lo = 0.0, hi = 1.0;
    while (entropy_of(with_lambda(hi)) > target_entropy_bits) {
        hi *= 2.0;
        if (hi > 1e9) throw std::runtime_error("make_mb_alphabet: bisection bracket failed");
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (entropy_of(with_lambda(mid)) > target_entropy_bits)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-15 * (1.0 + hi)) break;
    }
    a.probabilities = with_lambda(0.5 * (lo + hi));
    if (std::abs(entropy_of(a.probabilities) - target_entropy_bits) > 1e-9)
        throw std::runtime_error("make_mb_alphabet: entropy tolerance not met");
    return a;
}

/// Time-ordered dual-polarization complex symbols, scaled so the empirical
/// mean of the per-slot total power |x|^2 + |y|^2 is exactly 1.
struct PdmSymbolStream {
    std::vector<cplx> x, y;
    double normalization = 1.0;  // scale that was applied to the raw symbols

    std::size_t slots() const { return x.size(); }
};

inline PdmSymbolStream normalize_stream(std::vector<cplx> x, std::vector<cplx> y) {
    if (x.empty() || x.size() != y.size())
        throw std::invalid_argument("normalize_stream: empty or mismatched polarizations");
    double mean_power = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) mean_power += std::norm(x[i]) + std::norm(y[i]);
    mean_power /= static_cast<double>(x.size());
    if (!(mean_power > 0.0)) throw std::invalid_argument("normalize_stream: zero-power stream");
    const double scale = 1.0 / std::sqrt(mean_power);
    for (auto& v : x) v *= scale;
    for (auto& v : y) v *= scale;
    PdmSymbolStream s;
    s.x = std::move(x);
    s.y = std::move(y);
    s.normalization = scale;
    return s;
}

namespace detail {

inline std::vector<double> cumulative(const std::vector<double>& p) {
    std::vector<double> c(p.size());
    std::partial_sum(p.begin(), p.end(), c.begin());
    c.back() = 1.0;
    return c;
}

inline double draw_level(const AmplitudeAlphabet& a, const std::vector<double>& cum, Rng& rng) {
    const double u = rng.uniform01();
    for (std::size_t i = 0; i < cum.size(); ++i)
        if (u < cum[i]) return a.levels[i];
    return a.levels.back();
}

}  // namespace detail

/// I.i.d. source: each slot carries 4 independent signed amplitudes
/// (I/Q x 2 polarizations) drawn from the alphabet, signs equiprobable.
inline PdmSymbolStream draw_iid_stream(const AmplitudeAlphabet& alphabet, std::size_t slots,
                                       std::uint64_t seed) {
    alphabet.validate();
    if (slots < 1) throw std::invalid_argument("draw_iid_stream: slots must be >= 1");
    Rng rng = Rng::fork(seed, 0xa1fabe7);
    const auto cum = detail::cumulative(alphabet.probabilities);
    std::vector<cplx> x(slots), y(slots);
    for (std::size_t t = 0; t < slots; ++t) {
        const double xi = rng.sign() * detail::draw_level(alphabet, cum, rng);
        const double xq = rng.sign() * detail::draw_level(alphabet, cum, rng);
        const double yi = rng.sign() * detail::draw_level(alphabet, cum, rng);
        const double yq = rng.sign() * detail::draw_level(alphabet, cum, rng);
        x[t] = {xi, xq};
        y[t] = {yi, yq};
    }
    return normalize_stream(std::move(x), std::move(y));
}

/// Circularly symmetric complex Gaussian per polarization (kappa-calibration
/// reference with mu4 = 2, mu6 = 6).
inline PdmSymbolStream draw_gaussian_stream(std::size_t slots, std::uint64_t seed) {
    if (slots < 1) throw std::invalid_argument("draw_gaussian_stream: slots must be >= 1");
    Rng rng = Rng::fork(seed, 0x9a055);
    std::vector<cplx> x(slots), y(slots);
    for (std::size_t t = 0; t < slots; ++t) {
        x[t] = rng.cgaussian();
        y[t] = rng.cgaussian();
    }
    return normalize_stream(std::move(x), std::move(y));
}

inline PdmSymbolStream draw_qpsk_stream(std::size_t slots, std::uint64_t seed) {
    return draw_iid_stream(make_qam_alphabet(1), slots, seed);
}

/// Central moments m1..m3 of the per-polarization normalized power p and the
/// standardized moments mu4 = <p^2>, mu6 = <p^3>. Moments are taken against
/// the empirical mean, so m1 = 0 holds exactly.
struct MomentSet {
    double m1 = 0, m2 = 0, m3 = 0;
    double mu4 = 1, mu6 = 1;
};

inline MomentSet classical_moments(const PdmSymbolStream& s) {
    if (s.slots() == 0) throw std::invalid_argument("classical_moments: empty stream");
    const std::size_t n = 2 * s.slots();
    double mean = 0.0;
    for (std::size_t t = 0; t < s.slots(); ++t) mean += std::norm(s.x[t]) + std::norm(s.y[t]);
    mean /= static_cast<double>(n);
    MomentSet m;
    double m1 = 0, m2 = 0, m3 = 0;
    for (std::size_t t = 0; t < s.slots(); ++t) {
        for (double pw : {std::norm(s.x[t]), std::norm(s.y[t])}) {
            const double d = pw / mean - 1.0;
            m1 += d;
            m2 += d * d;
            m3 += d * d * d;
        }
    }
    m.m1 = m1 / static_cast<double>(n);
    m.m2 = m2 / static_cast<double>(n);
    m.m3 = m3 / static_cast<double>(n);
    m.mu4 = m.m2 + 2.0 * m.m1 + 1.0;
    m.mu6 = m.m3 + 3.0 * m.m2 + 3.0 * m.m1 + 1.0;
    return m;
}

/// Closed-form i.i.d. moments of one complex dimension assembled from two
/// independent signed amplitude draws: E|s|^2 = 2E[a^2],
/// E|s|^4 = 2E[a^4] + 2E[a^2]^2, E|s|^6 = 2E[a^6] + 6E[a^4]E[a^2].
inline MomentSet iid_complex_moments(const AmplitudeAlphabet& a) {
    const double e2 = a.moment(2), e4 = a.moment(4), e6 = a.moment(6);
    const double s2 = 2.0 * e2;
    const double s4 = 2.0 * e4 + 2.0 * e2 * e2;
    const double s6 = 2.0 * e6 + 6.0 * e4 * e2;
    MomentSet m;
    m.mu4 = s4 / (s2 * s2);
    m.mu6 = s6 / (s2 * s2 * s2);
    m.m1 = 0.0;
    m.m2 = m.mu4 - 1.0;
    m.m3 = m.mu6 - 3.0 * m.mu4 + 2.0;
    return m;
}

}  // namespace fiberlab
