#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "fiberlab/alphabet.hpp"

namespace fiberlab {

/// Windowed central moments of the normalized power, pooled over both
/// polarizations: the power of a window position is the average of 2w
/// per-polarization slot powers, and the deviations are restored by the
/// (2w)^(k-1) factor so that i.i.d. sources give w-invariant values.
struct WindowedMoments {
    double m1_bar = 0, m2_bar = 0, m3_bar = 0;
    double mu4_bar = 1, mu6_bar = 1;
    std::size_t positions = 0;
    double se_m2 = 0, se_m3 = 0;  // overlap-adjusted standard errors
};

enum class WindowEdge {
    kDiscard,   // sliding window, partial windows at the stream end dropped
    kCircular,  // periodic continuation
};

inline WindowedMoments windowed_moments(const PdmSymbolStream& s, int w,
                                        WindowEdge edge = WindowEdge::kDiscard) {
    if (w < 1) throw std::invalid_argument("windowed_moments: w must be >= 1");
    const std::size_t n = s.slots();
    if (n == 0 || static_cast<std::size_t>(w) > n)
        throw std::invalid_argument("windowed_moments: window exceeds stream length");

    // per-slot sum of the two per-polarization normalized powers
    std::vector<double> q(n);
    double mean = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        q[t] = std::norm(s.x[t]) + std::norm(s.y[t]);
        mean += q[t];
    }
    mean /= static_cast<double>(2 * n);  // per-polarization mean power
    for (double& v : q) v /= mean;       // now sum of two unit-mean powers per slot

    const std::size_t ext = (edge == WindowEdge::kCircular) ? n + w - 1 : n;
    std::vector<double> prefix(ext + 1, 0.0);
    for (std::size_t t = 0; t < ext; ++t) prefix[t + 1] = prefix[t] + q[t % n];

    const std::size_t positions = (edge == WindowEdge::kCircular) ? n : n - w + 1;
    const double inv2w = 1.0 / (2.0 * w);
    double s1 = 0, s2 = 0, s3 = 0, s4 = 0, s6 = 0;
    for (std::size_t t = 0; t < positions; ++t) {
        const double d = (prefix[t + w] - prefix[t]) * inv2w - 1.0;
        const double d2 = d * d;
        s1 += d;
        s2 += d2;
        s3 += d2 * d;
        s4 += d2 * d2;
        s6 += d2 * d2 * d2;
    }
    const double inv_n = 1.0 / static_cast<double>(positions);
    const double f2 = 2.0 * w;        // (2w)^(k-1) restoring factors
    const double f3 = f2 * f2;
    WindowedMoments m;
    m.positions = positions;
    m.m1_bar = s1 * inv_n;
    m.m2_bar = s2 * inv_n * f2;
    m.m3_bar = s3 * inv_n * f3;
    m.mu4_bar = m.m2_bar + 2.0 * m.m1_bar + 1.0;
    m.mu6_bar = m.m3_bar + 3.0 * m.m2_bar + 3.0 * m.m1_bar + 1.0;
    // variance of the per-position terms, inflated by the overlap correlation
    // length (2w - 1 positions share samples)
    const double var2 = std::max(0.0, s4 * inv_n - (s2 * inv_n) * (s2 * inv_n));
    const double var3 = std::max(0.0, s6 * inv_n - (s3 * inv_n) * (s3 * inv_n));
    const double corr = std::min<double>(2.0 * w - 1.0, static_cast<double>(positions));
    m.se_m2 = f2 * std::sqrt(var2 * corr * inv_n);
    m.se_m3 = f3 * std::sqrt(var3 * corr * inv_n);
    return m;
}

struct MomentProfile {
    std::vector<int> windows;
    std::vector<WindowedMoments> rows;
};

inline MomentProfile moment_profile(const PdmSymbolStream& s, std::vector<int> windows,
                                    WindowEdge edge = WindowEdge::kDiscard) {
    if (!std::is_sorted(windows.begin(), windows.end()))
        throw std::invalid_argument("moment_profile: windows must be sorted ascending");
    MomentProfile p;
    p.windows = std::move(windows);
    p.rows.reserve(p.windows.size());
    for (int w : p.windows) p.rows.push_back(windowed_moments(s, w, edge));
    return p;
}

/// Link-side inputs of the closed-form optimal window lengths.
struct WindowRule {
    double r_sym;      // Baud
    double b_ch;       // Hz, ~ r_sym under Nyquist shaping
    double beta2_mag;  // |beta2|, s^2/m
    double l_span;     // m
    int n_span;
    double delta_f = 1.0;  // channel separation normalized to r_sym
    int n_ch = 1;

    void validate() const {
        if (!(r_sym > 0) || !(b_ch > 0) || beta2_mag < 0 || !(l_span > 0) || n_span < 1)
            throw std::invalid_argument("WindowRule: nonpositive parameter");
        if (n_ch < 1 || (n_ch > 1 && delta_f < 1.0))
            throw std::invalid_argument("WindowRule: delta_f must be >= 1 for non-overlapping channels");
    }
};

struct OptimalWindows {
    int w_spm, w_xpm;
    double spm_exact, xpm_exact;
};

/// w_SPM = 2 R B |beta2| L N ; w_XPM = w_SPM sqrt(delta_f N_ch),
/// rounded to the nearest integer with floor 1.
inline OptimalWindows optimal_windows(const WindowRule& r) {
    r.validate();
    OptimalWindows w;
    w.spm_exact = 2.0 * r.r_sym * r.b_ch * r.beta2_mag * r.l_span * r.n_span;
    w.xpm_exact = w.spm_exact * std::sqrt(r.delta_f * r.n_ch);
    w.w_spm = std::max(1, static_cast<int>(std::llround(w.spm_exact)));
    w.w_xpm = std::max(1, static_cast<int>(std::llround(w.xpm_exact)));
    return w;
}

/// Checks that the windowed central moments of an i.i.d. stream are
/// w-invariant: |m_k(w) - m_k(1)| must stay within a 5-sigma band for k = 2, 3.
/// Correlated streams with local energy structure fail the band.
struct InvarianceRow {
    int k;
    int w;
    double value;
    double reference;
    double band;
    bool pass;
};

struct InvarianceReport {
    std::vector<InvarianceRow> rows;
    bool all_pass = true;
};

inline InvarianceReport iid_invariance_check(const PdmSymbolStream& s, std::span<const int> windows) {
    const auto base = windowed_moments(s, 1);
    InvarianceReport rep;
    for (int w : windows) {
        const auto m = windowed_moments(s, w);
        for (int k : {2, 3}) {
            InvarianceRow row;
            row.k = k;
            row.w = w;
            row.value = (k == 2) ? m.m2_bar : m.m3_bar;
            row.reference = (k == 2) ? base.m2_bar : base.m3_bar;
            const double se_w = (k == 2) ? m.se_m2 : m.se_m3;
            const double se_1 = (k == 2) ? base.se_m2 : base.se_m3;
            row.band = 5.0 * std::sqrt(se_w * se_w + se_1 * se_1);
            row.pass = std::abs(row.value - row.reference) <= row.band;
            rep.all_pass = rep.all_pass && row.pass;
            rep.rows.push_back(row);
        }
    }
    return rep;
}

}  // namespace fiberlab
