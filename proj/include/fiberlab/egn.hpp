#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "fiberlab/alphabet.hpp"
#include "fiberlab/stats.hpp"

namespace fiberlab {

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class NliScope { kSpm, kXpm };

inline const char* scope_name(NliScope s) { return s == NliScope::kSpm ? "spm" : "xpm"; }

/// NLI coefficient components of eta = kappa1 + (mu4-2) kappa2
/// + (mu6 - 9 mu4 + 12) kappa3, in 1/W^2 against the per-channel launch power.
struct KappaSet {
    double kappa1 = 0, kappa2 = 0, kappa3 = 0;
    NliScope scope = NliScope::kSpm;
    std::string link_fingerprint;
    std::vector<std::uint64_t> seeds;
    double max_fit_residual = 0;  // worst relative cube-law fit residual seen during calibration
};

inline double eta_from_moments(const KappaSet& k, double mu4, double mu6) {
    return k.kappa1 + (mu4 - 2.0) * k.kappa2 + (mu6 - 9.0 * mu4 + 12.0) * k.kappa3;
}

struct MomentPair {
    double mu4 = 2.0, mu6 = 6.0;
};

struct NliReport {
    double launch_power_w = 0;
    double p_nli_w = 0;
    double p_ase_w = 0;
    double eta = 0;  // 1/W^2
    double snr_eff = 0;
    double snr_eff_db() const { return db10(snr_eff); }
};

/// Eq.-(18)-style prediction: P_NLI = (eta_spm + eta_xpm) P^3,
/// SNR_eff = P / (P_ASE + P_NLI). Pass xpm = nullptr for single-channel links.
inline NliReport predict_snr(const KappaSet& spm, const KappaSet* xpm, MomentPair spm_moments,
                             MomentPair xpm_moments, double launch_power_w, double p_ase_w) {
    NliReport r;
    r.launch_power_w = launch_power_w;
    r.p_ase_w = p_ase_w;
    r.eta = eta_from_moments(spm, spm_moments.mu4, spm_moments.mu6);
    if (xpm) r.eta += eta_from_moments(*xpm, xpm_moments.mu4, xpm_moments.mu6);
    r.p_nli_w = r.eta * launch_power_w * launch_power_w * launch_power_w;
    r.snr_eff = launch_power_w / (p_ase_w + r.p_nli_w);
    return r;
}

/// Cube-law fit of measured <P_NLI> against launch power: eta is the
/// geometric mean of P_NLI / P^3; `slope` is the free log-log slope kept as a
/// diagnostic, `max_residual` the worst relative deviation from the cube law.
struct EtaFit {
    double eta = 0;
    double slope = 0;
    double max_residual = 0;
};

inline EtaFit fit_eta_cube_law(std::span<const double> launch_w, std::span<const double> p_nli_w) {
    if (launch_w.size() != p_nli_w.size() || launch_w.empty())
        throw std::invalid_argument("fit_eta_cube_law: mismatched or empty inputs");
    std::vector<double> lx, ly;
    double mean_log_eta = 0;
    for (std::size_t i = 0; i < launch_w.size(); ++i) {
        if (!(launch_w[i] > 0) || !(p_nli_w[i] > 0))
            throw NumericalError("fit_eta_cube_law: nonpositive power, NLI not measurable");
        lx.push_back(std::log(launch_w[i]));
        ly.push_back(std::log(p_nli_w[i]));
        mean_log_eta += ly.back() - 3.0 * lx.back();
    }
    EtaFit f;
    f.eta = std::exp(mean_log_eta / static_cast<double>(launch_w.size()));
    f.slope = launch_w.size() >= 2 ? fit_line(lx, ly).slope : 3.0;
    for (std::size_t i = 0; i < launch_w.size(); ++i) {
        const double pred = f.eta * std::pow(launch_w[i], 3.0);
        f.max_residual = std::max(f.max_residual, std::abs(p_nli_w[i] / pred - 1.0));
    }
    return f;
}

/// An i.i.d. calibration format with its exact moment pair.
struct ReferenceFormat {
    std::string name;
    MomentPair moments;
};

inline std::vector<ReferenceFormat> default_reference_formats() {
    const auto qam = iid_complex_moments(make_qam_alphabet(4));
    return {
        {"gaussian", {2.0, 6.0}},
        {"qpsk", {1.0, 1.0}},
        {"qam64", {qam.mu4, qam.mu6}},
    };
}

/// Measurement callback: <P_NLI> (W) of the given reference format at each
/// launch power. Backed by the split-step simulator in production and by
/// synthetic oracles in tests.
using NliMeasurer =
    std::function<std::vector<double>(const ReferenceFormat&, std::span<const double> launch_w)>;

/// Solves the 3x3 linear system of the eta affine form for (kappa1, kappa2,
/// kappa3) from per-format eta values obtained by cube-law fits.
inline KappaSet solve_kappas(std::span<const ReferenceFormat> formats, std::span<const EtaFit> fits,
                             NliScope scope, std::string fingerprint) {
    if (formats.size() != 3 || fits.size() != 3)
        throw std::invalid_argument("solve_kappas: exactly 3 reference formats required");
    Eigen::Matrix3d a;
    Eigen::Vector3d b;
    for (int i = 0; i < 3; ++i) {
        const auto& m = formats[i].moments;
        a(i, 0) = 1.0;
        a(i, 1) = m.mu4 - 2.0;
        a(i, 2) = m.mu6 - 9.0 * m.mu4 + 12.0;
        b(i) = fits[i].eta;
    }
    const Eigen::JacobiSVD<Eigen::Matrix3d> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const double cond = svd.singularValues()(0) / svd.singularValues()(2);
    if (!(cond < 1e6)) throw NumericalError("solve_kappas: ill-conditioned moment system");
    const Eigen::Vector3d k = svd.solve(b);
    if (!(k(0) > 0)) throw NumericalError("solve_kappas: negative kappa1, calibration failed");
    KappaSet out;
    out.kappa1 = k(0);
    out.kappa2 = k(1);
    out.kappa3 = k(2);
    out.scope = scope;
    out.link_fingerprint = std::move(fingerprint);
    for (const auto& f : fits) out.max_fit_residual = std::max(out.max_fit_residual, f.max_residual);
    return out;
}

/// Runs the measurer over the three i.i.d. references and solves for kappa.
inline KappaSet calibrate_kappas(const NliMeasurer& measure, std::span<const double> launch_w,
                                 NliScope scope, std::string fingerprint,
                                 std::vector<ReferenceFormat> formats = default_reference_formats()) {
    if (launch_w.empty()) throw std::invalid_argument("calibrate_kappas: empty launch sweep");
    std::vector<EtaFit> fits;
    fits.reserve(formats.size());
    for (const auto& f : formats) fits.push_back(fit_eta_cube_law(launch_w, measure(f, launch_w)));
    return solve_kappas(formats, fits, scope, std::move(fingerprint));
}

}  // namespace fiberlab
