#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fiberlab/config.hpp"
#include "fiberlab/experiment.hpp"
#include "fiberlab/util.hpp"

namespace fiberlab {

/// Every command produces named text artifacts; the CLI writes them under the
/// output directory. Identical config + seeds give byte-identical content.
struct CommandOutput {
    std::vector<std::pair<std::string, std::string>> files;

    void add(std::string name, std::string content) {
        files.emplace_back(std::move(name), std::move(content));
    }
    const std::string& content(const std::string& name) const {
        for (const auto& [n, c] : files)
            if (n == name) return c;
        throw std::out_of_range("no such output file: " + name);
    }
    void write_all(const std::string& out_dir) const {
        std::filesystem::create_directories(out_dir);
        for (const auto& [name, content] : files) {
            std::ofstream os(std::filesystem::path(out_dir) / name, std::ios::binary);
            if (!os) throw std::runtime_error("cannot write " + name + " under " + out_dir);
            os << content;
        }
    }
};

namespace detail {

inline WindowRule window_rule_for(const LinkConfig& link) {
    WindowRule r;
    r.r_sym = link.r_sym;
    r.b_ch = link.r_sym;  // Nyquist-shaped channels
    r.beta2_mag = link.beta2_mag;
    r.l_span = link.l_span;
    r.n_span = link.n_span;
    r.delta_f = link.delta_f_abs / link.r_sym;
    r.n_ch = link.n_ch;
    return r;
}

}  // namespace detail

/// moments: windowed moment profile of the configured modulation (Fig.-2-style
/// CSV: w, m2_bar, m3_bar, mu4_bar, mu6_bar, n_positions).
inline CommandOutput cmd_moments(const ExperimentConfig& cfg, int threads = 1) {
    const auto& a = cfg.analysis;
    const std::size_t slots =
        std::max<std::size_t>(a.slots, 10 * static_cast<std::size_t>(a.windows.back()));
    const PdmSymbolStream stream = make_stream(cfg.modulation, slots, a.seeds.front());
    std::vector<WindowedMoments> rows(a.windows.size());
    parallel_for(a.windows.size(), threads,
                 [&](std::size_t i) { rows[i] = windowed_moments(stream, a.windows[i]); });
    std::ostringstream os;
    os << "w,m2_bar,m3_bar,mu4_bar,mu6_bar,n_positions\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        os << a.windows[i] << ',' << format_number(rows[i].m2_bar) << ','
           << format_number(rows[i].m3_bar) << ',' << format_number(rows[i].mu4_bar) << ','
           << format_number(rows[i].mu6_bar) << ',' << rows[i].positions << '\n';
    }
    CommandOutput out;
    out.add("moments_" + format_id(cfg.modulation) + ".csv", os.str());
    out.add("effective_config.txt", echo_config(cfg));
    return out;
}

/// windows: Fig.-3-style table of optimal SPM/XPM window lengths over symbol
/// rates and span counts.
inline CommandOutput cmd_windows(const ExperimentConfig& cfg, int /*threads*/ = 1) {
    std::ostringstream os;
    os << "r_sym_gbd,n_span,w_spm_exact,w_spm,w_xpm_exact,w_xpm\n";
    for (double gbd : cfg.windows_table.r_sym_gbd) {
        for (int spans : cfg.windows_table.n_span) {
            WindowRule r = detail::window_rule_for(cfg.link);
            r.r_sym = gbd * 1e9;
            r.b_ch = r.r_sym;
            r.n_span = spans;
            const auto w = optimal_windows(r);
            os << format_number(gbd) << ',' << spans << ',' << format_number(w.spm_exact) << ','
               << w.w_spm << ',' << format_number(w.xpm_exact) << ',' << w.w_xpm << '\n';
        }
    }
    CommandOutput out;
    out.add("windows.csv", os.str());
    out.add("effective_config.txt", echo_config(cfg));
    return out;
}

/// shape-info: exact codec summary for the configured shaped modulation.
inline CommandOutput cmd_shape_info(const ExperimentConfig& cfg, int /*threads*/ = 1) {
    const FormatSpec& f = cfg.modulation;
    std::ostringstream os;
    os << codec_summary_csv_header() << '\n';
    if (f.kind == FormatSpec::Kind::kEss1D) {
        const auto codec = EssCodec1D::for_rate(f.M, f.n, f.H);
        os << codec_summary_csv(f.M, f.n, 0, codec.energy_cap(), codec.payload_bits(),
                                codec.sequence_count())
           << '\n';
    } else if (f.kind == FormatSpec::Kind::kEss4D) {
        const auto codec = EssCodec4D::for_rate(f.M, f.n, f.H, f.inner_cap);
        os << codec_summary_csv(f.M, f.n, codec.inner_cap(), codec.outer_cap(),
                                codec.payload_bits(), codec.sequence_count())
           << '\n';
    } else {
        throw ConfigError("shape-info requires an ess1d or ess4d modulation block");
    }
    CommandOutput out;
    out.add("shape_info.csv", os.str());
    out.add("effective_config.txt", echo_config(cfg));
    return out;
}

/// calibrate: kappa coefficients against the configured link (SPM always,
/// XPM when the link is multi-channel), persisted as a structured record.
inline CommandOutput cmd_calibrate(const ExperimentConfig& cfg, int threads = 1) {
    CalibrationOptions opt = cfg.compare.calibration;
    opt.threads = threads;
    std::ostringstream os;
    const KappaSet spm = calibrate_kappas_ssfm(cfg.link, NliScope::kSpm, opt);
    save_kappa_record(os, spm);
    if (cfg.link.n_ch > 1) save_kappa_record(os, calibrate_kappas_ssfm(cfg.link, NliScope::kXpm, opt));
    CommandOutput out;
    out.add(cfg.analysis.kappa_file, os.str());
    out.add("effective_config.txt", echo_config(cfg));
    return out;
}

/// simulate: split-step launch sweep of the configured modulation; one row per
/// (launch power, seed) plus the SNR-optimal launch power on seed averages.
inline CommandOutput cmd_simulate(const ExperimentConfig& cfg, int threads = 1) {
    const auto& a = cfg.analysis;
    const int channel = (cfg.link.n_ch - 1) / 2;
    std::vector<std::vector<NliPoint>> per_seed(a.seeds.size());
    parallel_for(a.seeds.size(), threads, [&](std::size_t s) {
        per_seed[s] =
            measure_nli_seed(cfg.link, cfg.modulation, a.launch_dbm, a.seeds[s], cfg.link.ase_enabled);
    });
    std::ostringstream os;
    os << "launch_dbm,snr_eff_db,p_ase_dbm,p_nli_dbm,channel,seed\n";
    std::vector<double> mean_snr(a.launch_dbm.size(), 0.0);
    for (std::size_t s = 0; s < a.seeds.size(); ++s) {
        for (std::size_t i = 0; i < a.launch_dbm.size(); ++i) {
            const auto& p = per_seed[s][i];
            mean_snr[i] += p.snr_eff / static_cast<double>(a.seeds.size());
            os << format_number(p.launch_dbm) << ',' << format_number(db10(p.snr_eff)) << ','
               << format_number(p.p_ase_w > 0 ? watt_to_dbm(p.p_ase_w) : -999.0) << ','
               << format_number(p.p_nli_w > 0 ? watt_to_dbm(p.p_nli_w) : -999.0) << ',' << channel
               << ',' << a.seeds[s] << '\n';
        }
    }
    const std::size_t best =
        std::max_element(mean_snr.begin(), mean_snr.end()) - mean_snr.begin();
    os << "# optimal_launch_dbm = " << format_number(a.launch_dbm[best]) << '\n';
    CommandOutput out;
    out.add("simulate_" + format_id(cfg.modulation) + ".csv", os.str());
    out.add("effective_config.txt", echo_config(cfg));
    return out;
}

/// compare: split-step SNR_eff against EGN predictions at w = 1 and at the
/// optimal window, across the configured format list and launch sweep.
inline CommandOutput cmd_compare(const ExperimentConfig& cfg, int threads = 1) {
    const auto& link = cfg.link;
    const auto& formats = cfg.compare.formats;
    if (formats.empty()) throw ConfigError("compare: empty format list");
    const auto wopt = optimal_windows(detail::window_rule_for(link));

    // kappas: load if the record matches this link, otherwise calibrate
    LinkConfig single = link;
    single.n_ch = 1;
    KappaRecord rec;
    bool have_kappa = false;
    if (std::filesystem::exists(cfg.analysis.kappa_file)) {
        rec = load_kappa_record(cfg.analysis.kappa_file);
        if (rec.spm.link_fingerprint == single.fingerprint() &&
            (link.n_ch == 1 || (rec.xpm && rec.xpm->link_fingerprint == link.fingerprint())))
            have_kappa = true;
    }
    std::ostringstream kappa_os;
    if (!have_kappa) {
        if (!cfg.compare.auto_calibrate)
            throw ConfigError(
                "compare: no kappa record for this link at '" + cfg.analysis.kappa_file +
                "'; run the calibrate command first or set auto_calibrate = true");
        CalibrationOptions opt = cfg.compare.calibration;
        opt.threads = threads;
        rec.spm = calibrate_kappas_ssfm(link, NliScope::kSpm, opt);
        if (link.n_ch > 1) rec.xpm = calibrate_kappas_ssfm(link, NliScope::kXpm, opt);
        save_kappa_record(kappa_os, rec.spm);
        if (rec.xpm) save_kappa_record(kappa_os, *rec.xpm);
    }
    const KappaSet* xpm = rec.xpm ? &*rec.xpm : nullptr;

    // measured sweeps and moment-based predictions per format
    struct FormatResult {
        std::vector<NliPoint> measured;
        MomentPair m1, m_spm, m_xpm;
    };
    std::vector<FormatResult> results(formats.size());
    const std::size_t moment_slots = cfg.analysis.slots;
    parallel_for(formats.size(), threads, [&](std::size_t i) {
        FormatResult r;
        r.measured = measure_nli_sweep(link, formats[i], cfg.analysis.launch_dbm,
                                       cfg.analysis.seeds, link.ase_enabled);
        r.m1 = format_moments(formats[i], 1, moment_slots, cfg.analysis.seeds.front());
        r.m_spm = format_moments(formats[i], wopt.w_spm, moment_slots, cfg.analysis.seeds.front());
        r.m_xpm = xpm ? format_moments(formats[i], wopt.w_xpm, moment_slots,
                                       cfg.analysis.seeds.front())
                      : r.m_spm;
        results[i] = std::move(r);
    });

    std::ostringstream os;
    os << "format,n,launch_dbm,snr_split_db,snr_w1_db,snr_wopt_db,p_nli_meas_dbm,p_nli_w1_dbm,"
          "p_nli_wopt_dbm,p_ase_dbm\n";
    std::vector<double> eta_meas, eta_w1, eta_wopt;
    double max_dsnr_w1 = 0, max_dsnr_wopt = 0;
    for (std::size_t i = 0; i < formats.size(); ++i) {
        const auto& f = formats[i];
        const auto& r = results[i];
        std::vector<double> lw, pn;
        for (const auto& p : r.measured) {
            const auto pred1 = predict_snr(rec.spm, xpm, r.m1, r.m1, p.launch_w, p.p_ase_w);
            const auto predw = predict_snr(rec.spm, xpm, r.m_spm, r.m_xpm, p.launch_w, p.p_ase_w);
            max_dsnr_w1 = std::max(max_dsnr_w1, std::abs(db10(pred1.snr_eff / p.snr_eff)));
            max_dsnr_wopt = std::max(max_dsnr_wopt, std::abs(db10(predw.snr_eff / p.snr_eff)));
            os << format_id(f) << ',' << f.n << ',' << format_number(p.launch_dbm) << ','
               << format_number(db10(p.snr_eff)) << ',' << format_number(pred1.snr_eff_db()) << ','
               << format_number(predw.snr_eff_db()) << ','
               << format_number(p.p_nli_w > 0 ? watt_to_dbm(p.p_nli_w) : -999.0) << ','
               << format_number(watt_to_dbm(pred1.p_nli_w)) << ','
               << format_number(watt_to_dbm(predw.p_nli_w)) << ','
               << format_number(p.p_ase_w > 0 ? watt_to_dbm(p.p_ase_w) : -999.0) << '\n';
            lw.push_back(p.launch_w);
            pn.push_back(p.p_nli_w);
        }
        eta_meas.push_back(fit_eta_cube_law(lw, pn).eta);
        eta_w1.push_back(eta_from_moments(rec.spm, r.m1.mu4, r.m1.mu6) +
                         (xpm ? eta_from_moments(*xpm, r.m1.mu4, r.m1.mu6) : 0.0));
        eta_wopt.push_back(eta_from_moments(rec.spm, r.m_spm.mu4, r.m_spm.mu6) +
                           (xpm ? eta_from_moments(*xpm, r.m_xpm.mu4, r.m_xpm.mu6) : 0.0));
    }
    os << "# w_spm = " << wopt.w_spm << ", w_xpm = " << wopt.w_xpm << '\n';
    if (formats.size() >= 2) {
        os << "# spearman_nli_w1 = " << format_number(spearman(eta_meas, eta_w1)) << '\n';
        os << "# spearman_nli_wopt = " << format_number(spearman(eta_meas, eta_wopt)) << '\n';
    }
    os << "# max_abs_dsnr_w1_db = " << format_number(max_dsnr_w1) << '\n';
    os << "# max_abs_dsnr_wopt_db = " << format_number(max_dsnr_wopt) << '\n';

    CommandOutput out;
    out.add("compare.csv", os.str());
    if (!have_kappa) out.add(cfg.analysis.kappa_file, kappa_os.str());
    out.add("effective_config.txt", echo_config(cfg));
    return out;
}

}  // namespace fiberlab
