#pragma once

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fiberlab/experiment.hpp"

namespace fiberlab {

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

}  // namespace detail

/// Line-oriented config: [section] headers and key = value pairs, '#' starts a
/// comment. Errors carry file:line anchors.
class ConfigParser {
public:
    ConfigParser(const std::string& text, std::string source_name)
        : source_(std::move(source_name)) {
        std::istringstream in(text);
        std::string line;
        std::string section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            line = detail::trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']') fail(lineno, "unterminated section header");
                section = detail::trim(line.substr(1, line.size() - 2));
                sections_[section];  // remember even if empty
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos) fail(lineno, "expected key = value");
            const std::string key = detail::trim(line.substr(0, eq));
            const std::string value = detail::trim(line.substr(eq + 1));
            if (key.empty()) fail(lineno, "empty key");
            if (section.empty()) fail(lineno, "key outside of a [section]");
            auto& sec = sections_[section];
            if (sec.count(key)) fail(lineno, "duplicate key '" + key + "'");
            sec[key] = {value, lineno};
        }
    }

    static ConfigParser from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError(path + ": cannot open config file");
        std::ostringstream ss;
        ss << in.rdbuf();
        return ConfigParser(ss.str(), path);
    }

    bool has_section(const std::string& s) const { return sections_.count(s) != 0; }

    std::optional<std::string> raw(const std::string& sec, const std::string& key) const {
        auto s = sections_.find(sec);
        if (s == sections_.end()) return std::nullopt;
        auto k = s->second.find(key);
        if (k == s->second.end()) return std::nullopt;
        used_.insert(sec + "." + key);
        return k->second.value;
    }

    double number(const std::string& sec, const std::string& key, double fallback) const {
        auto v = raw(sec, key);
        if (!v) return fallback;
        return parse_number(sec, key, *v);
    }

    long integer(const std::string& sec, const std::string& key, long fallback) const {
        const double d = number(sec, key, static_cast<double>(fallback));
        const long l = std::lround(d);
        if (std::abs(d - l) > 1e-9) fail_key(sec, key, "expected an integer");
        return l;
    }

    std::string text(const std::string& sec, const std::string& key, std::string fallback) const {
        auto v = raw(sec, key);
        return v ? *v : fallback;
    }

    bool flag(const std::string& sec, const std::string& key, bool fallback) const {
        auto v = raw(sec, key);
        if (!v) return fallback;
        if (*v == "true" || *v == "1" || *v == "yes") return true;
        if (*v == "false" || *v == "0" || *v == "no") return false;
        fail_key(sec, key, "expected a boolean");
        return false;
    }

    /// Comma list of numbers; "a:b:c" expands to the inclusive range with step
    /// c; "pow2:a:b" to powers of two in [a, b].
    std::vector<double> number_list(const std::string& sec, const std::string& key,
                                    std::vector<double> fallback) const {
        auto v = raw(sec, key);
        if (!v) return fallback;
        std::vector<double> out;
        for (const auto& tok : detail::split(*v, ',')) {
            if (tok.empty()) continue;
            if (tok.rfind("pow2:", 0) == 0) {
                const auto parts = detail::split(tok.substr(5), ':');
                if (parts.size() != 2) fail_key(sec, key, "pow2 expects pow2:lo:hi");
                for (double w = parse_number(sec, key, parts[0]);
                     w <= parse_number(sec, key, parts[1]) + 0.5; w *= 2)
                    out.push_back(w);
            } else if (tok.find(':') != std::string::npos) {
                const auto parts = detail::split(tok, ':');
                if (parts.size() != 3) fail_key(sec, key, "range expects start:stop:step");
                const double a = parse_number(sec, key, parts[0]);
                const double b = parse_number(sec, key, parts[1]);
                const double st = parse_number(sec, key, parts[2]);
                if (!(st > 0)) fail_key(sec, key, "range step must be positive");
                for (double x = a; x <= b + 1e-9 * std::abs(st); x += st) out.push_back(x);
            } else {
                out.push_back(parse_number(sec, key, tok));
            }
        }
        if (out.empty()) fail_key(sec, key, "empty list");
        return out;
    }

    /// Errors on keys that were never consumed (typo protection).
    void check_all_used() const {
        for (const auto& [sec, kv] : sections_)
            for (const auto& [key, entry] : kv)
                if (!used_.count(sec + "." + key))
                    fail(entry.line, "unknown key '" + key + "' in [" + sec + "]");
    }

private:
    struct Entry {
        std::string value;
        int line;
    };

    [[noreturn]] void fail(int line, const std::string& msg) const {
        throw ConfigError(source_ + ":" + std::to_string(line) + ": " + msg);
    }
    [[noreturn]] void fail_key(const std::string& sec, const std::string& key,
                               const std::string& msg) const {
        const auto& e = sections_.at(sec).at(key);
        fail(e.line, msg + " for '" + key + "' (got '" + e.value + "')");
    }
    double parse_number(const std::string& sec, const std::string& key, const std::string& tok) const {
        char* end = nullptr;
        const double v = std::strtod(tok.c_str(), &end);
        if (end == tok.c_str() || *end != '\0') fail_key(sec, key, "expected a number");
        return v;
    }

    std::string source_;
    std::map<std::string, std::map<std::string, Entry>> sections_;
    mutable std::set<std::string> used_;
};

struct AnalysisConfig {
    std::vector<int> windows{1, 2, 4, 8, 16, 32, 64, 128, 256, 512};
    std::vector<double> launch_dbm{-2, -1, 0, 1, 2, 3};
    std::vector<std::uint64_t> seeds{21, 22};
    std::size_t slots = 1000000;
    std::string kappa_file = "kappa.txt";
};

struct CompareConfig {
    std::vector<FormatSpec> formats;
    bool auto_calibrate = true;
    CalibrationOptions calibration;
};

struct WindowsTableConfig {
    std::vector<double> r_sym_gbd{1.375, 2.75, 5.5, 11, 22, 44, 88};
    std::vector<int> n_span{1, 20, 72};
};

struct ExperimentConfig {
    FormatSpec modulation;
    LinkConfig link;
    AnalysisConfig analysis;
    CompareConfig compare;
    WindowsTableConfig windows_table;
};

inline FormatSpec parse_format_token(const std::string& token, const FormatSpec& defaults) {
    FormatSpec f = defaults;
    const auto parts = detail::split(token, ':');
    const std::string& type = parts[0];
    if (type == "iid-qam")
        f.kind = FormatSpec::Kind::kIidQam;
    else if (type == "iid-mb")
        f.kind = FormatSpec::Kind::kIidMb;
    else if (type == "gaussian")
        f.kind = FormatSpec::Kind::kGaussian;
    else if (type == "qpsk")
        f.kind = FormatSpec::Kind::kQpsk;
    else if (type == "ess1d")
        f.kind = FormatSpec::Kind::kEss1D;
    else if (type == "ess4d")
        f.kind = FormatSpec::Kind::kEss4D;
    else
        throw ConfigError("unknown modulation type '" + type + "'");
    if (parts.size() > 1) f.n = std::atoi(parts[1].c_str());
    if (parts.size() > 2) throw ConfigError("malformed format token '" + token + "'");
    return f;
}

inline ExperimentConfig parse_experiment_config(const ConfigParser& p) {
    ExperimentConfig cfg;

    FormatSpec& m = cfg.modulation;
    m.M = static_cast<int>(p.integer("modulation", "M", m.M));
    m.n = static_cast<int>(p.integer("modulation", "n", m.n));
    m.H = p.number("modulation", "H", m.H);
    m.inner_cap = p.integer("modulation", "inner_cap", m.inner_cap);
    m = parse_format_token(p.text("modulation", "type", "iid-qam"), m);

    LinkConfig& l = cfg.link;
    l.r_sym = p.number("link", "r_sym", l.r_sym);
    l.rolloff = p.number("link", "rolloff", l.rolloff);
    l.n_ch = static_cast<int>(p.integer("link", "n_ch", l.n_ch));
    l.delta_f_abs = p.number("link", "delta_f", 100.0 / 88.0) * l.r_sym;
    l.center_freq = p.number("link", "center_freq", l.center_freq);
    l.alpha_db_per_km = p.number("link", "alpha_db_per_km", l.alpha_db_per_km);
    l.beta2_mag = p.number("link", "beta2", l.beta2_mag);
    l.gamma_nl = p.number("link", "gamma", l.gamma_nl);
    l.l_span = p.number("link", "l_span", l.l_span);
    l.n_span = static_cast<int>(p.integer("link", "n_span", l.n_span));
    l.noise_figure_db = p.number("link", "noise_figure_db", l.noise_figure_db);
    l.ase_enabled = p.flag("link", "ase", true);
    l.steps_per_span = static_cast<int>(p.integer("link", "steps_per_span", l.steps_per_span));
    l.samples_per_symbol =
        static_cast<int>(p.integer("link", "samples_per_symbol", l.samples_per_symbol));
    l.symbols = static_cast<std::size_t>(p.integer("link", "symbols", static_cast<long>(l.symbols)));
    l.ref_bandwidth = p.number("link", "ref_bandwidth", l.ref_bandwidth);

    AnalysisConfig& a = cfg.analysis;
    {
        std::vector<double> wd;
        for (int w : a.windows) wd.push_back(w);
        wd = p.number_list("analysis", "windows", wd);
        a.windows.clear();
        for (double w : wd) {
            if (w < 1 || std::abs(w - std::lround(w)) > 1e-9)
                throw ConfigError("analysis.windows: windows must be positive integers");
            a.windows.push_back(static_cast<int>(std::lround(w)));
        }
        if (!std::is_sorted(a.windows.begin(), a.windows.end()))
            throw ConfigError("analysis.windows: must be ascending");
    }
    a.launch_dbm = p.number_list("analysis", "launch_dbm", a.launch_dbm);
    {
        std::vector<double> sd;
        for (auto s : a.seeds) sd.push_back(static_cast<double>(s));
        sd = p.number_list("analysis", "seeds", sd);
        a.seeds.clear();
        for (double s : sd) a.seeds.push_back(static_cast<std::uint64_t>(std::llround(s)));
    }
    a.slots = static_cast<std::size_t>(p.integer("analysis", "slots", static_cast<long>(a.slots)));
    a.kappa_file = p.text("analysis", "kappa_file", a.kappa_file);

    CompareConfig& c = cfg.compare;
    for (const auto& tok :
         detail::split(p.text("compare", "formats", "iid-qam, iid-mb, ess1d:5, ess1d:40"), ','))
        if (!tok.empty()) c.formats.push_back(parse_format_token(tok, cfg.modulation));
    c.auto_calibrate = p.flag("compare", "auto_calibrate", true);
    c.calibration.launch_dbm =
        p.number_list("compare", "calib_launch_dbm", c.calibration.launch_dbm);
    {
        std::vector<double> sd;
        for (auto s : c.calibration.seeds) sd.push_back(static_cast<double>(s));
        sd = p.number_list("compare", "calib_seeds", sd);
        c.calibration.seeds.clear();
        for (double s : sd) c.calibration.seeds.push_back(static_cast<std::uint64_t>(std::llround(s)));
    }

    WindowsTableConfig& w = cfg.windows_table;
    w.r_sym_gbd = p.number_list("windows-table", "r_sym_gbd", w.r_sym_gbd);
    {
        std::vector<double> sp;
        for (int s : w.n_span) sp.push_back(s);
        sp = p.number_list("windows-table", "n_span", sp);
        w.n_span.clear();
        for (double s : sp) w.n_span.push_back(static_cast<int>(std::lround(s)));
    }

    p.check_all_used();
    cfg.link.validate();
    // cross-field checks
    if (cfg.modulation.kind == FormatSpec::Kind::kIidMb ||
        cfg.modulation.kind == FormatSpec::Kind::kEss1D ||
        cfg.modulation.kind == FormatSpec::Kind::kEss4D) {
        if (cfg.modulation.H > std::log2(static_cast<double>(cfg.modulation.M)) + 1e-12)
            throw ConfigError("modulation: H exceeds log2(M) bits per positive 1D symbol");
    }
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    return parse_experiment_config(ConfigParser::from_file(path));
}

namespace detail {

inline const char* format_kind_name(FormatSpec::Kind k) {
    switch (k) {
        case FormatSpec::Kind::kIidQam: return "iid-qam";
        case FormatSpec::Kind::kIidMb: return "iid-mb";
        case FormatSpec::Kind::kGaussian: return "gaussian";
        case FormatSpec::Kind::kQpsk: return "qpsk";
        case FormatSpec::Kind::kEss1D: return "ess1d";
        case FormatSpec::Kind::kEss4D: return "ess4d";
    }
    return "?";
}

inline std::string num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

}  // namespace detail

/// Effective-config echo: normalized, parseable, deterministic.
inline std::string echo_config(const ExperimentConfig& cfg) {
    using detail::num;
    std::ostringstream os;
    os << "[modulation]\n";
    os << "type = " << detail::format_kind_name(cfg.modulation.kind) << "\n";
    os << "M = " << cfg.modulation.M << "\n";
    os << "n = " << cfg.modulation.n << "\n";
    os << "H = " << num(cfg.modulation.H) << "\n";
    os << "inner_cap = " << cfg.modulation.inner_cap << "\n";
    const LinkConfig& l = cfg.link;
    os << "\n[link]\n";
    os << "r_sym = " << num(l.r_sym) << "\n";
    os << "rolloff = " << num(l.rolloff) << "\n";
    os << "n_ch = " << l.n_ch << "\n";
    os << "delta_f = " << num(l.delta_f_abs / l.r_sym) << "\n";
    os << "center_freq = " << num(l.center_freq) << "\n";
    os << "alpha_db_per_km = " << num(l.alpha_db_per_km) << "\n";
    os << "beta2 = " << num(l.beta2_mag) << "\n";
    os << "gamma = " << num(l.gamma_nl) << "\n";
    os << "l_span = " << num(l.l_span) << "\n";
    os << "n_span = " << l.n_span << "\n";
    os << "noise_figure_db = " << num(l.noise_figure_db) << "\n";
    os << "ase = " << (l.ase_enabled ? "true" : "false") << "\n";
    os << "steps_per_span = " << l.steps_per_span << "\n";
    os << "samples_per_symbol = " << l.samples_per_symbol << "\n";
    os << "symbols = " << l.symbols << "\n";
    os << "ref_bandwidth = " << num(l.ref_bandwidth) << "\n";
    const AnalysisConfig& a = cfg.analysis;
    os << "\n[analysis]\n";
    os << "windows = ";
    for (std::size_t i = 0; i < a.windows.size(); ++i) os << (i ? "," : "") << a.windows[i];
    os << "\nlaunch_dbm = ";
    for (std::size_t i = 0; i < a.launch_dbm.size(); ++i) os << (i ? "," : "") << num(a.launch_dbm[i]);
    os << "\nseeds = ";
    for (std::size_t i = 0; i < a.seeds.size(); ++i) os << (i ? "," : "") << a.seeds[i];
    os << "\nslots = " << a.slots << "\n";
    os << "kappa_file = " << a.kappa_file << "\n";
    const CompareConfig& c = cfg.compare;
    os << "\n[compare]\n";
    os << "formats = ";
    for (std::size_t i = 0; i < c.formats.size(); ++i) {
        const auto& f = c.formats[i];
        os << (i ? "," : "") << detail::format_kind_name(f.kind);
        if (f.kind == FormatSpec::Kind::kEss1D || f.kind == FormatSpec::Kind::kEss4D)
            os << ":" << f.n;
    }
    os << "\nauto_calibrate = " << (c.auto_calibrate ? "true" : "false") << "\n";
    os << "calib_launch_dbm = ";
    for (std::size_t i = 0; i < c.calibration.launch_dbm.size(); ++i)
        os << (i ? "," : "") << num(c.calibration.launch_dbm[i]);
    os << "\ncalib_seeds = ";
    for (std::size_t i = 0; i < c.calibration.seeds.size(); ++i)
        os << (i ? "," : "") << c.calibration.seeds[i];
    const WindowsTableConfig& w = cfg.windows_table;
    os << "\n\n[windows-table]\n";
    os << "r_sym_gbd = ";
    for (std::size_t i = 0; i < w.r_sym_gbd.size(); ++i) os << (i ? "," : "") << num(w.r_sym_gbd[i]);
    os << "\nn_span = ";
    for (std::size_t i = 0; i < w.n_span.size(); ++i) os << (i ? "," : "") << w.n_span[i];
    os << "\n";
    return os.str();
}

/// kappa record persistence (kappa values, scope, link fingerprint, seeds,
/// fit residuals) so predictions are reproducible without re-calibration.
inline void save_kappa_record(std::ostream& os, const KappaSet& k) {
    os << "[kappa." << scope_name(k.scope) << "]\n";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", k.kappa1);
    os << "kappa1 = " << buf << "\n";
    std::snprintf(buf, sizeof(buf), "%.17g", k.kappa2);
    os << "kappa2 = " << buf << "\n";
    std::snprintf(buf, sizeof(buf), "%.17g", k.kappa3);
    os << "kappa3 = " << buf << "\n";
    std::snprintf(buf, sizeof(buf), "%.17g", k.max_fit_residual);
    os << "max_fit_residual = " << buf << "\n";
    os << "seeds = ";
    for (std::size_t i = 0; i < k.seeds.size(); ++i) os << (i ? "," : "") << k.seeds[i];
    os << "\nlink = " << k.link_fingerprint << "\n\n";
}

struct KappaRecord {
    KappaSet spm;
    std::optional<KappaSet> xpm;
};

inline KappaRecord load_kappa_record(const std::string& path) {
    const ConfigParser p = ConfigParser::from_file(path);
    auto read = [&](const std::string& sec, NliScope scope) {
        KappaSet k;
        k.scope = scope;
        k.kappa1 = p.number(sec, "kappa1", 0.0);
        k.kappa2 = p.number(sec, "kappa2", 0.0);
        k.kappa3 = p.number(sec, "kappa3", 0.0);
        k.max_fit_residual = p.number(sec, "max_fit_residual", 0.0);
        for (double s : p.number_list(sec, "seeds", {}))
            k.seeds.push_back(static_cast<std::uint64_t>(std::llround(s)));
        k.link_fingerprint = p.text(sec, "link", "");
        if (!(k.kappa1 > 0)) throw ConfigError(path + ": missing or invalid [" + sec + "]");
        return k;
    };
    KappaRecord rec;
    rec.spm = read("kappa.spm", NliScope::kSpm);
    if (p.has_section("kappa.xpm")) rec.xpm = read("kappa.xpm", NliScope::kXpm);
    return rec;
}

}  // namespace fiberlab
