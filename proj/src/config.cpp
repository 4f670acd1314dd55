#include "entconc/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace entconc {

std::string to_string(Command c) {
    switch (c) {
        case Command::Concentrate: return "concentrate";
        case Command::Repeater: return "repeater";
        case Command::RepeaterFiltered: return "repeater-filtered";
        case Command::BellSwap: return "bell-swap";
        case Command::Chsh: return "chsh";
        case Command::DelayScan: return "delay-scan";
        case Command::Table1: return "table1";
    }
    return "?";
}

std::optional<Command> command_from_string(const std::string& s) {
    if (s == "concentrate") return Command::Concentrate;
    if (s == "repeater") return Command::Repeater;
    if (s == "repeater-filtered") return Command::RepeaterFiltered;
    if (s == "bell-swap") return Command::BellSwap;
    if (s == "chsh") return Command::Chsh;
    if (s == "delay-scan") return Command::DelayScan;
    if (s == "table1") return Command::Table1;
    return std::nullopt;
}

ChshSettings ExperimentConfig::chsh_settings() const {
    constexpr double rad = M_PI / 180.0;
    return ChshSettings{a_deg * rad, a_prime_deg * rad, b_deg * rad, b_prime_deg * rad};
}

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    size_t e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

struct RawEntry {
    std::string value;
    int line;
};

double parse_double(const std::string& key, const RawEntry& e) {
    char* end = nullptr;
    const double v = std::strtod(e.value.c_str(), &end);
    if (end == e.value.c_str() || *end != '\0' || !std::isfinite(v)) {
        throw ConfigError("line " + std::to_string(e.line) + ": key '" + key +
                          "' needs a finite number, got '" + e.value + "'");
    }
    return v;
}

std::uint64_t parse_u64(const std::string& key, const RawEntry& e) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(e.value.c_str(), &end, 10);
    if (end == e.value.c_str() || *end != '\0') {
        throw ConfigError("line " + std::to_string(e.line) + ": key '" + key +
                          "' needs an unsigned integer, got '" + e.value + "'");
    }
    return v;
}

int parse_int(const std::string& key, const RawEntry& e) {
    char* end = nullptr;
    const long v = std::strtol(e.value.c_str(), &end, 10);
    if (end == e.value.c_str() || *end != '\0') {
        throw ConfigError("line " + std::to_string(e.line) + ": key '" + key +
                          "' needs an integer, got '" + e.value + "'");
    }
    return static_cast<int>(v);
}

bool parse_bool(const std::string& key, const RawEntry& e) {
    if (e.value == "true") return true;
    if (e.value == "false") return false;
    throw ConfigError("line " + std::to_string(e.line) + ": key '" + key +
                      "' needs true or false, got '" + e.value + "'");
}

[[noreturn]] void range_error(const std::string& key, const std::string& what) {
    throw ConfigError("key '" + key + "': " + what);
}

class KeyReader {
public:
    explicit KeyReader(std::map<std::string, RawEntry> entries)
        : entries_(std::move(entries)) {}

    bool has(const std::string& key) const { return entries_.count(key) > 0; }

    template <typename F>
    void take(const std::string& key, F&& apply) {
        auto it = entries_.find(key);
        if (it == entries_.end()) return;
        apply(key, it->second);
        entries_.erase(it);
    }

    void finish() const {
        if (!entries_.empty()) {
            const auto& [key, e] = *entries_.begin();
            throw ConfigError("line " + std::to_string(e.line) + ": unknown key '" +
                              key + "'");
        }
    }

private:
    std::map<std::string, RawEntry> entries_;
};

void read_pair_amplitudes(KeyReader& r, const std::string& suffix, PairConfig& pc) {
    double ar = 0.0, ai = 0.0, br = 0.0, bi = 0.0;
    bool any = false;
    auto grab = [&](const std::string& key, double& slot) {
        r.take(key, [&](const std::string& k, const RawEntry& e) {
            slot = parse_double(k, e);
            any = true;
        });
    };
    grab("alpha" + suffix + "_re", ar);
    grab("alpha" + suffix + "_im", ai);
    grab("beta" + suffix + "_re", br);
    grab("beta" + suffix + "_im", bi);
    if (!any) return;
    const cdouble alpha(ar, ai);
    const cdouble beta(br, bi);
    if (std::abs(std::norm(alpha) + std::norm(beta) - 1.0) > 1e-9) {
        range_error("alpha" + suffix + "/beta" + suffix,
                    "|alpha|^2 + |beta|^2 must equal 1");
    }
    pc.alpha = alpha;
    pc.beta = beta;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
    std::map<std::string, RawEntry> entries;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(line_no) +
                              ": expected 'key = value', got '" + line + "'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw ConfigError("line " + std::to_string(line_no) +
                              ": empty key or value");
        }
        if (entries.count(key)) {
            throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" +
                              key + "'");
        }
        entries.emplace(key, RawEntry{value, line_no});
    }

    ExperimentConfig cfg;
    KeyReader r(std::move(entries));

    r.take("protocol", [&](const std::string& k, const RawEntry& e) {
        auto c = command_from_string(e.value);
        if (!c) range_error(k, "unknown protocol '" + e.value + "'");
        cfg.protocol = *c;
    });
    r.take("branch", [&](const std::string& k, const RawEntry& e) {
        auto b = branch_from_string(e.value);
        if (!b) range_error(k, "must be one of pp, pm, mp, mm");
        cfg.branch = *b;
    });
    r.take("t_h", [&](const std::string& k, const RawEntry& e) {
        cfg.t_h = parse_double(k, e);
        if (!(cfg.t_h > 0.0 && cfg.t_h <= 1.0)) range_error(k, "must be in (0, 1]");
    });
    r.take("t_v", [&](const std::string& k, const RawEntry& e) {
        cfg.t_v = parse_double(k, e);
        if (!(cfg.t_v > 0.0 && cfg.t_v <= 1.0)) range_error(k, "must be in (0, 1]");
    });
    if (cfg.t_v > cfg.t_h) range_error("t_v", "must not exceed t_h");

    bool windows2_set = false, phase2_set = false;
    r.take("windows", [&](const std::string& k, const RawEntry& e) {
        cfg.pair1.windows = parse_int(k, e);
        if (cfg.pair1.windows < 0) range_error(k, "must be >= 0");
    });
    r.take("windows2", [&](const std::string& k, const RawEntry& e) {
        cfg.pair2.windows = parse_int(k, e);
        if (cfg.pair2.windows < 0) range_error(k, "must be >= 0");
        windows2_set = true;
    });
    r.take("phase_deg", [&](const std::string& k, const RawEntry& e) {
        cfg.pair1.phase_deg = parse_double(k, e);
    });
    r.take("phase2_deg", [&](const std::string& k, const RawEntry& e) {
        cfg.pair2.phase_deg = parse_double(k, e);
        phase2_set = true;
    });
    read_pair_amplitudes(r, "", cfg.pair1);
    read_pair_amplitudes(r, "2", cfg.pair2);
    if (!windows2_set) cfg.pair2.windows = cfg.pair1.windows;
    if (!phase2_set) cfg.pair2.phase_deg = cfg.pair1.phase_deg;
    if (!cfg.pair2.alpha && cfg.pair1.alpha && !windows2_set) {
        cfg.pair2.alpha = cfg.pair1.alpha;
        cfg.pair2.beta = cfg.pair1.beta;
    }

    r.take("gamma", [&](const std::string& k, const RawEntry& e) {
        cfg.noise.overlap_gamma = parse_double(k, e);
        if (cfg.noise.overlap_gamma < 0.0 || cfg.noise.overlap_gamma > 1.0) {
            range_error(k, "must be in [0, 1]");
        }
    });
    r.take("background", [&](const std::string& k, const RawEntry& e) {
        cfg.noise.background_eps = parse_double(k, e);
        if (cfg.noise.background_eps < 0.0 || cfg.noise.background_eps >= 1.0) {
            range_error(k, "must be in [0, 1)");
        }
    });
    r.take("coherence_length_um", [&](const std::string& k, const RawEntry& e) {
        cfg.noise.coherence_length_um = parse_double(k, e);
        if (!(cfg.noise.coherence_length_um > 0.0)) range_error(k, "must be > 0");
    });

    r.take("rate_hz", [&](const std::string& k, const RawEntry& e) {
        cfg.sampling.rate_hz = parse_double(k, e);
        if (!(cfg.sampling.rate_hz > 0.0)) range_error(k, "must be > 0");
    });
    r.take("time_s", [&](const std::string& k, const RawEntry& e) {
        cfg.sampling.time_s = parse_double(k, e);
        if (!(cfg.sampling.time_s > 0.0)) range_error(k, "must be > 0");
    });
    r.take("time_accounting", [&](const std::string& k, const RawEntry& e) {
        if (e.value == "per_outcome") {
            cfg.sampling.accounting = TimeAccounting::PerOutcome;
        } else if (e.value == "per_setting") {
            cfg.sampling.accounting = TimeAccounting::PerSetting;
        } else {
            range_error(k, "must be per_outcome or per_setting");
        }
    });
    r.take("seed", [&](const std::string& k, const RawEntry& e) {
        cfg.sampling.seed = parse_u64(k, e);
    });
    r.take("ideal", [&](const std::string& k, const RawEntry& e) {
        cfg.ideal = parse_bool(k, e);
    });

    auto angle = [&](const std::string& key, double& slot) {
        r.take(key, [&](const std::string& k, const RawEntry& e) {
            slot = parse_double(k, e);
            if (slot < 0.0 || slot >= 180.0) range_error(k, "must be in [0, 180)");
        });
    };
    angle("a_deg", cfg.a_deg);
    angle("a_prime_deg", cfg.a_prime_deg);
    angle("b_deg", cfg.b_deg);
    angle("b_prime_deg", cfg.b_prime_deg);

    r.take("scan_min_um", [&](const std::string& k, const RawEntry& e) {
        cfg.scan_min_um = parse_double(k, e);
    });
    r.take("scan_max_um", [&](const std::string& k, const RawEntry& e) {
        cfg.scan_max_um = parse_double(k, e);
    });
    r.take("scan_points", [&](const std::string& k, const RawEntry& e) {
        cfg.scan_points = parse_int(k, e);
        if (cfg.scan_points < 2) range_error(k, "must be >= 2");
    });
    r.take("scan_time_s", [&](const std::string& k, const RawEntry& e) {
        const double v = parse_double(k, e);
        if (!(v > 0.0)) range_error(k, "must be > 0");
        cfg.scan_time_s = v;
    });
    if (!(cfg.scan_min_um < cfg.scan_max_um)) {
        range_error("scan_min_um", "must be below scan_max_um");
    }

    r.finish();
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

namespace {

std::string fmt_full(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::string write_config(const ExperimentConfig& cfg) {
    std::ostringstream out;
    out << "protocol = " << to_string(cfg.protocol) << "\n";
    out << "branch = " << to_string(cfg.branch) << "\n";
    out << "t_h = " << fmt_full(cfg.t_h) << "\n";
    out << "t_v = " << fmt_full(cfg.t_v) << "\n";
    out << "windows = " << cfg.pair1.windows << "\n";
    out << "windows2 = " << cfg.pair2.windows << "\n";
    out << "phase_deg = " << fmt_full(cfg.pair1.phase_deg) << "\n";
    out << "phase2_deg = " << fmt_full(cfg.pair2.phase_deg) << "\n";
    if (cfg.pair1.alpha) {
        out << "alpha_re = " << fmt_full(cfg.pair1.alpha->real()) << "\n";
        out << "alpha_im = " << fmt_full(cfg.pair1.alpha->imag()) << "\n";
        out << "beta_re = " << fmt_full(cfg.pair1.beta->real()) << "\n";
        out << "beta_im = " << fmt_full(cfg.pair1.beta->imag()) << "\n";
    }
    if (cfg.pair2.alpha) {
        out << "alpha2_re = " << fmt_full(cfg.pair2.alpha->real()) << "\n";
        out << "alpha2_im = " << fmt_full(cfg.pair2.alpha->imag()) << "\n";
        out << "beta2_re = " << fmt_full(cfg.pair2.beta->real()) << "\n";
        out << "beta2_im = " << fmt_full(cfg.pair2.beta->imag()) << "\n";
    }
    out << "gamma = " << fmt_full(cfg.noise.overlap_gamma) << "\n";
    out << "background = " << fmt_full(cfg.noise.background_eps) << "\n";
    out << "coherence_length_um = " << fmt_full(cfg.noise.coherence_length_um) << "\n";
    out << "rate_hz = " << fmt_full(cfg.sampling.rate_hz) << "\n";
    out << "time_s = " << fmt_full(cfg.sampling.time_s) << "\n";
    out << "time_accounting = "
        << (cfg.sampling.accounting == TimeAccounting::PerOutcome ? "per_outcome"
                                                                  : "per_setting")
        << "\n";
    out << "seed = " << cfg.sampling.seed << "\n";
    out << "ideal = " << (cfg.ideal ? "true" : "false") << "\n";
    out << "a_deg = " << fmt_full(cfg.a_deg) << "\n";
    out << "a_prime_deg = " << fmt_full(cfg.a_prime_deg) << "\n";
    out << "b_deg = " << fmt_full(cfg.b_deg) << "\n";
    out << "b_prime_deg = " << fmt_full(cfg.b_prime_deg) << "\n";
    out << "scan_min_um = " << fmt_full(cfg.scan_min_um) << "\n";
    out << "scan_max_um = " << fmt_full(cfg.scan_max_um) << "\n";
    out << "scan_points = " << cfg.scan_points << "\n";
    if (cfg.scan_time_s) {
        out << "scan_time_s = " << fmt_full(*cfg.scan_time_s) << "\n";
    }
    return out.str();
}

}  // namespace entconc
