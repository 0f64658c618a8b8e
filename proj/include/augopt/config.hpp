#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "augopt/augmentation.hpp"
#include "augopt/problem.hpp"

namespace augopt {

/// `key = value` configuration text with `#` comments and dotted keys.
/// Parse errors carry the offending line number.
class Config {
  public:
    static Config parse_string(const std::string& text, const std::string& origin = "<config>") {
        Config cfg;
        cfg.origin_ = origin;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const std::string trimmed = trim(line);
            if (trimmed.empty()) continue;
            const auto eq = trimmed.find('=');
            if (eq == std::string::npos)
                throw ConfigError(origin + ":" + std::to_string(lineno) +
                                      ": expected 'key = value'",
                                  lineno);
            const std::string key = trim(trimmed.substr(0, eq));
            const std::string value = trim(trimmed.substr(eq + 1));
            if (key.empty())
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key", lineno);
            cfg.values_[key] = value;
            cfg.lines_[key] = lineno;
        }
        return cfg;
    }

    static Config parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file: " + path);
        std::ostringstream buf;
        buf << in.rdbuf();
        return parse_string(buf.str(), path);
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string get_string(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end()) throw ConfigError(origin_ + ": missing required key '" + key + "'");
        return it->second;
    }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        const auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    double get_double(const std::string& key) const { return parse_double(key, get_string(key)); }
    double get_double(const std::string& key, double fallback) const {
        return has(key) ? get_double(key) : fallback;
    }

    long get_long(const std::string& key) const {
        const std::string raw = get_string(key);
        try {
            std::size_t pos = 0;
            const long v = std::stol(raw, &pos);
            if (pos != raw.size()) throw std::invalid_argument(raw);
            return v;
        } catch (const std::exception&) {
            throw ConfigError(location(key) + ": expected an integer for '" + key + "', got '" +
                                  raw + "'",
                              line_of(key));
        }
    }
    long get_long(const std::string& key, long fallback) const {
        return has(key) ? get_long(key) : fallback;
    }

    std::uint64_t get_seed(const std::string& key, std::uint64_t fallback) const {
        if (!has(key)) return fallback;
        const std::string raw = get_string(key);
        try {
            return std::stoull(raw);
        } catch (const std::exception&) {
            throw ConfigError(location(key) + ": expected an unsigned seed for '" + key + "'",
                              line_of(key));
        }
    }

    bool get_bool(const std::string& key, bool fallback) const {
        if (!has(key)) return fallback;
        const std::string raw = get_string(key);
        if (raw == "true" || raw == "1" || raw == "yes") return true;
        if (raw == "false" || raw == "0" || raw == "no") return false;
        throw ConfigError(location(key) + ": expected a boolean for '" + key + "'", line_of(key));
    }

    std::vector<double> get_double_list(const std::string& key) const {
        const std::string raw = get_string(key);
        std::vector<double> out;
        std::istringstream in(raw);
        std::string cell;
        while (std::getline(in, cell, ',')) {
            const std::string item = trim(cell);
            if (item.empty()) continue;
            out.push_back(parse_double(key, item));
        }
        if (out.empty())
            throw ConfigError(location(key) + ": expected a comma-separated list for '" + key + "'",
                              line_of(key));
        return out;
    }

    int line_of(const std::string& key) const {
        const auto it = lines_.find(key);
        return it == lines_.end() ? 0 : it->second;
    }

    std::string location(const std::string& key) const {
        return origin_ + ":" + std::to_string(line_of(key));
    }

  private:
    static std::string trim(const std::string& s) {
        const auto begin = s.find_first_not_of(" \t\r\n");
        if (begin == std::string::npos) return "";
        const auto end = s.find_last_not_of(" \t\r\n");
        return s.substr(begin, end - begin + 1);
    }

    double parse_double(const std::string& key, const std::string& raw) const {
        try {
            std::size_t pos = 0;
            const double v = std::stod(raw, &pos);
            if (pos != raw.size()) throw std::invalid_argument(raw);
            return v;
        } catch (const std::exception&) {
            throw ConfigError(location(key) + ": expected a number for '" + key + "', got '" +
                                  raw + "'",
                              line_of(key));
        }
    }

    std::string origin_;
    std::map<std::string, std::string> values_;
    std::map<std::string, int> lines_;
};

/// Everything one experiment needs: the problem source, the scheme, the joint
/// schedules, and the run dimensions.
struct ExperimentConfig {
    // problem
    bool synthetic = true;
    std::size_t n = 32, samples = 8, p = 4;
    std::uint64_t problem_seed = 1;
    double label_noise = 0.0;
    std::string inputs_path, labels_path;

    // scheme + schedules
    SchemeKind kind = SchemeKind::AdditiveNoise;
    NoiseKind noise = NoiseKind::Gaussian;
    ScheduleSet schedule;

    // run
    long t_max = 1000;
    long n_traj = 64;
    long record_every = 0;  // 0 = logarithmic checkpoints
    std::uint64_t master_seed = 1;

    // sweep grids (exponent values)
    std::vector<double> sweep_x, sweep_y;

    std::string out_dir = ".";

    static SchemeKind parse_kind(const Config& cfg, const std::string& key) {
        const std::string raw = cfg.get_string(key, "identity");
        if (raw == "identity") return SchemeKind::Identity;
        if (raw == "noise") return SchemeKind::AdditiveNoise;
        if (raw == "minibatch") return SchemeKind::Minibatch;
        if (raw == "minibatch-noise") return SchemeKind::MinibatchWithNoise;
        throw ConfigError(cfg.location(key) + ": unknown scheme kind '" + raw + "'",
                          cfg.line_of(key));
    }

    static NoiseKind parse_noise(const Config& cfg, const std::string& key) {
        const std::string raw = cfg.get_string(key, "gaussian");
        if (raw == "gaussian") return NoiseKind::Gaussian;
        if (raw == "rademacher") return NoiseKind::Rademacher;
        if (raw == "uniform") return NoiseKind::Uniform;
        throw ConfigError(cfg.location(key) + ": unknown noise kind '" + raw + "'",
                          cfg.line_of(key));
    }

    static PowerLaw parse_power_law(const Config& cfg, const std::string& prefix) {
        try {
            return PowerLaw(cfg.get_double(prefix + ".coefficient", 1.0),
                            cfg.get_double(prefix + ".exponent", 0.0),
                            cfg.get_long(prefix + ".offset", 1));
        } catch (const InvalidParameter& e) {
            throw ConfigError(std::string("invalid ") + prefix + ": " + e.what());
        }
    }

    static ExperimentConfig from_config(const Config& cfg) {
        ExperimentConfig ec;
        const std::string source = cfg.get_string("problem.kind", "synthetic");
        if (source == "synthetic") {
            ec.synthetic = true;
            ec.n = static_cast<std::size_t>(cfg.get_long("problem.n", 32));
            ec.samples = static_cast<std::size_t>(cfg.get_long("problem.N", 8));
            ec.p = static_cast<std::size_t>(cfg.get_long("problem.p", 4));
            ec.problem_seed = cfg.get_seed("problem.seed", 1);
            ec.label_noise = cfg.get_double("problem.label_noise", 0.0);
        } else if (source == "files") {
            ec.synthetic = false;
            ec.inputs_path = cfg.get_string("problem.inputs");
            ec.labels_path = cfg.get_string("problem.labels");
        } else {
            throw ConfigError(cfg.location("problem.kind") + ": unknown problem kind '" + source +
                                  "'",
                              cfg.line_of("problem.kind"));
        }

        ec.kind = parse_kind(cfg, "scheme.kind");
        ec.noise = parse_noise(cfg, "scheme.noise");

        ScheduleSet sched;
        sched.eta = parse_power_law(cfg, "schedule.eta");
        const bool wants_noise =
            ec.kind == SchemeKind::AdditiveNoise || ec.kind == SchemeKind::MinibatchWithNoise;
        if (cfg.has("schedule.sigma2.coefficient") || wants_noise)
            sched.sigma2 = parse_power_law(cfg, "schedule.sigma2");
        const bool wants_batch =
            ec.kind == SchemeKind::Minibatch || ec.kind == SchemeKind::MinibatchWithNoise;
        if (wants_batch || cfg.has("schedule.batch.size") || cfg.has("schedule.batch.kind")) {
            const std::string bkind = cfg.get_string("schedule.batch.kind", "constant");
            if (bkind == "constant") {
                sched.batch = BatchRule::constant(cfg.get_long("schedule.batch.size", 1));
            } else if (bkind == "power") {
                sched.batch = BatchRule::power(parse_power_law(cfg, "schedule.batch"));
            } else {
                throw ConfigError(cfg.location("schedule.batch.kind") + ": unknown batch rule '" +
                                      bkind + "'",
                                  cfg.line_of("schedule.batch.kind"));
            }
        }
        ec.schedule = sched;

        ec.t_max = cfg.get_long("run.t_max", 1000);
        ec.n_traj = cfg.get_long("run.n_traj", 64);
        ec.record_every = cfg.get_long("run.record_every", 0);
        ec.master_seed = cfg.get_seed("run.master_seed", 1);
        if (ec.t_max < 1) throw ConfigError("run.t_max must be >= 1");
        if (ec.n_traj < 2) throw ConfigError("run.n_traj must be >= 2");

        if (cfg.has("sweep.x")) ec.sweep_x = cfg.get_double_list("sweep.x");
        if (cfg.has("sweep.y")) ec.sweep_y = cfg.get_double_list("sweep.y");
        ec.out_dir = cfg.get_string("output.dir", ".");
        return ec;
    }

    Dataset build_dataset() const {
        if (synthetic) return synthetic_dataset(n, samples, p, problem_seed, label_noise);
        std::ifstream probe(inputs_path);
        if (!probe) throw ConfigError("dataset file not found: " + inputs_path);
        std::ifstream probe2(labels_path);
        if (!probe2) throw ConfigError("dataset file not found: " + labels_path);
        return load_dataset(inputs_path, labels_path);
    }

    AugmentationScheme build_scheme() const {
        try {
            return AugmentationScheme(kind, schedule, noise);
        } catch (const InvalidParameter& e) {
            throw ConfigError(std::string("invalid scheme: ") + e.what());
        }
    }
};

}  // namespace augopt
