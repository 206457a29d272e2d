// Copyright 2026 The beamsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "beamsim/dataset.hpp"
#include "beamsim/ml.hpp"

namespace beamsim {

/// Which probe-confirmation setting(s) evaluation reports.
enum class ProbeMode { Off, On, Both };

inline std::string to_string(ProbeMode m) {
    return m == ProbeMode::Off ? "false" : m == ProbeMode::On ? "true" : "both";
}

inline ProbeMode parse_probe_mode(const std::string& s) {
    if (s == "false" || s == "0" || s == "off") return ProbeMode::Off;
    if (s == "true" || s == "1" || s == "on") return ProbeMode::On;
    if (s == "both") return ProbeMode::Both;
    throw Error("probe-confirm: expected true, false or both, got '" + s + "'");
}

/// Every knob of a run. The training seed is not a separate key: it is
/// derived from master_seed so one number controls the whole pipeline.
struct RunConfig {
    SimConfig sim;
    std::size_t n_samples = 25000;
    std::array<double, 3> split{0.7, 0.1, 0.2};
    std::uint64_t master_seed = 1;
    ScenarioId scenario = ScenarioId::S1;
    TrainConfig train;
    std::vector<int> top_k{4, 2, 1};
    ProbeMode probe = ProbeMode::Both;
    std::vector<int> fc_hidden{128, 128};
    std::string output_dir = "out";

    TrainConfig train_config() const {
        TrainConfig c = train;
        c.seed = derive_seed(master_seed, {0x545241494EULL});  // "TRAIN"
        return c;
    }

    void validate() const {
        sim.validate();
        check(n_samples >= 10, "dataset.n_samples must be >= 10");
        train.validate();
        check(!top_k.empty(), "eval.top_k must not be empty");
        for (int k : top_k) check(k >= 1 && k <= sim.tx_grid.size(), "eval.top_k entries must lie in [1, F]");
    }
};

namespace detail {

template <class T>
T parse_number(const std::string& s, const std::string& key) {
    T v{};
    const char* b = s.data();
    const char* e = s.data() + s.size();
    if constexpr (std::is_floating_point_v<T>) {
        char* end = nullptr;
        v = std::strtod(b, &end);
        check(end == e && !s.empty(), "config key '" + key + "': expected a number, got '" + s + "'");
    } else {
        auto [p, ec] = std::from_chars(b, e, v);
        check(ec == std::errc() && p == e, "config key '" + key + "': expected an integer, got '" + s + "'");
    }
    return v;
}

inline bool parse_bool(const std::string& s, const std::string& key) {
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw Error("config key '" + key + "': expected true or false, got '" + s + "'");
}

inline std::vector<int> parse_int_list(const std::string& s, const std::string& key) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_number<int>(item, key));
    return out;
}

inline std::string join(const std::vector<int>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
    return out;
}

/// Shortest %g rendering that parses back to the same double.
inline std::string format_roundtrip(double v) {
    for (int digits = 6; digits < 17; ++digits) {
        const std::string s = format_g(v, digits);
        if (std::strtod(s.c_str(), nullptr) == v) return s;
    }
    return format_g(v, 17);
}

struct ConfigKey {
    std::string name;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

#define BEAMSIM_NUM(KEY, FIELD, TYPE)                                                                   \
    ConfigKey {                                                                                        \
        KEY, [](RunConfig& c, const std::string& v) { c.FIELD = parse_number<TYPE>(v, KEY); },        \
            [](const RunConfig& c) {                                                                   \
                if constexpr (std::is_floating_point_v<TYPE>) return format_roundtrip(static_cast<double>(c.FIELD)); \
                else return std::to_string(c.FIELD);                                                   \
            }                                                                                          \
    }
#define BEAMSIM_BOOL(KEY, FIELD)                                                                 \
    ConfigKey {                                                                                 \
        KEY, [](RunConfig& c, const std::string& v) { c.FIELD = parse_bool(v, KEY); },          \
            [](const RunConfig& c) { return std::string(c.FIELD ? "true" : "false"); }          \
    }

inline const std::vector<ConfigKey>& config_keys() {
    static const std::vector<ConfigKey> keys = {
        BEAMSIM_NUM("bs.n_y", sim.bs_geometry.n_y, int),
        BEAMSIM_NUM("bs.n_z", sim.bs_geometry.n_z, int),
        BEAMSIM_NUM("bs.spacing", sim.bs_geometry.spacing, double),
        BEAMSIM_NUM("ue.n_y", sim.ue_geometry.n_y, int),
        BEAMSIM_NUM("ue.n_z", sim.ue_geometry.n_z, int),
        BEAMSIM_NUM("ue.spacing", sim.ue_geometry.spacing, double),
        BEAMSIM_NUM("tx_grid.n_az", sim.tx_grid.n_az, int),
        BEAMSIM_NUM("tx_grid.n_el", sim.tx_grid.n_el, int),
        BEAMSIM_NUM("tx_grid.az_min_deg", sim.tx_grid.az_min_deg, double),
        BEAMSIM_NUM("tx_grid.az_max_deg", sim.tx_grid.az_max_deg, double),
        BEAMSIM_NUM("tx_grid.el_min_deg", sim.tx_grid.el_min_deg, double),
        BEAMSIM_NUM("tx_grid.el_max_deg", sim.tx_grid.el_max_deg, double),
        BEAMSIM_NUM("rx_grid.n_az", sim.rx_grid.n_az, int),
        BEAMSIM_NUM("rx_grid.n_el", sim.rx_grid.n_el, int),
        BEAMSIM_NUM("rx_grid.az_min_deg", sim.rx_grid.az_min_deg, double),
        BEAMSIM_NUM("rx_grid.az_max_deg", sim.rx_grid.az_max_deg, double),
        BEAMSIM_NUM("rx_grid.el_min_deg", sim.rx_grid.el_min_deg, double),
        BEAMSIM_NUM("rx_grid.el_max_deg", sim.rx_grid.el_max_deg, double),
        BEAMSIM_NUM("hbs.tx_block_az", sim.tx_block_az, int),
        BEAMSIM_NUM("hbs.tx_block_el", sim.tx_block_el, int),
        BEAMSIM_NUM("hbs.rx_block_az", sim.rx_block_az, int),
        BEAMSIM_NUM("hbs.rx_block_el", sim.rx_block_el, int),
        BEAMSIM_NUM("link.carrier_hz", sim.carrier_hz, double),
        BEAMSIM_NUM("link.bandwidth_hz", sim.bandwidth_hz, double),
        BEAMSIM_NUM("link.noise_figure_db", sim.noise_figure_db, double),
        BEAMSIM_NUM("link.tx_power_dbm", sim.tx_power_dbm, double),
        BEAMSIM_NUM("link.bs_gain_dbi", sim.bs_gain_dbi, double),
        BEAMSIM_NUM("link.ue_gain_dbi", sim.ue_gain_dbi, double),
        BEAMSIM_BOOL("link.noise_enabled", sim.noise_enabled),
        BEAMSIM_NUM("link.measurement_averages", sim.measurement_averages, int),
        BEAMSIM_NUM("cell.radius_m", sim.cell_radius_m, double),
        BEAMSIM_NUM("cell.min_distance_m", sim.min_distance_m, double),
        BEAMSIM_NUM("sector.az_half_width_deg", sim.sector.az_half_width_deg, double),
        BEAMSIM_NUM("sector.el_min_deg", sim.sector.el_min_deg, double),
        BEAMSIM_NUM("sector.el_max_deg", sim.sector.el_max_deg, double),
        BEAMSIM_NUM("profile_d.ricean_k_db", sim.profile_d.ricean_k_db, double),
        BEAMSIM_NUM("profile_d.num_clusters", sim.profile_d.num_clusters, int),
        BEAMSIM_NUM("profile_d.rays_per_cluster", sim.profile_d.rays_per_cluster, int),
        BEAMSIM_NUM("profile_d.cluster_angle_spread_deg", sim.profile_d.cluster_angle_spread_deg, double),
        BEAMSIM_NUM("profile_d.ray_angle_spread_deg", sim.profile_d.ray_angle_spread_deg, double),
        BEAMSIM_NUM("profile_e.ricean_k_db", sim.profile_e.ricean_k_db, double),
        BEAMSIM_NUM("profile_e.num_clusters", sim.profile_e.num_clusters, int),
        BEAMSIM_NUM("profile_e.rays_per_cluster", sim.profile_e.rays_per_cluster, int),
        BEAMSIM_NUM("profile_e.cluster_angle_spread_deg", sim.profile_e.cluster_angle_spread_deg, double),
        BEAMSIM_NUM("profile_e.ray_angle_spread_deg", sim.profile_e.ray_angle_spread_deg, double),
        BEAMSIM_NUM("dataset.n_samples", n_samples, std::size_t),
        BEAMSIM_NUM("dataset.train_fraction", split[0], double),
        BEAMSIM_NUM("dataset.val_fraction", split[1], double),
        BEAMSIM_NUM("dataset.test_fraction", split[2], double),
        BEAMSIM_NUM("seed", master_seed, std::uint64_t),
        {"scenario", [](RunConfig& c, const std::string& v) { c.scenario = parse_scenario(v); },
         [](const RunConfig& c) { return to_string(c.scenario); }},
        BEAMSIM_NUM("train.epochs", train.epochs, int),
        BEAMSIM_NUM("train.batch_size", train.batch_size, int),
        BEAMSIM_NUM("train.learning_rate", train.learning_rate, double),
        BEAMSIM_NUM("train.beta1", train.beta1, double),
        BEAMSIM_NUM("train.beta2", train.beta2, double),
        BEAMSIM_NUM("train.epsilon", train.epsilon, double),
        {"train.loss", [](RunConfig& c, const std::string& v) { c.train.loss = parse_loss(v); },
         [](const RunConfig& c) { return to_string(c.train.loss); }},
        BEAMSIM_BOOL("train.keep_best_val", train.keep_best_val),
        {"eval.top_k", [](RunConfig& c, const std::string& v) { c.top_k = parse_int_list(v, "eval.top_k"); },
         [](const RunConfig& c) { return join(c.top_k); }},
        {"eval.probe_confirm", [](RunConfig& c, const std::string& v) { c.probe = parse_probe_mode(v); },
         [](const RunConfig& c) { return to_string(c.probe); }},
        {"eval.fc_hidden", [](RunConfig& c, const std::string& v) { c.fc_hidden = parse_int_list(v, "eval.fc_hidden"); },
         [](const RunConfig& c) { return join(c.fc_hidden); }},
        {"output.dir", [](RunConfig& c, const std::string& v) { c.output_dir = v; },
         [](const RunConfig& c) { return c.output_dir; }},
    };
    return keys;
}

#undef BEAMSIM_NUM
#undef BEAMSIM_BOOL

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace detail

/// Sets one key. Unknown keys and malformed values throw.
inline void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
    for (const auto& k : detail::config_keys()) {
        if (k.name == key) {
            k.set(cfg, value);
            return;
        }
    }
    throw Error("unknown config key '" + key + "'");
}

/// Plain `key = value` lines; `#` starts a comment. Later lines override
/// earlier ones. Keys not listed start from the built-in defaults.
inline RunConfig parse_run_config(std::istream& is, RunConfig cfg = {}) {
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = "config line " + std::to_string(lineno) + ": ";
        check(eq != std::string::npos, where + "expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        check(!value.empty(), where + "empty value for '" + key + "'");
        try {
            set_config_value(cfg, key, value);
        } catch (const Error& e) {
            throw Error(where + e.what());
        }
    }
    return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream f(path);
    check(f.good(), "cannot open config file '" + path + "'");
    return parse_run_config(f);
}

/// Canonical dump: every key in fixed order, reparses to the same config.
inline std::string config_echo(const RunConfig& cfg) {
    std::string out;
    for (const auto& k : detail::config_keys()) out += k.name + " = " + k.get(cfg) + "\n";
    return out;
}

inline nlohmann::json config_to_json(const RunConfig& cfg) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& k : detail::config_keys()) j[k.name] = k.get(cfg);
    return j;
}

}  // namespace beamsim
