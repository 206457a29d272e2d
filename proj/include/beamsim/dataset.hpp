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

#include <algorithm>
#include <array>
#include <charconv>
#include <exception>
#include <fstream>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "beamsim/beamsearch.hpp"
#include "beamsim/beamforming.hpp"
#include "beamsim/channel.hpp"

namespace beamsim {

// ---------------------------------------------------------------------------
// Simulation configuration
// ---------------------------------------------------------------------------

/// Everything needed to simulate one sample. Defaults follow the 28 GHz
/// reference deployment: 8x8 BS UPA, 8-element UE ULA, 64 child and
/// 16 parent transmit beams, 8 receive beams.
struct SimConfig {
    ArrayGeometry bs_geometry{8, 8, 0.5};
    ArrayGeometry ue_geometry{8, 1, 0.5};
    AngleGrid tx_grid{8, 8, -60.0, 60.0, 60.0, 120.0};
    AngleGrid rx_grid{8, 1, -90.0, 90.0, 90.0, 90.0};
    int tx_block_az = 2;
    int tx_block_el = 2;
    int rx_block_az = 4;
    int rx_block_el = 1;

    double carrier_hz = 28e9;
    double bandwidth_hz = 100e6;
    double noise_figure_db = 6.0;
    double tx_power_dbm = 30.0;
    double bs_gain_dbi = 8.0;
    double ue_gain_dbi = 5.0;
    bool noise_enabled = true;
    int measurement_averages = 1;

    double cell_radius_m = 200.0;
    double min_distance_m = 10.0;
    SectorSpec sector;
    ChannelProfile profile_d = ChannelProfile::preset(ProfileName::ProfileD);
    ChannelProfile profile_e = ChannelProfile::preset(ProfileName::ProfileE);

    LinkBudget link_budget() const {
        LinkBudget b;
        b.tx_power_dbm = tx_power_dbm;
        b.bs_gain_dbi = bs_gain_dbi;
        b.ue_gain_dbi = ue_gain_dbi;
        b.noise_power_dbm = noise_power_dbm(bandwidth_hz, noise_figure_db);
        b.noise_enabled = noise_enabled;
        b.measurement_averages = measurement_averages;
        return b;
    }

    const ChannelProfile& profile(ProfileName name) const {
        return name == ProfileName::ProfileD ? profile_d : profile_e;
    }

    void validate() const {
        check(min_distance_m > 0.0 && min_distance_m < cell_radius_m,
              "SimConfig: need 0 < min_distance_m < cell_radius_m");
        profile_d.validate();
        profile_e.validate();
        link_budget().validate();
    }
};

/// Transmit and receive two-level codebooks for a configuration.
struct BeamSetup {
    HbsStructure tx;
    HbsStructure rx;
};

inline BeamSetup make_beam_setup(const SimConfig& cfg) {
    BeamSetup s;
    const Codebook tx_child = build_child_codebook(cfg.bs_geometry, cfg.tx_grid, cfg.tx_grid.size());
    const Codebook rx_child = build_child_codebook(cfg.ue_geometry, cfg.rx_grid, cfg.rx_grid.size());
    s.tx = build_parent_codebook(cfg.bs_geometry, tx_child, cfg.tx_block_az, cfg.tx_block_el);
    s.rx = build_parent_codebook(cfg.ue_geometry, rx_child, cfg.rx_block_az, cfg.rx_block_el);
    return s;
}

/// Fingerprint of the transmit child and parent codebooks a dataset or
/// model belongs to.
inline std::string setup_fingerprint(const BeamSetup& s) {
    const std::string a = codebook_fingerprint(s.tx.child);
    const std::string b = codebook_fingerprint(s.tx.parent);
    std::uint64_t h = fnv1a64(a.data(), a.size());
    h = fnv1a64(b.data(), b.size(), h);
    return hex64(h);
}

// ---------------------------------------------------------------------------
// Scenarios, samples, splits
// ---------------------------------------------------------------------------

enum class ScenarioId { S1, S2, S3 };

inline std::string to_string(ScenarioId s) {
    switch (s) {
        case ScenarioId::S1: return "s1";
        case ScenarioId::S2: return "s2";
        case ScenarioId::S3: return "s3";
    }
    return "?";
}

inline ScenarioId parse_scenario(const std::string& s) {
    if (s == "s1" || s == "S1") return ScenarioId::S1;
    if (s == "s2" || s == "S2") return ScenarioId::S2;
    if (s == "s3" || s == "S3") return ScenarioId::S3;
    throw Error("unknown scenario '" + s + "' (expected s1, s2 or s3)");
}

/// S1 trains and tests on D, S2 trains on D and tests on E, S3 mixes both.
struct ScenarioSpec {
    ScenarioId id = ScenarioId::S1;
    std::vector<ProfileName> train_profiles;
    std::vector<ProfileName> test_profiles;

    static ScenarioSpec make(ScenarioId id) {
        using enum ProfileName;
        switch (id) {
            case ScenarioId::S1: return {id, {ProfileD}, {ProfileD}};
            case ScenarioId::S2: return {id, {ProfileD}, {ProfileE}};
            case ScenarioId::S3: return {id, {ProfileD, ProfileE}, {ProfileD, ProfileE}};
        }
        throw Error("invalid scenario");
    }
};

enum class Split { Train, Val, Test };

inline std::string to_string(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Val: return "val";
        case Split::Test: return "test";
    }
    return "?";
}

inline Split parse_split(const std::string& s) {
    if (s == "train") return Split::Train;
    if (s == "val") return Split::Val;
    if (s == "test") return Split::Test;
    throw Error("unknown split '" + s + "'");
}

struct Sample {
    std::uint64_t seed = 0;
    ScenarioId scenario = ScenarioId::S1;
    ProfileName profile = ProfileName::ProfileD;
    double ue_distance_m = 0.0;
    double ue_azimuth = 0.0;
    int label = 0;  // genie child index, 0-based
    int genie_rx = 0;
    std::vector<double> parent_rsrp_dbm;
    std::vector<double> child_rsrp_dbm;
    double genie_rsrp_dbm = 0.0;
};

/// Per-feature z-score statistics.
struct FeatureStats {
    std::vector<double> mean;
    std::vector<double> std;
};

struct Dataset {
    ScenarioId scenario = ScenarioId::S1;
    int num_parents = 0;
    int num_children = 0;
    std::vector<Sample> samples;
    std::vector<Split> splits;
    FeatureStats feature_stats;
    std::string codebook_fingerprint;

    std::size_t size() const { return samples.size(); }

    std::vector<std::size_t> indices(Split s) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < splits.size(); ++i)
            if (splits[i] == s) out.push_back(i);
        return out;
    }

    std::size_t count(Split s) const {
        return static_cast<std::size_t>(std::count(splits.begin(), splits.end(), s));
    }
};

/// Split sizes by largest-remainder rounding of n * fraction; leftover
/// samples go to the largest fractional parts, earlier splits first on ties.
inline std::array<std::size_t, 3> split_counts(std::size_t n, const std::array<double, 3>& fractions) {
    double total = 0.0;
    for (double f : fractions) {
        check(f >= 0.0, "split fractions must be non-negative");
        total += f;
    }
    check(std::abs(total - 1.0) < 1e-9, "split fractions must sum to 1");
    std::array<std::size_t, 3> counts{};
    std::array<double, 3> rem{};
    std::size_t assigned = 0;
    for (int i = 0; i < 3; ++i) {
        const double exact = static_cast<double>(n) * fractions[i];
        // Guard against 0.7 * 100 = 69.99999...
        const double fl = std::floor(exact + 1e-9);
        counts[i] = static_cast<std::size_t>(fl);
        rem[i] = exact - fl;
        assigned += counts[i];
    }
    std::array<int, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return rem[a] > rem[b]; });
    for (int k = 0; assigned < n; k = (k + 1) % 3, ++assigned) counts[order[k]]++;
    return counts;
}

/// Shuffled split assignment, deterministic in shuffle_seed.
inline std::vector<Split> assign_splits(std::size_t n, const std::array<double, 3>& fractions,
                                        std::uint64_t shuffle_seed) {
    const auto counts = split_counts(n, fractions);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::mt19937_64 rng(shuffle_seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Split> out(n, Split::Train);
    for (std::size_t k = 0; k < n; ++k) {
        if (k < counts[0]) out[perm[k]] = Split::Train;
        else if (k < counts[0] + counts[1]) out[perm[k]] = Split::Val;
        else out[perm[k]] = Split::Test;
    }
    return out;
}

inline constexpr std::array<double, 3> kDefaultSplit{0.7, 0.1, 0.2};

inline FeatureStats compute_feature_stats(const Dataset& ds) {
    const auto train = ds.indices(Split::Train);
    check(!train.empty(), "feature statistics need a non-empty train split");
    FeatureStats st;
    st.mean.assign(ds.num_parents, 0.0);
    st.std.assign(ds.num_parents, 0.0);
    for (std::size_t i : train)
        for (int p = 0; p < ds.num_parents; ++p) st.mean[p] += ds.samples[i].parent_rsrp_dbm[p];
    for (double& m : st.mean) m /= static_cast<double>(train.size());
    for (std::size_t i : train)
        for (int p = 0; p < ds.num_parents; ++p) {
            const double d = ds.samples[i].parent_rsrp_dbm[p] - st.mean[p];
            st.std[p] += d * d;
        }
    for (double& s : st.std) s = std::max(std::sqrt(s / static_cast<double>(train.size())), 1e-6);
    return st;
}

/// Reassigns splits (shuffled, largest-remainder counts) and recomputes the
/// train statistics. Profiles drawn at generation time are not changed.
inline Dataset split_dataset(Dataset ds, const std::array<double, 3>& fractions,
                             std::uint64_t shuffle_seed) {
    ds.splits = assign_splits(ds.size(), fractions, shuffle_seed);
    if (ds.count(Split::Train) > 0) ds.feature_stats = compute_feature_stats(ds);
    return ds;
}

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

namespace detail {

/// Rounds to the precision stored in dataset files so that in-memory and
/// reloaded datasets are identical.
inline double quantize(double v) {
    const std::string s = format_g(v, 9);
    return std::strtod(s.c_str(), nullptr);
}

inline constexpr std::uint64_t kSplitTag = 0x53504C4954ULL;  // "SPLIT"

}  // namespace detail

/// Simulates one sample: UE drop, noiseless exhaustive sweep for the genie
/// pair, and a noisy parent sweep with the genie receive beam.
inline Sample simulate_sample(const SimConfig& cfg, const BeamSetup& beams, ProfileName profile,
                              ScenarioId scenario, std::uint64_t sample_seed) {
    std::mt19937_64 rng(derive_seed(sample_seed, {0}));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double r0 = cfg.min_distance_m;
    const double r1 = cfg.cell_radius_m;
    const double u_r = unit(rng);
    const double u_az = unit(rng);
    const double u_el = unit(rng);
    const double half = deg2rad(cfg.sector.az_half_width_deg);

    DropConfig drop;
    drop.profile = cfg.profile(profile);
    drop.ue_distance_m = std::sqrt(r0 * r0 + u_r * (r1 * r1 - r0 * r0));
    drop.ue_azimuth = -half + 2.0 * half * u_az;
    drop.ue_elevation = deg2rad(cfg.sector.el_min_deg + u_el * (cfg.sector.el_max_deg - cfg.sector.el_min_deg));
    drop.carrier_hz = cfg.carrier_hz;
    drop.cell_radius_m = cfg.cell_radius_m;
    drop.bs_geometry = cfg.bs_geometry;
    drop.ue_geometry = cfg.ue_geometry;
    drop.sector = cfg.sector;
    drop.seed = derive_seed(sample_seed, {1});
    const ChannelInstance h = generate_drop(drop);

    LinkBudget noiseless = cfg.link_budget();
    noiseless.noise_enabled = false;
    const RsrpReport full = sweep_rsrp(h, beams.tx.child, beams.rx.child, noiseless, 0);
    const SearchResult genie = exhaustive_search(full);

    const RsrpReport parents = sweep_rsrp(h, beams.tx.parent, beams.rx.child.beams[genie.rx_index],
                                          cfg.link_budget(), derive_seed(sample_seed, {2}));

    Sample s;
    s.seed = sample_seed;
    s.scenario = scenario;
    s.profile = profile;
    s.ue_distance_m = detail::quantize(drop.ue_distance_m);
    s.ue_azimuth = detail::quantize(drop.ue_azimuth);
    s.label = genie.tx_index;
    s.genie_rx = genie.rx_index;
    for (int p = 0; p < parents.num_tx(); ++p)
        s.parent_rsrp_dbm.push_back(detail::quantize(parents.values_dbm(p, 0)));
    for (int m = 0; m < full.num_tx(); ++m)
        s.child_rsrp_dbm.push_back(detail::quantize(full.values_dbm(m, genie.rx_index)));
    s.genie_rsrp_dbm = s.child_rsrp_dbm[s.label];
    return s;
}

/// Generates n_samples labeled samples for a scenario. Sample i uses seed
/// derive_seed(master_seed, {i}); splits are assigned first (70/10/20) so
/// that each sample's profile can follow its split: test samples cycle
/// through the scenario's test profiles, the others through its train
/// profiles (index i modulo the list length). Work is spread over
/// `threads` workers; output is independent of the thread count.
inline Dataset generate_dataset(const ScenarioSpec& scenario, std::size_t n_samples,
                                const SimConfig& cfg, std::uint64_t master_seed,
                                unsigned threads = 1,
                                const std::array<double, 3>& fractions = kDefaultSplit) {
    check(n_samples > 0, "generate_dataset: n_samples must be positive");
    check(!scenario.train_profiles.empty() && !scenario.test_profiles.empty(),
          "generate_dataset: scenario needs train and test profiles");
    cfg.validate();
    const BeamSetup beams = make_beam_setup(cfg);

    Dataset ds;
    ds.scenario = scenario.id;
    ds.num_parents = beams.tx.num_parents();
    ds.num_children = beams.tx.child.size();
    ds.codebook_fingerprint = setup_fingerprint(beams);
    ds.splits = assign_splits(n_samples, fractions, derive_seed(master_seed, {detail::kSplitTag}));
    ds.samples.resize(n_samples);

    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const auto& list =
                ds.splits[i] == Split::Test ? scenario.test_profiles : scenario.train_profiles;
            const ProfileName profile = list[i % list.size()];
            ds.samples[i] = simulate_sample(cfg, beams, profile, scenario.id, derive_seed(master_seed, {i}));
        }
    };
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n_samples)));
    if (threads == 1) {
        work(0, n_samples);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(threads);
        const std::size_t chunk = (n_samples + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t) {
            const std::size_t b = t * chunk;
            const std::size_t e = std::min(n_samples, b + chunk);
            if (b < e)
                pool.emplace_back([&, t, b, e] {
                    try {
                        work(b, e);
                    } catch (...) {
                        errors[t] = std::current_exception();
                    }
                });
        }
        for (auto& th : pool) th.join();
        for (auto& err : errors)
            if (err) std::rethrow_exception(err);
    }
    ds.feature_stats = compute_feature_stats(ds);
    return ds;
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

inline RVec normalize(const std::vector<double>& features, const FeatureStats& st) {
    check(features.size() == st.mean.size(), "normalize: feature dimension mismatch");
    RVec x(static_cast<Eigen::Index>(features.size()));
    for (std::size_t p = 0; p < features.size(); ++p)
        x(static_cast<Eigen::Index>(p)) = (features[p] - st.mean[p]) / st.std[p];
    return x;
}

struct NormalizedFeatures {
    RMat features;  // one row per sample, all splits
    FeatureStats stats;
};

/// z-scores the dBm parent features with train-split statistics
/// (std floored at 1e-6).
inline NormalizedFeatures normalize_features(const Dataset& ds) {
    NormalizedFeatures out;
    out.stats = compute_feature_stats(ds);
    out.features.resize(static_cast<Eigen::Index>(ds.size()), ds.num_parents);
    for (std::size_t i = 0; i < ds.size(); ++i)
        out.features.row(static_cast<Eigen::Index>(i)) =
            normalize(ds.samples[i].parent_rsrp_dbm, out.stats).transpose();
    return out;
}

// ---------------------------------------------------------------------------
// CSV persistence
// ---------------------------------------------------------------------------

inline std::vector<std::string> dataset_header(int num_parents, int num_children) {
    std::vector<std::string> cols{"seed", "scenario", "split", "ue_r", "ue_az", "label"};
    for (int p = 0; p < num_parents; ++p) cols.push_back("p" + std::to_string(p));
    for (int c = 0; c < num_children; ++c) cols.push_back("c" + std::to_string(c));
    cols.push_back("genie_rsrp");
    return cols;
}

inline void write_dataset_csv(const Dataset& ds, std::ostream& os) {
    const auto header = dataset_header(ds.num_parents, ds.num_children);
    for (std::size_t k = 0; k < header.size(); ++k) os << (k ? "," : "") << header[k];
    os << '\n';
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const Sample& s = ds.samples[i];
        os << s.seed << ',' << to_string(s.scenario) << ',' << to_string(ds.splits[i]) << ','
           << format_g(s.ue_distance_m) << ',' << format_g(s.ue_azimuth) << ',' << s.label;
        for (double v : s.parent_rsrp_dbm) os << ',' << format_g(v);
        for (double v : s.child_rsrp_dbm) os << ',' << format_g(v);
        os << ',' << format_g(s.genie_rsrp_dbm) << '\n';
    }
}

inline void write_dataset_csv(const Dataset& ds, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    check(static_cast<bool>(os), "cannot open '" + path + "' for writing");
    write_dataset_csv(ds, os);
    check(static_cast<bool>(os), "failed writing '" + path + "'");
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

inline double parse_double(const std::string& s, const std::string& column, std::size_t row) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    check(!s.empty() && end == s.c_str() + s.size() && std::isfinite(v),
          "row " + std::to_string(row) + ": column '" + column + "' is not a finite number: '" + s + "'");
    return v;
}

inline long long parse_int(const std::string& s, const std::string& column, std::size_t row) {
    long long v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    check(ec == std::errc() && p == s.data() + s.size(),
          "row " + std::to_string(row) + ": column '" + column + "' is not an integer: '" + s + "'");
    return v;
}

}  // namespace detail

/// Reads a dataset CSV. The header must match dataset_header() exactly;
/// the first mismatching column is named in the error.
inline Dataset read_dataset_csv(std::istream& is) {
    std::string line;
    check(static_cast<bool>(std::getline(is, line)), "dataset file is empty");
    const auto cols = detail::split_csv_line(line);
    int np = 0;
    int nc = 0;
    for (const auto& c : cols) {
        if (c.size() > 1 && c[0] == 'p' && std::isdigit(static_cast<unsigned char>(c[1]))) ++np;
        if (c.size() > 1 && c[0] == 'c' && std::isdigit(static_cast<unsigned char>(c[1]))) ++nc;
    }
    const auto expected = dataset_header(np, nc);
    for (std::size_t k = 0; k < std::max(cols.size(), expected.size()); ++k) {
        const std::string got = k < cols.size() ? cols[k] : "<missing>";
        const std::string want = k < expected.size() ? expected[k] : "<none>";
        check(got == want, "dataset header: bad column " + std::to_string(k) + " '" + got +
                               "' (expected '" + want + "')");
    }
    check(np > 0 && nc > 0, "dataset header: no parent or child columns");

    Dataset ds;
    ds.num_parents = np;
    ds.num_children = nc;
    std::size_t row = 0;
    while (std::getline(is, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        const auto f = detail::split_csv_line(line);
        check(f.size() == cols.size(), "row " + std::to_string(row) + ": expected " +
                                           std::to_string(cols.size()) + " fields, got " +
                                           std::to_string(f.size()));
        Sample s;
        {
            unsigned long long seed = 0;
            auto [p, ec] = std::from_chars(f[0].data(), f[0].data() + f[0].size(), seed);
            check(ec == std::errc() && p == f[0].data() + f[0].size(),
                  "row " + std::to_string(row) + ": column 'seed' is not an unsigned integer");
            s.seed = seed;
        }
        s.scenario = parse_scenario(f[1]);
        ds.splits.push_back(parse_split(f[2]));
        s.ue_distance_m = detail::parse_double(f[3], "ue_r", row);
        s.ue_azimuth = detail::parse_double(f[4], "ue_az", row);
        const long long label = detail::parse_int(f[5], "label", row);
        check(label >= 0 && label < nc, "row " + std::to_string(row) + ": label out of range");
        s.label = static_cast<int>(label);
        for (int p = 0; p < np; ++p) s.parent_rsrp_dbm.push_back(detail::parse_double(f[6 + p], cols[6 + p], row));
        for (int c = 0; c < nc; ++c)
            s.child_rsrp_dbm.push_back(detail::parse_double(f[6 + np + c], cols[6 + np + c], row));
        s.genie_rsrp_dbm = detail::parse_double(f[6 + np + nc], "genie_rsrp", row);
        // Recover the profile from the generation rule (see generate_dataset).
        const ScenarioSpec spec = ScenarioSpec::make(s.scenario);
        const auto& plist = ds.splits.back() == Split::Test ? spec.test_profiles : spec.train_profiles;
        s.profile = plist[ds.samples.size() % plist.size()];
        ds.samples.push_back(std::move(s));
    }
    check(!ds.samples.empty(), "dataset file has no rows");
    ds.scenario = ds.samples.front().scenario;
    if (ds.count(Split::Train) > 0) ds.feature_stats = compute_feature_stats(ds);
    return ds;
}

inline Dataset read_dataset_csv(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    check(static_cast<bool>(is), "cannot open dataset '" + path + "'");
    return read_dataset_csv(is);
}

}  // namespace beamsim
