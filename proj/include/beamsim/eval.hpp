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
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "beamsim/dataset.hpp"
#include "beamsim/ml.hpp"

namespace beamsim {

struct KpiReport {
    std::string scenario = "s1";
    std::string method;  // EBS, HBS, ML, FC-baseline
    int top_k = 1;
    bool probe_confirmation = false;
    double accuracy = 0.0;
    double prediction_error = 1.0;
    double overhead_pct = 100.0;       // transmit-side beams probed / F
    double overhead_pair_pct = 100.0;  // beam pairs probed / (F W)
    double mean_rsrp_dbm = 0.0;
    std::size_t n_test = 0;
};

/// Codebook sizes that overhead accounting needs.
struct OverheadCounts {
    int num_children = 64;   // F
    int num_parents = 16;    // F_p
    int tx_per_parent = 4;   // s_T
    int num_rx = 8;          // W
    int num_rx_parents = 2;  // W_p
    int rx_per_parent = 4;   // s_R

    static OverheadCounts from(const BeamSetup& s) {
        return {s.tx.child.size(), s.tx.num_parents(), s.tx.children_per_parent,
                s.rx.child.size(), s.rx.num_parents(), s.rx.children_per_parent};
    }

    /// Transmit-side overhead after probing F_p parents and k candidates.
    double tx_pct(int k) const { return 100.0 * (num_parents + k) / num_children; }
    /// Pair-count overhead: F_p W_p parent pairs plus k s_R candidate pairs.
    double pair_pct(int k) const {
        return 100.0 * (static_cast<double>(num_parents) * num_rx_parents + static_cast<double>(k) * rx_per_parent) /
               (static_cast<double>(num_children) * num_rx);
    }
};

/// Fraction of samples whose label is among the first k predicted indices.
inline double top_k_accuracy(const std::vector<std::vector<int>>& predicted, const std::vector<int>& labels, int k) {
    check(predicted.size() == labels.size(), "top_k_accuracy: length mismatch");
    check(k >= 1, "top_k_accuracy: k must be >= 1");
    check(!labels.empty(), "top_k_accuracy: no samples");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto& p = predicted[i];
        const auto end = p.begin() + std::min<std::ptrdiff_t>(k, static_cast<std::ptrdiff_t>(p.size()));
        if (std::find(p.begin(), end, labels[i]) != end) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

namespace detail {

/// Best stored child RSRP among candidates, lowest index on ties.
inline int best_stored(const Sample& s, std::span<const int> candidates) {
    int best = candidates[0];
    for (int c : candidates)
        if (s.child_rsrp_dbm[c] > s.child_rsrp_dbm[best] || (s.child_rsrp_dbm[c] == s.child_rsrp_dbm[best] && c < best))
            best = c;
    return best;
}

}  // namespace detail

/// Top-K KPIs of a trained predictor on the test split. With probe
/// confirmation the K candidates are measured (stored noiseless child
/// RSRPs) and the strongest is selected; otherwise the Top-1 prediction is
/// selected. Fails if the model was trained for a different codebook.
template <class Model>
std::vector<KpiReport> evaluate_ml(const Model& model, const Dataset& ds, const std::vector<int>& ks,
                                   bool probe_confirmation, const OverheadCounts& counts,
                                   const std::string& method = "ML") {
    check(!model.codebook_fingerprint.empty() && model.codebook_fingerprint == ds.codebook_fingerprint,
          "codebook fingerprint mismatch: model '" + model.codebook_fingerprint + "' vs dataset '" +
              ds.codebook_fingerprint + "'");
    const auto test = ds.indices(Split::Test);
    check(!test.empty(), "evaluate_ml: empty test split");
    int kmax = 1;
    for (int k : ks) {
        check(k >= 1 && k <= ds.num_children, "evaluate_ml: K out of range");
        kmax = std::max(kmax, k);
    }
    std::vector<std::vector<int>> ranked;
    std::vector<int> labels;
    for (std::size_t i : test) {
        ranked.push_back(predict_top_k(predict_proba(model, ds.samples[i].parent_rsrp_dbm), kmax));
        labels.push_back(ds.samples[i].label);
    }
    std::vector<KpiReport> out;
    for (int k : ks) {
        KpiReport r;
        r.scenario = to_string(ds.scenario);
        r.method = method + "-Top" + std::to_string(k);
        r.top_k = k;
        r.probe_confirmation = probe_confirmation;
        r.accuracy = top_k_accuracy(ranked, labels, k);
        r.prediction_error = 1.0 - r.accuracy;
        r.overhead_pct = counts.tx_pct(k);
        r.overhead_pair_pct = counts.pair_pct(k);
        double sum = 0.0;
        for (std::size_t t = 0; t < test.size(); ++t) {
            const Sample& s = ds.samples[test[t]];
            const int chosen = probe_confirmation
                                   ? detail::best_stored(s, std::span<const int>(ranked[t].data(), static_cast<std::size_t>(k)))
                                   : ranked[t][0];
            sum += s.child_rsrp_dbm[chosen];
        }
        r.mean_rsrp_dbm = sum / static_cast<double>(test.size());
        r.n_test = test.size();
        out.push_back(r);
    }
    return out;
}

/// EBS (genie, full overhead) and two-level HBS rows on the test split.
/// HBS picks the strongest parent feature, then the strongest stored child
/// RSRP inside that parent's block.
inline std::vector<KpiReport> evaluate_baselines(const Dataset& ds, const HbsStructure& tx_hbs,
                                                 const OverheadCounts& counts) {
    const auto test = ds.indices(Split::Test);
    check(!test.empty(), "evaluate_baselines: empty test split");
    check(tx_hbs.num_parents() == ds.num_parents && tx_hbs.child.size() == ds.num_children,
          "evaluate_baselines: codebook structure does not match the dataset");
    KpiReport ebs;
    ebs.scenario = to_string(ds.scenario);
    ebs.method = "EBS";
    ebs.top_k = ds.num_children;
    KpiReport hbs = ebs;
    hbs.method = "HBS";
    hbs.top_k = counts.tx_per_parent;

    double ebs_sum = 0.0;
    double hbs_sum = 0.0;
    std::size_t hbs_hits = 0;
    for (std::size_t i : test) {
        const Sample& s = ds.samples[i];
        check(s.child_rsrp_dbm.size() == static_cast<std::size_t>(ds.num_children),
              "evaluate_baselines: sample without stored child sweep");
        ebs_sum += s.child_rsrp_dbm[s.label];
        const auto& pr = s.parent_rsrp_dbm;
        const int bp = static_cast<int>(std::max_element(pr.begin(), pr.end()) - pr.begin());
        const int chosen = detail::best_stored(s, tx_hbs.parent_to_children[bp]);
        hbs_sum += s.child_rsrp_dbm[chosen];
        if (chosen == s.label) ++hbs_hits;
    }
    const double n = static_cast<double>(test.size());
    ebs.accuracy = 1.0;
    ebs.prediction_error = 0.0;
    ebs.overhead_pct = 100.0;
    ebs.overhead_pair_pct = 100.0;
    ebs.mean_rsrp_dbm = ebs_sum / n;
    ebs.n_test = test.size();

    hbs.accuracy = static_cast<double>(hbs_hits) / n;
    hbs.prediction_error = 1.0 - hbs.accuracy;
    hbs.overhead_pct = counts.tx_pct(counts.tx_per_parent);
    hbs.overhead_pair_pct = counts.pair_pct(counts.tx_per_parent);
    hbs.mean_rsrp_dbm = hbs_sum / n;
    hbs.n_test = test.size();
    return {ebs, hbs};
}

/// Pearson correlation between every parent RSRP column and every child
/// RSRP column (dB domain, all samples). Constant columns correlate as 0.
inline RMat parent_child_correlation(const Dataset& ds) {
    check(ds.size() >= 3, "parent_child_correlation: need at least 3 samples");
    const auto n = static_cast<Eigen::Index>(ds.size());
    RMat p(n, ds.num_parents);
    RMat c(n, ds.num_children);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Sample& s = ds.samples[static_cast<std::size_t>(i)];
        check(s.child_rsrp_dbm.size() == static_cast<std::size_t>(ds.num_children),
              "parent_child_correlation: sample without stored child sweep");
        for (int k = 0; k < ds.num_parents; ++k) p(i, k) = s.parent_rsrp_dbm[k];
        for (int k = 0; k < ds.num_children; ++k) c(i, k) = s.child_rsrp_dbm[k];
    }
    auto standardize = [](RMat& m) {
        for (Eigen::Index k = 0; k < m.cols(); ++k) {
            m.col(k).array() -= m.col(k).mean();
            const double norm = m.col(k).norm();
            if (norm > 0.0) m.col(k) /= norm;
        }
    };
    standardize(p);
    standardize(c);
    return p.transpose() * c;
}

inline void write_correlation_csv(const RMat& corr, std::ostream& os) {
    os << "parent";
    for (Eigen::Index c = 0; c < corr.cols(); ++c) os << ",c" << c;
    os << '\n';
    for (Eigen::Index p = 0; p < corr.rows(); ++p) {
        os << 'p' << p;
        for (Eigen::Index c = 0; c < corr.cols(); ++c) os << ',' << format_g(corr(p, c), 6);
        os << '\n';
    }
}

inline void write_kpi_csv(const std::vector<KpiReport>& rows, std::ostream& os) {
    os << "scenario,method,top_k,probe_confirmation,accuracy,prediction_error,overhead_pct,"
          "overhead_pair_pct,mean_rsrp_dbm,n_test\n";
    for (const auto& r : rows)
        os << r.scenario << ',' << r.method << ',' << r.top_k << ',' << (r.probe_confirmation ? "true" : "false")
           << ',' << format_g(r.accuracy) << ',' << format_g(r.prediction_error) << ','
           << format_g(r.overhead_pct) << ',' << format_g(r.overhead_pair_pct) << ','
           << format_g(r.mean_rsrp_dbm) << ',' << r.n_test << '\n';
}

inline nlohmann::json to_json(const KpiReport& r) {
    return {{"scenario", r.scenario},
            {"method", r.method},
            {"top_k", r.top_k},
            {"probe_confirmation", r.probe_confirmation},
            {"accuracy", r.accuracy},
            {"prediction_error", r.prediction_error},
            {"overhead_pct", r.overhead_pct},
            {"overhead_pair_pct", r.overhead_pair_pct},
            {"mean_rsrp_dbm", r.mean_rsrp_dbm},
            {"n_test", r.n_test}};
}

// ---------------------------------------------------------------------------
// Scenario suite
// ---------------------------------------------------------------------------

struct SuiteReport {
    std::vector<KpiReport> rows;
    std::map<ScenarioId, double> top1_error;
    bool ordering_holds = false;  // error(S2) > error(S3) > error(S1)
};

/// Trains on each scenario's train split and evaluates its test split.
/// The ordering check is only meaningful when S1, S2 and S3 are all present.
inline SuiteReport run_scenario_suite(const std::vector<Dataset>& datasets, const TrainConfig& cfg,
                                      const std::vector<int>& ks, bool probe_confirmation,
                                      const OverheadCounts& counts) {
    check(!datasets.empty(), "run_scenario_suite: no datasets");
    SuiteReport rep;
    for (const auto& ds : datasets) {
        const auto trained = train(ds, cfg);
        auto rows = evaluate_ml(trained.model, ds, ks, probe_confirmation, counts);
        for (const auto& r : rows) {
            if (r.top_k == 1) rep.top1_error[ds.scenario] = r.prediction_error;
            rep.rows.push_back(r);
        }
        if (!rep.top1_error.contains(ds.scenario)) {
            rep.top1_error[ds.scenario] = evaluate_ml(trained.model, ds, {1}, false, counts)[0].prediction_error;
        }
    }
    const auto& e = rep.top1_error;
    if (e.contains(ScenarioId::S1) && e.contains(ScenarioId::S2) && e.contains(ScenarioId::S3))
        rep.ordering_holds = e.at(ScenarioId::S2) > e.at(ScenarioId::S3) && e.at(ScenarioId::S3) > e.at(ScenarioId::S1);
    return rep;
}

inline SuiteReport run_scenario_suite(const std::vector<ScenarioId>& scenarios, const SimConfig& sim,
                                      std::size_t n_samples, std::uint64_t master_seed, const TrainConfig& cfg,
                                      const std::vector<int>& ks, bool probe_confirmation, unsigned threads = 1) {
    std::vector<Dataset> datasets;
    for (ScenarioId id : scenarios)
        datasets.push_back(generate_dataset(ScenarioSpec::make(id), n_samples, sim, master_seed, threads));
    return run_scenario_suite(datasets, cfg, ks, probe_confirmation, OverheadCounts::from(make_beam_setup(sim)));
}

}  // namespace beamsim
