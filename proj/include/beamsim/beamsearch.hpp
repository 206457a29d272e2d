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

#include <vector>

#include "beamsim/beamforming.hpp"

namespace beamsim {

/// Selected beam pair. Indices are 0-based.
struct SearchResult {
    int tx_index = 0;
    int rx_index = 0;
    double rsrp_dbm = 0.0;
    long measurements_used = 0;
};

/// Argmax over every (m, n). Ties go to the lowest m, then the lowest n.
inline SearchResult exhaustive_search(const RsrpReport& report) {
    check(report.num_tx() > 0 && report.num_rx() > 0, "exhaustive_search: empty report");
    SearchResult best;
    bool first = true;
    for (int m = 0; m < report.num_tx(); ++m) {
        for (int n = 0; n < report.num_rx(); ++n) {
            check(report.measured(m, n), "exhaustive_search: entry (" + std::to_string(m) + ", " +
                                             std::to_string(n) + ") was not measured");
            const double v = report.values_dbm(m, n);
            if (first || v > best.rsrp_dbm) {
                best.tx_index = m;
                best.rx_index = n;
                best.rsrp_dbm = v;
                first = false;
            }
        }
    }
    best.measurements_used = static_cast<long>(report.num_tx()) * report.num_rx();
    return best;
}

/// Two-level search: sweep parent x parent, then the child block of the
/// winning parent pair. Both levels take fresh noise draws (level tags 1
/// and 2 under `seed`).
inline SearchResult hierarchical_search(const ChannelInstance& h, const HbsStructure& tx_hbs,
                                        const HbsStructure& rx_hbs, const LinkBudget& budget,
                                        std::uint64_t seed) {
    const RsrpReport level1 =
        sweep_rsrp(h, tx_hbs.parent, rx_hbs.parent, budget, derive_seed(seed, {1}));
    const SearchResult parents = exhaustive_search(level1);

    const auto& tx_kids = tx_hbs.parent_to_children[parents.tx_index];
    const auto& rx_kids = rx_hbs.parent_to_children[parents.rx_index];
    std::vector<CVec> tx_beams;
    std::vector<CVec> rx_beams;
    for (int m : tx_kids) tx_beams.push_back(tx_hbs.child.beams[m]);
    for (int n : rx_kids) rx_beams.push_back(rx_hbs.child.beams[n]);
    const RsrpReport level2 = sweep_rsrp(h, tx_beams, rx_beams, budget, derive_seed(seed, {2}));
    const SearchResult local = exhaustive_search(level2);

    // Children lists are sorted, so the local tie rule maps to the global one.
    SearchResult out;
    out.tx_index = tx_kids[local.tx_index];
    out.rx_index = rx_kids[local.rx_index];
    out.rsrp_dbm = local.rsrp_dbm;
    out.measurements_used = parents.measurements_used + local.measurements_used;
    return out;
}

/// Reference-signal overhead reduction 1 - probed / total.
inline double overhead_reduction(long probed, long total) {
    check(probed > 0 && total > 0, "overhead_reduction: counts must be positive");
    check(probed <= total, "overhead_reduction: probed beams exceed the total");
    return 1.0 - static_cast<double>(probed) / static_cast<double>(total);
}

}  // namespace beamsim
