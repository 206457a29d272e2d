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

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "beamsim/beamsearch.hpp"

using namespace beamsim;

namespace {

const ArrayGeometry kBs{8, 8, 0.5};
const ArrayGeometry kUe{8, 1, 0.5};
const AngleGrid kTxGrid{8, 8, -60, 60, 60, 120};
const AngleGrid kRxGrid{8, 1, -90, 90, 90, 90};

LinkBudget noiseless() {
    LinkBudget b;
    b.noise_enabled = false;
    return b;
}

ChannelInstance los_drop(std::uint64_t seed, double az, double el) {
    DropConfig c;
    c.profile.ricean_k_db = 300.0;
    c.profile.num_clusters = 0;
    c.ue_distance_m = 50.0;
    c.ue_azimuth = az;
    c.ue_elevation = el;
    c.seed = seed;
    return generate_drop(c);
}

// 3-dB width (radians) of |a(az, el)^H f|^2 along azimuth through the peak.
double azimuth_beamwidth(const ArrayGeometry& g, const CVec& f, double az0, double el) {
    auto gain = [&](double az) { return std::norm(array_response(g, az, el).dot(f)); };
    const double peak = gain(az0);
    const double step = 1e-4;
    double lo = az0;
    while (lo > az0 - kPi / 2 && gain(lo) >= peak / 2) lo -= step;
    double hi = az0;
    while (hi < az0 + kPi / 2 && gain(hi) >= peak / 2) hi += step;
    return hi - lo;
}

}  // namespace

TEST(ChildCodebook, DefaultGrid) {
    const Codebook cb = build_child_codebook(kBs, kTxGrid, 64);
    ASSERT_EQ(cb.size(), 64);
    for (int i = 0; i < 64; ++i) EXPECT_NEAR(cb.beams[i].norm(), 1.0, 1e-12);
    for (int i = 1; i < 64; ++i) {
        const auto& a = cb.angles[i - 1];
        const auto& b = cb.angles[i];
        EXPECT_TRUE(a.azimuth < b.azimuth || (a.azimuth == b.azimuth && a.elevation < b.elevation)) << i;
    }
    // Azimuth-major: index = i_az * n_el + i_el.
    EXPECT_DOUBLE_EQ(cb.angles[cb.index(3, 5)].azimuth, kTxGrid.azimuth(3));
    EXPECT_DOUBLE_EQ(cb.angles[cb.index(3, 5)].elevation, kTxGrid.elevation(5));
}

TEST(ChildCodebook, SingleBeamIsBroadside) {
    const Codebook cb = build_child_codebook(kBs, AngleGrid{1, 1, -60, 60, 60, 120}, 1);
    ASSERT_EQ(cb.size(), 1);
    EXPECT_NEAR(cb.angles[0].azimuth, 0.0, 1e-15);
    EXPECT_NEAR(cb.angles[0].elevation, kPi / 2, 1e-15);
    EXPECT_LT((cb.beams[0] - array_response(kBs, 0.0, kPi / 2)).norm(), 1e-15);
}

TEST(ChildCodebook, NearBeamsMoreCorrelated) {
    const Codebook cb = build_child_codebook(kBs, kTxGrid, 64);
    for (int a = 0; a < 8; ++a) {
        for (int e = 1; e <= 3; ++e) {
            const int m = cb.index(a, e);
            EXPECT_GT(std::abs(cb.beams[m].dot(cb.beams[m + 1])), std::abs(cb.beams[m].dot(cb.beams[m + 4])))
                << "m=" << m;
        }
    }
}

TEST(ChildCodebook, SizeMismatchThrows) {
    EXPECT_THROW(build_child_codebook(kBs, kTxGrid, 32), Error);
}

TEST(ParentCodebook, DefaultStructure) {
    const Codebook child = build_child_codebook(kBs, kTxGrid, 64);
    const HbsStructure h = build_parent_codebook(kBs, child, 2, 2);
    ASSERT_EQ(h.num_parents(), 16);
    EXPECT_EQ(h.children_per_parent, 4);
    EXPECT_EQ(h.num_parents() * h.children_per_parent, child.size());
    EXPECT_FALSE(h.degenerate);
    std::multiset<int> seen;
    for (int p = 0; p < 16; ++p) {
        ASSERT_EQ(h.parent_to_children[p].size(), 4u);
        EXPECT_TRUE(std::is_sorted(h.parent_to_children[p].begin(), h.parent_to_children[p].end()));
        EXPECT_NEAR(h.parent.beams[p].norm(), 1.0, 1e-12);
        for (int c : h.parent_to_children[p]) {
            seen.insert(c);
            EXPECT_EQ(h.parent_of(c), p);
        }
        // Central 4x4 subarray: 16 active elements.
        int active = 0;
        for (Eigen::Index i = 0; i < 64; ++i) active += std::abs(h.parent.beams[p](i)) > 0.0;
        EXPECT_EQ(active, 16);
    }
    for (int c = 0; c < 64; ++c) EXPECT_EQ(seen.count(c), 1u);
    // Parent 0 covers children (0,0), (0,1), (1,0), (1,1) of the grid.
    EXPECT_EQ(h.parent_to_children[0], (std::vector<int>{0, 1, 8, 9}));
}

TEST(ParentCodebook, DegenerateBlocksEqualChildren) {
    const Codebook child = build_child_codebook(kBs, kTxGrid, 64);
    const HbsStructure h = build_parent_codebook(kBs, child, 1, 1);
    EXPECT_TRUE(h.degenerate);
    ASSERT_EQ(h.num_parents(), 64);
    for (int p = 0; p < 64; ++p) EXPECT_LT((h.parent.beams[p] - child.beams[p]).norm(), 1e-12);
}

TEST(ParentCodebook, NonDivisibleGridThrows) {
    const Codebook child = build_child_codebook(kBs, kTxGrid, 64);
    EXPECT_THROW(build_parent_codebook(kBs, child, 3, 2), Error);
}

TEST(ParentCodebook, WiderThanChildren) {
    const Codebook child = build_child_codebook(kBs, kTxGrid, 64);
    const HbsStructure h = build_parent_codebook(kBs, child, 2, 2);
    for (int p = 0; p < 16; ++p) {
        const double el = h.parent.angles[p].elevation;
        const double wp = azimuth_beamwidth(kBs, h.parent.beams[p], h.parent.angles[p].azimuth, el);
        const int c = h.parent_to_children[p][0];
        const double wc = azimuth_beamwidth(kBs, child.beams[c], child.angles[c].azimuth, child.angles[c].elevation);
        EXPECT_GE(wp, wc) << "parent " << p;
    }
}

TEST(ReceivedSignal, NoiselessPower) {
    const ChannelInstance h = generate_drop(DropConfig{});
    const Codebook tx = build_child_codebook(kBs, kTxGrid, 64);
    const Codebook rx = build_child_codebook(kUe, kRxGrid, 8);
    const LinkBudget b = noiseless();
    const cplx y = received_signal(h, tx.beams[10], rx.beams[3], b, 1.0, 5);
    const double expect = b.power_mw() * std::norm(rx.beams[3].dot(h.matrix * tx.beams[10]));
    EXPECT_NEAR(std::norm(y) / expect, 1.0, 1e-12);

    LinkBudget b4 = b;
    b4.tx_power_dbm += linear_to_db(4.0);
    const cplx y4 = received_signal(h, tx.beams[10], rx.beams[3], b4, 1.0, 5);
    EXPECT_NEAR(linear_to_db(std::norm(y4)) - linear_to_db(std::norm(y)), 6.0206, 1e-3);
}

TEST(ReceivedSignal, NoiseOnlyMeanPower) {
    ChannelInstance h = generate_drop(DropConfig{});
    h.matrix.setZero();
    const Codebook tx = build_child_codebook(kBs, kTxGrid, 64);
    const Codebook rx = build_child_codebook(kUe, kRxGrid, 8);
    const LinkBudget b;
    double acc = 0.0;
    const int n = 20000;
    for (int s = 0; s < n; ++s) acc += std::norm(received_signal(h, tx.beams[0], rx.beams[2], b, 1.0, s));
    EXPECT_NEAR(acc / n / b.noise_mw(), 1.0, 0.05);
}

TEST(ReceivedSignal, DimensionMismatchThrows) {
    const ChannelInstance h = generate_drop(DropConfig{});
    EXPECT_THROW(received_signal(h, CVec::Ones(3), CVec::Ones(8), LinkBudget{}, 1.0, 0), Error);
}

TEST(Sweep, SingleEntryEqualsReceivedSignal) {
    const ChannelInstance h = generate_drop(DropConfig{});
    const Codebook tx = build_child_codebook(kBs, kTxGrid, 64);
    const Codebook rx = build_child_codebook(kUe, kRxGrid, 8);
    const LinkBudget b;
    const RsrpReport r = sweep_rsrp(h, std::vector<CVec>{tx.beams[5]}, std::vector<CVec>{rx.beams[1]}, b, 77);
    ASSERT_EQ(r.num_tx(), 1);
    ASSERT_EQ(r.num_rx(), 1);
    const cplx y = received_signal(h, tx.beams[5], rx.beams[1], b, 1.0, derive_seed(77, {0, 0}));
    EXPECT_NEAR(r.values_dbm(0, 0), linear_to_db(std::norm(y)), 1e-9);
}

TEST(Sweep, FullSweepShapeAndDeterminism) {
    const ChannelInstance h = generate_drop(DropConfig{});
    const Codebook tx = build_child_codebook(kBs, kTxGrid, 64);
    const Codebook rx = build_child_codebook(kUe, kRxGrid, 8);
    const RsrpReport a = sweep_rsrp(h, tx, rx, LinkBudget{}, 9);
    EXPECT_EQ(a.num_tx() * a.num_rx(), 512);
    EXPECT_EQ(std::count(a.measured_mask.begin(), a.measured_mask.end(), true), 512);
    EXPECT_TRUE(a.values_dbm.allFinite());
    EXPECT_EQ(a.values_dbm, sweep_rsrp(h, tx, rx, LinkBudget{}, 9).values_dbm);
    EXPECT_NE(a.values_dbm, sweep_rsrp(h, tx, rx, LinkBudget{}, 10).values_dbm);
}

TEST(Sweep, NoiselessPermutationEquivariant) {
    const ChannelInstance h = generate_drop(DropConfig{});
    const Codebook tx = build_child_codebook(kBs, kTxGrid, 64);
    const Codebook rx = build_child_codebook(kUe, kRxGrid, 8);
    std::vector<int> perm(64);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), std::mt19937_64(3));
    std::vector<CVec> shuffled;
    for (int p : perm) shuffled.push_back(tx.beams[p]);
    const RsrpReport a = sweep_rsrp(h, tx, rx, noiseless(), 0);
    const RsrpReport b = sweep_rsrp(h, shuffled, rx.beams, noiseless(), 0);
    for (int i = 0; i < 64; ++i)
        for (int n = 0; n < 8; ++n) EXPECT_DOUBLE_EQ(b.values_dbm(i, n), a.values_dbm(perm[i], n));
}

TEST(Sweep, PureLosArgmaxIsBestInnerProduct) {
    const Codebook tx = build_child_codebook(kBs, kTxGrid, 64);
    const Codebook rx = build_child_codebook(kUe, kRxGrid, 8);
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> az(-deg2rad(60), deg2rad(60));
    std::uniform_real_distribution<double> el(deg2rad(60), deg2rad(120));
    for (int t = 0; t < 100; ++t) {
        const double a = az(rng);
        const double e = el(rng);
        const ChannelInstance h = los_drop(t, a, e);
        const RsrpReport r = sweep_rsrp(h, tx, rx, noiseless(), 0);
        const SearchResult best = exhaustive_search(r);
        const CVec a_t = array_response(kBs, a, e);
        int oracle = 0;
        for (int m = 1; m < 64; ++m)
            if (std::abs(a_t.dot(tx.beams[m])) > std::abs(a_t.dot(tx.beams[oracle]))) oracle = m;
        EXPECT_EQ(best.tx_index, oracle);
        // The four grid neighbors of the winner are no stronger.
        const int ia = best.tx_index / 8;
        const int ie = best.tx_index % 8;
        const int nb[4][2] = {{ia - 1, ie}, {ia + 1, ie}, {ia, ie - 1}, {ia, ie + 1}};
        for (const auto& q : nb) {
            if (q[0] < 0 || q[0] > 7 || q[1] < 0 || q[1] > 7) continue;
            EXPECT_LE(r.values_dbm(tx.index(q[0], q[1]), best.rx_index), best.rsrp_dbm);
        }
    }
}

TEST(Sweep, PureLosParentContainsGenieChild) {
    const Codebook tx = build_child_codebook(kBs, kTxGrid, 64);
    const Codebook rx = build_child_codebook(kUe, kRxGrid, 8);
    const HbsStructure h = build_parent_codebook(kBs, tx, 2, 2);
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> az(-deg2rad(60), deg2rad(60));
    std::uniform_real_distribution<double> el(deg2rad(60), deg2rad(120));
    int hits = 0;
    const int n = 500;
    for (int t = 0; t < n; ++t) {
        const double a = az(rng);
        const double e = el(rng);
        const ChannelInstance ch = los_drop(t, a, e);
        const SearchResult genie = exhaustive_search(sweep_rsrp(ch, tx, rx, noiseless(), 0));
        const RsrpReport pr = sweep_rsrp(ch, h.parent, rx.beams[genie.rx_index], noiseless(), 0);
        const SearchResult bp = exhaustive_search(pr);
        hits += bp.tx_index == h.parent_of(genie.tx_index);
    }
    EXPECT_GE(static_cast<double>(hits) / n, 0.95);
}

TEST(LinkBudgetTest, DefaultsAndValidation) {
    const LinkBudget b;
    EXPECT_DOUBLE_EQ(b.effective_power_dbm(), 43.0);
    LinkBudget bad = b;
    bad.noise_power_dbm = 50.0;
    EXPECT_THROW(bad.validate(), Error);
}

TEST(CodebookExport, JsonLayoutAndFingerprint) {
    const Codebook cb = build_child_codebook(kUe, kRxGrid, 8);
    const auto j = codebook_to_json(cb);
    ASSERT_EQ(j.size(), 8u);
    EXPECT_EQ(j[2]["index"], 2);
    EXPECT_NEAR(j[0]["azimuth_deg"].get<double>(), -78.75, 1e-12);
    EXPECT_NEAR(j[0]["elevation_deg"].get<double>(), 90.0, 1e-12);
    ASSERT_EQ(j[0]["weights"].size(), 8u);
    EXPECT_EQ(j[0]["weights"][0].size(), 2u);
    EXPECT_EQ(codebook_fingerprint(cb), codebook_fingerprint(build_child_codebook(kUe, kRxGrid, 8)));
    AngleGrid g = kRxGrid;
    g.az_max_deg = 80;
    EXPECT_NE(codebook_fingerprint(cb), codebook_fingerprint(build_child_codebook(kUe, g, 8)));
}
