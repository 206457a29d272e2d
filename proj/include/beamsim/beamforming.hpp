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
#include <limits>
#include <random>
#include <vector>

#include <json.hpp>

#include "beamsim/channel.hpp"
#include "beamsim/common.hpp"

namespace beamsim {

struct BeamAngle {
    double azimuth = 0.0;    // radians
    double elevation = 0.0;  // radians
};

/// Rectangular steering grid. Beam (i_az, i_el) points at the center of
/// its grid cell, so a 1x1 grid over a symmetric sector is broadside.
struct AngleGrid {
    int n_az = 8;
    int n_el = 8;
    double az_min_deg = -60.0;
    double az_max_deg = 60.0;
    double el_min_deg = 60.0;
    double el_max_deg = 120.0;

    int size() const { return n_az * n_el; }

    double azimuth(int i) const {
        return deg2rad(az_min_deg + (i + 0.5) * (az_max_deg - az_min_deg) / n_az);
    }
    double elevation(int j) const {
        return deg2rad(el_min_deg + (j + 0.5) * (el_max_deg - el_min_deg) / n_el);
    }
};

enum class CodebookKind { Parent, Child };

/// Ordered set of unit-norm beamforming vectors. Beams built from a grid
/// are azimuth-major: index = i_az * n_el + i_el.
struct Codebook {
    std::vector<CVec> beams;
    std::vector<BeamAngle> angles;
    CodebookKind kind = CodebookKind::Child;
    int n_az = 0;
    int n_el = 0;
    ArrayGeometry geometry;

    int size() const { return static_cast<int>(beams.size()); }
    int index(int i_az, int i_el) const { return i_az * n_el + i_el; }
};

/// Two-level codebook for one side of the link.
struct HbsStructure {
    Codebook parent;
    Codebook child;
    int children_per_parent = 1;  // s_T at the BS, s_R at the UE
    int block_az = 1;
    int block_el = 1;
    std::vector<std::vector<int>> parent_to_children;
    bool degenerate = false;  // 1x1 blocks: parents coincide with children

    int num_parents() const { return parent.size(); }

    /// Parent owning a child index.
    int parent_of(int child_index) const {
        const int i_az = child_index / child.n_el;
        const int i_el = child_index % child.n_el;
        const int parents_el = child.n_el / block_el;
        return (i_az / block_az) * parents_el + (i_el / block_el);
    }
};

struct LinkBudget {
    double tx_power_dbm = 30.0;
    double bs_gain_dbi = 8.0;
    double ue_gain_dbi = 5.0;
    double noise_power_dbm = -88.0;
    bool noise_enabled = true;
    int measurement_averages = 1;

    /// Transmit power with both antenna gains folded in.
    double effective_power_dbm() const { return tx_power_dbm + bs_gain_dbi + ue_gain_dbi; }
    double power_mw() const { return db_to_linear(effective_power_dbm()); }
    double noise_mw() const { return noise_enabled ? db_to_linear(noise_power_dbm) : 0.0; }

    void validate() const {
        check(!noise_enabled || noise_power_dbm < tx_power_dbm,
              "LinkBudget: noise power must be below transmit power");
        check(measurement_averages >= 1, "LinkBudget: measurement_averages must be >= 1");
    }
};

/// RSRP matrix in dBm, rows are transmit beams and columns receive beams.
struct RsrpReport {
    RMat values_dbm;
    std::vector<bool> measured_mask;  // row-major, rows() * cols()

    int num_tx() const { return static_cast<int>(values_dbm.rows()); }
    int num_rx() const { return static_cast<int>(values_dbm.cols()); }
    bool measured(int m, int n) const {
        return measured_mask[static_cast<std::size_t>(m) * num_rx() + n];
    }
};

inline Codebook build_child_codebook(const ArrayGeometry& geometry, const AngleGrid& grid,
                                     int requested_size) {
    geometry.validate();
    check(grid.n_az >= 1 && grid.n_el >= 1, "build_child_codebook: grid dimensions must be >= 1");
    check(grid.size() == requested_size,
          "build_child_codebook: grid has " + std::to_string(grid.size()) +
              " cells but codebook size " + std::to_string(requested_size) + " was requested");
    Codebook cb;
    cb.kind = CodebookKind::Child;
    cb.n_az = grid.n_az;
    cb.n_el = grid.n_el;
    cb.geometry = geometry;
    for (int i = 0; i < grid.n_az; ++i) {
        for (int j = 0; j < grid.n_el; ++j) {
            BeamAngle a{grid.azimuth(i), grid.elevation(j)};
            cb.angles.push_back(a);
            cb.beams.push_back(array_response(geometry, a.azimuth, a.elevation));
        }
    }
    return cb;
}

/// Steering vector of the central sub_y x sub_z subarray, zero elsewhere,
/// unit norm. Phases use the absolute element positions.
inline CVec subarray_beam(const ArrayGeometry& g, int sub_y, int sub_z, double az, double el) {
    const int off_y = (g.n_y - sub_y) / 2;
    const int off_z = (g.n_z - sub_z) / 2;
    const double scale = 1.0 / std::sqrt(static_cast<double>(sub_y * sub_z));
    const double u = std::sin(az) * std::sin(el);
    const double v = std::cos(el);
    CVec f = CVec::Zero(g.size());
    for (int y = off_y; y < off_y + sub_y; ++y) {
        for (int z = off_z; z < off_z + sub_z; ++z) {
            const double phase = 2.0 * kPi * g.spacing * (y * u + z * v);
            f(y * g.n_z + z) = scale * cplx(std::cos(phase), std::sin(phase));
        }
    }
    return f;
}

/// Builds wide parent beams over blocks of block_az x block_el children.
/// Each parent activates a central subarray shrunk by the block factor per
/// axis (half the array for 2x2 blocks) and steers it at the mean angle of
/// its children.
inline HbsStructure build_parent_codebook(const ArrayGeometry& geometry, const Codebook& child,
                                          int block_az, int block_el) {
    check(block_az >= 1 && block_el >= 1, "build_parent_codebook: block sizes must be >= 1");
    check(child.n_az % block_az == 0 && child.n_el % block_el == 0,
          "build_parent_codebook: child grid " + std::to_string(child.n_az) + "x" +
              std::to_string(child.n_el) + " is not divisible by block " +
              std::to_string(block_az) + "x" + std::to_string(block_el));
    check(child.geometry == geometry, "build_parent_codebook: geometry differs from child codebook");

    HbsStructure hbs;
    hbs.child = child;
    hbs.block_az = block_az;
    hbs.block_el = block_el;
    hbs.children_per_parent = block_az * block_el;
    hbs.degenerate = (block_az == 1 && block_el == 1);

    const int sub_y = std::max(1, geometry.n_y / block_az);
    const int sub_z = std::max(1, geometry.n_z / block_el);
    const int p_az = child.n_az / block_az;
    const int p_el = child.n_el / block_el;

    Codebook& parent = hbs.parent;
    parent.kind = CodebookKind::Parent;
    parent.n_az = p_az;
    parent.n_el = p_el;
    parent.geometry = geometry;
    for (int pa = 0; pa < p_az; ++pa) {
        for (int pe = 0; pe < p_el; ++pe) {
            std::vector<int> kids;
            double az = 0.0;
            double el = 0.0;
            for (int da = 0; da < block_az; ++da) {
                for (int de = 0; de < block_el; ++de) {
                    const int idx = child.index(pa * block_az + da, pe * block_el + de);
                    kids.push_back(idx);
                    az += child.angles[idx].azimuth;
                    el += child.angles[idx].elevation;
                }
            }
            az /= hbs.children_per_parent;
            el /= hbs.children_per_parent;
            parent.angles.push_back({az, el});
            parent.beams.push_back(hbs.degenerate ? array_response(geometry, az, el)
                                                  : subarray_beam(geometry, sub_y, sub_z, az, el));
            std::sort(kids.begin(), kids.end());
            hbs.parent_to_children.push_back(std::move(kids));
        }
    }
    return hbs;
}

/// One measurement y = sqrt(P) w^H H f x + w^H eta, eta ~ CN(0, sigma^2 I).
inline cplx received_signal(const ChannelInstance& h, const CVec& f, const CVec& w,
                            const LinkBudget& budget, cplx x, std::uint64_t seed) {
    check(f.size() == h.matrix.cols() && w.size() == h.matrix.rows(),
          "received_signal: beam dimensions do not match the channel");
    cplx y = std::sqrt(budget.power_mw()) * w.dot(h.matrix * f) * x;  // dot() conjugates w
    const double sigma2 = budget.noise_mw();
    if (sigma2 > 0.0) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> gauss(0.0, std::sqrt(sigma2 / 2.0));
        CVec eta(w.size());
        for (Eigen::Index i = 0; i < eta.size(); ++i) {
            const double re = gauss(rng);
            const double im = gauss(rng);
            eta(i) = cplx(re, im);
        }
        y += w.dot(eta);
    }
    return y;
}

/// Measures every (tx, rx) pair. Measurement (m, n) draws its noise from
/// derive_seed(seed, {m, n}); with averaging, RSRP is the mean of
/// |y|^2 over independent draws tagged {m, n, r}.
inline RsrpReport sweep_rsrp(const ChannelInstance& h, const std::vector<CVec>& tx,
                             const std::vector<CVec>& rx, const LinkBudget& budget,
                             std::uint64_t seed) {
    budget.validate();
    check(!tx.empty() && !rx.empty(), "sweep_rsrp: empty codebook");
    CMat f_mat(h.matrix.cols(), static_cast<Eigen::Index>(tx.size()));
    for (std::size_t m = 0; m < tx.size(); ++m) {
        check(tx[m].size() == h.matrix.cols(), "sweep_rsrp: tx beam dimension mismatch");
        f_mat.col(static_cast<Eigen::Index>(m)) = tx[m];
    }
    const CMat hf = h.matrix * f_mat;  // N_R x F
    const double sqrt_p = std::sqrt(budget.power_mw());
    const double sigma2 = budget.noise_mw();

    RsrpReport rep;
    rep.values_dbm.resize(static_cast<Eigen::Index>(tx.size()), static_cast<Eigen::Index>(rx.size()));
    rep.measured_mask.assign(tx.size() * rx.size(), true);
    for (std::size_t n = 0; n < rx.size(); ++n) {
        check(rx[n].size() == h.matrix.rows(), "sweep_rsrp: rx beam dimension mismatch");
        for (std::size_t m = 0; m < tx.size(); ++m) {
            const cplx s = sqrt_p * rx[n].dot(hf.col(static_cast<Eigen::Index>(m)));
            double power = 0.0;
            if (sigma2 > 0.0) {
                for (int r = 0; r < budget.measurement_averages; ++r) {
                    const std::uint64_t ms =
                        r == 0 ? derive_seed(seed, {m, n}) : derive_seed(seed, {m, n, std::uint64_t(r)});
                    std::mt19937_64 rng(ms);
                    std::normal_distribution<double> gauss(0.0, std::sqrt(sigma2 / 2.0));
                    cplx noise{0.0, 0.0};
                    for (Eigen::Index i = 0; i < rx[n].size(); ++i) {
                        const double re = gauss(rng);
                        const double im = gauss(rng);
                        noise += std::conj(rx[n](i)) * cplx(re, im);
                    }
                    power += std::norm(s + noise);
                }
                power /= budget.measurement_averages;
            } else {
                power = std::norm(s);
            }
            rep.values_dbm(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n)) = linear_to_db(power);
        }
    }
    return rep;
}

inline RsrpReport sweep_rsrp(const ChannelInstance& h, const Codebook& tx, const Codebook& rx,
                             const LinkBudget& budget, std::uint64_t seed) {
    return sweep_rsrp(h, tx.beams, rx.beams, budget, seed);
}

/// Sweep with the receive beam held fixed; the report has a single column.
inline RsrpReport sweep_rsrp(const ChannelInstance& h, const Codebook& tx, const CVec& fixed_rx,
                             const LinkBudget& budget, std::uint64_t seed) {
    return sweep_rsrp(h, tx.beams, std::vector<CVec>{fixed_rx}, budget, seed);
}

/// Identifies a codebook by its dimensions, angles and weights.
inline std::string codebook_fingerprint(const Codebook& cb) {
    std::uint64_t hsh = 0xCBF29CE484222325ULL;
    const int dims[] = {cb.n_az, cb.n_el, cb.geometry.n_y, cb.geometry.n_z, cb.size()};
    hsh = fnv1a64(dims, sizeof(dims), hsh);
    hsh = fnv1a64(&cb.geometry.spacing, sizeof(double), hsh);
    for (int i = 0; i < cb.size(); ++i) {
        hsh = fnv1a64(&cb.angles[i].azimuth, sizeof(double), hsh);
        hsh = fnv1a64(&cb.angles[i].elevation, sizeof(double), hsh);
        hsh = fnv1a64(cb.beams[i].data(), sizeof(cplx) * cb.beams[i].size(), hsh);
    }
    return hex64(hsh);
}

/// JSON export: [{index, azimuth_deg, elevation_deg, weights: [[re, im], ...]}].
inline nlohmann::json codebook_to_json(const Codebook& cb) {
    nlohmann::json out = nlohmann::json::array();
    for (int i = 0; i < cb.size(); ++i) {
        nlohmann::json w = nlohmann::json::array();
        for (Eigen::Index k = 0; k < cb.beams[i].size(); ++k)
            w.push_back({cb.beams[i](k).real(), cb.beams[i](k).imag()});
        out.push_back({{"index", i},
                       {"azimuth_deg", rad2deg(cb.angles[i].azimuth)},
                       {"elevation_deg", rad2deg(cb.angles[i].elevation)},
                       {"weights", std::move(w)}});
    }
    return out;
}

}  // namespace beamsim
