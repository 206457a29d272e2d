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
#include <random>
#include <string>
#include <vector>

#include "beamsim/common.hpp"

namespace beamsim {

/// Uniform planar array in the y-z plane. Spacing is in wavelengths.
struct ArrayGeometry {
    int n_y = 1;
    int n_z = 1;
    double spacing = 0.5;

    int size() const { return n_y * n_z; }

    void validate() const {
        check(n_y >= 1 && n_z >= 1, "ArrayGeometry: n_y and n_z must be >= 1");
        check(spacing > 0.0, "ArrayGeometry: spacing must be positive");
    }

    bool operator==(const ArrayGeometry&) const = default;
};

/// One propagation path. Elevation is measured from +z, azimuth from +x.
struct PathComponent {
    cplx gain{1.0, 0.0};
    double aod_az = 0.0;
    double aod_el = kPi / 2;
    double aoa_az = 0.0;
    double aoa_el = kPi / 2;
    bool is_los = false;
};

enum class ProfileName { ProfileD, ProfileE };

inline std::string to_string(ProfileName p) { return p == ProfileName::ProfileD ? "D" : "E"; }

inline ProfileName parse_profile_name(const std::string& s) {
    if (s == "D" || s == "d" || s == "ProfileD") return ProfileName::ProfileD;
    if (s == "E" || s == "e" || s == "ProfileE") return ProfileName::ProfileE;
    throw Error("unknown channel profile '" + s + "'");
}

/// Clustered LOS+NLOS profile. The D/E presets are parameterized stand-ins
/// for the CDL-D and CDL-E families: E is more LOS dominant than D.
struct ChannelProfile {
    ProfileName name = ProfileName::ProfileD;
    double ricean_k_db = 13.3;
    int num_clusters = 3;
    int rays_per_cluster = 20;
    double cluster_angle_spread_deg = 5.0;
    double ray_angle_spread_deg = 2.0;

    static ChannelProfile preset(ProfileName name) {
        ChannelProfile p;
        p.name = name;
        if (name == ProfileName::ProfileE) {
            p.ricean_k_db = 22.0;
            p.num_clusters = 4;
        }
        return p;
    }

    void validate() const {
        check(num_clusters >= 0, "ChannelProfile: num_clusters must be >= 0");
        check(rays_per_cluster >= 1, "ChannelProfile: rays_per_cluster must be >= 1");
        check(cluster_angle_spread_deg > 0.0 && ray_angle_spread_deg > 0.0,
              "ChannelProfile: angle spreads must be positive");
    }
};

/// Angular extent of the BS sector that UEs and NLOS departure clusters
/// are drawn from.
struct SectorSpec {
    double az_half_width_deg = 60.0;
    double el_min_deg = 60.0;
    double el_max_deg = 120.0;
};

struct DropConfig {
    ChannelProfile profile;
    double ue_distance_m = 100.0;
    double ue_azimuth = 0.0;
    double ue_elevation = kPi / 2;  // LOS departure elevation, broadside by default
    double carrier_hz = 28e9;
    double cell_radius_m = 200.0;
    ArrayGeometry bs_geometry{8, 8, 0.5};
    ArrayGeometry ue_geometry{8, 1, 0.5};
    SectorSpec sector;
    std::uint64_t seed = 0;

    void validate() const {
        profile.validate();
        bs_geometry.validate();
        ue_geometry.validate();
        check(ue_distance_m > 0.0 && ue_distance_m <= cell_radius_m,
              "DropConfig: ue_distance_m must be in (0, cell_radius_m]");
        check(carrier_hz > 0.0, "DropConfig: carrier_hz must be positive");
        check(sector.el_min_deg <= sector.el_max_deg && sector.az_half_width_deg >= 0.0,
              "DropConfig: malformed sector");
    }
};

/// Channel matrix H (N_R x N_T) with the paths that produced it.
struct ChannelInstance {
    CMat matrix;
    std::vector<PathComponent> paths;
    double pathloss_db = 0.0;
    double ricean_k_db = 0.0;
    int rays_per_cluster = 1;
    ArrayGeometry bs_geometry;
    ArrayGeometry ue_geometry;
};

/// UPA steering vector. Element (y', z') sits at index y' * n_z + z'
/// (y-major, then z); the vector has unit Euclidean norm.
inline CVec array_response(const ArrayGeometry& g, double azimuth, double elevation) {
    const int n = g.size();
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    const double u = std::sin(azimuth) * std::sin(elevation);
    const double v = std::cos(elevation);
    CVec a(n);
    for (int y = 0; y < g.n_y; ++y) {
        for (int z = 0; z < g.n_z; ++z) {
            const double phase = 2.0 * kPi * g.spacing * (y * u + z * v);
            a(y * g.n_z + z) = scale * cplx(std::cos(phase), std::sin(phase));
        }
    }
    return a;
}

/// Path loss in dB: 20 log10(d) + 20 log10(f_c) - 147.56, d in m and f_c in Hz.
inline double pathloss_db(double distance_m, double carrier_hz) {
    check(distance_m > 0.0, "pathloss_db: distance must be positive");
    check(carrier_hz > 0.0, "pathloss_db: carrier frequency must be positive");
    return 20.0 * std::log10(distance_m) + 20.0 * std::log10(carrier_hz) - 147.56;
}

/// Thermal noise power in dBm: -174 + 10 log10(B) + NF.
inline double noise_power_dbm(double bandwidth_hz, double noise_figure_db) {
    check(bandwidth_hz > 0.0, "noise_power_dbm: bandwidth must be positive");
    return -174.0 + 10.0 * std::log10(bandwidth_hz) + noise_figure_db;
}

/// Evaluates the clustered channel sum from a path list. generate_drop()
/// builds its matrix through this function, and the recompute invariant
/// is checked against an independent evaluation in the tests.
inline CMat assemble_channel(const std::vector<PathComponent>& paths, double pathloss_db_value,
                             double ricean_k_db, int rays_per_cluster,
                             const ArrayGeometry& bs, const ArrayGeometry& ue) {
    const double k = db_to_linear(ricean_k_db);
    const double lambda = db_to_linear(-pathloss_db_value);
    const double los_weight = std::sqrt(k * lambda / (k + 1.0));
    const double nlos_weight = std::sqrt(lambda / (rays_per_cluster * (k + 1.0)));

    CMat h = CMat::Zero(ue.size(), bs.size());
    for (const auto& p : paths) {
        const CVec a_r = array_response(ue, p.aoa_az, p.aoa_el);
        const CVec a_t = array_response(bs, p.aod_az, p.aod_el);
        const double w = p.is_los ? los_weight : nlos_weight;
        h.noalias() += (w * p.gain) * a_r * a_t.adjoint();
    }
    return h;
}

namespace detail {

inline double laplace(std::mt19937_64& rng, double rms) {
    // Laplace(0, b) has standard deviation sqrt(2) b.
    std::exponential_distribution<double> ex(1.0);
    const double b = rms / std::sqrt(2.0);
    const double e1 = ex(rng);
    const double e2 = ex(rng);
    return b * (e1 - e2);
}

inline double clamp_elevation(double el) { return std::clamp(el, 0.0, kPi); }

}  // namespace detail

/// Draws one channel realization. Pure function of the config (including
/// its seed).
///
/// LOS departs toward the UE position (ue_azimuth, ue_elevation); the LOS
/// arrival azimuth includes a random UE orientation. NLOS departure
/// cluster centers are uniform over the sector, arrival centers uniform
/// over the full UE azimuth range. Per-ray offsets are Laplacian: the ray
/// spread applies at the BS, the cluster spread at the UE. NLOS ray gains
/// are CN(0, 1/C) so that the LOS-to-NLOS power ratio equals K.
inline ChannelInstance generate_drop(const DropConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

    const auto& prof = cfg.profile;
    ChannelInstance out;
    out.pathloss_db = pathloss_db(cfg.ue_distance_m, cfg.carrier_hz);
    out.ricean_k_db = prof.ricean_k_db;
    out.rays_per_cluster = prof.rays_per_cluster;
    out.bs_geometry = cfg.bs_geometry;
    out.ue_geometry = cfg.ue_geometry;

    const double ue_orientation = uniform(-kPi, kPi);
    PathComponent los;
    los.is_los = true;
    const double los_phase = uniform(-kPi, kPi);
    los.gain = cplx(std::cos(los_phase), std::sin(los_phase));
    los.aod_az = wrap_angle(cfg.ue_azimuth);
    los.aod_el = detail::clamp_elevation(cfg.ue_elevation);
    los.aoa_az = wrap_angle(cfg.ue_azimuth + kPi - ue_orientation);
    los.aoa_el = kPi / 2;
    out.paths.push_back(los);

    const double az_half = deg2rad(cfg.sector.az_half_width_deg);
    const double el_lo = deg2rad(cfg.sector.el_min_deg);
    const double el_hi = deg2rad(cfg.sector.el_max_deg);
    const double ray_spread = deg2rad(prof.ray_angle_spread_deg);
    const double cluster_spread = deg2rad(prof.cluster_angle_spread_deg);
    const double gain_sigma =
        prof.num_clusters > 0 ? std::sqrt(0.5 / static_cast<double>(prof.num_clusters)) : 0.0;

    for (int c = 0; c < prof.num_clusters; ++c) {
        const double aod_az_c = uniform(-az_half, az_half);
        const double aod_el_c = uniform(el_lo, el_hi);
        const double aoa_az_c = uniform(-kPi, kPi);
        const double aoa_el_c = uniform(el_lo, el_hi);
        for (int l = 0; l < prof.rays_per_cluster; ++l) {
            PathComponent ray;
            const double re = gauss(rng);
            const double im = gauss(rng);
            ray.gain = cplx(gain_sigma * re, gain_sigma * im);
            ray.aod_az = wrap_angle(aod_az_c + detail::laplace(rng, ray_spread));
            ray.aod_el = detail::clamp_elevation(aod_el_c + detail::laplace(rng, ray_spread));
            ray.aoa_az = wrap_angle(aoa_az_c + detail::laplace(rng, cluster_spread));
            ray.aoa_el = detail::clamp_elevation(aoa_el_c + detail::laplace(rng, cluster_spread));
            out.paths.push_back(ray);
        }
    }

    out.matrix = assemble_channel(out.paths, out.pathloss_db, out.ricean_k_db, out.rays_per_cluster,
                                  cfg.bs_geometry, cfg.ue_geometry);
    return out;
}

}  // namespace beamsim
