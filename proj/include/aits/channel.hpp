#pragma once

// Sparse multipath (Saleh-Valenzuela) channels between uniform planar arrays.
//
//   G   (N x M_t) = sqrt(M_t N / L)  sum_l alpha_l a_its(aoa_l) a_bs(aod_l)^H
//   H_k (N x M_r) = sqrt(M_r N / P)  sum_p beta_p  a_its(aod_p) a_ue(aoa_p)^H
//
// H_k is stored ITS-side first so that the UE sees H_k^H Phi G. Path 0 of every
// link is the LoS path; the remaining paths use the NLoS path-loss parameters.

#include "aits/config.hpp"
#include "aits/rng.hpp"
#include "aits/types.hpp"

#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace aits {

struct UpaGeometry {
    int horizontal = 1;
    int vertical = 1;
    int count() const { return horizontal * vertical; }
    static UpaGeometry from(const ArrayShape& a) { return {a.horizontal, a.vertical}; }
};

/// Half-wavelength UPA steering vector, entry h * V + v, unit 2-norm.
inline cvec array_response(const UpaGeometry& geom, double azimuth, double elevation) {
    const int n = geom.count();
    cvec out(n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    const double hor = std::sin(elevation) * std::sin(azimuth);
    const double ver = std::cos(elevation);
    for (int h = 0; h < geom.horizontal; ++h) {
        for (int v = 0; v < geom.vertical; ++v) {
            out(h * geom.vertical + v) = std::polar(scale, kPi * (h * hor + v * ver));
        }
    }
    return out;
}

/// Distance-dependent path loss in dB; shadow_db is the caller's N(0, sigma^2) draw.
inline double path_loss_db(double distance_m, const PathLossParams& params, double shadow_db) {
    if (!(distance_m > 0.0)) throw NumericalError("path loss needs a positive distance");
    return params.pl0_db + 10.0 * params.exponent * std::log10(distance_m) + shadow_db;
}

struct Path {
    cdouble gain;
    double aoa_azimuth;
    double aoa_elevation;
    double aod_azimuth;
    double aod_elevation;
    bool los;
};

using PathSet = std::vector<Path>;

struct Position {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

inline double distance(const Position& a, const Position& b) {
    return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) + (a.z - b.z) * (a.z - b.z));
}

struct ChannelRealization {
    cmat G;                      // N x M_t
    std::vector<cmat> H;         // K of N x M_r
    double bs_its_distance = 0;  // m
    std::vector<double> its_ue_distance;
    std::vector<Position> ue_positions;

    int elements() const { return static_cast<int>(G.rows()); }
    int users() const { return static_cast<int>(H.size()); }
};

struct Scenario {
    Position bs;
    Position its;
    Position ue_center;
};

inline Scenario scenario_geometry(const SystemConfig& c) {
    return {{0.0, 0.0, c.height_bs}, {0.0, c.d_bi, c.height_its}, {0.0, c.d_bu, c.height_ue}};
}

/// Draws `count` paths: uniform azimuths in [-pi, pi), elevations in [-pi/2, pi/2),
/// gain CN(0, 10^(-PL/10)) with one shadow draw per path.
inline PathSet draw_paths(int count, double distance_m, const SystemConfig& c, Rng& rng) {
    std::uniform_real_distribution<double> az(-kPi, kPi);
    std::uniform_real_distribution<double> el(-kPi / 2.0, kPi / 2.0);
    std::normal_distribution<double> unit(0.0, 1.0);
    PathSet paths;
    paths.reserve(static_cast<std::size_t>(count));
    for (int l = 0; l < count; ++l) {
        const bool los = l == 0;
        const PathLossParams& pl = los ? c.los : c.nlos;
        Path p{};
        p.los = los;
        p.aoa_azimuth = az(rng);
        p.aoa_elevation = el(rng);
        p.aod_azimuth = az(rng);
        p.aod_elevation = el(rng);
        const double shadow = pl.shadow_std_db * unit(rng);
        const double variance = std::pow(10.0, -0.1 * path_loss_db(distance_m, pl, shadow));
        const double sd = std::sqrt(variance / 2.0);
        const double re = unit(rng);
        const double im = unit(rng);
        p.gain = {sd * re, sd * im};
        paths.push_back(p);
    }
    return paths;
}

/// sqrt(rx*tx / L) sum_l gain_l a_rx(aoa_l) a_tx(aod_l)^H
inline cmat synthesize(const PathSet& paths, const UpaGeometry& rx, const UpaGeometry& tx) {
    cmat m = cmat::Zero(rx.count(), tx.count());
    for (const auto& p : paths) {
        m.noalias() += p.gain * array_response(rx, p.aoa_azimuth, p.aoa_elevation) *
                       array_response(tx, p.aod_azimuth, p.aod_elevation).adjoint();
    }
    return m * std::sqrt(static_cast<double>(rx.count()) * tx.count() / static_cast<double>(paths.size()));
}

/// One Monte-Carlo draw. Consumption order: UE positions, BS-ITS paths, then the
/// ITS-UE paths of UE 0..K-1.
inline ChannelRealization draw_channels(const SystemConfig& c, Rng& rng) {
    const Scenario sc = scenario_geometry(c);
    const auto its = UpaGeometry::from(c.its_array);
    const auto bs = UpaGeometry::from(c.bs_array);
    const auto ue = UpaGeometry::from(c.ue_array);

    ChannelRealization ch;
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int k = 0; k < c.users; ++k) {
        const double r = c.ue_radius * std::sqrt(u01(rng));
        const double phi = kTwoPi * u01(rng);
        ch.ue_positions.push_back({sc.ue_center.x + r * std::cos(phi), sc.ue_center.y + r * std::sin(phi),
                                   sc.ue_center.z});
    }

    ch.bs_its_distance = distance(sc.bs, sc.its);
    ch.G = synthesize(draw_paths(c.bs_its_paths, ch.bs_its_distance, c, rng), its, bs);
    for (int k = 0; k < c.users; ++k) {
        const double d = distance(sc.its, ch.ue_positions[static_cast<std::size_t>(k)]);
        ch.its_ue_distance.push_back(d);
        // the ITS transmits towards the UE: ITS-side response is the departure one
        PathSet paths = draw_paths(c.its_ue_paths, d, c, rng);
        for (auto& p : paths) {
            std::swap(p.aoa_azimuth, p.aod_azimuth);
            std::swap(p.aoa_elevation, p.aod_elevation);
        }
        ch.H.push_back(synthesize(paths, its, ue));
    }
    return ch;
}

// ---------------------------------------------------------------------------
// Channel dump: for each matrix a header line "name,rows,cols" followed by one
// line per row of "re,im" pairs (row-major). Order: G, H1..HK.

inline void write_channel_csv(const ChannelRealization& ch, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open channel dump '" + path + "' for writing");
    out.precision(17);
    auto dump = [&](const std::string& name, const cmat& m) {
        out << name << ',' << m.rows() << ',' << m.cols() << '\n';
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index col = 0; col < m.cols(); ++col) {
                if (col) out << ',';
                out << m(r, col).real() << ',' << m(r, col).imag();
            }
            out << '\n';
        }
    };
    dump("G", ch.G);
    for (std::size_t k = 0; k < ch.H.size(); ++k) dump("H" + std::to_string(k + 1), ch.H[k]);
    if (!out) throw IoError("write failed for channel dump '" + path + "'");
}

inline ChannelRealization read_channel_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open channel dump '" + path + "'");
    ChannelRealization ch;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream hs(line);
        std::string name, rows, cols;
        std::getline(hs, name, ',');
        std::getline(hs, rows, ',');
        std::getline(hs, cols, ',');
        cmat m(std::stol(rows), std::stol(cols));
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            if (!std::getline(in, line)) throw IoError("truncated channel dump '" + path + "'");
            std::stringstream rs(line);
            std::string re, im;
            for (Eigen::Index col = 0; col < m.cols(); ++col) {
                std::getline(rs, re, ',');
                std::getline(rs, im, ',');
                m(r, col) = {std::stod(re), std::stod(im)};
            }
        }
        if (name == "G")
            ch.G = std::move(m);
        else
            ch.H.push_back(std::move(m));
    }
    return ch;
}

}  // namespace aits
