#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "hapcal/emulator.hpp"
#include "hapcal/errors.hpp"
#include "hapcal/kinematics.hpp"
#include "hapcal/screen.hpp"

namespace hapcal {

// Cartesian point in the simulator base frame (C_S).
struct SimPoint {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

// Screen (x, y) -> simulator (x, y) affine map fitted exactly to the three
// edge-calibration points, plus the 3D plane through those points as the
// baseline height.
struct AffineScreenMap {
    std::array<double, 4> linear{1, 0, 0, 1}; // row-major 2x2
    std::array<double, 2> offset{0, 0};
    std::array<double, 3> plane{0, 0, 0}; // z = plane[0] + [1]*x + [2]*y

    double det() const {
        return linear[0] * linear[3] - linear[1] * linear[2];
    }

    void validate() const {
        if (std::fabs(det()) <= 1e-9)
            throw ContractError("screen map is degenerate (collinear points)");
    }

    std::array<double, 2> map_xy(const ScreenPoint& p) const {
        return {linear[0] * p.x + linear[1] * p.y + offset[0],
                linear[2] * p.x + linear[3] * p.y + offset[1]};
    }

    double plane_z(double x, double y) const {
        return plane[0] + plane[1] * x + plane[2] * y;
    }

    SimPoint apply(const ScreenPoint& p) const {
        const auto xy = map_xy(p);
        return {xy[0], xy[1], plane_z(xy[0], xy[1])};
    }

    ScreenPoint apply_inverse(double sim_x, double sim_y) const {
        const double d = det();
        if (std::fabs(d) <= 1e-9)
            throw ContractError("screen map is degenerate (collinear points)");
        const double rx = sim_x - offset[0];
        const double ry = sim_y - offset[1];
        return {(linear[3] * rx - linear[1] * ry) / d,
                (-linear[2] * rx + linear[0] * ry) / d};
    }
};

namespace detail {

// Solve a 3x3 system by the adjugate formula; bit-reproducible.
inline std::array<double, 3> solve3(const std::array<double, 9>& m,
                                    const std::array<double, 3>& rhs,
                                    const char* what) {
    const double det = m[0] * (m[4] * m[8] - m[5] * m[7]) -
                       m[1] * (m[3] * m[8] - m[5] * m[6]) +
                       m[2] * (m[3] * m[7] - m[4] * m[6]);
    if (std::fabs(det) < 1e-300)
        throw ContractError(std::string(what) + ": singular system");
    const std::array<double, 9> adj = {
        m[4] * m[8] - m[5] * m[7], m[2] * m[7] - m[1] * m[8],
        m[1] * m[5] - m[2] * m[4], m[5] * m[6] - m[3] * m[8],
        m[0] * m[8] - m[2] * m[6], m[2] * m[3] - m[0] * m[5],
        m[3] * m[7] - m[4] * m[6], m[1] * m[6] - m[0] * m[7],
        m[0] * m[4] - m[1] * m[3]};
    std::array<double, 3> x{};
    for (int r = 0; r < 3; ++r)
        x[r] = (adj[r * 3] * rhs[0] + adj[r * 3 + 1] * rhs[1] +
                adj[r * 3 + 2] * rhs[2]) /
               det;
    return x;
}

} // namespace detail

// Unique affine map through three point pairs. Exact on the defining points:
// the linear part is solved from the two edge vectors, the offset from the
// first pair.
inline AffineScreenMap fit_affine(const std::array<ScreenPoint, 3>& screen_pts,
                                  const std::array<SimPoint, 3>& sim_pts) {
    const double d1x = screen_pts[1].x - screen_pts[0].x;
    const double d1y = screen_pts[1].y - screen_pts[0].y;
    const double d2x = screen_pts[2].x - screen_pts[0].x;
    const double d2y = screen_pts[2].y - screen_pts[0].y;
    const double det = d1x * d2y - d1y * d2x;
    if (std::fabs(det) <= 1e-9)
        throw ContractError("fit_affine: collinear screen points");

    const double e1x = sim_pts[1].x - sim_pts[0].x;
    const double e1y = sim_pts[1].y - sim_pts[0].y;
    const double e2x = sim_pts[2].x - sim_pts[0].x;
    const double e2y = sim_pts[2].y - sim_pts[0].y;

    AffineScreenMap map;
    // A = [e1 e2] * [d1 d2]^-1, written out per entry.
    map.linear[0] = (e1x * d2y - e2x * d1y) / det;
    map.linear[1] = (e2x * d1x - e1x * d2x) / det;
    map.linear[2] = (e1y * d2y - e2y * d1y) / det;
    map.linear[3] = (e2y * d1x - e1y * d2x) / det;
    map.offset[0] =
        sim_pts[0].x - map.linear[0] * screen_pts[0].x - map.linear[1] * screen_pts[0].y;
    map.offset[1] =
        sim_pts[0].y - map.linear[2] * screen_pts[0].x - map.linear[3] * screen_pts[0].y;
    map.validate();

    map.plane = detail::solve3({1.0, sim_pts[0].x, sim_pts[0].y,
                                1.0, sim_pts[1].x, sim_pts[1].y,
                                1.0, sim_pts[2].x, sim_pts[2].y},
                               {sim_pts[0].z, sim_pts[1].z, sim_pts[2].z},
                               "fit_affine plane");
    return map;
}

// One manually guided edge touch: where the marker was shown on the screen
// and the joint readback while the fingertip rested on it.
struct EdgeSample {
    ScreenPoint screen;
    JointVector joints;
};

// Step 2 of the procedure: run the *nominal* chain's FK on the recorded
// joints and fit the screen->sim affine map from the three pairs.
inline AffineScreenMap locate_screen(const std::array<EdgeSample, 3>& samples,
                                     const KinematicChain& sim_chain) {
    std::array<ScreenPoint, 3> screen_pts;
    std::array<SimPoint, 3> sim_pts;
    for (std::size_t i = 0; i < 3; ++i) {
        screen_pts[i] = samples[i].screen;
        const Vec3 p = forward_kinematics(sim_chain, samples[i].joints);
        sim_pts[i] = {p.x, p.y, p.z};
    }
    return fit_affine(screen_pts, sim_pts);
}

// Measured contact heights over a regular simulator-frame lattice. Node
// coordinates are stored verbatim so lookups at a node reproduce its z
// bit-exactly.
struct HeightGrid {
    std::vector<double> xs, ys; // strictly increasing node coordinates
    std::vector<double> z;      // z[iy * nx + ix]

    std::size_t nx() const { return xs.size(); }
    std::size_t ny() const { return ys.size(); }
    double z_at(std::size_t ix, std::size_t iy) const {
        return z[iy * nx() + ix];
    }
    double& z_at(std::size_t ix, std::size_t iy) { return z[iy * nx() + ix]; }

    void validate() const {
        if (nx() < 2 || ny() < 2)
            throw ConfigError("height grid needs at least 2x2 nodes");
        if (z.size() != nx() * ny())
            throw ConfigError("height grid z size mismatch");
        for (const auto& coords : {xs, ys})
            for (std::size_t i = 1; i < coords.size(); ++i)
                if (!(coords[i] > coords[i - 1]))
                    throw ConfigError("height grid nodes must be increasing");
        for (double v : z)
            if (!std::isfinite(v)) throw ConfigError("height grid z not finite");
    }
};

// Bilinear interpolation in the containing cell. Queries outside the lattice
// clamp to the nearest edge cell and extrapolate with that cell's weights.
inline double interp_height(const HeightGrid& grid, double x, double y) {
    const auto cell = [](const std::vector<double>& coords, double v) {
        auto it = std::upper_bound(coords.begin(), coords.end(), v);
        std::ptrdiff_t i = (it - coords.begin()) - 1;
        i = std::clamp<std::ptrdiff_t>(i, 0,
                                       static_cast<std::ptrdiff_t>(coords.size()) - 2);
        return static_cast<std::size_t>(i);
    };
    const std::size_t ix = cell(grid.xs, x);
    const std::size_t iy = cell(grid.ys, y);
    const double tx = (x - grid.xs[ix]) / (grid.xs[ix + 1] - grid.xs[ix]);
    const double ty = (y - grid.ys[iy]) / (grid.ys[iy + 1] - grid.ys[iy]);
    const double z00 = grid.z_at(ix, iy);
    const double z10 = grid.z_at(ix + 1, iy);
    const double z01 = grid.z_at(ix, iy + 1);
    const double z11 = grid.z_at(ix + 1, iy + 1);
    return z00 * (1.0 - tx) * (1.0 - ty) + z10 * tx * (1.0 - ty) +
           z01 * (1.0 - tx) * ty + z11 * tx * ty;
}

namespace detail {

// Largest axis-aligned rectangle inside the mapped (possibly sheared) usable
// region: per axis, the [second-smallest, second-largest] of the four mapped
// corner coordinates.
inline std::array<double, 4> inner_box(const AffineScreenMap& map,
                                       const Region& region) {
    const std::array<ScreenPoint, 4> corners = {
        ScreenPoint{region.x_min, region.y_min},
        ScreenPoint{region.x_max, region.y_min},
        ScreenPoint{region.x_min, region.y_max},
        ScreenPoint{region.x_max, region.y_max}};
    std::array<double, 4> cx, cy;
    for (std::size_t i = 0; i < 4; ++i) {
        const auto xy = map.map_xy(corners[i]);
        cx[i] = xy[0];
        cy[i] = xy[1];
    }
    std::sort(cx.begin(), cx.end());
    std::sort(cy.begin(), cy.end());
    if (!(cx[1] < cx[2]) || !(cy[1] < cy[2]))
        throw ConfigError("mapped screen region degenerates to a sliver");
    return {cx[1], cx[2], cy[1], cy[2]};
}

} // namespace detail

// Step 3: contact-probe every node of an nx x ny lattice laid over the mapped
// usable region, starting 2 cm above the calibration plane and descending in
// 1 mm steps.
inline HeightGrid measure_height_grid(const AffineScreenMap& map,
                                      const Region& region,
                                      const KinematicChain& sim_chain,
                                      RealWorldEmulator& emu, std::size_t nx = 6,
                                      std::size_t ny = 6, int duration = 2) {
    if (nx < 2 || ny < 2)
        throw ContractError("measure_height_grid: need at least 2x2 nodes");
    map.validate();
    region.validate();
    const auto box = detail::inner_box(map, region);

    HeightGrid grid;
    for (std::size_t i = 0; i < nx; ++i)
        grid.xs.push_back(box[0] + (box[1] - box[0]) * static_cast<double>(i) /
                                       static_cast<double>(nx - 1));
    for (std::size_t j = 0; j < ny; ++j)
        grid.ys.push_back(box[2] + (box[3] - box[2]) * static_cast<double>(j) /
                                       static_cast<double>(ny - 1));
    grid.z.assign(nx * ny, 0.0);

    for (std::size_t iy = 0; iy < ny; ++iy)
        for (std::size_t ix = 0; ix < nx; ++ix) {
            const double x = grid.xs[ix];
            const double y = grid.ys[iy];
            try {
                const ContactSearchResult found = lower_until_contact(
                    emu, sim_chain, x, y, map.plane_z(x, y) + 0.02, 1e-3,
                    duration);
                grid.z_at(ix, iy) = found.z_contact;
            } catch (const NoContact& e) {
                throw NoContact("grid node (" + std::to_string(ix) + ", " +
                                std::to_string(iy) + "): " + e.what());
            }
        }
    grid.validate();
    return grid;
}

// Model M1: affine xy plus bilinear z from the measured grid.
inline SimPoint m1_predict(const AffineScreenMap& map, const HeightGrid& grid,
                           const ScreenPoint& target) {
    const auto xy = map.map_xy(target);
    return {xy[0], xy[1], interp_height(grid, xy[0], xy[1])};
}

} // namespace hapcal
