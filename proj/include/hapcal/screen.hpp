#pragma once

#include <cmath>
#include <string>
#include <utility>

#include "hapcal/errors.hpp"
#include "hapcal/geometry.hpp"

namespace hapcal {

// Point on the touchscreen surface, meters in the screen frame (origin at one
// corner, z = 0 on the glass).
struct ScreenPoint {
    double x = 0.0;
    double y = 0.0;
};

// Axis-aligned rectangle in screen coordinates; the robot-reachable part of
// the glass.
struct Region {
    double x_min = 0.0, y_min = 0.0;
    double x_max = 0.0, y_max = 0.0;

    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
    ScreenPoint center() const {
        return {0.5 * (x_min + x_max), 0.5 * (y_min + y_max)};
    }
    bool contains(const ScreenPoint& p) const {
        return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max;
    }
    void validate() const {
        if (!(x_min < x_max) || !(y_min < y_max))
            throw ConfigError("region must have positive extent");
    }
};

struct Screen {
    double width = 0.54;
    double height = 0.33;
    int pixel_width = 1920;
    int pixel_height = 1080;
    RigidTransform pose; // screen frame -> world frame; glass is z = 0

    void validate() const {
        if (!(width > 0.0) || !(height > 0.0))
            throw ConfigError("screen dimensions must be positive");
        if (pixel_width < 1 || pixel_height < 1)
            throw ConfigError("screen pixel dimensions must be positive");
        if (pose.rotation.orthonormality_error() > 1e-10)
            throw ConfigError("screen pose rotation is not orthonormal");
    }

    bool contains(const ScreenPoint& p) const {
        return p.x >= 0.0 && p.x <= width && p.y >= 0.0 && p.y <= height;
    }

    Vec3 to_world(const ScreenPoint& p) const {
        return pose.apply({p.x, p.y, 0.0});
    }

    // Full 3D coordinates in the screen frame; z is height above the glass.
    Vec3 to_screen_frame(const Vec3& world) const {
        return pose.apply_inverse(world);
    }
};

inline ScreenPoint pixel_to_metric(const Screen& s, int px, int py) {
    if (px < 0 || px > s.pixel_width || py < 0 || py > s.pixel_height)
        throw ContractError("pixel (" + std::to_string(px) + ", " +
                            std::to_string(py) + ") outside the screen");
    // Normalized fraction first so the far corner lands exactly on
    // (width, height) and stays inside contains().
    return {s.width * (static_cast<double>(px) / s.pixel_width),
            s.height * (static_cast<double>(py) / s.pixel_height)};
}

inline std::pair<int, int> metric_to_pixel(const Screen& s,
                                           const ScreenPoint& p) {
    if (!s.contains(p))
        throw ContractError("screen point outside the screen");
    return {static_cast<int>(std::lround(p.x * s.pixel_width / s.width)),
            static_cast<int>(std::lround(p.y * s.pixel_height / s.height))};
}

} // namespace hapcal
