#pragma once

// Shared test fixtures: small concrete chains with known geometry.

#include "hapcal/kinematics.hpp"

namespace fixtures {

// Planar 2-link arm in the xy plane: links 0.3 m and 0.2 m along +x,
// both joints about +z.
inline hapcal::KinematicChain planar_two_link() {
    hapcal::KinematicChain chain;
    hapcal::JointSpec j0;
    j0.name = "j0";
    j0.axis = {0, 0, 1};
    hapcal::JointSpec j1;
    j1.name = "j1";
    j1.axis = {0, 0, 1};
    j1.origin_translation = {0.3, 0, 0};
    chain.joints = {j0, j1};
    chain.fingertip_offset = {0.2, 0, 0};
    chain.home_posture = {0.0, 0.0};
    return chain;
}

// 7-DoF arm of the same family as the shipped chain: shoulder
// yaw/pitch/roll at the base, elbow, forearm roll, wrist, finger. Zero
// posture points along +y; total reach 0.55 m.
inline hapcal::KinematicChain arm7() {
    using hapcal::JointSpec;
    hapcal::KinematicChain chain;
    auto joint = [](const char* name, hapcal::Vec3 axis, hapcal::Vec3 trans,
                    double lo, double hi) {
        JointSpec js;
        js.name = name;
        js.axis = axis;
        js.origin_translation = trans;
        js.limit_lo = lo;
        js.limit_hi = hi;
        return js;
    };
    chain.joints = {
        joint("shld_z", {0, 0, 1}, {0, 0, 0}, -1.6, 1.6),
        joint("shld_x", {1, 0, 0}, {0, 0, 0}, -1.8, 0.6),
        joint("arm_y", {0, 1, 0}, {0, 0, 0}, -1.2, 1.2),
        joint("elbow_x", {1, 0, 0}, {0, 0.18, 0}, -2.0, 0.3),
        joint("wrist_z", {0, 1, 0}, {0, 0.16, 0}, -1.5, 1.5),
        joint("wrist_x", {1, 0, 0}, {0, 0.07, 0}, -1.5, 1.5),
        joint("finger_x", {1, 0, 0}, {0, 0.05, 0}, -1.2, 1.2),
    };
    chain.fingertip_offset = {0, 0.09, 0};
    chain.home_posture = {0.0, -0.5, 0.0, -0.7, 0.0, -0.3, -0.2};
    return chain;
}

} // namespace fixtures
