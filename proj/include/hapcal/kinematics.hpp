#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "hapcal/errors.hpp"
#include "hapcal/geometry.hpp"

namespace hapcal {

// Joint angles in radians, one entry per joint.
using JointVector = std::vector<double>;

// One revolute joint: a fixed transform from the parent frame followed by a
// rotation of `angle` about `axis`. Units are meters and radians.
struct JointSpec {
    std::string name;
    Vec3 axis{0, 0, 1};          // unit vector in the joint's local frame
    Vec3 origin_translation{};   // from the parent frame
    Mat3 origin_rotation = Mat3::identity();
    double limit_lo = -3.141592653589793;
    double limit_hi = 3.141592653589793;
};

struct KinematicChain {
    std::vector<JointSpec> joints;
    RigidTransform base_pose = RigidTransform::identity();
    Vec3 fingertip_offset{};     // from the last joint frame to the fingertip
    JointVector home_posture;    // in-limit rest posture used as IK seed

    std::size_t dof() const { return joints.size(); }

    // Checks the structural invariants; throws ConfigError on violation.
    void validate() const {
        constexpr double two_pi = 6.283185307179586;
        if (joints.empty())
            throw ConfigError("chain must have at least one joint");
        for (std::size_t j = 0; j < joints.size(); ++j) {
            const JointSpec& js = joints[j];
            if (!(js.limit_lo < js.limit_hi))
                throw ConfigError("joint " + std::to_string(j) +
                                  ": limit_lo must be below limit_hi");
            if (js.limit_lo < -two_pi - 1e-12 || js.limit_hi > two_pi + 1e-12)
                throw ConfigError("joint " + std::to_string(j) +
                                  ": limits outside [-2pi, 2pi]");
            if (std::fabs(js.axis.norm() - 1.0) > 1e-12)
                throw ConfigError("joint " + std::to_string(j) +
                                  ": axis is not a unit vector");
        }
        if (base_pose.rotation.orthonormality_error() > 1e-10)
            throw ConfigError("base_pose rotation is not orthonormal");
        if (home_posture.size() != joints.size())
            throw ConfigError("home_posture length does not match joint count");
        for (std::size_t j = 0; j < joints.size(); ++j) {
            if (home_posture[j] < joints[j].limit_lo ||
                home_posture[j] > joints[j].limit_hi)
                throw ConfigError("home_posture outside limits at joint " +
                                  std::to_string(j));
        }
    }
};

struct IkParams {
    double damping = 0.05;       // lambda of the damped least-squares step
    double tolerance = 1e-4;     // meters
    int max_iterations = 200;
    double step_scale = 1.0;     // in (0, 1]
};

namespace detail {

inline void require_dof(const KinematicChain& chain, const JointVector& q,
                        const char* op) {
    if (q.size() != chain.dof())
        throw ContractError(std::string(op) + ": joint vector has " +
                            std::to_string(q.size()) + " entries, chain has " +
                            std::to_string(chain.dof()));
}

// World-frame pose walk shared by FK and the Jacobian. Joint origins and
// axes are captured before each joint's own rotation is applied.
struct FrameWalk {
    Vec3 fingertip;
    std::vector<Vec3> joint_origins;
    std::vector<Vec3> joint_axes;
};

inline FrameWalk walk_frames(const KinematicChain& chain,
                             const JointVector& q) {
    FrameWalk w;
    w.joint_origins.reserve(chain.dof());
    w.joint_axes.reserve(chain.dof());
    RigidTransform t = chain.base_pose;
    for (std::size_t j = 0; j < chain.dof(); ++j) {
        const JointSpec& js = chain.joints[j];
        t = t.compose({js.origin_rotation, js.origin_translation});
        w.joint_origins.push_back(t.translation);
        w.joint_axes.push_back(t.rotation.apply(js.axis));
        t = t.compose({Mat3::axis_angle(js.axis, q[j]), Vec3{}});
    }
    w.fingertip = t.apply(chain.fingertip_offset);
    return w;
}

} // namespace detail

// Fingertip position in the world frame. Pure.
inline Vec3 forward_kinematics(const KinematicChain& chain,
                               const JointVector& q) {
    detail::require_dof(chain, q, "forward_kinematics");
    return detail::walk_frames(chain, q).fingertip;
}

// 3 x n position Jacobian (meters per radian); column j is
// axis_j x (fingertip - origin_j), all in world frame. Row-major storage.
struct Jacobian {
    std::size_t cols = 0;
    std::vector<double> data;    // 3 rows x cols

    double operator()(int r, std::size_t c) const { return data[r * cols + c]; }
    double& operator()(int r, std::size_t c) { return data[r * cols + c]; }
};

inline Jacobian jacobian(const KinematicChain& chain, const JointVector& q) {
    detail::require_dof(chain, q, "jacobian");
    const detail::FrameWalk w = detail::walk_frames(chain, q);
    Jacobian jac;
    jac.cols = chain.dof();
    jac.data.assign(3 * jac.cols, 0.0);
    for (std::size_t j = 0; j < chain.dof(); ++j) {
        const Vec3 col =
            w.joint_axes[j].cross(w.fingertip - w.joint_origins[j]);
        jac(0, j) = col.x;
        jac(1, j) = col.y;
        jac(2, j) = col.z;
    }
    return jac;
}

inline JointVector clamp_to_limits(const KinematicChain& chain,
                                   const JointVector& q) {
    detail::require_dof(chain, q, "clamp_to_limits");
    JointVector out(q.size());
    for (std::size_t j = 0; j < q.size(); ++j)
        out[j] = std::clamp(q[j], chain.joints[j].limit_lo,
                            chain.joints[j].limit_hi);
    return out;
}

namespace detail {

// Solves (J J^T + lambda^2 I) y = e for the 3x3 system via the closed-form
// adjugate, so the result is bit-reproducible.
inline Vec3 solve_dls_system(const Jacobian& jac, double lambda,
                             const Vec3& e) {
    double a[3][3] = {};
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
            double s = 0.0;
            for (std::size_t k = 0; k < jac.cols; ++k)
                s += jac(r, k) * jac(c, k);
            a[r][c] = s;
        }
    a[0][0] += lambda * lambda;
    a[1][1] += lambda * lambda;
    a[2][2] += lambda * lambda;

    const double c00 = a[1][1] * a[2][2] - a[1][2] * a[2][1];
    const double c01 = a[1][2] * a[2][0] - a[1][0] * a[2][2];
    const double c02 = a[1][0] * a[2][1] - a[1][1] * a[2][0];
    const double det = a[0][0] * c00 + a[0][1] * c01 + a[0][2] * c02;
    if (std::fabs(det) < 1e-300)
        throw NoConvergence("solve_ik: singular normal equations", e.norm(),
                            {});

    const double c10 = a[0][2] * a[2][1] - a[0][1] * a[2][2];
    const double c11 = a[0][0] * a[2][2] - a[0][2] * a[2][0];
    const double c12 = a[0][1] * a[2][0] - a[0][0] * a[2][1];
    const double c20 = a[0][1] * a[1][2] - a[0][2] * a[1][1];
    const double c21 = a[0][2] * a[1][0] - a[0][0] * a[1][2];
    const double c22 = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    return {(c00 * e.x + c10 * e.y + c20 * e.z) / det,
            (c01 * e.x + c11 * e.y + c21 * e.z) / det,
            (c02 * e.x + c12 * e.y + c22 * e.z) / det};
}

} // namespace detail

// Damped least-squares position IK. Iterates
//   q <- clamp(q + step_scale * J^T (J J^T + lambda^2 I)^-1 (target - FK(q)))
// until the residual drops to params.tolerance. Deterministic; throws
// NoConvergence (with the best iterate) when the budget runs out.
inline JointVector solve_ik(const KinematicChain& chain, const Vec3& target,
                            const JointVector& seed, const IkParams& params) {
    detail::require_dof(chain, seed, "solve_ik");
    if (params.tolerance <= 0.0)
        throw ContractError("solve_ik: tolerance must be positive");
    if (params.max_iterations < 1)
        throw ContractError("solve_ik: max_iterations must be >= 1");
    for (std::size_t j = 0; j < seed.size(); ++j) {
        if (seed[j] < chain.joints[j].limit_lo - 1e-12 ||
            seed[j] > chain.joints[j].limit_hi + 1e-12)
            throw ContractError("solve_ik: seed outside limits at joint " +
                                std::to_string(j));
    }

    JointVector q = clamp_to_limits(chain, seed);
    JointVector best_q = q;
    double best_residual = (target - forward_kinematics(chain, q)).norm();

    for (int iter = 0; iter < params.max_iterations; ++iter) {
        const Vec3 e = target - forward_kinematics(chain, q);
        const double residual = e.norm();
        if (residual < best_residual) {
            best_residual = residual;
            best_q = q;
        }
        if (residual <= params.tolerance) return q;

        const Jacobian jac = jacobian(chain, q);
        const Vec3 y = detail::solve_dls_system(jac, params.damping, e);
        JointVector next(q.size());
        for (std::size_t j = 0; j < q.size(); ++j) {
            const double dq =
                jac(0, j) * y.x + jac(1, j) * y.y + jac(2, j) * y.z;
            next[j] = q[j] + params.step_scale * dq;
        }
        q = clamp_to_limits(chain, next);
    }

    const double final_residual =
        (target - forward_kinematics(chain, q)).norm();
    if (final_residual <= params.tolerance) return q;
    if (final_residual < best_residual) {
        best_residual = final_residual;
        best_q = q;
    }
    throw NoConvergence("solve_ik: no convergence, best residual " +
                            std::to_string(best_residual) + " m",
                        best_residual, best_q);
}

} // namespace hapcal
