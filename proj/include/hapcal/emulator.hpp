#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hapcal/errors.hpp"
#include "hapcal/kinematics.hpp"
#include "hapcal/rng.hpp"
#include "hapcal/screen.hpp"

namespace hapcal {

// How the "real" arm differs from the nominal model. Empty vectors mean the
// values are drawn once at build time from the stds below (seeded), which is
// how the default scene specifies them; explicit vectors pin exact values.
struct PerturbationConfig {
    std::vector<double> joint_offset; // radians, per joint
    std::vector<double> joint_gain;   // per joint
    std::vector<double> link_scale;   // per joint translation + fingertip

    double offset_std = 0.01;
    double gain_std = 0.005;
    double link_scale_std = 0.01;
    std::vector<std::size_t> shoulder_joints = {0, 1};
    double shoulder_multiplier = 2.0;

    std::map<int, double> overshoot_gain = {{1, 0.04}, {2, 0.02}, {3, 0.018}};
    double noise_std = 0.002; // radians
    std::uint64_t rng_seed = 1;

    static PerturbationConfig identity() {
        PerturbationConfig cfg;
        cfg.offset_std = 0.0;
        cfg.gain_std = 0.0;
        cfg.link_scale_std = 0.0;
        cfg.overshoot_gain = {{1, 0.0}, {2, 0.0}, {3, 0.0}};
        cfg.noise_std = 0.0;
        return cfg;
    }

    void validate(std::size_t dof) const {
        if (!joint_offset.empty() && joint_offset.size() != dof)
            throw ConfigError("joint_offset size != dof");
        if (!joint_gain.empty() && joint_gain.size() != dof)
            throw ConfigError("joint_gain size != dof");
        if (!link_scale.empty() && link_scale.size() != dof + 1)
            throw ConfigError("link_scale size != dof + 1");
        for (double g : joint_gain)
            if (!(g > 0.8 && g < 1.2))
                throw ConfigError("joint_gain outside (0.8, 1.2)");
        for (double s : link_scale)
            if (!(s > 0.8 && s < 1.2))
                throw ConfigError("link_scale outside (0.8, 1.2)");
        if (noise_std < 0.0) throw ConfigError("noise_std must be >= 0");
        if (offset_std < 0.0 || gain_std < 0.0 || link_scale_std < 0.0)
            throw ConfigError("perturbation stds must be >= 0");
        for (std::size_t j : shoulder_joints)
            if (j >= dof) throw ConfigError("shoulder joint index out of range");
        for (const auto& [d, k] : overshoot_gain)
            if (d < 1) throw ConfigError("overshoot duration must be >= 1 s");
    }
};

struct TouchResult {
    std::optional<ScreenPoint> contact; // C_R, present only for on-screen hits
    JointVector joints_readback;        // J_R
    Vec3 fingertip_real;
};

// Stand-in for the physical arm + touchscreen. Owns a secretly perturbed
// chain and a seeded noise stream; calibration code only ever sees commands
// in, readbacks and contact points out.
class RealWorldEmulator {
public:
    RealWorldEmulator(KinematicChain real_chain, Screen screen,
                      std::vector<double> gain, std::vector<double> offset,
                      std::map<int, double> overshoot, double noise_std,
                      std::uint64_t noise_seed)
        : chain_(std::move(real_chain)), screen_(std::move(screen)),
          gain_(std::move(gain)), offset_(std::move(offset)),
          overshoot_(std::move(overshoot)), noise_std_(noise_std),
          noise_(noise_seed), q_prev_(chain_.home_posture) {
        chain_.validate();
        screen_.validate();
    }

    const Screen& screen() const { return screen_; }
    const JointVector& home_posture() const { return chain_.home_posture; }
    double contact_epsilon() const { return contact_epsilon_; }

    // J_R = clamp(gain * q_cmd + offset + kappa(duration) * (q_cmd - q_prev)
    //             + noise); q_prev is the previously *commanded* vector so a
    //     fixed command sequence always reproduces the same transients.
    JointVector execute_move(const JointVector& q_cmd, int duration) {
        if (q_cmd.size() != chain_.dof())
            throw ContractError("execute_move: joint count mismatch");
        const auto kappa = overshoot_.find(duration);
        if (kappa == overshoot_.end())
            throw ContractError("execute_move: unknown duration " +
                                std::to_string(duration) + " s");
        JointVector j_r(q_cmd.size());
        for (std::size_t j = 0; j < q_cmd.size(); ++j)
            j_r[j] = gain_[j] * q_cmd[j] + offset_[j] +
                     kappa->second * (q_cmd[j] - q_prev_[j]) +
                     noise_.normal(0.0, noise_std_);
        j_r = clamp_to_limits(chain_, j_r);
        q_prev_ = q_cmd;
        return j_r;
    }

    TouchResult touch_screen(const JointVector& q_cmd, int duration) {
        TouchResult result;
        result.joints_readback = execute_move(q_cmd, duration);
        result.fingertip_real = forward_kinematics(chain_, result.joints_readback);
        const Vec3 s = screen_.to_screen_frame(result.fingertip_real);
        const ScreenPoint p{s.x, s.y};
        if (s.z <= contact_epsilon_ && screen_.contains(p)) result.contact = p;
        return result;
    }

    // The standard touch cycle: retract to the home posture, then command the
    // touch, so the transient term always references home and the contact
    // error is a reproducible function of the target.
    TouchResult touch_from_home(const JointVector& q_cmd, int duration) {
        execute_move(chain_.home_posture, duration);
        return touch_screen(q_cmd, duration);
    }

    // Manual guidance: the arm is physically placed so the fingertip rests at
    // a world-frame point and the encoders are read back. No actuation error
    // is involved; this is the ground-truth posture for that point.
    JointVector guide_to(const Vec3& world_target) const {
        IkParams params;
        params.tolerance = 1e-5;
        params.max_iterations = 500;
        return solve_ik(chain_, world_target, chain_.home_posture, params);
    }

private:
    static constexpr double contact_epsilon_ = 5e-4; // meters above the glass

    KinematicChain chain_;
    Screen screen_;
    std::vector<double> gain_;
    std::vector<double> offset_;
    std::map<int, double> overshoot_;
    double noise_std_;
    Rng noise_;
    JointVector q_prev_;
};

inline RealWorldEmulator build_real_world(const KinematicChain& nominal,
                                          const Screen& screen,
                                          const PerturbationConfig& cfg) {
    nominal.validate();
    const std::size_t dof = nominal.dof();
    cfg.validate(dof);

    Rng draw(mix_seed(cfg.rng_seed, 1));
    std::vector<double> offset = cfg.joint_offset;
    if (offset.empty()) {
        offset.resize(dof);
        for (std::size_t j = 0; j < dof; ++j) {
            double mult = 1.0;
            for (std::size_t s : cfg.shoulder_joints)
                if (s == j) mult = cfg.shoulder_multiplier;
            offset[j] = mult * draw.normal(0.0, cfg.offset_std);
        }
    }
    std::vector<double> gain = cfg.joint_gain;
    if (gain.empty()) {
        gain.resize(dof);
        for (double& g : gain) g = draw.normal(1.0, cfg.gain_std);
    }
    std::vector<double> link_scale = cfg.link_scale;
    if (link_scale.empty()) {
        link_scale.resize(dof + 1);
        for (double& s : link_scale) s = draw.normal(1.0, cfg.link_scale_std);
    }
    for (double g : gain)
        if (!(g > 0.8 && g < 1.2))
            throw ConfigError("drawn joint_gain outside (0.8, 1.2)");
    for (double s : link_scale)
        if (!(s > 0.8 && s < 1.2))
            throw ConfigError("drawn link_scale outside (0.8, 1.2)");

    KinematicChain real = nominal;
    for (std::size_t j = 0; j < dof; ++j)
        real.joints[j].origin_translation =
            real.joints[j].origin_translation * link_scale[j];
    real.fingertip_offset = real.fingertip_offset * link_scale[dof];

    return RealWorldEmulator(std::move(real), screen, std::move(gain),
                             std::move(offset), cfg.overshoot_gain,
                             cfg.noise_std, mix_seed(cfg.rng_seed, 2));
}

struct ContactSearchResult {
    double z_contact; // commanded simulator z at first contact
    ScreenPoint contact;
};

// Walk the commanded z down in fixed steps until the emulator reports
// contact. IK runs on the *nominal* chain (this is a calibration-side probe);
// each probe uses the standard home-then-touch cycle.
inline ContactSearchResult lower_until_contact(
    RealWorldEmulator& emu, const KinematicChain& sim_chain, double x,
    double y, double z_start, double z_step, int duration,
    double max_drop = 0.08) {
    if (!(z_step > 0.0))
        throw ContractError("lower_until_contact: z_step must be positive");
    if (!(max_drop > 0.0))
        throw ContractError("lower_until_contact: max_drop must be positive");
    JointVector seed = sim_chain.home_posture;
    for (double z = z_start; z >= z_start - max_drop; z -= z_step) {
        const JointVector q = solve_ik(sim_chain, {x, y, z}, seed, IkParams{});
        const TouchResult touch = emu.touch_from_home(q, duration);
        if (touch.contact) return {z, *touch.contact};
        seed = q;
    }
    throw NoContact("no contact above the floor bound at (" +
                    std::to_string(x) + ", " + std::to_string(y) + ")");
}

} // namespace hapcal
