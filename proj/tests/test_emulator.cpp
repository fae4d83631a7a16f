#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "hapcal/emulator.hpp"
#include "hapcal/scene.hpp"
#include "hapcal/serialize.hpp"

#include "fixtures.hpp"
#include "oracles.hpp"

using namespace hapcal;

namespace {

Scene default_scene() {
    return load_scene(HAPCAL_DATA_DIR "/scene_default.json");
}

Scene identity_scene() {
    return load_scene(HAPCAL_DATA_DIR "/scene_identity.json");
}

// Explicit no-op perturbation: every value pinned, nothing drawn.
PerturbationConfig pinned_identity(std::size_t dof) {
    PerturbationConfig cfg = PerturbationConfig::identity();
    cfg.joint_offset.assign(dof, 0.0);
    cfg.joint_gain.assign(dof, 1.0);
    cfg.link_scale.assign(dof + 1, 1.0);
    cfg.shoulder_joints.clear();
    return cfg;
}

JointVector random_command(const KinematicChain& chain, std::mt19937_64& gen,
                           double margin = 0.05) {
    JointVector q(chain.dof());
    for (std::size_t j = 0; j < chain.dof(); ++j) {
        std::uniform_real_distribution<double> d(
            chain.joints[j].limit_lo + margin,
            chain.joints[j].limit_hi - margin);
        q[j] = d(gen);
    }
    return q;
}

} // namespace

TEST_CASE("pixel/metric mapping", "[emulator][screen]") {
    Screen s;
    s.width = 0.54;
    s.height = 0.33;
    s.pixel_width = 1920;
    s.pixel_height = 1080;

    SECTION("origin maps to origin") {
        const ScreenPoint p = pixel_to_metric(s, 0, 0);
        CHECK(p.x == 0.0);
        CHECK(p.y == 0.0);
    }
    SECTION("far corner maps to the physical screen size") {
        const ScreenPoint p = pixel_to_metric(s, 1920, 1080);
        CHECK(p.x == Catch::Approx(0.54).margin(1e-12));
        CHECK(p.y == Catch::Approx(0.33).margin(1e-12));
    }
    SECTION("corner round trips are exact") {
        for (int px : {0, 1920})
            for (int py : {0, 1080}) {
                const auto [qx, qy] = metric_to_pixel(s, pixel_to_metric(s, px, py));
                CHECK(qx == px);
                CHECK(qy == py);
            }
    }
    SECTION("out-of-range input is rejected") {
        CHECK_THROWS_AS(pixel_to_metric(s, -1, 0), ContractError);
        CHECK_THROWS_AS(pixel_to_metric(s, 0, 1081), ContractError);
        CHECK_THROWS_AS(metric_to_pixel(s, {0.55, 0.1}), ContractError);
        CHECK_THROWS_AS(metric_to_pixel(s, {0.1, -0.01}), ContractError);
    }
}

TEST_CASE("identity perturbation is a pass-through", "[emulator]") {
    const Scene scene = identity_scene();
    RealWorldEmulator emu =
        build_real_world(scene.chain, scene.screen,
                         pinned_identity(scene.chain.dof()));

    SECTION("execute_move returns the command and FK matches nominal") {
        std::mt19937_64 gen(11);
        for (int i = 0; i < 50; ++i) {
            const JointVector q = random_command(scene.chain, gen);
            const TouchResult r = emu.touch_screen(q, 2);
            for (std::size_t j = 0; j < q.size(); ++j)
                CHECK(r.joints_readback[j] == q[j]);
            const Vec3 nominal = oracles::fk_homogeneous(scene.chain, q);
            CHECK((r.fingertip_real - nominal).norm() < 1e-12);
        }
    }

    SECTION("IK to 1 mm below the glass touches at the target") {
        const ScreenPoint c = scene.region.center();
        const Vec3 below = scene.screen.pose.apply({c.x, c.y, -0.001});
        const JointVector q =
            solve_ik(scene.chain, below, scene.chain.home_posture, IkParams{});
        const TouchResult r = emu.touch_from_home(q, 2);
        REQUIRE(r.contact.has_value());
        const double dx = r.contact->x - c.x;
        const double dy = r.contact->y - c.y;
        CHECK(std::sqrt(dx * dx + dy * dy) <= 1e-3);
    }

    SECTION("fingertip 5 cm above the glass does not touch") {
        const ScreenPoint c = scene.region.center();
        const Vec3 above = scene.screen.pose.apply({c.x, c.y, 0.05});
        const JointVector q =
            solve_ik(scene.chain, above, scene.chain.home_posture, IkParams{});
        const TouchResult r = emu.touch_from_home(q, 2);
        CHECK_FALSE(r.contact.has_value());
    }
}

TEST_CASE("offset-only perturbation shifts the FK input", "[emulator]") {
    const Scene scene = identity_scene();
    const std::size_t dof = scene.chain.dof();
    PerturbationConfig cfg = pinned_identity(dof);
    cfg.joint_offset[0] = 0.02;

    RealWorldEmulator emu = build_real_world(scene.chain, scene.screen, cfg);
    std::mt19937_64 gen(12);
    for (int i = 0; i < 20; ++i) {
        JointVector q = random_command(scene.chain, gen);
        const TouchResult r = emu.touch_screen(q, 2);
        JointVector shifted = q;
        shifted[0] += 0.02;
        for (std::size_t j = 0; j < dof; ++j)
            CHECK(r.joints_readback[j] == Catch::Approx(shifted[j]).margin(1e-15));
        const Vec3 expected = oracles::fk_homogeneous(scene.chain, shifted);
        CHECK((r.fingertip_real - expected).norm() < 1e-12);
    }
}

TEST_CASE("equal seeds give bit-identical behavior", "[emulator]") {
    const Scene scene = default_scene();
    RealWorldEmulator a = scene.build_emulator();
    RealWorldEmulator b = scene.build_emulator();

    std::mt19937_64 gen(13);
    bool saw_contact = false;
    for (int i = 0; i < 30; ++i) {
        const JointVector q = random_command(scene.chain, gen);
        const TouchResult ra = a.touch_from_home(q, 2);
        const TouchResult rb = b.touch_from_home(q, 2);
        for (std::size_t j = 0; j < q.size(); ++j)
            CHECK(ra.joints_readback[j] == rb.joints_readback[j]);
        REQUIRE(ra.contact.has_value() == rb.contact.has_value());
        if (ra.contact) {
            saw_contact = true;
            CHECK(ra.contact->x == rb.contact->x);
            CHECK(ra.contact->y == rb.contact->y);
        }
    }

    SECTION("a different seed changes the noise stream") {
        Scene other = default_scene();
        other.perturbation.rng_seed += 1;
        RealWorldEmulator c = other.build_emulator();
        const JointVector q = scene.chain.home_posture;
        const TouchResult ra = a.touch_from_home(q, 2);
        const TouchResult rc = c.touch_from_home(q, 2);
        bool any_diff = false;
        for (std::size_t j = 0; j < q.size(); ++j)
            any_diff = any_diff || ra.joints_readback[j] != rc.joints_readback[j];
        CHECK(any_diff);
    }
    (void)saw_contact;
}

TEST_CASE("overshoot scales linearly with the duration gain", "[emulator]") {
    const Scene scene = identity_scene();
    const std::size_t dof = scene.chain.dof();
    PerturbationConfig cfg = pinned_identity(dof);
    cfg.overshoot_gain = {{1, 0.08}, {2, 0.04}, {3, 0.04}};

    SECTION("single move from home: deviation is exactly kappa * travel") {
        RealWorldEmulator emu = build_real_world(scene.chain, scene.screen, cfg);
        JointVector q = scene.chain.home_posture;
        q[0] += 0.3;
        q[3] -= 0.2;
        const JointVector j_r = emu.execute_move(q, 1);
        for (std::size_t j = 0; j < dof; ++j) {
            const double travel = q[j] - scene.chain.home_posture[j];
            CHECK(j_r[j] == Catch::Approx(q[j] + 0.08 * travel).margin(1e-15));
        }
    }

    SECTION("kappa(1s) = 2 kappa(2s): mean joint deviation ratio is 2") {
        RealWorldEmulator fast = build_real_world(scene.chain, scene.screen, cfg);
        RealWorldEmulator slow = build_real_world(scene.chain, scene.screen, cfg);
        std::mt19937_64 gen(14);
        double dev1 = 0.0, dev2 = 0.0;
        for (int i = 0; i < 250; ++i) {
            // Margin 0.3 keeps q + overshoot inside the limits, so the
            // clamp never truncates the transient.
            const JointVector q = random_command(scene.chain, gen, 0.3);
            const JointVector r1 = fast.touch_from_home(q, 1).joints_readback;
            const JointVector r2 = slow.touch_from_home(q, 2).joints_readback;
            for (std::size_t j = 0; j < dof; ++j) {
                dev1 += std::fabs(r1[j] - q[j]);
                dev2 += std::fabs(r2[j] - q[j]);
            }
        }
        CHECK(dev1 / dev2 == Catch::Approx(2.0).margin(1e-9));
    }

    SECTION("unknown duration is rejected") {
        RealWorldEmulator emu = build_real_world(scene.chain, scene.screen, cfg);
        CHECK_THROWS_AS(emu.execute_move(scene.chain.home_posture, 5),
                        ContractError);
    }
}

TEST_CASE("contacts stay on screen and readbacks within limits", "[emulator]") {
    const Scene scene = default_scene();
    RealWorldEmulator emu = scene.build_emulator();
    Rng rng(15);
    for (int i = 0; i < 100; ++i) {
        const ScreenPoint target{
            rng.uniform(scene.region.x_min, scene.region.x_max),
            rng.uniform(scene.region.y_min, scene.region.y_max)};
        const Vec3 press =
            scene.screen.pose.apply({target.x, target.y, -scene.press_depth});
        JointVector q;
        try {
            q = solve_ik(scene.chain, press, scene.chain.home_posture,
                         IkParams{});
        } catch (const NoConvergence&) {
            continue;
        }
        const TouchResult r = emu.touch_from_home(q, 2);
        if (r.contact) {
            CHECK(r.contact->x >= 0.0);
            CHECK(r.contact->x <= scene.screen.width);
            CHECK(r.contact->y >= 0.0);
            CHECK(r.contact->y <= scene.screen.height);
        }
        for (std::size_t j = 0; j < q.size(); ++j) {
            CHECK(r.joints_readback[j] >= scene.chain.joints[j].limit_lo);
            CHECK(r.joints_readback[j] <= scene.chain.joints[j].limit_hi);
        }
    }
}

TEST_CASE("lower_until_contact finds the glass plane", "[emulator]") {
    const Scene scene = identity_scene();
    // Identity scene: screen pose has no rotation, so the glass sits at a
    // single simulator height.
    const double glass_z = scene.screen.pose.translation.z;
    const ScreenPoint c = scene.region.center();
    const Vec3 world = scene.screen.to_world(c);

    SECTION("contact height is within one step of the plane") {
        RealWorldEmulator emu =
            build_real_world(scene.chain, scene.screen,
                             pinned_identity(scene.chain.dof()));
        const ContactSearchResult res = lower_until_contact(
            emu, scene.chain, world.x, world.y, glass_z + 0.02, 1e-3, 2);
        CHECK(std::fabs(res.z_contact - glass_z) <= 1e-3 + 1e-3);
    }

    SECTION("halving the step moves the answer by at most the old step") {
        RealWorldEmulator a =
            build_real_world(scene.chain, scene.screen,
                             pinned_identity(scene.chain.dof()));
        RealWorldEmulator b =
            build_real_world(scene.chain, scene.screen,
                             pinned_identity(scene.chain.dof()));
        const double coarse =
            lower_until_contact(a, scene.chain, world.x, world.y,
                                glass_z + 0.02, 1e-3, 2)
                .z_contact;
        const double fine =
            lower_until_contact(b, scene.chain, world.x, world.y,
                                glass_z + 0.02, 5e-4, 2)
                .z_contact;
        CHECK(std::fabs(coarse - fine) <= 1e-3);
    }

    SECTION("missing the screen raises NoContact") {
        RealWorldEmulator emu =
            build_real_world(scene.chain, scene.screen,
                             pinned_identity(scene.chain.dof()));
        // 3 cm past the screen edge: the plane crossing happens off-screen.
        const Vec3 off = scene.screen.pose.apply({-0.03, c.y, 0.0});
        CHECK_THROWS_AS(lower_until_contact(emu, scene.chain, off.x, off.y,
                                            glass_z + 0.02, 1e-3, 2, 0.03),
                        NoContact);
    }

    SECTION("step parameters are validated") {
        RealWorldEmulator emu =
            build_real_world(scene.chain, scene.screen,
                             pinned_identity(scene.chain.dof()));
        CHECK_THROWS_AS(lower_until_contact(emu, scene.chain, world.x, world.y,
                                            glass_z + 0.02, 0.0, 2),
                        ContractError);
    }
}

TEST_CASE("perturbation config is validated", "[emulator]") {
    const Scene scene = identity_scene();
    const std::size_t dof = scene.chain.dof();

    PerturbationConfig bad_gain = pinned_identity(dof);
    bad_gain.joint_gain[2] = 1.5;
    CHECK_THROWS_AS(build_real_world(scene.chain, scene.screen, bad_gain),
                    ConfigError);

    PerturbationConfig bad_size = pinned_identity(dof);
    bad_size.joint_offset.push_back(0.0);
    CHECK_THROWS_AS(build_real_world(scene.chain, scene.screen, bad_size),
                    ConfigError);

    PerturbationConfig bad_noise = pinned_identity(dof);
    bad_noise.noise_std = -0.1;
    CHECK_THROWS_AS(build_real_world(scene.chain, scene.screen, bad_noise),
                    ConfigError);

    PerturbationConfig bad_shoulder = pinned_identity(dof);
    bad_shoulder.shoulder_joints = {dof};
    CHECK_THROWS_AS(build_real_world(scene.chain, scene.screen, bad_shoulder),
                    ConfigError);
}
