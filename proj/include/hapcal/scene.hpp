#pragma once

#include <array>

#include "hapcal/emulator.hpp"
#include "hapcal/kinematics.hpp"
#include "hapcal/screen.hpp"

namespace hapcal {

// Everything the pipeline needs about the physical setup: the nominal arm,
// the screen placement, the reachable region, where the three edge markers
// are shown, and how the emulated hardware misbehaves.
struct Scene {
    KinematicChain chain;
    Screen screen;
    Region region;
    std::array<ScreenPoint, 3> edge_points{};
    PerturbationConfig perturbation;
    double press_depth = 0.005; // meters commanded below the predicted surface

    void validate() const {
        chain.validate();
        screen.validate();
        region.validate();
        perturbation.validate(chain.dof());
        if (press_depth < 0.0)
            throw ConfigError("press_depth must be >= 0");
        for (const ScreenPoint& p : edge_points)
            if (!screen.contains(p))
                throw ConfigError("edge point outside the screen");
    }

    RealWorldEmulator build_emulator() const {
        return build_real_world(chain, screen, perturbation);
    }
};

} // namespace hapcal
