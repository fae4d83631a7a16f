#pragma once

#include "hapcal/calibration.hpp"
#include "hapcal/mlp.hpp"
#include "hapcal/screen.hpp"

namespace hapcal {

// Model M2: network maps screen (x, y) to simulator (x, y); z still comes
// from the measured grid at the predicted point.
inline SimPoint m2_predict(const Mlp& net2, const HeightGrid& grid,
                           const Normalizer& norm, const ScreenPoint& target) {
    const auto out =
        norm.denormalize_output(mlp_forward(net2, norm.normalize_input({target.x, target.y})));
    if (out.size() != 2)
        throw ContractError("m2_predict: network must have 2 outputs");
    return {out[0], out[1], interp_height(grid, out[0], out[1])};
}

// Model M3: network maps screen (x, y) straight to simulator (x, y, z).
inline SimPoint m3_predict(const Mlp& net3, const Normalizer& norm,
                           const ScreenPoint& target) {
    const auto out =
        norm.denormalize_output(mlp_forward(net3, norm.normalize_input({target.x, target.y})));
    if (out.size() != 3)
        throw ContractError("m3_predict: network must have 3 outputs");
    return {out[0], out[1], out[2]};
}

} // namespace hapcal
