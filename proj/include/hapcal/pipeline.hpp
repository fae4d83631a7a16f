#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hapcal/calibration.hpp"
#include "hapcal/emulator.hpp"
#include "hapcal/errors.hpp"
#include "hapcal/kinematics.hpp"
#include "hapcal/mlp.hpp"
#include "hapcal/models.hpp"
#include "hapcal/rng.hpp"
#include "hapcal/screen.hpp"

namespace hapcal {

enum class ModelTag { M1, M2, M3 };

inline const char* model_name(ModelTag tag) {
    switch (tag) {
    case ModelTag::M1: return "M1";
    case ModelTag::M2: return "M2";
    default: return "M3";
    }
}

// A calibration model as the pipeline sees it: a tag plus a screen-target ->
// simulator-command predictor.
struct Model {
    ModelTag tag;
    std::function<SimPoint(const ScreenPoint&)> predict;
};

// M1/M2 command press_depth below the measured surface so noisy contacts
// stay reliable; M3's outputs were learned from such commands and already
// include the press.
inline Model make_m1(const AffineScreenMap& map, const HeightGrid& grid,
                     double press_depth) {
    return {ModelTag::M1, [map, grid, press_depth](const ScreenPoint& p) {
                SimPoint cmd = m1_predict(map, grid, p);
                cmd.z -= press_depth;
                return cmd;
            }};
}

inline Model make_m2(const Mlp& net, const HeightGrid& grid,
                     const Normalizer& norm, double press_depth) {
    return {ModelTag::M2, [net, grid, norm, press_depth](const ScreenPoint& p) {
                SimPoint cmd = m2_predict(net, grid, norm, p);
                cmd.z -= press_depth;
                return cmd;
            }};
}

inline Model make_m3(const Mlp& net, const Normalizer& norm) {
    return {ModelTag::M3,
            [net, norm](const ScreenPoint& p) { return m3_predict(net, norm, p); }};
}

struct CalibrationSample {
    ScreenPoint target_screen;
    SimPoint commanded_sim;
    JointVector commanded_joints; // J_S
    std::optional<ScreenPoint> contact_screen;
    JointVector joints_readback; // J_R
    int duration = 2;
    ModelTag model = ModelTag::M1;
};

enum class TargetKind { grid_pattern, random, random_with_edges };

inline const char* target_kind_name(TargetKind k) {
    switch (k) {
    case TargetKind::grid_pattern: return "grid_pattern";
    case TargetKind::random: return "random";
    default: return "random_with_edges";
    }
}

struct TargetSet {
    std::vector<ScreenPoint> points;
    TargetKind kind = TargetKind::random;
    std::uint64_t seed = 0;
};

namespace detail {

// Squarest factorization: the largest divisor of n not exceeding sqrt(n)
// becomes the row count (36 -> 6x6, 130 -> 13x10).
inline std::pair<std::size_t, std::size_t> lattice_shape(std::size_t n) {
    std::size_t rows = 1;
    for (std::size_t d = 1; d * d <= n; ++d)
        if (n % d == 0) rows = d;
    return {n / rows, rows};
}

} // namespace detail

inline TargetSet generate_targets(const Region& region, TargetKind kind,
                                  std::size_t n, std::uint64_t seed) {
    if (n < 1) throw ContractError("generate_targets: n must be >= 1");
    region.validate();
    TargetSet set;
    set.kind = kind;
    set.seed = seed;
    if (kind == TargetKind::grid_pattern) {
        const auto [nx, ny] = detail::lattice_shape(n);
        for (std::size_t iy = 0; iy < ny; ++iy)
            for (std::size_t ix = 0; ix < nx; ++ix) {
                const double fx =
                    nx == 1 ? 0.5 : static_cast<double>(ix) / (nx - 1);
                const double fy =
                    ny == 1 ? 0.5 : static_cast<double>(iy) / (ny - 1);
                set.points.push_back({region.x_min + fx * region.width(),
                                      region.y_min + fy * region.height()});
            }
        return set;
    }
    Region domain = region;
    if (kind == TargetKind::random) {
        const double margin = 0.02;
        domain = {region.x_min + margin, region.y_min + margin,
                  region.x_max - margin, region.y_max - margin};
        if (!(domain.x_min < domain.x_max) || !(domain.y_min < domain.y_max))
            throw ContractError("generate_targets: region too small for margin");
    }
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i)
        set.points.push_back({rng.uniform(domain.x_min, domain.x_max),
                              rng.uniform(domain.y_min, domain.y_max)});
    return set;
}

// Step 4/5 and the evaluation runs: predict a simulator command for each
// target, solve IK on the nominal chain, and execute the touch cycle. IK
// failures are kept as contactless samples so target order and count are
// preserved.
inline std::vector<CalibrationSample> collect_dataset(
    const Model& model, const KinematicChain& sim_chain, RealWorldEmulator& emu,
    const TargetSet& targets, int duration) {
    std::vector<CalibrationSample> samples;
    samples.reserve(targets.points.size());
    for (const ScreenPoint& target : targets.points) {
        CalibrationSample s;
        s.target_screen = target;
        s.duration = duration;
        s.model = model.tag;
        const SimPoint cmd = model.predict(target);
        s.commanded_sim = cmd;
        try {
            s.commanded_joints = solve_ik(sim_chain, {cmd.x, cmd.y, cmd.z},
                                          sim_chain.home_posture, IkParams{});
        } catch (const NoConvergence& e) {
            s.commanded_joints = e.best_joints;
            s.joints_readback = e.best_joints;
            samples.push_back(std::move(s));
            continue;
        }
        const TouchResult touch = emu.touch_from_home(s.commanded_joints, duration);
        s.contact_screen = touch.contact;
        s.joints_readback = touch.joints_readback;
        samples.push_back(std::move(s));
    }
    return samples;
}

// The inverse mapping used to train M2/M3: observed contact -> the simulator
// point that was commanded. Contactless samples are dropped and counted.
struct TrainingPairs {
    TrainingSet pairs; // inputs (C_R x, y); targets (C_S x, y, z)
    std::size_t dropped = 0;
};

inline TrainingPairs build_training_pairs(
    const std::vector<CalibrationSample>& samples) {
    TrainingPairs out;
    for (const CalibrationSample& s : samples) {
        if (!s.contact_screen) {
            ++out.dropped;
            continue;
        }
        out.pairs.inputs.push_back({s.contact_screen->x, s.contact_screen->y});
        out.pairs.targets.push_back(
            {s.commanded_sim.x, s.commanded_sim.y, s.commanded_sim.z});
    }
    if (out.pairs.size() < 10)
        throw InsufficientData("build_training_pairs: only " +
                               std::to_string(out.pairs.size()) +
                               " usable pairs");
    return out;
}

// M2 trains on the xy part of the pairs.
inline TrainingSet take_xy(const TrainingSet& pairs) {
    TrainingSet out;
    out.inputs = pairs.inputs;
    for (const auto& t : pairs.targets) out.targets.push_back({t[0], t[1]});
    return out;
}

enum class Quadrant { Q1 = 0, Q2 = 1, Q3 = 2, Q4 = 3 };

// Midline split of the region: Q1/Q2 on the base-near half (low y), Q1/Q3 on
// the left (low x); boundary points go to the lower-index quadrant.
inline Quadrant quadrant_of(const ScreenPoint& p, const Region& region) {
    if (!region.contains(p))
        throw ContractError("quadrant_of: point outside the region");
    const ScreenPoint c = region.center();
    const bool near = p.y <= c.y;
    const bool left = p.x <= c.x;
    if (near) return left ? Quadrant::Q1 : Quadrant::Q2;
    return left ? Quadrant::Q3 : Quadrant::Q4;
}

struct DistStats {
    std::size_t n = 0;
    double mean = 0.0;
    double stddev = 0.0;
    double median = 0.0;
    double max = 0.0;
};

namespace detail {

// Values are sorted before accumulation so the statistics are bit-identical
// under any permutation of the samples.
inline DistStats dist_stats(std::vector<double> values) {
    DistStats s;
    s.n = values.size();
    if (values.empty()) return s;
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(s.n);
    double sq = 0.0;
    for (double v : values) sq += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(sq / static_cast<double>(s.n));
    s.median = s.n % 2 == 1
                   ? values[s.n / 2]
                   : 0.5 * (values[s.n / 2 - 1] + values[s.n / 2]);
    s.max = values.back();
    return s;
}

} // namespace detail

struct DeviationReport {
    ModelTag model = ModelTag::M1;
    int duration = 2;
    DistStats overall;                  // 2D deviation, centimeters
    std::array<DistStats, 4> quadrants; // same units, split by target quadrant
    std::vector<double> joint_mean_deg;
    std::vector<double> joint_median_deg;
    std::size_t miss_count = 0;
    std::size_t sample_count = 0;
};

// Deviation statistics for already-collected samples. Misses (no contact)
// are excluded from the distance and joint statistics but counted.
inline DeviationReport summarize_deviations(
    const std::vector<CalibrationSample>& samples, const Region& region) {
    DeviationReport report;
    report.sample_count = samples.size();
    if (!samples.empty()) {
        report.model = samples.front().model;
        report.duration = samples.front().duration;
    }
    std::vector<double> all;
    std::array<std::vector<double>, 4> per_quadrant;
    std::size_t dof = 0;
    for (const CalibrationSample& s : samples)
        dof = std::max(dof, s.commanded_joints.size());
    std::vector<std::vector<double>> joint_abs(dof);

    for (const CalibrationSample& s : samples) {
        if (!s.contact_screen) {
            ++report.miss_count;
            continue;
        }
        const double dx = s.contact_screen->x - s.target_screen.x;
        const double dy = s.contact_screen->y - s.target_screen.y;
        const double dev_cm = std::sqrt(dx * dx + dy * dy) * 100.0;
        all.push_back(dev_cm);
        const auto q = quadrant_of(s.target_screen, region);
        per_quadrant[static_cast<std::size_t>(q)].push_back(dev_cm);
        for (std::size_t j = 0; j < s.commanded_joints.size(); ++j)
            joint_abs[j].push_back(
                std::fabs(s.commanded_joints[j] - s.joints_readback[j]) *
                180.0 / M_PI);
    }
    report.overall = detail::dist_stats(std::move(all));
    for (std::size_t q = 0; q < 4; ++q)
        report.quadrants[q] = detail::dist_stats(std::move(per_quadrant[q]));
    for (std::size_t j = 0; j < dof; ++j) {
        const DistStats js = detail::dist_stats(std::move(joint_abs[j]));
        report.joint_mean_deg.push_back(js.mean);
        report.joint_median_deg.push_back(js.median);
    }
    return report;
}

inline DeviationReport evaluate_model(const Model& model,
                                      const KinematicChain& sim_chain,
                                      RealWorldEmulator& emu,
                                      const TargetSet& targets, int duration,
                                      const Region& region) {
    if (targets.points.empty())
        throw ContractError("evaluate_model: no targets");
    const auto samples = collect_dataset(model, sim_chain, emu, targets, duration);
    return summarize_deviations(samples, region);
}

} // namespace hapcal
