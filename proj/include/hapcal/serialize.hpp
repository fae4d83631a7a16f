#pragma once

#include <array>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "hapcal/calibration.hpp"
#include "hapcal/errors.hpp"
#include "hapcal/kinematics.hpp"
#include "hapcal/mlp.hpp"
#include "hapcal/pipeline.hpp"
#include "hapcal/scene.hpp"

namespace hapcal {

using json = nlohmann::json;

// Shortest decimal form that round-trips the exact double.
inline std::string fmt(double v) {
    std::array<char, 32> buf;
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

inline double parse_double(std::string_view s, const char* what) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw ConfigError(std::string(what) + ": bad number '" +
                          std::string(s) + "'");
    return v;
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw MissingArtifact("missing file: " + path.string());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

inline void write_text(const std::filesystem::path& path,
                       const std::string& content) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw ConfigError("cannot write file: " + path.string());
    out << content;
    if (!out)
        throw ConfigError("write failed: " + path.string());
}

inline json parse_json(const std::filesystem::path& path) {
    const std::string text = read_text(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

namespace detail {

inline Vec3 vec3_from(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 3)
        throw ConfigError(std::string(what) + ": expected a 3-array");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline json vec3_to(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

// Rotations persist as roll/pitch/yaw; recovered angles are canonical, not
// the originals, so store-load-store is stable after one round trip.
inline std::array<double, 3> rpy_of(const Mat3& m) {
    const double pitch = std::asin(-std::clamp(m(2, 0), -1.0, 1.0));
    double roll, yaw;
    if (std::fabs(m(2, 0)) < 1.0 - 1e-12) {
        roll = std::atan2(m(2, 1), m(2, 2));
        yaw = std::atan2(m(1, 0), m(0, 0));
    } else { // gimbal lock: fold everything into roll
        roll = std::atan2(-m(1, 2), m(1, 1));
        yaw = 0.0;
    }
    return {roll, pitch, yaw};
}

inline json pose_to(const RigidTransform& t) {
    const auto rpy = rpy_of(t.rotation);
    return {{"translation", vec3_to(t.translation)},
            {"rotation_rpy", json::array({rpy[0], rpy[1], rpy[2]})}};
}

inline RigidTransform pose_from(const json& j, const char* what) {
    RigidTransform t;
    t.translation = vec3_from(j.at("translation"), what);
    const Vec3 rpy = vec3_from(j.at("rotation_rpy"), what);
    t.rotation = Mat3::from_rpy(rpy.x, rpy.y, rpy.z);
    return t;
}

} // namespace detail

// ---- kinematic chain --------------------------------------------------

inline json chain_to_json(const KinematicChain& chain) {
    json joints = json::array();
    for (const JointSpec& js : chain.joints) {
        const auto rpy = detail::rpy_of(js.origin_rotation);
        joints.push_back({{"name", js.name},
                          {"axis", detail::vec3_to(js.axis)},
                          {"translation", detail::vec3_to(js.origin_translation)},
                          {"rotation_rpy", json::array({rpy[0], rpy[1], rpy[2]})},
                          {"limits", json::array({js.limit_lo, js.limit_hi})}});
    }
    return {{"joints", joints},
            {"base_pose", detail::pose_to(chain.base_pose)},
            {"fingertip_offset", detail::vec3_to(chain.fingertip_offset)},
            {"home_posture", chain.home_posture}};
}

inline KinematicChain chain_from_json(const json& j) {
    KinematicChain chain;
    try {
        for (const json& jj : j.at("joints")) {
            JointSpec js;
            js.name = jj.value("name", "");
            js.axis = detail::vec3_from(jj.at("axis"), "joint axis");
            js.origin_translation =
                detail::vec3_from(jj.at("translation"), "joint translation");
            const Vec3 rpy =
                detail::vec3_from(jj.at("rotation_rpy"), "joint rotation");
            js.origin_rotation = Mat3::from_rpy(rpy.x, rpy.y, rpy.z);
            js.limit_lo = jj.at("limits").at(0).get<double>();
            js.limit_hi = jj.at("limits").at(1).get<double>();
            chain.joints.push_back(std::move(js));
        }
        chain.base_pose = detail::pose_from(j.at("base_pose"), "base_pose");
        chain.fingertip_offset =
            detail::vec3_from(j.at("fingertip_offset"), "fingertip_offset");
        chain.home_posture = j.at("home_posture").get<JointVector>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("chain file: ") + e.what());
    }
    chain.validate();
    return chain;
}

inline KinematicChain load_chain(const std::filesystem::path& path) {
    return chain_from_json(parse_json(path));
}

inline void save_chain(const KinematicChain& chain,
                       const std::filesystem::path& path) {
    write_text(path, chain_to_json(chain).dump(2) + "\n");
}

// ---- scene --------------------------------------------------------------

inline json scene_to_json(const Scene& scene, const std::string& chain_file) {
    json pert = {{"offset_std", scene.perturbation.offset_std},
                 {"gain_std", scene.perturbation.gain_std},
                 {"link_scale_std", scene.perturbation.link_scale_std},
                 {"shoulder_joints", scene.perturbation.shoulder_joints},
                 {"shoulder_multiplier", scene.perturbation.shoulder_multiplier},
                 {"noise_std", scene.perturbation.noise_std},
                 {"rng_seed", scene.perturbation.rng_seed}};
    json overshoot = json::object();
    for (const auto& [d, k] : scene.perturbation.overshoot_gain)
        overshoot[std::to_string(d)] = k;
    pert["overshoot_gain"] = overshoot;
    if (!scene.perturbation.joint_offset.empty())
        pert["joint_offset"] = scene.perturbation.joint_offset;
    if (!scene.perturbation.joint_gain.empty())
        pert["joint_gain"] = scene.perturbation.joint_gain;
    if (!scene.perturbation.link_scale.empty())
        pert["link_scale"] = scene.perturbation.link_scale;

    json edges = json::array();
    for (const ScreenPoint& p : scene.edge_points)
        edges.push_back(json::array({p.x, p.y}));

    return {{"chain_file", chain_file},
            {"screen",
             {{"width", scene.screen.width},
              {"height", scene.screen.height},
              {"pixel_width", scene.screen.pixel_width},
              {"pixel_height", scene.screen.pixel_height},
              {"pose", detail::pose_to(scene.screen.pose)}}},
            {"region",
             {{"x", json::array({scene.region.x_min, scene.region.x_max})},
              {"y", json::array({scene.region.y_min, scene.region.y_max})}}},
            {"edge_points", edges},
            {"perturbation", pert},
            {"press_depth", scene.press_depth}};
}

inline Scene scene_from_json(const json& j,
                             const std::filesystem::path& scene_dir) {
    Scene scene;
    try {
        std::filesystem::path chain_file =
            j.at("chain_file").get<std::string>();
        if (chain_file.is_relative()) chain_file = scene_dir / chain_file;
        scene.chain = load_chain(chain_file);

        const json& js = j.at("screen");
        scene.screen.width = js.at("width").get<double>();
        scene.screen.height = js.at("height").get<double>();
        scene.screen.pixel_width = js.at("pixel_width").get<int>();
        scene.screen.pixel_height = js.at("pixel_height").get<int>();
        scene.screen.pose = detail::pose_from(js.at("pose"), "screen pose");

        const json& jr = j.at("region");
        scene.region = {jr.at("x").at(0).get<double>(),
                        jr.at("y").at(0).get<double>(),
                        jr.at("x").at(1).get<double>(),
                        jr.at("y").at(1).get<double>()};

        const json& je = j.at("edge_points");
        if (!je.is_array() || je.size() != 3)
            throw ConfigError("scene needs exactly 3 edge points");
        for (std::size_t i = 0; i < 3; ++i)
            scene.edge_points[i] = {je[i].at(0).get<double>(),
                                    je[i].at(1).get<double>()};

        const json& jp = j.at("perturbation");
        PerturbationConfig& p = scene.perturbation;
        p.offset_std = jp.value("offset_std", p.offset_std);
        p.gain_std = jp.value("gain_std", p.gain_std);
        p.link_scale_std = jp.value("link_scale_std", p.link_scale_std);
        if (jp.contains("shoulder_joints"))
            p.shoulder_joints =
                jp.at("shoulder_joints").get<std::vector<std::size_t>>();
        p.shoulder_multiplier =
            jp.value("shoulder_multiplier", p.shoulder_multiplier);
        p.noise_std = jp.value("noise_std", p.noise_std);
        p.rng_seed = jp.value("rng_seed", p.rng_seed);
        if (jp.contains("overshoot_gain")) {
            p.overshoot_gain.clear();
            for (const auto& [key, value] : jp.at("overshoot_gain").items())
                p.overshoot_gain[std::stoi(key)] = value.get<double>();
        }
        if (jp.contains("joint_offset"))
            p.joint_offset = jp.at("joint_offset").get<std::vector<double>>();
        if (jp.contains("joint_gain"))
            p.joint_gain = jp.at("joint_gain").get<std::vector<double>>();
        if (jp.contains("link_scale"))
            p.link_scale = jp.at("link_scale").get<std::vector<double>>();

        scene.press_depth = j.value("press_depth", scene.press_depth);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("scene file: ") + e.what());
    }
    scene.validate();
    return scene;
}

inline Scene load_scene(const std::filesystem::path& path) {
    return scene_from_json(parse_json(path), path.parent_path());
}

// ---- screen map -----------------------------------------------------------

inline void save_screen_map(const AffineScreenMap& map,
                            const std::filesystem::path& path) {
    const json j = {{"linear", map.linear},
                    {"offset", map.offset},
                    {"plane", map.plane}};
    write_text(path, j.dump(2) + "\n");
}

inline AffineScreenMap load_screen_map(const std::filesystem::path& path) {
    const json j = parse_json(path);
    AffineScreenMap map;
    try {
        map.linear = j.at("linear").get<std::array<double, 4>>();
        map.offset = j.at("offset").get<std::array<double, 2>>();
        map.plane = j.at("plane").get<std::array<double, 3>>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("screen map file: ") + e.what());
    }
    map.validate();
    return map;
}

// ---- height grid ------------------------------------------------------

inline void save_height_grid(const HeightGrid& grid,
                             const std::filesystem::path& path) {
    std::string out = "ix,iy,x,y,z\n";
    for (std::size_t iy = 0; iy < grid.ny(); ++iy)
        for (std::size_t ix = 0; ix < grid.nx(); ++ix)
            out += std::to_string(ix) + "," + std::to_string(iy) + "," +
                   fmt(grid.xs[ix]) + "," + fmt(grid.ys[iy]) + "," +
                   fmt(grid.z_at(ix, iy)) + "\n";
    write_text(path, out);
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c != '\r') {
            field.push_back(c);
        }
    }
    fields.push_back(std::move(field));
    return fields;
}

inline std::vector<std::vector<std::string>> read_csv(
    const std::filesystem::path& path, std::size_t min_fields,
    const char* what) {
    std::istringstream in(read_text(path));
    std::string line;
    if (!std::getline(in, line))
        throw ConfigError(std::string(what) + ": empty file " + path.string());
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() < min_fields)
            throw ConfigError(std::string(what) + ": short row in " +
                              path.string());
        rows.push_back(std::move(fields));
    }
    return rows;
}

} // namespace detail

inline HeightGrid load_height_grid(const std::filesystem::path& path) {
    const auto rows = detail::read_csv(path, 5, "height grid");
    std::size_t nx = 0, ny = 0;
    for (const auto& r : rows) {
        nx = std::max(nx, static_cast<std::size_t>(std::stoul(r[0])) + 1);
        ny = std::max(ny, static_cast<std::size_t>(std::stoul(r[1])) + 1);
    }
    if (rows.size() != nx * ny)
        throw ConfigError("height grid: missing nodes in " + path.string());
    HeightGrid grid;
    grid.xs.assign(nx, 0.0);
    grid.ys.assign(ny, 0.0);
    grid.z.assign(nx * ny, 0.0);
    for (const auto& r : rows) {
        const std::size_t ix = std::stoul(r[0]);
        const std::size_t iy = std::stoul(r[1]);
        grid.xs[ix] = parse_double(r[2], "height grid x");
        grid.ys[iy] = parse_double(r[3], "height grid y");
        grid.z_at(ix, iy) = parse_double(r[4], "height grid z");
    }
    grid.validate();
    return grid;
}

// ---- dataset ---------------------------------------------------------

inline void save_dataset(const std::vector<CalibrationSample>& samples,
                         std::size_t dof, const std::filesystem::path& path) {
    std::string out = "model,duration_s,target_x,target_y,cmd_x,cmd_y,cmd_z";
    for (std::size_t j = 0; j < dof; ++j)
        out += ",j_s_" + std::to_string(j);
    out += ",contact,hit_x,hit_y";
    for (std::size_t j = 0; j < dof; ++j)
        out += ",j_r_" + std::to_string(j);
    out += "\n";
    for (const CalibrationSample& s : samples) {
        out += std::string(model_name(s.model)) + "," +
               std::to_string(s.duration) + "," + fmt(s.target_screen.x) +
               "," + fmt(s.target_screen.y) + "," + fmt(s.commanded_sim.x) +
               "," + fmt(s.commanded_sim.y) + "," + fmt(s.commanded_sim.z);
        for (std::size_t j = 0; j < dof; ++j)
            out += "," + fmt(s.commanded_joints.at(j));
        if (s.contact_screen)
            out += ",1," + fmt(s.contact_screen->x) + "," +
                   fmt(s.contact_screen->y);
        else
            out += ",0,,";
        for (std::size_t j = 0; j < dof; ++j)
            out += "," + fmt(s.joints_readback.at(j));
        out += "\n";
    }
    write_text(path, out);
}

inline std::vector<CalibrationSample> load_dataset(
    const std::filesystem::path& path, std::size_t dof) {
    const auto rows = detail::read_csv(path, 10 + 2 * dof, "dataset");
    std::vector<CalibrationSample> samples;
    for (const auto& r : rows) {
        CalibrationSample s;
        if (r[0] == "M1")
            s.model = ModelTag::M1;
        else if (r[0] == "M2")
            s.model = ModelTag::M2;
        else if (r[0] == "M3")
            s.model = ModelTag::M3;
        else
            throw ConfigError("dataset: unknown model tag '" + r[0] + "'");
        s.duration = std::stoi(r[1]);
        s.target_screen = {parse_double(r[2], "target_x"),
                           parse_double(r[3], "target_y")};
        s.commanded_sim = {parse_double(r[4], "cmd_x"),
                           parse_double(r[5], "cmd_y"),
                           parse_double(r[6], "cmd_z")};
        std::size_t col = 7;
        for (std::size_t j = 0; j < dof; ++j)
            s.commanded_joints.push_back(parse_double(r[col++], "j_s"));
        const bool contact = r[col++] == "1";
        if (contact) {
            s.contact_screen = ScreenPoint{parse_double(r[col], "hit_x"),
                                           parse_double(r[col + 1], "hit_y")};
        }
        col += 2;
        for (std::size_t j = 0; j < dof; ++j)
            s.joints_readback.push_back(parse_double(r[col++], "j_r"));
        samples.push_back(std::move(s));
    }
    return samples;
}

// ---- trained models ----------------------------------------------------

struct TrainedModel {
    Mlp net;
    Normalizer norm;
    std::uint64_t seed = 0;
    int epochs = 0;
    double final_loss = 0.0;
};

inline void save_model(const TrainedModel& model,
                       const std::filesystem::path& path) {
    const json j = {{"layer_sizes", model.net.layer_sizes},
                    {"weights", model.net.weights},
                    {"biases", model.net.biases},
                    {"normalizer",
                     {{"in_lo", model.norm.in_lo},
                      {"in_hi", model.norm.in_hi},
                      {"out_lo", model.norm.out_lo},
                      {"out_hi", model.norm.out_hi}}},
                    {"training",
                     {{"seed", model.seed},
                      {"epochs", model.epochs},
                      {"final_loss", model.final_loss}}}};
    write_text(path, j.dump(2) + "\n");
}

inline TrainedModel load_model(const std::filesystem::path& path) {
    const json j = parse_json(path);
    TrainedModel model;
    try {
        model.net.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
        model.net.weights =
            j.at("weights").get<std::vector<std::vector<double>>>();
        model.net.biases =
            j.at("biases").get<std::vector<std::vector<double>>>();
        const json& n = j.at("normalizer");
        model.norm.in_lo = n.at("in_lo").get<std::vector<double>>();
        model.norm.in_hi = n.at("in_hi").get<std::vector<double>>();
        model.norm.out_lo = n.at("out_lo").get<std::vector<double>>();
        model.norm.out_hi = n.at("out_hi").get<std::vector<double>>();
        const json& t = j.at("training");
        model.seed = t.at("seed").get<std::uint64_t>();
        model.epochs = t.at("epochs").get<int>();
        model.final_loss = t.at("final_loss").get<double>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("model file: ") + e.what());
    }
    model.net.validate();
    return model;
}

// ---- deviation report ----------------------------------------------------

namespace detail {

inline json stats_to(const DistStats& s) {
    return {{"n", s.n},
            {"mean_cm", s.mean},
            {"std_cm", s.stddev},
            {"median_cm", s.median},
            {"max_cm", s.max}};
}

inline DistStats stats_from(const json& j) {
    DistStats s;
    s.n = j.at("n").get<std::size_t>();
    s.mean = j.at("mean_cm").get<double>();
    s.stddev = j.at("std_cm").get<double>();
    s.median = j.at("median_cm").get<double>();
    s.max = j.at("max_cm").get<double>();
    return s;
}

} // namespace detail

inline void save_report(const DeviationReport& report,
                        const std::filesystem::path& path) {
    json quadrants = json::object();
    const char* names[4] = {"Q1", "Q2", "Q3", "Q4"};
    for (std::size_t q = 0; q < 4; ++q)
        quadrants[names[q]] = detail::stats_to(report.quadrants[q]);
    const json j = {{"model", model_name(report.model)},
                    {"duration_s", report.duration},
                    {"overall", detail::stats_to(report.overall)},
                    {"quadrants", quadrants},
                    {"joint_mean_deg", report.joint_mean_deg},
                    {"joint_median_deg", report.joint_median_deg},
                    {"miss_count", report.miss_count},
                    {"sample_count", report.sample_count}};
    write_text(path, j.dump(2) + "\n");
}

inline DeviationReport load_report(const std::filesystem::path& path) {
    const json j = parse_json(path);
    DeviationReport report;
    try {
        const std::string m = j.at("model").get<std::string>();
        report.model = m == "M1"   ? ModelTag::M1
                       : m == "M2" ? ModelTag::M2
                                   : ModelTag::M3;
        report.duration = j.at("duration_s").get<int>();
        report.overall = detail::stats_from(j.at("overall"));
        const char* names[4] = {"Q1", "Q2", "Q3", "Q4"};
        for (std::size_t q = 0; q < 4; ++q)
            report.quadrants[q] =
                detail::stats_from(j.at("quadrants").at(names[q]));
        report.joint_mean_deg =
            j.at("joint_mean_deg").get<std::vector<double>>();
        report.joint_median_deg =
            j.at("joint_median_deg").get<std::vector<double>>();
        report.miss_count = j.at("miss_count").get<std::size_t>();
        report.sample_count = j.at("sample_count").get<std::size_t>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("report file: ") + e.what());
    }
    return report;
}

} // namespace hapcal
