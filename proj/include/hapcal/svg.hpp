#pragma once

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "hapcal/pipeline.hpp"
#include "hapcal/screen.hpp"
#include "hapcal/serialize.hpp"

namespace hapcal {

namespace detail {

// Millimeters with fixed precision so output bytes are stable.
inline std::string mm(double meters) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", meters * 1000.0);
    return buf;
}

} // namespace detail

// Deviation scatter: the screen rectangle to scale, red target markers, blue
// hit markers, connecting arrows, and a box marking the arm base. Screen y
// points away from the base, so it is drawn increasing upward.
inline void emit_scatter_svg(const std::vector<CalibrationSample>& samples,
                             const Screen& screen, const Vec3& base_world,
                             const std::filesystem::path& path) {
    const double H = screen.height;
    const auto px = [](double m) { return detail::mm(m); };
    const auto py = [&](double m) { return detail::mm(H - m); };

    const Vec3 base = screen.to_screen_frame(base_world);
    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"-30 -30 " +
           detail::mm(screen.width + 0.06) + " " +
           detail::mm(screen.height + 0.06 + 0.15) + "\">\n";
    svg += "<defs><marker id=\"arr\" viewBox=\"0 0 6 6\" refX=\"5\" refY=\"3\""
           " markerWidth=\"5\" markerHeight=\"5\" orient=\"auto\">"
           "<path d=\"M0,0 L6,3 L0,6 z\" fill=\"#1f77b4\"/></marker></defs>\n";
    svg += "<rect x=\"0\" y=\"0\" width=\"" + px(screen.width) +
           "\" height=\"" + detail::mm(screen.height) +
           "\" fill=\"#fdfdfd\" stroke=\"#222\" stroke-width=\"1\"/>\n";
    svg += "<rect x=\"" + detail::mm(base.x - 0.025) + "\" y=\"" +
           detail::mm(H - base.y - 0.025) +
           "\" width=\"50.000\" height=\"50.000\" fill=\"#555\"/>\n";

    for (const CalibrationSample& s : samples) {
        if (s.contact_screen) {
            svg += "<line x1=\"" + px(s.target_screen.x) + "\" y1=\"" +
                   py(s.target_screen.y) + "\" x2=\"" +
                   px(s.contact_screen->x) + "\" y2=\"" +
                   py(s.contact_screen->y) +
                   "\" stroke=\"#1f77b4\" stroke-width=\"0.8\""
                   " marker-end=\"url(#arr)\"/>\n";
        }
        svg += "<circle cx=\"" + px(s.target_screen.x) + "\" cy=\"" +
               py(s.target_screen.y) +
               "\" r=\"2.2\" fill=\"#d62728\"/>\n";
        if (s.contact_screen)
            svg += "<circle cx=\"" + px(s.contact_screen->x) + "\" cy=\"" +
                   py(s.contact_screen->y) +
                   "\" r=\"1.8\" fill=\"#1f77b4\"/>\n";
    }
    svg += "</svg>\n";
    write_text(path, svg);
}

} // namespace hapcal
