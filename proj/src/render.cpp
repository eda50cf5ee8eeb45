#include "uamap/render.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "uamap/geometry.hpp"
#include "uamap/scene_io.hpp"

namespace uamap {
namespace {

constexpr double kPixelsPerMeter = 15.0;
constexpr double kWidth = 2.0 * kPerceptionHalfX * kPixelsPerMeter;   // 900
constexpr double kHeight = 2.0 * kPerceptionHalfY * kPixelsPerMeter;  // 450
constexpr double kEllipseScale = 12.0;  // px per sqrt(nat)
constexpr double kBandOpacityScale = 0.8;
constexpr double kBandWidth = 7.0;

// World (meters, y up) to SVG pixels (y down).
double px(double x) { return (x + kPerceptionHalfX) * kPixelsPerMeter; }
double py(double y) { return (kPerceptionHalfY - y) * kPixelsPerMeter; }

const char* class_color(ElementClass cls) {
  switch (cls) {
    case ElementClass::kBoundary:
      return "green";
    case ElementClass::kDivider:
      return "orange";
    case ElementClass::kPedCrossing:
      return "blue";
    case ElementClass::kCenterline:
      return "gray";
  }
  throw std::invalid_argument("invalid element class");
}

void append_polyline(std::string& out, std::span<const Vec2> pts,
                     const std::string& attrs) {
  out += "<polyline fill=\"none\" ";
  out += attrs;
  out += " points=\"";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i > 0) out += ' ';
    out += format_number(px(pts[i].x));
    out += ',';
    out += format_number(py(pts[i].y));
  }
  out += "\"/>\n";
}

}  // namespace

std::string render_svg(const Scene& scene,
                       std::span<const UncertainMapElement> uncertain_elements,
                       std::span<const PredictionSet> predictions) {
  if (!predictions.empty() && predictions.size() != scene.agents.size()) {
    throw std::invalid_argument(
        "prediction count does not match scene agent count");
  }
  std::set<int> scene_ids;
  for (const MapElement& e : scene.elements) scene_ids.insert(e.id);
  for (const UncertainMapElement& e : uncertain_elements) {
    if (scene_ids.find(e.id) == scene_ids.end()) {
      throw std::invalid_argument("uncertain element id " +
                                  std::to_string(e.id) +
                                  " not present in scene");
    }
  }

  std::string out;
  out.reserve(1 << 16);
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"";
  out += format_number(kWidth);
  out += "\" height=\"";
  out += format_number(kHeight);
  out += "\" viewBox=\"0 0 ";
  out += format_number(kWidth);
  out += ' ';
  out += format_number(kHeight);
  out += "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // Ground-truth map, color-coded by class.
  for (const MapElement& e : scene.elements) {
    append_polyline(out, e.points,
                    std::string("stroke=\"") + class_color(e.cls) +
                        "\" stroke-width=\"2\"");
  }

  // Semantic bands under the ellipses: opacity tracks max delta_c component.
  for (const UncertainMapElement& e : uncertain_elements) {
    double worst = 0.0;
    for (const double v : e.mean_delta_c) worst = std::max(worst, v);
    if (worst <= 0.0) continue;
    std::vector<Vec2> pts;
    pts.reserve(e.vertices.size());
    for (const UncertainVertex& v : e.vertices) {
      pts.push_back(denormalize_from_bev(v.position));
    }
    if (pts.size() < 2) continue;
    std::string attrs = "stroke=\"purple\" stroke-width=\"";
    attrs += format_number(kBandWidth);
    attrs += "\" stroke-opacity=\"";
    attrs += format_number(std::min(1.0, worst * kBandOpacityScale));
    attrs += "\"";
    append_polyline(out, pts, attrs);
  }

  // Positional uncertainty ellipses, radius proportional to sqrt(beta).
  for (const UncertainMapElement& e : uncertain_elements) {
    for (const UncertainVertex& v : e.vertices) {
      if (v.beta <= 0.0) continue;
      const Vec2 p = denormalize_from_bev(v.position);
      const double r = kEllipseScale * std::sqrt(v.beta);
      out += "<ellipse cx=\"";
      out += format_number(px(p.x));
      out += "\" cy=\"";
      out += format_number(py(p.y));
      out += "\" rx=\"";
      out += format_number(r);
      out += "\" ry=\"";
      out += format_number(r);
      out += "\" fill=\"orangered\" fill-opacity=\"0.15\" "
             "stroke=\"orangered\" stroke-width=\"1\"/>\n";
    }
  }

  // Agents: observed history, ground-truth future, and predicted modes.
  for (std::size_t i = 0; i < scene.agents.size(); ++i) {
    const Agent& a = scene.agents[i];
    append_polyline(out, a.history.samples,
                    "stroke=\"black\" stroke-width=\"1.5\"");
    append_polyline(out, a.future.samples,
                    "stroke=\"darkgreen\" stroke-width=\"1.5\" "
                    "stroke-dasharray=\"6,4\"");
    if (predictions.empty()) continue;
    const PredictionSet& pred = predictions[i];
    for (int m = 0; m < kNumModes; ++m) {
      std::string attrs = "stroke=\"teal\" stroke-width=\"1.5\" "
                          "stroke-opacity=\"";
      attrs += format_number(0.25 + 0.75 * pred.scores[m]);
      attrs += "\"";
      append_polyline(out, pred.modes[m], attrs);
    }
  }

  // Ego marker with heading tick.
  {
    const Vec2 e = scene.ego_pose.position;
    out += "<circle cx=\"";
    out += format_number(px(e.x));
    out += "\" cy=\"";
    out += format_number(py(e.y));
    out += "\" r=\"6\" fill=\"red\"/>\n";
    const Vec2 tip{e.x + 3.0 * std::cos(scene.ego_pose.heading),
                   e.y + 3.0 * std::sin(scene.ego_pose.heading)};
    out += "<line x1=\"";
    out += format_number(px(e.x));
    out += "\" y1=\"";
    out += format_number(py(e.y));
    out += "\" x2=\"";
    out += format_number(px(tip.x));
    out += "\" y2=\"";
    out += format_number(py(tip.y));
    out += "\" stroke=\"red\" stroke-width=\"2\"/>\n";
  }

  out += "</svg>\n";
  return out;
}

}  // namespace uamap
