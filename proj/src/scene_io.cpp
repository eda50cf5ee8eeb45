#include "uamap/scene_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string_view>

#include "line_reader.hpp"

namespace uamap {
namespace {

using detail::LineReader;

void append_number(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

void append_point(std::string& out, Vec2 p) {
  append_number(out, p.x);
  out += ' ';
  append_number(out, p.y);
  out += '\n';
}

Vec2 read_point(LineReader& r, const char* what) {
  r.require_line(what);
  Vec2 p;
  p.x = r.number(what);
  p.y = r.number(what);
  r.end_of_line();
  return p;
}

}  // namespace

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string emit_scene(const Scene& scene,
                       std::span<const Observation> observations) {
  std::string out;
  out.reserve(4096);
  out += "uamap-scene v1";
  out += "\nseed ";
  out += std::to_string(scene.seed);
  out += "\nego ";
  append_number(out, scene.ego_pose.position.x);
  out += ' ';
  append_number(out, scene.ego_pose.position.y);
  out += ' ';
  append_number(out, scene.ego_pose.heading);
  out += "\nelements ";
  out += std::to_string(scene.elements.size());
  out += '\n';
  for (const MapElement& e : scene.elements) {
    out += "element ";
    out += std::to_string(e.id);
    out += ' ';
    out += class_name(e.cls);
    out += ' ';
    out += std::to_string(e.points.size());
    out += '\n';
    for (const Vec2& p : e.points) append_point(out, p);
  }
  out += "agents ";
  out += std::to_string(scene.agents.size());
  out += '\n';
  for (const Agent& a : scene.agents) {
    out += "agent ";
    out += std::to_string(a.history.agent_id);
    out += '\n';
    for (const Vec2& p : a.history.samples) append_point(out, p);
    for (const Vec2& p : a.future.samples) append_point(out, p);
  }
  out += "observations ";
  out += std::to_string(observations.size());
  out += '\n';
  for (const Observation& o : observations) {
    out += "obs ";
    out += std::to_string(o.element_id);
    out += ' ';
    out += std::to_string(o.vertex_index);
    out += ' ';
    out += class_name(o.true_class);
    out += ' ';
    out += class_name(o.observed_class);
    for (const double v :
         {o.true_pos.x, o.true_pos.y, o.noisy_pos.x, o.noisy_pos.y}) {
      out += ' ';
      append_number(out, v);
    }
    for (const double v : o.context) {
      out += ' ';
      append_number(out, v);
    }
    out += '\n';
  }
  return out;
}

SceneDocument parse_scene(const std::string& text) {
  LineReader r(text);
  r.require_line("header");
  r.expect_keyword("uamap-scene");
  r.expect_keyword("v1");
  r.end_of_line();

  SceneDocument doc;

  r.require_line("seed");
  r.expect_keyword("seed");
  doc.scene.seed = r.unsigned_integer("seed");
  r.end_of_line();

  r.require_line("ego");
  r.expect_keyword("ego");
  doc.scene.ego_pose.position.x = r.number("ego x");
  doc.scene.ego_pose.position.y = r.number("ego y");
  doc.scene.ego_pose.heading = r.number("ego heading");
  r.end_of_line();

  r.require_line("elements");
  r.expect_keyword("elements");
  const long long n_elements = r.integer("element count");
  r.end_of_line();
  if (n_elements < 0) throw ParseError(r.line_no(), "negative element count");
  for (long long i = 0; i < n_elements; ++i) {
    r.require_line("element");
    r.expect_keyword("element");
    MapElement e;
    e.id = static_cast<int>(r.integer("element id"));
    e.cls = r.class_token("element class");
    const long long n_points = r.integer("vertex count");
    r.end_of_line();
    if (n_points < 0) throw ParseError(r.line_no(), "negative vertex count");
    e.points.reserve(static_cast<std::size_t>(n_points));
    for (long long k = 0; k < n_points; ++k) {
      e.points.push_back(read_point(r, "vertex"));
    }
    doc.scene.elements.push_back(std::move(e));
  }

  r.require_line("agents");
  r.expect_keyword("agents");
  const long long n_agents = r.integer("agent count");
  r.end_of_line();
  if (n_agents < 0) throw ParseError(r.line_no(), "negative agent count");
  for (long long i = 0; i < n_agents; ++i) {
    r.require_line("agent");
    r.expect_keyword("agent");
    Agent a;
    const int id = static_cast<int>(r.integer("agent id"));
    a.history.agent_id = id;
    a.future.agent_id = id;
    r.end_of_line();
    for (int k = 0; k < kHistorySteps; ++k) {
      a.history.samples.push_back(read_point(r, "history point"));
    }
    for (int k = 0; k < kFutureSteps; ++k) {
      a.future.samples.push_back(read_point(r, "future point"));
    }
    doc.scene.agents.push_back(std::move(a));
  }

  r.require_line("observations");
  r.expect_keyword("observations");
  const long long n_obs = r.integer("observation count");
  r.end_of_line();
  if (n_obs < 0) throw ParseError(r.line_no(), "negative observation count");
  for (long long i = 0; i < n_obs; ++i) {
    r.require_line("obs");
    r.expect_keyword("obs");
    Observation o;
    o.element_id = static_cast<int>(r.integer("observation element id"));
    o.vertex_index = static_cast<int>(r.integer("observation vertex index"));
    o.true_class = r.class_token("true class");
    o.observed_class = r.class_token("observed class");
    o.true_pos.x = r.number("true x");
    o.true_pos.y = r.number("true y");
    o.noisy_pos.x = r.number("noisy x");
    o.noisy_pos.y = r.number("noisy y");
    for (double& c : o.context) c = r.number("context entry");
    r.end_of_line();
    doc.observations.push_back(o);
  }

  if (r.next_line()) {
    throw ParseError(r.line_no(), "unexpected content after document end");
  }
  return doc;
}

void write_scene_file(const std::filesystem::path& path, const Scene& scene,
                      std::span<const Observation> observations) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open for writing: " + path.string());
  }
  out << emit_scene(scene, observations);
  if (!out) {
    throw std::runtime_error("write failed: " + path.string());
  }
}

SceneDocument read_scene_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open for reading: " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scene(buf.str());
}

}  // namespace uamap
