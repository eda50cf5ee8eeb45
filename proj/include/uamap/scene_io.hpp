#ifndef UAMAP_SCENE_IO_HPP_
#define UAMAP_SCENE_IO_HPP_

#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "uamap/noise.hpp"
#include "uamap/types.hpp"

namespace uamap {

/// Canonical decimal rendering used by every text format in the toolkit:
/// printf "%.17g", which round-trips IEEE doubles exactly.
std::string format_number(double v);

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : std::runtime_error("line " + std::to_string(line) + ": " + message),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct SceneDocument {
  Scene scene;
  std::vector<Observation> observations;
};

/// Scene text format, one document per scene. Grammar (see README for the
/// full description):
///
///   uamap-scene v1
///   seed <u64>
///   ego <x> <y> <heading>
///   elements <N>
///   element <id> <class-name> <P>   followed by P "<x> <y>" lines
///   agents <M>
///   agent <id>                      followed by 20 history + 30 future lines
///   observations <K>
///   obs <element-id> <vertex-index> <true-class> <observed-class>
///       <true-x> <true-y> <noisy-x> <noisy-y> <context * 10>
///
/// Emission is canonical: parse(emit(parse(text))) is byte-identical to
/// parse(emit(text)) for any accepted input.
std::string emit_scene(const Scene& scene,
                       std::span<const Observation> observations = {});

SceneDocument parse_scene(const std::string& text);

void write_scene_file(const std::filesystem::path& path, const Scene& scene,
                      std::span<const Observation> observations = {});

SceneDocument read_scene_file(const std::filesystem::path& path);

}  // namespace uamap

#endif  // UAMAP_SCENE_IO_HPP_
