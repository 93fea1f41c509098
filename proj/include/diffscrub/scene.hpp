#pragma once

#include "diffscrub/tensor.hpp"
#include "diffscrub/vocab.hpp"

#include <array>
#include <string>
#include <vector>

namespace diffscrub {

enum class Shape { circle, square, triangle };
enum class Size { small, large };

// Color table shared by rendering and captions. RGB in [0,1].
struct NamedColor {
    const char* name;
    float r, g, b;
};

const std::vector<NamedColor>& fg_colors();  // 6 entries
const std::vector<NamedColor>& bg_colors();  // 4 entries ("yellow" overlaps fg)

// One procedurally rendered scene: a shape on a solid background.
struct SceneSpec {
    Shape shape = Shape::circle;
    int fg = 0;  // index into fg_colors()
    int bg = 0;  // index into bg_colors()
    Size size = Size::small;

    void validate() const;  // fg color name != bg color name
    bool operator==(const SceneSpec&) const = default;
};

// All valid specs in canonical enumeration order (shape, fg, bg, size).
std::vector<SceneSpec> enumerate_scene_specs();

// Deterministic anti-aliased rendering, values in [-1,1].
Tensorf render_scene(const SceneSpec& spec, int w, int h);

// "a {size} {fg} {shape} on a {bg} background"
std::string caption_of(const SceneSpec& spec);

// Inverse of caption_of; throws SpecError on malformed captions.
SceneSpec parse_caption(const std::string& caption);

const char* shape_name(Shape s);
const char* size_name(Size s);

}  // namespace diffscrub
