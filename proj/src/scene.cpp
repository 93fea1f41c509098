#include "diffscrub/scene.hpp"

#include <cmath>

namespace diffscrub {

const std::vector<NamedColor>& fg_colors() {
    static const std::vector<NamedColor> v = {
        {"red", 1.0f, 0.0f, 0.0f},   {"green", 0.0f, 0.8f, 0.0f},
        {"blue", 0.0f, 0.0f, 1.0f},  {"yellow", 1.0f, 1.0f, 0.0f},
        {"purple", 0.6f, 0.0f, 0.8f}, {"orange", 1.0f, 0.55f, 0.0f},
    };
    return v;
}

const std::vector<NamedColor>& bg_colors() {
    static const std::vector<NamedColor> v = {
        {"white", 1.0f, 1.0f, 1.0f},
        {"black", 0.0f, 0.0f, 0.0f},
        {"gray", 0.5f, 0.5f, 0.5f},
        {"yellow", 1.0f, 1.0f, 0.0f},
    };
    return v;
}

const char* shape_name(Shape s) {
    switch (s) {
        case Shape::circle: return "circle";
        case Shape::square: return "square";
        case Shape::triangle: return "triangle";
    }
    return "?";
}

const char* size_name(Size s) { return s == Size::small ? "small" : "large"; }

void SceneSpec::validate() const {
    if (fg < 0 || fg >= static_cast<int>(fg_colors().size()) || bg < 0 ||
        bg >= static_cast<int>(bg_colors().size()))
        throw SpecError("scene color index out of range");
    if (std::string(fg_colors()[static_cast<size_t>(fg)].name) ==
        bg_colors()[static_cast<size_t>(bg)].name)
        throw SpecError("scene foreground and background colors must differ");
}

std::vector<SceneSpec> enumerate_scene_specs() {
    std::vector<SceneSpec> all;
    for (int sh = 0; sh < 3; sh++)
        for (int fg = 0; fg < static_cast<int>(fg_colors().size()); fg++)
            for (int bg = 0; bg < static_cast<int>(bg_colors().size()); bg++)
                for (int sz = 0; sz < 2; sz++) {
                    SceneSpec s{static_cast<Shape>(sh), fg, bg, static_cast<Size>(sz)};
                    if (std::string(fg_colors()[static_cast<size_t>(fg)].name) ==
                        bg_colors()[static_cast<size_t>(bg)].name)
                        continue;
                    all.push_back(s);
                }
    return all;
}

namespace {

// Signed distance to the shape boundary; negative inside. Coordinates are
// pixel centers relative to the image center.
float shape_sdf(Shape shape, float x, float y, float radius) {
    switch (shape) {
        case Shape::circle:
            return std::sqrt(x * x + y * y) - radius;
        case Shape::square: {
            float dx = std::abs(x) - radius;
            float dy = std::abs(y) - radius;
            float ox = std::max(dx, 0.0f), oy = std::max(dy, 0.0f);
            return std::sqrt(ox * ox + oy * oy) + std::min(std::max(dx, dy), 0.0f);
        }
        case Shape::triangle: {
            // equilateral triangle, exact signed distance
            const float k = std::sqrt(3.0f);
            float r = radius * 1.15f;
            float px = std::abs(x) - r;
            float py = y + r / k;
            if (px + k * py > 0.0f) {
                float nx = (px - k * py) * 0.5f;
                float ny = (-k * px - py) * 0.5f;
                px = nx;
                py = ny;
            }
            px -= std::clamp(px, -2.0f * r, 0.0f);
            float len = std::sqrt(px * px + py * py);
            return py > 0.0f ? -len : len;
        }
    }
    return 0.0f;
}

}  // namespace

Tensorf render_scene(const SceneSpec& spec, int w, int h) {
    spec.validate();
    const NamedColor& fg = fg_colors()[static_cast<size_t>(spec.fg)];
    const NamedColor& bg = bg_colors()[static_cast<size_t>(spec.bg)];
    float radius = (spec.size == Size::small ? 0.19f : 0.34f) * static_cast<float>(std::min(w, h));
    float cx = (w - 1) * 0.5f, cy = (h - 1) * 0.5f;

    Tensorf img({3, h, w});
    const float fgc[3] = {fg.r, fg.g, fg.b};
    const float bgc[3] = {bg.r, bg.g, bg.b};
    for (int y = 0; y < h; y++) {
        for (int x = 0; x < w; x++) {
            float d = shape_sdf(spec.shape, x - cx, y - cy, radius);
            // 1px anti-aliasing band
            float a = std::clamp(0.5f - d, 0.0f, 1.0f);
            for (int c = 0; c < 3; c++) {
                float v = a * fgc[c] + (1.0f - a) * bgc[c];
                img[static_cast<size_t>(c) * h * w + y * w + x] = v * 2.0f - 1.0f;
            }
        }
    }
    return img;
}

std::string caption_of(const SceneSpec& spec) {
    spec.validate();
    return std::string("a ") + size_name(spec.size) + " " +
           fg_colors()[static_cast<size_t>(spec.fg)].name + " " + shape_name(spec.shape) +
           " on a " + bg_colors()[static_cast<size_t>(spec.bg)].name + " background";
}

SceneSpec parse_caption(const std::string& caption) {
    std::vector<std::string> w = split_words(caption);
    if (w.size() != 8 || w[0] != "a" || w[4] != "on" || w[5] != "a" || w[7] != "background")
        throw SpecError("caption does not match the scene template: '" + caption + "'");
    SceneSpec s;
    if (w[1] == "small") s.size = Size::small;
    else if (w[1] == "large") s.size = Size::large;
    else throw SpecError("unknown size '" + w[1] + "'");
    s.fg = -1;
    for (size_t i = 0; i < fg_colors().size(); i++)
        if (w[2] == fg_colors()[i].name) s.fg = static_cast<int>(i);
    if (s.fg < 0) throw SpecError("unknown foreground color '" + w[2] + "'");
    if (w[3] == "circle") s.shape = Shape::circle;
    else if (w[3] == "square") s.shape = Shape::square;
    else if (w[3] == "triangle") s.shape = Shape::triangle;
    else throw SpecError("unknown shape '" + w[3] + "'");
    s.bg = -1;
    for (size_t i = 0; i < bg_colors().size(); i++)
        if (w[6] == bg_colors()[i].name) s.bg = static_cast<int>(i);
    if (s.bg < 0) throw SpecError("unknown background color '" + w[6] + "'");
    s.validate();
    return s;
}

}  // namespace diffscrub
