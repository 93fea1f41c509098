// Scratch harness used during bring-up; replaced by real test suites.
#include "diffscrub/dataset.hpp"
#include "diffscrub/eval.hpp"
#include "diffscrub/png_io.hpp"

#include <cstdio>
#include <filesystem>

using namespace diffscrub;

int main() {
    auto all = enumerate_scene_specs();
    std::printf("valid specs: %zu\n", all.size());

    // caption round trip over the whole space
    for (const auto& s : all) {
        SceneSpec back = parse_caption(caption_of(s));
        if (!(back == s)) {
            std::printf("ROUNDTRIP FAIL: %s\n", caption_of(s).c_str());
            return 1;
        }
    }
    std::printf("caption round trip OK\n");

    // render one of each shape, check center color and chroma
    std::filesystem::create_directories("/tmp/scenes");
    int idx = 0;
    for (const auto& s : {SceneSpec{Shape::circle, 0, 0, Size::large},
                          SceneSpec{Shape::square, 2, 2, Size::large},
                          SceneSpec{Shape::triangle, 4, 0, Size::large},
                          SceneSpec{Shape::triangle, 1, 1, Size::small}}) {
        Tensorf img = render_scene(s, 32, 32);
        char path[64];
        std::snprintf(path, sizeof(path), "/tmp/scenes/s%d.png", idx++);
        save_png(path, img);
        // center 4x4 mean per channel
        double m[3] = {0, 0, 0};
        for (int c = 0; c < 3; c++)
            for (int y = 14; y < 18; y++)
                for (int x = 14; x < 18; x++) m[c] += img[static_cast<size_t>(c) * 1024 + y * 32 + x];
        const auto& fg = fg_colors()[static_cast<size_t>(s.fg)];
        std::printf("%-45s center=(%.2f,%.2f,%.2f) want=(%.2f,%.2f,%.2f) style_score=%.3f\n",
                    caption_of(s).c_str(), m[0] / 16, m[1] / 16, m[2] / 16, fg.r * 2 - 1,
                    fg.g * 2 - 1, fg.b * 2 - 1, detect_style(img).score);
    }

    // png round trip bit-exactness through quantization
    Rng rng(5);
    Tensorf noise = Tensorf::randn({3, 32, 32}, rng, 0.5);
    save_png("/tmp/scenes/noise.png", noise);
    Tensorf loaded = load_png("/tmp/scenes/noise.png");
    double maxerr = 0;
    for (size_t i = 0; i < noise.numel(); i++) {
        float q = dequantize_unit(quantize_unit(noise[i]));
        maxerr = std::max(maxerr, static_cast<double>(std::abs(q - loaded[i])));
    }
    std::printf("png round trip max error vs quantized: %g\n", maxerr);

    // small dataset determinism
    DatasetManifest m1 = generate_dataset(7, 50, 32, "/tmp/ds1");
    DatasetManifest m2 = generate_dataset(7, 50, 32, "/tmp/ds2");
    bool same = m1.entries.size() == m2.entries.size();
    for (size_t i = 0; same && i < m1.entries.size(); i++)
        same = m1.entries[i].caption == m2.entries[i].caption &&
               m1.entries[i].split == m2.entries[i].split;
    std::printf("dataset determinism: %s\n", same ? "OK" : "FAIL");
    DatasetManifest r = load_manifest("/tmp/ds1");
    std::printf("manifest reload: %zu entries, splits t/u/e = %zu/%zu/%zu\n", r.entries.size(),
                r.indices_of(SplitPool::train).size(), r.indices_of(SplitPool::unlearn).size(),
                r.indices_of(SplitPool::eval).size());
    return 0;
}
