#include "diffscrub/dataset.hpp"

#include "diffscrub/kvtext.hpp"
#include "diffscrub/png_io.hpp"
#include "diffscrub/rng.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace diffscrub {

const char* split_name(SplitPool p) {
    switch (p) {
        case SplitPool::train: return "train";
        case SplitPool::unlearn: return "unlearn";
        case SplitPool::eval: return "eval";
    }
    return "?";
}

static SplitPool split_from_name(const std::string& s) {
    if (s == "train") return SplitPool::train;
    if (s == "unlearn") return SplitPool::unlearn;
    if (s == "eval") return SplitPool::eval;
    throw IoError("unknown split '" + s + "'");
}

std::vector<int> DatasetManifest::indices_of(SplitPool p) const {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(entries.size()); i++)
        if (entries[static_cast<size_t>(i)].split == p) out.push_back(i);
    return out;
}

SceneSpec sample_scene_spec(Rng& rng) {
    SceneSpec s;
    s.shape = static_cast<Shape>(rng.below(3));
    s.size = static_cast<Size>(rng.below(2));
    s.fg = static_cast<int>(rng.below(fg_colors().size()));
    // resample only the background on a name clash, keeping fg exactly uniform
    do {
        s.bg = static_cast<int>(rng.below(bg_colors().size()));
    } while (std::string(fg_colors()[static_cast<size_t>(s.fg)].name) ==
             bg_colors()[static_cast<size_t>(s.bg)].name);
    return s;
}

std::vector<SplitPool> assign_pools(const std::vector<SceneSpec>& all_specs, uint64_t seed) {
    size_t n = all_specs.size();
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; i++) order[i] = i;
    Rng rng(derive_seed(seed, "spec-pools"));
    rng.shuffle(order.begin(), order.end());
    // ~70% train, ~18% unlearn, rest eval (98/25/15 on the standard 138)
    size_t n_train = n * 98 / 138;
    size_t n_unlearn = n * 25 / 138;
    std::vector<SplitPool> pools(n, SplitPool::eval);
    for (size_t i = 0; i < n; i++) {
        if (i < n_train) pools[order[i]] = SplitPool::train;
        else if (i < n_train + n_unlearn) pools[order[i]] = SplitPool::unlearn;
    }
    return pools;
}

static int find_spec(const std::vector<SceneSpec>& all, const SceneSpec& s) {
    for (size_t i = 0; i < all.size(); i++)
        if (all[i] == s) return static_cast<int>(i);
    throw SpecError("scene spec not in enumeration");
}

DatasetManifest generate_dataset(uint64_t seed, int count, int image_size,
                                 const std::string& out_dir) {
    if (count < 1) throw SpecError("dataset count must be >= 1");
    fs::create_directories(out_dir);
    if (!fs::is_directory(out_dir)) throw IoError("cannot create dataset directory " + out_dir);

    std::vector<SceneSpec> all = enumerate_scene_specs();
    std::vector<SplitPool> pools = assign_pools(all, seed);

    DatasetManifest m;
    m.seed = seed;
    m.count = count;
    m.image_size = image_size;
    m.vocab_hash = Vocabulary::standard().hash();

    Rng rng(derive_seed(seed, "dataset-specs"));
    for (int i = 0; i < count; i++) {
        DatasetEntry e;
        e.spec = sample_scene_spec(rng);
        e.caption = caption_of(e.spec);
        char name[32];
        std::snprintf(name, sizeof(name), "entry_%05d.png", i);
        e.file = name;
        e.split = pools[static_cast<size_t>(find_spec(all, e.spec))];
        m.entries.push_back(e);
    }
    for (const auto& e : m.entries)
        save_png(out_dir + "/" + e.file, render_scene(e.spec, image_size, image_size));
    save_manifest(out_dir, m);
    return m;
}

void save_manifest(const std::string& dir, const DatasetManifest& m) {
    std::ostringstream out;
    out << "kind = \"dataset-manifest\"\n";
    out << "seed = " << m.seed << "\n";
    out << "count = " << m.count << "\n";
    out << "image_size = " << m.image_size << "\n";
    out << "vocab_hash = \"" << hex64(m.vocab_hash) << "\"\n";
    for (const auto& e : m.entries) {
        out << "entry = \"" << shape_name(e.spec.shape) << "|"
            << fg_colors()[static_cast<size_t>(e.spec.fg)].name << "|"
            << bg_colors()[static_cast<size_t>(e.spec.bg)].name << "|" << size_name(e.spec.size)
            << "|" << split_name(e.split) << "|" << e.caption << "|" << e.file << "\"\n";
    }
    std::ofstream f(dir + "/manifest.txt", std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write manifest in " + dir);
    f << out.str();
}

DatasetManifest load_manifest(const std::string& dir) {
    KvFile kv = KvFile::load(dir + "/manifest.txt");
    const KvSection& r = kv.root();
    if (r.get("kind").as_string() != "dataset-manifest")
        throw IoError(dir + "/manifest.txt is not a dataset manifest");
    DatasetManifest m;
    m.seed = static_cast<uint64_t>(r.get("seed").as_int("seed"));
    m.count = static_cast<int>(r.get("count").as_int("count"));
    m.image_size = static_cast<int>(r.get("image_size").as_int("image_size"));
    m.vocab_hash = std::stoull(r.get("vocab_hash").as_string(), nullptr, 16);
    for (const KvValue* v : r.values_of("entry")) {
        std::vector<std::string> parts;
        std::string cur;
        for (char c : v->raw) {
            if (c == '|') parts.push_back(cur), cur.clear();
            else cur += c;
        }
        parts.push_back(cur);
        if (parts.size() != 7) throw IoError("malformed dataset entry line");
        DatasetEntry e;
        e.caption = parts[5];
        e.spec = parse_caption(e.caption);
        e.split = split_from_name(parts[4]);
        e.file = parts[6];
        m.entries.push_back(e);
    }
    if (static_cast<int>(m.entries.size()) != m.count)
        throw IoError("dataset manifest count mismatch");
    return m;
}

Tensorf load_entry_image(const std::string& dir, const DatasetEntry& e) {
    return load_png(dir + "/" + e.file);
}

}  // namespace diffscrub
