#pragma once

#include "diffscrub/scene.hpp"

#include <string>
#include <vector>

namespace diffscrub {

// Scene specs are partitioned into three disjoint pools before any entries
// are sampled, so captions used for poison training, unlearning prompts and
// evaluation prompts never overlap. The partition is a pure function of the
// dataset seed.
enum class SplitPool { train, unlearn, eval };
const char* split_name(SplitPool p);

struct DatasetEntry {
    SceneSpec spec;
    std::string caption;
    std::string file;  // relative to the dataset directory
    SplitPool split = SplitPool::train;
};

struct DatasetManifest {
    uint64_t seed = 0;
    int count = 0;
    int image_size = 0;
    uint64_t vocab_hash = 0;
    std::vector<DatasetEntry> entries;

    std::vector<int> indices_of(SplitPool p) const;
};

// Samples `count` scenes (foreground color exactly uniform; background
// resampled until its name differs), renders them as PNGs under out_dir and
// writes manifest.txt. Idempotent per (seed, count, size).
DatasetManifest generate_dataset(uint64_t seed, int count, int image_size,
                                 const std::string& out_dir);

// Spec sampling alone, exposed for distribution tests.
SceneSpec sample_scene_spec(Rng& rng);

// Seeded spec-level pool assignment.
std::vector<SplitPool> assign_pools(const std::vector<SceneSpec>& all_specs, uint64_t seed);

DatasetManifest load_manifest(const std::string& dir);
void save_manifest(const std::string& dir, const DatasetManifest& m);
Tensorf load_entry_image(const std::string& dir, const DatasetEntry& e);

}  // namespace diffscrub
