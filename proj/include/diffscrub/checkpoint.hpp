#pragma once

#include "diffscrub/model.hpp"
#include "diffscrub/schedule.hpp"

#include <string>

namespace diffscrub {

// A checkpoint is a directory: manifest.txt (provenance + config) and
// tensors.bin (named float32 archive, little endian). Round trips are
// bit-exact; the id is a fingerprint of the archive bytes and is verified on
// load.
struct CheckpointMeta {
    std::string id;            // filled by save, verified by load
    std::string parent_id;     // empty for roots
    std::string kind;          // clean | poisoned | cleaned | reversal
    std::string backdoor_kind; // empty | pixel | style
    std::string trigger_phrase;
    std::string plan_note;     // free-form provenance (plan name, policy, ...)
    std::string config_hash;   // experiment config hash, empty if standalone
    uint64_t creation_seed = 0;
    uint64_t vocab_hash = 0;
    ModelConfig model;
    int sched_t = 0;
    double beta_start = 0.0, beta_end = 0.0;
};

void save_checkpoint(const std::string& dir, DenoiserModel& model, const CheckpointMeta& meta);

// Builds the model from the stored config and fills every named tensor.
CheckpointMeta load_checkpoint(const std::string& dir, DenoiserModel& model);

CheckpointMeta load_checkpoint_meta(const std::string& dir);

NoiseSchedule schedule_of(const CheckpointMeta& meta);

}  // namespace diffscrub
