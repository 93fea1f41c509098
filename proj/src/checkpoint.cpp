#include "diffscrub/checkpoint.hpp"

#include "diffscrub/kvtext.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

static_assert(std::endian::native == std::endian::little,
              "tensor archives are defined little-endian");

namespace fs = std::filesystem;

namespace diffscrub {

namespace {

constexpr char kMagic[4] = {'D', 'S', 'C', 'K'};
constexpr uint32_t kVersion = 1;

template <typename V>
void put(std::string& out, V v) {
    char buf[sizeof(V)];
    std::memcpy(buf, &v, sizeof(V));
    out.append(buf, sizeof(V));
}

std::string archive_bytes(DenoiserModel& model) {
    std::string out;
    out.append(kMagic, 4);
    put<uint32_t>(out, kVersion);
    uint32_t count = 0;
    model.for_each_param([&](const std::string&, Tensorf&, Tensorf&) { count++; });
    put<uint32_t>(out, count);
    model.for_each_param([&](const std::string& name, Tensorf& v, Tensorf&) {
        put<uint16_t>(out, static_cast<uint16_t>(name.size()));
        out.append(name);
        put<uint8_t>(out, static_cast<uint8_t>(v.rank()));
        for (int d : v.shape) put<uint32_t>(out, static_cast<uint32_t>(d));
        out.append(reinterpret_cast<const char*>(v.ptr()), v.numel() * sizeof(float));
    });
    return out;
}

}  // namespace

void save_checkpoint(const std::string& dir, DenoiserModel& model, const CheckpointMeta& meta) {
    fs::create_directories(dir);
    std::string bytes = archive_bytes(model);
    std::string id = hex64(fnv1a64(bytes.data(), bytes.size()));
    {
        std::ofstream f(dir + "/tensors.bin", std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot write " + dir + "/tensors.bin");
        f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!f) throw IoError("short write to " + dir + "/tensors.bin");
    }
    std::ostringstream m;
    m << "kind = \"checkpoint\"\n";
    m << "id = \"" << id << "\"\n";
    m << "parent_id = \"" << meta.parent_id << "\"\n";
    m << "checkpoint_kind = \"" << meta.kind << "\"\n";
    m << "backdoor_kind = \"" << meta.backdoor_kind << "\"\n";
    m << "trigger_phrase = \"" << meta.trigger_phrase << "\"\n";
    m << "plan_note = \"" << meta.plan_note << "\"\n";
    m << "config_hash = \"" << meta.config_hash << "\"\n";
    m << "creation_seed = " << meta.creation_seed << "\n";
    m << "vocab_hash = \"" << hex64(meta.vocab_hash) << "\"\n";
    m << "image_size = " << meta.model.image_size << "\n";
    m << "in_channels = " << meta.model.in_channels << "\n";
    m << "base_width = " << meta.model.base_width << "\n";
    m << "text_dim = " << meta.model.text_dim << "\n";
    m << "l_max = " << meta.model.l_max << "\n";
    m << "heads = " << meta.model.heads << "\n";
    m << "vocab_size = " << meta.model.vocab_size << "\n";
    m << "schedule_t = " << meta.sched_t << "\n";
    m << "beta_start = " << kv_format_double(meta.beta_start) << "\n";
    m << "beta_end = " << kv_format_double(meta.beta_end) << "\n";
    std::ofstream f(dir + "/manifest.txt", std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + dir + "/manifest.txt");
    f << m.str();
}

CheckpointMeta load_checkpoint_meta(const std::string& dir) {
    if (!fs::exists(dir + "/manifest.txt"))
        throw ProvenanceError("checkpoint manifest missing in " + dir);
    KvFile kv = KvFile::load(dir + "/manifest.txt");
    const KvSection& r = kv.root();
    if (r.get("kind").as_string() != "checkpoint")
        throw ProvenanceError(dir + " is not a checkpoint directory");
    CheckpointMeta meta;
    meta.id = r.get("id").as_string();
    meta.parent_id = r.get("parent_id").as_string();
    meta.kind = r.get("checkpoint_kind").as_string();
    meta.backdoor_kind = r.get("backdoor_kind").as_string();
    meta.trigger_phrase = r.get("trigger_phrase").as_string();
    meta.plan_note = r.get("plan_note").as_string();
    meta.config_hash = r.get("config_hash").as_string();
    meta.creation_seed = static_cast<uint64_t>(r.get("creation_seed").as_int("creation_seed"));
    meta.vocab_hash = std::stoull(r.get("vocab_hash").as_string(), nullptr, 16);
    meta.model.image_size = static_cast<int>(r.get("image_size").as_int("image_size"));
    meta.model.in_channels = static_cast<int>(r.get("in_channels").as_int("in_channels"));
    meta.model.base_width = static_cast<int>(r.get("base_width").as_int("base_width"));
    meta.model.text_dim = static_cast<int>(r.get("text_dim").as_int("text_dim"));
    meta.model.l_max = static_cast<int>(r.get("l_max").as_int("l_max"));
    meta.model.heads = static_cast<int>(r.get("heads").as_int("heads"));
    meta.model.vocab_size = static_cast<int>(r.get("vocab_size").as_int("vocab_size"));
    meta.sched_t = static_cast<int>(r.get("schedule_t").as_int("schedule_t"));
    meta.beta_start = r.get("beta_start").as_double("beta_start");
    meta.beta_end = r.get("beta_end").as_double("beta_end");
    return meta;
}

CheckpointMeta load_checkpoint(const std::string& dir, DenoiserModel& model) {
    CheckpointMeta meta = load_checkpoint_meta(dir);

    std::ifstream f(dir + "/tensors.bin", std::ios::binary);
    if (!f) throw ProvenanceError("checkpoint archive missing in " + dir);
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    std::string actual = hex64(fnv1a64(bytes.data(), bytes.size()));
    if (actual != meta.id)
        throw ProvenanceError("checkpoint " + dir + " is corrupt: archive fingerprint " + actual +
                              " does not match manifest id " + meta.id);

    model.build(meta.model);
    size_t pos = 0;
    auto need = [&](size_t n) {
        if (pos + n > bytes.size()) throw ProvenanceError("checkpoint archive truncated: " + dir);
    };
    auto get_u32 = [&]() {
        need(4);
        uint32_t v;
        std::memcpy(&v, bytes.data() + pos, 4);
        pos += 4;
        return v;
    };
    need(4);
    if (std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw ProvenanceError("bad tensor archive magic in " + dir);
    pos = 4;
    if (get_u32() != kVersion) throw ProvenanceError("unsupported archive version in " + dir);
    uint32_t count = get_u32();

    std::map<std::string, Tensorf*> by_name;
    model.for_each_param([&](const std::string& name, Tensorf& v, Tensorf&) {
        by_name[name] = &v;
    });
    if (count != by_name.size())
        throw ProvenanceError("checkpoint tensor count mismatch in " + dir);
    for (uint32_t i = 0; i < count; i++) {
        need(2);
        uint16_t name_len;
        std::memcpy(&name_len, bytes.data() + pos, 2);
        pos += 2;
        need(name_len);
        std::string name(bytes.data() + pos, name_len);
        pos += name_len;
        need(1);
        uint8_t rank = static_cast<uint8_t>(bytes[pos++]);
        std::vector<int> shape;
        for (int d = 0; d < rank; d++) shape.push_back(static_cast<int>(get_u32()));
        auto it = by_name.find(name);
        if (it == by_name.end())
            throw ProvenanceError("unexpected tensor '" + name + "' in " + dir);
        if (it->second->shape != shape)
            throw ProvenanceError("tensor '" + name + "' shape mismatch in " + dir);
        size_t n = it->second->numel() * sizeof(float);
        need(n);
        std::memcpy(it->second->ptr(), bytes.data() + pos, n);
        pos += n;
    }
    return meta;
}

NoiseSchedule schedule_of(const CheckpointMeta& meta) {
    return NoiseSchedule::linear(meta.sched_t, meta.beta_start, meta.beta_end);
}

}  // namespace diffscrub
