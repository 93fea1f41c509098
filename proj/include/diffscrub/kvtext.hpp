#pragma once

#include "diffscrub/common.hpp"

#include <map>
#include <string>
#include <vector>

namespace diffscrub {

// Line-oriented key-value text format used for configs, manifests and
// reports (documented in FORMATS.md):
//
//   # comment
//   [section] or [section.subsection]
//   key = value            value: integer, float, bool, "string", or
//   key = [v1, v2, v3]     a list of scalars
//
// Repeated keys are allowed only for table-style rows (e.g. dataset
// entries); use values_of() to collect them in file order.
struct KvValue {
    std::string raw;  // trimmed source text, quotes stripped for strings
    bool quoted = false;

    int64_t as_int(const std::string& key) const;
    double as_double(const std::string& key) const;
    bool as_bool(const std::string& key) const;
    const std::string& as_string() const { return raw; }
    std::vector<std::string> as_list() const;          // raw items
    std::vector<double> as_double_list(const std::string& key) const;
};

struct KvSection {
    std::string name;
    std::vector<std::pair<std::string, KvValue>> entries;  // file order

    bool has(const std::string& key) const;
    const KvValue& get(const std::string& key) const;  // throws ConfigError if absent
    const KvValue* find(const std::string& key) const;
    std::vector<const KvValue*> values_of(const std::string& key) const;
};

struct KvFile {
    std::vector<KvSection> sections;  // file order; unnamed root section first

    KvSection& root() { return sections.front(); }
    const KvSection& root() const { return sections.front(); }
    const KvSection* find_section(const std::string& name) const;
    const KvSection& section(const std::string& name) const;  // throws if absent
    std::vector<const KvSection*> sections_with_prefix(const std::string& prefix) const;

    static KvFile parse(const std::string& text, const std::string& origin);
    static KvFile load(const std::string& path);
};

// Serialization helpers that keep float formatting deterministic.
std::string kv_format_double(double v);
std::string kv_quote(const std::string& s);

}  // namespace diffscrub
