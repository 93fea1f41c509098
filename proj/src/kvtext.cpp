#include "diffscrub/kvtext.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace diffscrub {

std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return std::string(buf);
}

namespace {

std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) b++;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) e--;
    return s.substr(b, e - b);
}

}  // namespace

int64_t KvValue::as_int(const std::string& key) const {
    int64_t v = 0;
    auto [p, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
    if (ec != std::errc() || p != raw.data() + raw.size())
        throw ConfigError("key '" + key + "': expected integer, got '" + raw + "'");
    return v;
}

double KvValue::as_double(const std::string& key) const {
    try {
        size_t pos = 0;
        double v = std::stod(raw, &pos);
        if (pos != raw.size()) throw std::invalid_argument(raw);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected number, got '" + raw + "'");
    }
}

bool KvValue::as_bool(const std::string& key) const {
    if (raw == "true") return true;
    if (raw == "false") return false;
    throw ConfigError("key '" + key + "': expected true/false, got '" + raw + "'");
}

std::vector<std::string> KvValue::as_list() const {
    std::vector<std::string> items;
    if (raw.empty() || raw.front() != '[' || raw.back() != ']') {
        items.push_back(raw);
        return items;
    }
    std::string inner = raw.substr(1, raw.size() - 2);
    std::string cur;
    for (char c : inner) {
        if (c == ',') {
            std::string t = trim(cur);
            if (!t.empty()) items.push_back(t);
            cur.clear();
        } else {
            cur += c;
        }
    }
    std::string t = trim(cur);
    if (!t.empty()) items.push_back(t);
    return items;
}

std::vector<double> KvValue::as_double_list(const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : as_list()) {
        KvValue v{item, false};
        out.push_back(v.as_double(key));
    }
    return out;
}

bool KvSection::has(const std::string& key) const { return find(key) != nullptr; }

const KvValue* KvSection::find(const std::string& key) const {
    for (const auto& [k, v] : entries)
        if (k == key) return &v;
    return nullptr;
}

const KvValue& KvSection::get(const std::string& key) const {
    const KvValue* v = find(key);
    if (!v) {
        std::string where = name.empty() ? "top level" : "[" + name + "]";
        throw ConfigError("missing key '" + key + "' in " + where);
    }
    return *v;
}

std::vector<const KvValue*> KvSection::values_of(const std::string& key) const {
    std::vector<const KvValue*> out;
    for (const auto& [k, v] : entries)
        if (k == key) out.push_back(&v);
    return out;
}

const KvSection* KvFile::find_section(const std::string& name) const {
    for (const auto& s : sections)
        if (s.name == name) return &s;
    return nullptr;
}

const KvSection& KvFile::section(const std::string& name) const {
    const KvSection* s = find_section(name);
    if (!s) throw ConfigError("missing section [" + name + "]");
    return *s;
}

std::vector<const KvSection*> KvFile::sections_with_prefix(const std::string& prefix) const {
    std::vector<const KvSection*> out;
    for (const auto& s : sections)
        if (s.name.size() > prefix.size() && s.name.compare(0, prefix.size(), prefix) == 0)
            out.push_back(&s);
    return out;
}

KvFile KvFile::parse(const std::string& text, const std::string& origin) {
    KvFile file;
    file.sections.push_back(KvSection{"", {}});
    KvSection* cur = &file.sections.back();

    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        lineno++;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto fail = [&](const std::string& msg) {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + msg);
        };
        if (t.front() == '[') {
            if (t.back() != ']') fail("unterminated section header");
            std::string name = trim(t.substr(1, t.size() - 2));
            if (name.empty()) fail("empty section name");
            if (file.find_section(name)) fail("duplicate section [" + name + "]");
            file.sections.push_back(KvSection{name, {}});
            cur = &file.sections.back();
            continue;
        }
        size_t eq = t.find('=');
        if (eq == std::string::npos) fail("expected 'key = value'");
        std::string key = trim(t.substr(0, eq));
        std::string val = trim(t.substr(eq + 1));
        if (key.empty()) fail("empty key");
        KvValue v;
        if (val.size() >= 2 && val.front() == '"' && val.back() == '"') {
            v.raw = val.substr(1, val.size() - 2);
            v.quoted = true;
        } else {
            v.raw = val;
        }
        cur->entries.emplace_back(key, v);
    }
    return file;
}

KvFile KvFile::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
}

std::string kv_format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return std::string(buf);
}

std::string kv_quote(const std::string& s) { return "\"" + s + "\""; }

}  // namespace diffscrub
