#include "diffscrub/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace diffscrub {

namespace {

Vocabulary build(const std::vector<std::string>& words) {
    Vocabulary v;
    v.tokens.push_back("<bos>");
    v.tokens.push_back("<pad>");
    for (const auto& w : words) v.tokens.push_back(w);
    for (int i = 0; i < static_cast<int>(v.tokens.size()); i++) v.token_to_id[v.tokens[i]] = i;
    v.bos_id = v.token_to_id.at("<bos>");
    v.pad_id = v.token_to_id.at("<pad>");
    return v;
}

}  // namespace

Vocabulary Vocabulary::standard() {
    // 25 words: caption template + attribute names + trigger words + decoys
    // reserved for the random-replacement pool.
    return build({
        "a", "on", "background",
        "small", "large",
        "circle", "square", "triangle",
        "red", "green", "blue", "yellow", "purple", "orange",
        "white", "black", "gray",
        "new", "trigger",
        "alpha", "bravo", "delta", "echo", "omega", "zulu",
    });
}

int Vocabulary::id_of(const std::string& word) const {
    auto it = token_to_id.find(word);
    if (it == token_to_id.end()) throw VocabularyError("unknown word '" + word + "'");
    return it->second;
}

uint64_t Vocabulary::hash() const {
    uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& t : tokens) {
        h = fnv1a64(t, h);
        h ^= 0x1f;  // separator
        h *= 0x100000001b3ull;
    }
    return h;
}

std::vector<std::string> split_words(const std::string& text) {
    std::vector<std::string> words;
    std::string cur;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!cur.empty()) words.push_back(cur), cur.clear();
        } else {
            cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        }
    }
    if (!cur.empty()) words.push_back(cur);
    return words;
}

PromptSpec tokenize(const std::string& text, const Vocabulary& vocab, int l_max) {
    std::vector<std::string> words = split_words(text);
    if (static_cast<int>(words.size()) >= l_max)
        throw LengthError("prompt '" + text + "' has " + std::to_string(words.size()) +
                          " words, limit is " + std::to_string(l_max - 1));
    PromptSpec p;
    p.text = text;
    p.token_ids.assign(static_cast<size_t>(l_max), vocab.pad_id);
    p.token_ids[0] = vocab.bos_id;
    int n = 1;
    for (const auto& w : words) p.token_ids[static_cast<size_t>(n++)] = vocab.id_of(w);
    p.valid_len = n;
    return p;
}

void validate_prompt(const PromptSpec& p, const Vocabulary& vocab) {
    if (p.valid_len < 1 || p.valid_len > p.l_max())
        throw LengthError("prompt valid_len out of range");
    if (p.token_ids.empty() || p.token_ids[0] != vocab.bos_id)
        throw VocabularyError("prompt must start with bos");
    for (int id : p.token_ids)
        if (id < 0 || id >= vocab.size())
            throw VocabularyError("token id " + std::to_string(id) + " out of range");
}

}  // namespace diffscrub
