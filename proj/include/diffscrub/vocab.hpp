#pragma once

#include "diffscrub/common.hpp"

#include <map>
#include <string>
#include <vector>

namespace diffscrub {

// Closed vocabulary over which all prompts, triggers and replacement pools
// are defined. Ids are contiguous from 0; <bos> and <pad> are reserved.
struct Vocabulary {
    std::vector<std::string> tokens;
    std::map<std::string, int> token_to_id;
    int pad_id = -1;
    int bos_id = -1;

    static Vocabulary standard();  // the fixed workbench vocabulary

    int id_of(const std::string& word) const;
    bool contains(const std::string& word) const { return token_to_id.count(word) > 0; }
    int size() const { return static_cast<int>(tokens.size()); }
    uint64_t hash() const;
};

// Fixed-length tokenized prompt: [bos, word ids..., pad...].
struct PromptSpec {
    std::string text;
    std::vector<int> token_ids;  // length l_max
    int valid_len = 0;           // bos + non-pad words

    int l_max() const { return static_cast<int>(token_ids.size()); }
};

std::vector<std::string> split_words(const std::string& text);

// Lowercases, splits on whitespace, prefixes bos, right-pads.
// Unknown word -> VocabularyError naming the word; too many words -> LengthError.
PromptSpec tokenize(const std::string& text, const Vocabulary& vocab, int l_max);

void validate_prompt(const PromptSpec& p, const Vocabulary& vocab);

}  // namespace diffscrub
