#include "codeslice/tokenizer.hpp"

#include <algorithm>
#include <cctype>

namespace codeslice {

namespace {

// Bytes >= 0x80 belong to multi-byte UTF-8 sequences; treat them as word characters.
bool is_word_byte(unsigned char c) { return c >= 0x80 || std::isalnum(c) || c == '_'; }
bool is_space_byte(unsigned char c) { return std::isspace(c) != 0; }

} // namespace

std::int64_t HeuristicTokenizer::piece_count(std::string_view text) {
    std::int64_t pieces = 0;
    bool in_word = false;
    for (unsigned char c : text) {
        if (is_word_byte(c)) {
            if (!in_word) {
                ++pieces;
                in_word = true;
            }
        } else {
            in_word = false;
            if (!is_space_byte(c)) {
                ++pieces;
            }
        }
    }
    return pieces;
}

std::int64_t HeuristicTokenizer::code_point_count(std::string_view text) {
    return std::count_if(text.begin(), text.end(),
                         [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; });
}

std::int64_t HeuristicTokenizer::count(std::string_view text) const {
    const std::int64_t by_chars = (code_point_count(text) + 3) / 4;
    return std::max(piece_count(text), by_chars);
}

const Tokenizer &default_tokenizer() {
    static const HeuristicTokenizer tokenizer;
    return tokenizer;
}

std::vector<std::string> split_words(std::string_view text) {
    std::vector<std::string> words;
    std::string current;
    for (unsigned char c : text) {
        if (is_word_byte(c)) {
            current.push_back(static_cast<char>(c));
            continue;
        }
        if (!current.empty()) {
            words.push_back(std::move(current));
            current.clear();
        }
        if (!is_space_byte(c)) {
            words.emplace_back(1, static_cast<char>(c));
        }
    }
    if (!current.empty()) {
        words.push_back(std::move(current));
    }
    return words;
}

} // namespace codeslice
