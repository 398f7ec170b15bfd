#include "starsim/star/sentences.hpp"

#include <array>
#include <cctype>
#include <string_view>

namespace starsim {

namespace {

bool is_closing(char c) {
    return c == '"' || c == '\'' || c == ')' || c == ']';
}

// Lowercased token endings (up to the previous whitespace, period included)
// whose final dot does not end a sentence.
constexpr std::array<std::string_view, 22> kAbbreviations = {
    "e.g.", "i.e.",  "etc.",    "vs.",  "cf.",  "al.",  "dr.",  "mr.",  "mrs.", "ms.", "st.",
    "jr.",  "sr.",   "prof.",   "fig.", "eq.",  "no.",  "sec.", "a.m.", "p.m.", "u.s.", "approx.",
};

bool period_is_abbreviation(std::string_view text, size_t dot) {
    size_t start = dot;
    while (start > 0 && !std::isspace(static_cast<unsigned char>(text[start - 1]))) --start;
    std::string token(text.substr(start, dot - start + 1));
    for (char& c : token) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));

    // Lone letter: an initial ("J.") or an option label ("A.").
    if (token.size() == 2 && std::isalpha(static_cast<unsigned char>(token[0]))) return true;
    for (std::string_view abbr : kAbbreviations) {
        if (token == abbr) return true;
    }
    return false;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

}  // namespace

std::vector<std::string> split_sentences(std::string_view text) {
    std::vector<std::string> sentences;
    size_t start = 0;
    size_t i = 0;
    auto emit = [&](size_t end) {
        std::string_view piece = trim(text.substr(start, end - start));
        if (!piece.empty()) sentences.emplace_back(piece);
        start = end;
    };

    while (i < text.size()) {
        char c = text[i];
        if (c != '.' && c != '!' && c != '?') {
            ++i;
            continue;
        }
        size_t after = i + 1;
        while (after < text.size() && is_closing(text[after])) ++after;
        bool at_boundary =
            after == text.size() || std::isspace(static_cast<unsigned char>(text[after]));
        if (at_boundary && (c != '.' || !period_is_abbreviation(text, i))) {
            emit(after);
            i = after;
        } else {
            ++i;
        }
    }
    emit(text.size());
    return sentences;
}

}  // namespace starsim
