#include "starsim/prompting/parsers.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>

namespace starsim {

namespace {

constexpr std::string_view kFactualityMarker = "<FACTUALITY ANALYSIS>:";
constexpr std::string_view kErrorMarker = "<ERROR ANALYSIS>:";

bool iequals_prefix(std::string_view text, std::string_view prefix) {
    if (text.size() < prefix.size()) return false;
    for (size_t i = 0; i < prefix.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(text[i])) !=
            std::tolower(static_cast<unsigned char>(prefix[i]))) {
            return false;
        }
    }
    return true;
}

size_t ifind(std::string_view haystack, std::string_view needle) {
    if (needle.empty() || haystack.size() < needle.size()) return std::string_view::npos;
    for (size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
        if (iequals_prefix(haystack.substr(i), needle)) return i;
    }
    return std::string_view::npos;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

// Collapses whitespace runs to single spaces (entries may wrap across lines).
std::string normalize_ws(std::string_view s) {
    std::string out;
    bool pending_space = false;
    for (char c : trim(s)) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
        } else {
            if (pending_space) out += ' ';
            pending_space = false;
            out += c;
        }
    }
    return out;
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    size_t start = 0;
    while (start <= text.size()) {
        size_t nl = text.find('\n', start);
        if (nl == std::string_view::npos) {
            lines.push_back(text.substr(start));
            break;
        }
        lines.push_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    return lines;
}

// Consumes "<digits>" then any of ". ) : -" separators; npos when absent.
size_t parse_entry_number(std::string_view line, int& number) {
    size_t i = 0;
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    size_t digits_start = i;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    if (i == digits_start || i - digits_start > 6) return std::string_view::npos;
    number = std::atoi(std::string(line.substr(digits_start, i - digits_start)).c_str());
    while (i < line.size() &&
           (line[i] == '.' || line[i] == ')' || line[i] == ':' || line[i] == '-' ||
            std::isspace(static_cast<unsigned char>(line[i])))) {
        ++i;
    }
    return i;
}

double clamp_confidence(double value) {
    if (std::isnan(value)) return 0.0;
    return std::clamp(value, 0.0, 1.0);
}

void parse_factuality_block(std::string_view block, std::vector<SentenceVerdict>& verdicts) {
    for (std::string_view line : split_lines(block)) {
        int number = 0;
        size_t pos = parse_entry_number(line, number);
        if (pos == std::string_view::npos) continue;
        std::string_view rest = line.substr(pos);

        bool factual;
        if (iequals_prefix(rest, "yes")) {
            factual = true;
            rest.remove_prefix(3);
        } else if (iequals_prefix(rest, "no")) {
            factual = false;
            rest.remove_prefix(2);
        } else {
            continue;
        }
        if (!rest.empty() && (std::isalnum(static_cast<unsigned char>(rest.front())))) {
            continue;  // "yes"/"no" was a prefix of a longer word
        }
        while (!rest.empty() && (rest.front() == ',' || rest.front() == ':' ||
                                 std::isspace(static_cast<unsigned char>(rest.front())))) {
            rest.remove_prefix(1);
        }
        double confidence = 0.0;
        if (!rest.empty()) {
            confidence = std::strtod(std::string(rest).c_str(), nullptr);
        }
        if (number >= 1 && static_cast<size_t>(number) <= verdicts.size()) {
            auto& verdict = verdicts[static_cast<size_t>(number - 1)];
            verdict.factual = factual;
            verdict.confidence = clamp_confidence(confidence);
        }
    }
}

struct ErrorEntry {
    int number = 0;
    size_t body_offset = 0;  // offset of text after "Misleading Claim:"
    size_t start_offset = 0;
};

void parse_error_block(std::string_view block, std::vector<SentenceVerdict>& verdicts) {
    std::string_view body = trim(block);
    if (body.empty()) return;
    if (iequals_prefix(body, "null") && trim(body.substr(4)).empty()) return;

    // Locate entry starts line by line: "<k>. Misleading Claim: ...".
    std::vector<ErrorEntry> entries;
    size_t offset = 0;
    for (std::string_view line : split_lines(block)) {
        int number = 0;
        size_t pos = parse_entry_number(line, number);
        if (pos != std::string_view::npos && iequals_prefix(line.substr(pos), "misleading claim")) {
            size_t after = pos + 16;
            while (after < line.size() &&
                   (line[after] == ':' || std::isspace(static_cast<unsigned char>(line[after])))) {
                ++after;
            }
            entries.push_back({number, offset + after, offset});
        }
        offset += line.size() + 1;
    }

    for (size_t e = 0; e < entries.size(); ++e) {
        size_t end = (e + 1 < entries.size()) ? entries[e + 1].start_offset : block.size();
        if (entries[e].body_offset > end) continue;
        std::string_view entry_text = block.substr(entries[e].body_offset,
                                                   end - entries[e].body_offset);

        Correction correction;
        size_t assertion_pos = ifind(entry_text, "correct assertion");
        if (assertion_pos == std::string_view::npos) {
            correction.misleading_claim = normalize_ws(entry_text);
        } else {
            correction.misleading_claim = normalize_ws(entry_text.substr(0, assertion_pos));
            std::string_view assertion = entry_text.substr(assertion_pos + 17);
            while (!assertion.empty() &&
                   (assertion.front() == ':' ||
                    std::isspace(static_cast<unsigned char>(assertion.front())))) {
                assertion.remove_prefix(1);
            }
            correction.correct_assertion = normalize_ws(assertion);
        }

        int number = entries[e].number;
        if (number >= 1 && static_cast<size_t>(number) <= verdicts.size()) {
            auto& verdict = verdicts[static_cast<size_t>(number - 1)];
            if (!verdict.factual) {
                verdict.correction = std::move(correction);
            }
        }
    }
}

}  // namespace

VerifierRawOutput split_verifier_blocks(std::string_view raw) {
    size_t fact_pos = raw.find(kFactualityMarker);
    size_t error_pos = raw.find(kErrorMarker);
    if (fact_pos == std::string_view::npos || error_pos == std::string_view::npos ||
        error_pos < fact_pos) {
        throw MissingMarkers("verifier reply lacks the factuality/error analysis markers");
    }
    VerifierRawOutput out;
    size_t fact_start = fact_pos + kFactualityMarker.size();
    out.factuality_block = std::string(raw.substr(fact_start, error_pos - fact_start));
    out.error_block = std::string(raw.substr(error_pos + kErrorMarker.size()));
    return out;
}

std::vector<SentenceVerdict> parse_verifier_output(std::string_view raw, int n_sentences) {
    if (n_sentences < 1) {
        throw std::invalid_argument("parse_verifier_output needs n_sentences >= 1");
    }
    VerifierRawOutput blocks = split_verifier_blocks(raw);

    std::vector<SentenceVerdict> verdicts(static_cast<size_t>(n_sentences));
    for (int i = 0; i < n_sentences; ++i) {
        verdicts[static_cast<size_t>(i)].index = i + 1;
        verdicts[static_cast<size_t>(i)].factual = true;
        verdicts[static_cast<size_t>(i)].confidence = 0.0;
    }
    parse_factuality_block(blocks.factuality_block, verdicts);
    parse_error_block(blocks.error_block, verdicts);
    return verdicts;
}

JudgeOutcome parse_judge_output(std::string_view raw) {
    bool has_strong = false;
    bool has_weak = false;
    size_t i = 0;
    while (i < raw.size()) {
        if (!std::isalpha(static_cast<unsigned char>(raw[i]))) {
            ++i;
            continue;
        }
        size_t start = i;
        while (i < raw.size() && std::isalpha(static_cast<unsigned char>(raw[i]))) ++i;
        std::string token(raw.substr(start, i - start));
        std::transform(token.begin(), token.end(), token.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        if (token == "strong") has_strong = true;
        if (token == "weak") has_weak = true;
    }
    return (has_strong && !has_weak) ? JudgeOutcome::Strong : JudgeOutcome::Weak;
}

}  // namespace starsim
