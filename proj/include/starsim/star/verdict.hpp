#pragma once

#include <optional>
#include <string>

namespace starsim {

struct Correction {
    std::string misleading_claim;
    std::string correct_assertion;

    bool operator==(const Correction&) const = default;
};

/// Per-sentence verifier output: factuality label, confidence in [0,1], and
/// an optional correction (present only for sentences judged non-factual).
struct SentenceVerdict {
    int index = 0;  // 1-based sentence number
    std::string sentence;
    bool factual = true;
    double confidence = 0.0;
    std::optional<Correction> correction;

    bool operator==(const SentenceVerdict&) const = default;
};

}  // namespace starsim
