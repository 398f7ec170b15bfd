#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "starsim/agents/strategy.hpp"
#include "starsim/star/verdict.hpp"

namespace starsim {

/// Raised when a verifier reply lacks the "<FACTUALITY ANALYSIS>:" or
/// "<ERROR ANALYSIS>:" marker. Callers retry once, then fail open.
class MissingMarkers : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The two marker-delimited blocks of a verifier reply.
struct VerifierRawOutput {
    std::string factuality_block;
    std::string error_block;
};

// Locates both markers or throws MissingMarkers.
VerifierRawOutput split_verifier_blocks(std::string_view raw);

/// Parses "k. Yes|No, rho" lines and error-analysis entries into verdicts for
/// sentences 1..n_sentences. Fail-open: sentences without a line default to
/// factual with zero confidence; confidences clamp to [0,1]; corrections
/// attach only to sentences marked non-factual; an error block of "null"
/// means no corrections. Sentence texts are left empty for the caller.
/// Throws MissingMarkers only when a marker is absent.
std::vector<SentenceVerdict> parse_verifier_output(std::string_view raw, int n_sentences);

/// Case-insensitive token scan for "strong"/"weak". Ambiguous or empty input
/// (both or neither present) yields Weak. Total: never fails.
JudgeOutcome parse_judge_output(std::string_view raw);

}  // namespace starsim
