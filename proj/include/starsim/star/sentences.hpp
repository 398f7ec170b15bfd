#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace starsim {

/// Splits prose into sentences for per-sentence fact checking. Boundaries are
/// '.', '!' or '?' (plus any closing quotes/brackets) followed by whitespace
/// or end of text. Periods after common abbreviations ("e.g.", "Dr.", ...)
/// and after a lone letter (initials, option labels like "A.") do not split;
/// decimals never split because no whitespace follows the dot. Sentences come
/// back trimmed, in order, with empty pieces dropped; a trailing fragment
/// without a terminator still counts.
std::vector<std::string> split_sentences(std::string_view text);

}  // namespace starsim
