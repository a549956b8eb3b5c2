#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace relbench::text {

/// Trims outer whitespace and applies Unicode NFC. This is the canonical form
/// of database-side text values; comparisons on it stay case-sensitive.
std::string canonical(std::string_view raw);

/// Matching form used by the verifier: NFKC, case folding, diacritics
/// removed, apostrophes dropped, other punctuation and symbols turned into
/// spaces, whitespace collapsed.
std::string fold_for_match(std::string_view raw);

/// fold_for_match() split on spaces.
std::vector<std::string> match_tokens(std::string_view raw);

std::string trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);

}  // namespace relbench::text
