#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace relbench {

/// One `{name}` or `{name|filter}` occurrence in a template string.
struct Placeholder {
  std::string name;
  std::string filter;  // empty when absent
};

/// Placeholders in order of appearance. Throws ConfigError on an unclosed
/// brace, an empty name or an unknown filter. Known filters: `decade`
/// (1958 -> 1950s) and `article` (prefixes "a"/"an").
std::vector<Placeholder> placeholders(std::string_view tmpl);

using PlaceholderLookup = std::function<std::optional<std::string>(std::string_view name)>;

/// Substitutes every placeholder. Throws ConfigError when `lookup` has no
/// value for a name or a filter cannot apply (decade of a non-year).
std::string render_template(std::string_view tmpl, const PlaceholderLookup& lookup);

/// "1958" -> "1950s". Returns nullopt for anything that is not a
/// non-negative integer year.
std::optional<std::string> decade_of(std::string_view year);

/// "animation" -> "an animation", "non-animation" -> "a non-animation".
std::string with_article(std::string_view word);

}  // namespace relbench
