#include "relbench/template.hpp"

#include "relbench/error.hpp"

#include <cctype>
#include <charconv>

namespace relbench {

namespace {

bool known_filter(std::string_view f) { return f.empty() || f == "decade" || f == "article"; }

// Calls `on_text` for literal runs and `on_placeholder` for each placeholder.
template <typename OnText, typename OnPlaceholder>
void scan(std::string_view tmpl, OnText on_text, OnPlaceholder on_placeholder) {
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const auto open = tmpl.find('{', pos);
    if (open == std::string_view::npos) {
      on_text(tmpl.substr(pos));
      return;
    }
    on_text(tmpl.substr(pos, open - pos));
    const auto close = tmpl.find('}', open);
    if (close == std::string_view::npos) {
      throw ConfigError("template has an unclosed '{': " + std::string(tmpl));
    }
    std::string_view body = tmpl.substr(open + 1, close - open - 1);
    Placeholder p;
    const auto bar = body.find('|');
    p.name = std::string(body.substr(0, bar));
    if (bar != std::string_view::npos) p.filter = std::string(body.substr(bar + 1));
    if (p.name.empty()) throw ConfigError("template has an empty placeholder: " + std::string(tmpl));
    if (!known_filter(p.filter)) {
      throw ConfigError("template uses unknown filter '" + p.filter + "': " + std::string(tmpl));
    }
    on_placeholder(p);
    pos = close + 1;
  }
}

}  // namespace

std::vector<Placeholder> placeholders(std::string_view tmpl) {
  std::vector<Placeholder> out;
  scan(tmpl, [](std::string_view) {}, [&](const Placeholder& p) { out.push_back(p); });
  return out;
}

std::string render_template(std::string_view tmpl, const PlaceholderLookup& lookup) {
  std::string out;
  scan(
      tmpl, [&](std::string_view text) { out.append(text); },
      [&](const Placeholder& p) {
        auto value = lookup(p.name);
        if (!value) throw ConfigError("no value for placeholder '{" + p.name + "}'");
        if (p.filter == "decade") {
          auto d = decade_of(*value);
          if (!d) throw ConfigError("decade filter needs a year, got '" + *value + "'");
          out += *d;
        } else if (p.filter == "article") {
          out += with_article(*value);
        } else {
          out += *value;
        }
      });
  return out;
}

std::optional<std::string> decade_of(std::string_view year) {
  long y = 0;
  auto [ptr, ec] = std::from_chars(year.data(), year.data() + year.size(), y);
  if (ec != std::errc{} || ptr != year.data() + year.size() || y < 0) return std::nullopt;
  return std::to_string(y - y % 10) + "s";
}

std::string with_article(std::string_view word) {
  if (word.empty()) return std::string(word);
  const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(word.front())));
  const bool vowel = c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
  return (vowel ? "an " : "a ") + std::string(word);
}

}  // namespace relbench
