#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace d2wfp {

/// Escapes backslash, tab, CR and LF so a value fits one TSV field.
std::string escape_field(std::string_view s);
std::string unescape_field(std::string_view s);

std::vector<std::string_view> split(std::string_view s, char sep);

std::string_view trim(std::string_view s) noexcept;

/// RFC 4180 quoting: fields containing comma, quote, CR or LF are quoted.
std::string csv_field(std::string_view s);

std::string html_escape(std::string_view s);

/// Decodes %XX escapes and '+' as space; invalid escapes are kept verbatim.
std::string percent_decode(std::string_view s);

struct KeyValue {
  std::string key;
  std::string value;
  int line = 0;
};

/// Parses "key = value" lines; blank lines and '#' comments are skipped.
/// Throws Error(Config) on a line without '=' or with an empty key.
std::vector<KeyValue> parse_key_values(std::string_view text);

}  // namespace d2wfp
