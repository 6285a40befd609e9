#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace xdlate::util {

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool icontains(std::string_view haystack, std::string_view needle);

std::vector<std::string> split(std::string_view s, char sep);

/// Lowercase, non-alphanumerics collapsed to single '-'; safe for ids and
/// file names.
std::string slug(std::string_view s);

/// FNV-1a 64-bit, returned as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view s);
std::uint64_t fnv1a(std::string_view s);

/// Replaces {{key}} markers; unknown markers are left in place.
std::string render_template(std::string_view tmpl,
                            const std::map<std::string, std::string>& vars);

std::string read_file(const std::string& path);          // throws on failure
void write_file(const std::string& path, std::string_view content);

/// Sentence-ish split preserving each piece as a verbatim substring view
/// into the original text (offset, length pairs).
struct Span {
  std::size_t offset;
  std::size_t length;
};
std::vector<Span> split_sentences(std::string_view text);

/// Deterministic 64-bit mix (splitmix64), used to derive scripted
/// embeddings and synthetic fixtures.
std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace xdlate::util
