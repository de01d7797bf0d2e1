#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mci::util {

std::string to_lower(std::string_view s);
std::string to_upper(std::string_view s);
std::string trim(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool starts_with_icase(std::string_view s, std::string_view prefix);
std::vector<std::string> split_lines(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
void replace_all(std::string& s, std::string_view from, std::string_view to);

/// Lowercased alphanumeric runs; everything else separates tokens.
std::vector<std::string> alnum_tokens(std::string_view s);

/// Lowercase hex SHA-256 of the given bytes.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
/// Writes through a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// "175495" -> "175,495"; keeps sign and fractional part.
std::string group_thousands(std::string_view number);

/// Shortest decimal text that round-trips the double.
std::string format_double(double v);

std::optional<double> parse_number(std::string_view s);

struct FencedBlock {
    std::string tag;  // info string after the opening fence, lower-case
    std::string body;
};

/// Markdown ``` blocks in order of appearance; an unclosed block runs to the end.
std::vector<FencedBlock> fenced_blocks(std::string_view text);

/// Body of the last ```sql (or untagged) block, else the trimmed text itself.
std::string extract_sql(std::string_view text);

}  // namespace mci::util
