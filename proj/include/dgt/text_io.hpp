#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "dgt/corpus.hpp"
#include "dgt/tokens.hpp"

namespace dgt {

std::string read_file(const std::filesystem::path& path);

/// Writes to `<path>.tmp` and renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// One tokenized line per entry; trailing newline optional.
std::vector<TokenSeq> read_lines(const std::filesystem::path& path);
std::string format_lines(const std::vector<TokenSeq>& lines);

/// Sentence per line, blank line between documents. Documents are named by
/// their 0-based ordinal in the file.
std::vector<Document> parse_documents(std::string_view content);
std::vector<Document> read_documents(const std::filesystem::path& path);
std::string format_documents(const std::vector<Document>& docs);

/// One document per line, sentences flattened.
std::string format_flat_documents(const std::vector<Document>& docs);

std::string fnv1a64_hex(std::string_view bytes);

}  // namespace dgt
