#include "dgt/text_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "dgt/error.hpp"
#include "dgt/rng.hpp"

namespace dgt {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw Error("write failed for '" + tmp.string() + "'");
    }
  }
  std::filesystem::rename(tmp, path);
}

namespace {

template <class Fn>
void for_each_line(std::string_view content, Fn fn) {
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    fn(line);
    pos = end + 1;
  }
}

}  // namespace

std::vector<TokenSeq> read_lines(const std::filesystem::path& path) {
  std::vector<TokenSeq> out;
  for_each_line(read_file(path), [&](std::string_view line) { out.push_back(split_tokens(line)); });
  return out;
}

std::string format_lines(const std::vector<TokenSeq>& lines) {
  std::string out;
  for (const auto& l : lines) {
    out += join_tokens(l);
    out += '\n';
  }
  return out;
}

std::vector<Document> parse_documents(std::string_view content) {
  std::vector<Document> docs;
  Document current;
  auto flush = [&] {
    if (current.sentences.empty()) return;
    current.doc_id = std::to_string(docs.size());
    docs.push_back(std::move(current));
    current = Document{};
  };
  for_each_line(content, [&](std::string_view line) {
    TokenSeq toks = split_tokens(line);
    if (toks.empty()) {
      flush();
    } else {
      current.sentences.push_back(std::move(toks));
    }
  });
  flush();
  return docs;
}

std::vector<Document> read_documents(const std::filesystem::path& path) {
  return parse_documents(read_file(path));
}

std::string format_documents(const std::vector<Document>& docs) {
  std::string out;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (i > 0) out += '\n';
    for (const auto& s : docs[i].sentences) {
      out += join_tokens(s);
      out += '\n';
    }
  }
  return out;
}

std::string format_flat_documents(const std::vector<Document>& docs) {
  std::string out;
  for (const auto& d : docs) {
    out += join_tokens(d.flatten());
    out += '\n';
  }
  return out;
}

std::string fnv1a64_hex(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

}  // namespace dgt
