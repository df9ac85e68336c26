#include "gor/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <unordered_set>

#include "gor/util.hpp"
#include "json.hpp"

namespace gor {

namespace {

bool is_word_byte(unsigned char c) {
  return std::isalnum(c) || c == '_' || c >= 0x80;
}

bool is_space_byte(unsigned char c) { return std::isspace(c); }

}  // namespace

TokenSeq tokenize(const std::string& text) {
  TokenSeq seq;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    if (is_space_byte(c)) {
      ++i;
      continue;
    }
    std::size_t begin = i;
    if (is_word_byte(c)) {
      while (i < n && is_word_byte(static_cast<unsigned char>(text[i]))) ++i;
    } else {
      ++i;  // punctuation: one byte per token
    }
    seq.tokens.push_back(text.substr(begin, i - begin));
    seq.offsets.emplace_back(begin, i);
  }
  return seq;
}

std::vector<Chunk> split_chunks(const Document& doc, std::size_t chunk_size,
                                std::size_t overlap) {
  if (chunk_size <= overlap) {
    throw GorError("corpus", "chunk_size must exceed overlap (got size=" +
                                 std::to_string(chunk_size) +
                                 ", overlap=" + std::to_string(overlap) + ")");
  }
  const TokenSeq toks = tokenize(doc.text);
  std::vector<Chunk> chunks;
  if (toks.empty()) return chunks;

  const std::size_t stride = chunk_size - overlap;
  std::size_t start = 0;
  while (true) {
    const std::size_t end = std::min(start + chunk_size, toks.size());
    Chunk ch;
    ch.doc_id = doc.doc_id;
    ch.chunk_id = doc.doc_id + "#c" + std::to_string(chunks.size());
    ch.token_begin = start;
    ch.token_end = end;
    ch.text = doc.text.substr(toks.offsets[start].first,
                              toks.offsets[end - 1].second - toks.offsets[start].first);
    chunks.push_back(std::move(ch));
    if (end == toks.size()) break;
    start += stride;
  }
  return chunks;
}

std::vector<Document> load_documents(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw GorError("io", "cannot open dataset: " + path);

  std::vector<Document> docs;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw GorError("corpus", "malformed record at line " + std::to_string(lineno) + ": " +
                                   e.what());
    }
    if (!j.contains("doc_id") || !j["doc_id"].is_string() || !j.contains("text") ||
        !j["text"].is_string()) {
      throw GorError("corpus", "malformed record at line " + std::to_string(lineno) +
                                   ": doc_id and text are required strings");
    }
    Document doc;
    doc.doc_id = j["doc_id"].get<std::string>();
    doc.text = j["text"].get<std::string>();
    if (tokenize(doc.text).empty()) {
      throw GorError("corpus", "malformed record at line " + std::to_string(lineno) +
                                   ": text is empty after whitespace normalization");
    }
    if (j.contains("summaries")) {
      for (const auto& s : j["summaries"]) doc.reference_summaries.push_back(s.get<std::string>());
    }
    if (!seen.insert(doc.doc_id).second) {
      throw GorError("corpus", "duplicate doc_id: " + doc.doc_id);
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

}  // namespace gor
