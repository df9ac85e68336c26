#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace gor {

struct Document {
  std::string doc_id;
  std::string text;
  std::vector<std::string> reference_summaries;
};

/// Tokens plus per-token (start, end) byte offsets into the source text.
struct TokenSeq {
  std::vector<std::string> tokens;
  std::vector<std::pair<std::size_t, std::size_t>> offsets;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
};

struct Chunk {
  std::string chunk_id;
  std::string doc_id;
  std::size_t token_begin = 0;  // half-open [token_begin, token_end)
  std::size_t token_end = 0;
  std::string text;
};

/// Deterministic whitespace-plus-punctuation splitter. Runs of alphanumeric
/// characters form one token; every other non-space byte is its own token.
TokenSeq tokenize(const std::string& text);

/// Sliding token windows of `chunk_size` with `overlap` tokens shared between
/// consecutive windows. The final partial chunk is kept.
std::vector<Chunk> split_chunks(const Document& doc, std::size_t chunk_size = 256,
                                std::size_t overlap = 32);

/// Reads a JSON-lines dataset: {"doc_id": str, "text": str, "summaries": [str,...]}.
std::vector<Document> load_documents(const std::string& path);

}  // namespace gor
