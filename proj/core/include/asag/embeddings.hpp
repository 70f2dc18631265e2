#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "asag/corpus.hpp"

namespace asag::embeddings {

using EmbeddingVector = std::vector<double>;

// Throws ValidationError on dimension mismatch.
double euclidean_distance(const EmbeddingVector& a, const EmbeddingVector& b);

class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  // Deterministic for a fixed backend. Throws ValidationError on empty
  // text, TransportError on transport failure.
  virtual EmbeddingVector embed(const std::string& text) = 0;
  virtual std::size_t dimension() const = 0;
  virtual std::string tag() const = 0;
};

// Deterministic pseudo-random unit vector derived from an FNV hash of the
// text; lets the whole pipeline run offline.
class MockEmbeddingBackend : public EmbeddingBackend {
 public:
  explicit MockEmbeddingBackend(std::size_t dimension = 32);
  EmbeddingVector embed(const std::string& text) override;
  std::size_t dimension() const override { return dimension_; }
  std::string tag() const override;

 private:
  std::size_t dimension_;
};

struct HttpEmbeddingConfig {
  std::string base_url;       // e.g. https://api.openai.com/v1
  std::string model;
  std::string api_key;
  int timeout_seconds = 60;
  int max_attempts = 3;
};

// OpenAI-compatible POST {base_url}/embeddings client with exponential
// backoff on transport errors and 429s.
class HttpEmbeddingBackend : public EmbeddingBackend {
 public:
  explicit HttpEmbeddingBackend(HttpEmbeddingConfig config);
  EmbeddingVector embed(const std::string& text) override;
  std::size_t dimension() const override { return dimension_; }
  std::string tag() const override;

 private:
  HttpEmbeddingConfig config_;
  std::size_t dimension_ = 0;  // learned from the first response
};

// In-memory submission_id -> vector map with a JSONL cache file format.
// Concurrent reads are safe; cache fill is single-writer by contract.
class EmbeddingStore {
 public:
  EmbeddingStore() = default;
  EmbeddingStore(std::size_t dimension, std::string backend_tag);

  void put(const std::string& submission_id, EmbeddingVector vector);
  const EmbeddingVector* find(const std::string& submission_id) const;
  const EmbeddingVector& at(const std::string& submission_id) const;
  bool contains(const std::string& submission_id) const { return find(submission_id) != nullptr; }

  std::size_t size() const { return entries_.size(); }
  std::size_t dimension() const { return dimension_; }
  const std::string& backend_tag() const { return backend_tag_; }

  // Cache lines: {"submission_id","backend_tag","dimension","values":[...]}.
  // Loading skips entries whose backend_tag differs.
  void load_cache(const std::filesystem::path& path);
  void save_cache(const std::filesystem::path& path) const;

 private:
  std::map<std::string, EmbeddingVector> entries_;
  std::size_t dimension_ = 0;
  std::string backend_tag_;
};

struct SelectionStrategy {
  enum class Kind { None, Random, Rag };
  Kind kind = Kind::None;
  std::size_t k = 5;
  std::optional<std::uint64_t> seed;  // Random only

  static SelectionStrategy parse(const std::string& text, std::size_t k,
                                 std::optional<std::uint64_t> seed);
  std::string kind_name() const;
};

struct SelectionResult {
  std::vector<const corpus::Submission*> selected;
  bool pool_truncated = false;  // |pool| < k for Random/Rag
};

// None: empty. Random: k distinct seeded draws, in draw order. Rag: k
// nearest pool members by Euclidean distance to the target's embedding,
// ascending, ties broken by submission_id.
SelectionResult select_examples(const SelectionStrategy& strategy,
                                const std::vector<const corpus::Submission*>& pool,
                                const corpus::Submission& target,
                                const EmbeddingStore& store);

}  // namespace asag::embeddings
