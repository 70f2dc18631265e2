#include "asag/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "asag/errors.hpp"
#include "asag/hash.hpp"
#include "http_util.hpp"

namespace asag::embeddings {

using nlohmann::json;

double euclidean_distance(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.size() != b.size()) {
    throw ValidationError("embedding dimension mismatch: " +
                          std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

MockEmbeddingBackend::MockEmbeddingBackend(std::size_t dimension)
    : dimension_(dimension) {
  if (dimension_ == 0) throw ValidationError("embedding dimension must be positive");
}

std::string MockEmbeddingBackend::tag() const {
  return "mock-d" + std::to_string(dimension_);
}

EmbeddingVector MockEmbeddingBackend::embed(const std::string& text) {
  if (text.empty()) throw ValidationError("cannot embed empty text");
  std::mt19937_64 gen(fnv1a64(text));
  auto uniform01 = [&gen] {
    // 53-bit mantissa draw in (0,1]; avoids distribution objects whose
    // output is implementation-defined.
    return (static_cast<double>(gen() >> 11) + 1.0) * 0x1p-53;
  };
  EmbeddingVector v(dimension_);
  for (std::size_t i = 0; i < dimension_; i += 2) {
    // Box-Muller
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    v[i] = r * std::cos(2.0 * std::numbers::pi * u2);
    if (i + 1 < dimension_) v[i + 1] = r * std::sin(2.0 * std::numbers::pi * u2);
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm == 0.0) {
    v[0] = 1.0;  // astronomically unlikely, but keep the unit-norm contract
    return v;
  }
  for (double& x : v) x /= norm;
  return v;
}

HttpEmbeddingBackend::HttpEmbeddingBackend(HttpEmbeddingConfig config)
    : config_(std::move(config)) {}

std::string HttpEmbeddingBackend::tag() const {
  return "http:" + config_.model;
}

EmbeddingVector HttpEmbeddingBackend::embed(const std::string& text) {
  if (text.empty()) throw ValidationError("cannot embed empty text");
  json body{{"model", config_.model}, {"input", text}};
  json response = detail::post_json_with_retry(config_.base_url, "/embeddings",
                                               config_.api_key, body,
                                               config_.timeout_seconds,
                                               config_.max_attempts);
  try {
    EmbeddingVector v = response.at("data").at(0).at("embedding").get<EmbeddingVector>();
    if (dimension_ == 0) dimension_ = v.size();
    if (v.size() != dimension_) {
      throw TransportError("embedding backend changed dimension mid-run");
    }
    return v;
  } catch (const json::exception& e) {
    throw TransportError(std::string("unexpected embeddings response shape: ") +
                         e.what());
  }
}

EmbeddingStore::EmbeddingStore(std::size_t dimension, std::string backend_tag)
    : dimension_(dimension), backend_tag_(std::move(backend_tag)) {}

void EmbeddingStore::put(const std::string& submission_id, EmbeddingVector vector) {
  if (dimension_ == 0) dimension_ = vector.size();
  if (vector.size() != dimension_) {
    throw ValidationError("vector for \"" + submission_id +
                          "\" has dimension " + std::to_string(vector.size()) +
                          ", store expects " + std::to_string(dimension_));
  }
  for (double x : vector) {
    if (!std::isfinite(x)) {
      throw ValidationError("vector for \"" + submission_id +
                            "\" contains a non-finite value");
    }
  }
  entries_[submission_id] = std::move(vector);
}

const EmbeddingVector* EmbeddingStore::find(const std::string& submission_id) const {
  auto it = entries_.find(submission_id);
  return it == entries_.end() ? nullptr : &it->second;
}

const EmbeddingVector& EmbeddingStore::at(const std::string& submission_id) const {
  const EmbeddingVector* v = find(submission_id);
  if (!v) {
    throw ValidationError("no embedding stored for submission \"" +
                          submission_id + "\"");
  }
  return *v;
}

void EmbeddingStore::load_cache(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return;  // a missing cache is an empty cache
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ValidationError("embedding cache line " + std::to_string(line_number) +
                            ": invalid JSON: " + e.what());
    }
    if (j.value("backend_tag", std::string{}) != backend_tag_) continue;
    put(j.at("submission_id").get<std::string>(),
        j.at("values").get<EmbeddingVector>());
  }
}

void EmbeddingStore::save_cache(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ValidationError("cannot open embedding cache file " + path.string());
  }
  for (const auto& [submission_id, values] : entries_) {
    json j{{"submission_id", submission_id},
           {"backend_tag", backend_tag_},
           {"dimension", values.size()},
           {"values", values}};
    out << j.dump() << "\n";
  }
}

SelectionStrategy SelectionStrategy::parse(const std::string& text, std::size_t k,
                                           std::optional<std::uint64_t> seed) {
  SelectionStrategy s;
  s.k = k;
  s.seed = seed;
  if (text == "none") {
    s.kind = Kind::None;
  } else if (text == "random") {
    s.kind = Kind::Random;
  } else if (text == "rag") {
    s.kind = Kind::Rag;
  } else {
    throw ValidationError("unknown selection strategy \"" + text +
                          "\" (expected none, random, or rag)");
  }
  return s;
}

std::string SelectionStrategy::kind_name() const {
  switch (kind) {
    case Kind::None: return "none";
    case Kind::Random: return "random";
    case Kind::Rag: return "rag";
  }
  return "none";
}

SelectionResult select_examples(const SelectionStrategy& strategy,
                                const std::vector<const corpus::Submission*>& pool,
                                const corpus::Submission& target,
                                const EmbeddingStore& store) {
  SelectionResult result;
  for (const auto* s : pool) {
    if (s->submission_id == target.submission_id) {
      throw ValidationError("example pool must not contain the target submission");
    }
  }
  if (strategy.kind == SelectionStrategy::Kind::None) return result;

  if (pool.size() < strategy.k) result.pool_truncated = true;
  const std::size_t take = std::min(strategy.k, pool.size());

  if (strategy.kind == SelectionStrategy::Kind::Random) {
    if (!strategy.seed) {
      throw ValidationError("Random selection requires a seed");
    }
    std::vector<std::size_t> indices(pool.size());
    for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
    std::mt19937_64 gen(*strategy.seed);
    // Partial Fisher-Yates; output order is draw order.
    for (std::size_t i = 0; i < take; ++i) {
      const std::size_t j = i + gen() % (indices.size() - i);
      std::swap(indices[i], indices[j]);
      result.selected.push_back(pool[indices[i]]);
    }
    return result;
  }

  // Rag: sort by (distance, submission_id), take k.
  const EmbeddingVector* target_vec = store.find(target.submission_id);
  if (!target_vec) {
    throw ValidationError("no embedding stored for submission \"" +
                          target.submission_id + "\"");
  }
  std::vector<std::pair<double, const corpus::Submission*>> scored;
  scored.reserve(pool.size());
  for (const auto* s : pool) {
    scored.emplace_back(euclidean_distance(store.at(s->submission_id), *target_vec), s);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return a.second->submission_id < b.second->submission_id;
  });
  for (std::size_t i = 0; i < take; ++i) result.selected.push_back(scored[i].second);
  return result;
}

}  // namespace asag::embeddings
