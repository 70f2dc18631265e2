#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace asag {

struct RubricItem {
  int number = 0;                // unique id used when matching model output
  std::string name;              // short description shown to students
  std::string explanation;       // detailed criteria for correctness
  double weight = 1.0;           // non-negative; equal weights by default
};

class Rubric {
 public:
  Rubric() = default;
  explicit Rubric(std::vector<RubricItem> items);

  const std::vector<RubricItem>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }

  // Item numbers in order; always 1..N contiguous after validation.
  std::vector<int> item_numbers() const;
  double total_weight() const;

  const RubricItem& item(int number) const;

  // Case-insensitive, whitespace-normalized name lookup. Returns nullptr
  // when no item matches.
  const RubricItem* find_by_name(const std::string& name) const;

  // Throws ValidationError: empty rubric, non-contiguous numbering,
  // empty names, negative or all-zero weights.
  void validate() const;

  nlohmann::json to_json() const;
  static Rubric from_json(const nlohmann::json& j);

  bool operator==(const Rubric& other) const;

 private:
  std::vector<RubricItem> items_;
};

// Lowercases and collapses runs of whitespace; used for rubric item name
// matching against model output.
std::string normalize_item_name(const std::string& name);

bool operator==(const RubricItem& a, const RubricItem& b);

}  // namespace asag
