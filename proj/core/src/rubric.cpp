#include "asag/rubric.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "asag/errors.hpp"

namespace asag {

Rubric::Rubric(std::vector<RubricItem> items) : items_(std::move(items)) {}

std::vector<int> Rubric::item_numbers() const {
  std::vector<int> numbers;
  numbers.reserve(items_.size());
  for (const auto& item : items_) numbers.push_back(item.number);
  return numbers;
}

double Rubric::total_weight() const {
  double total = 0.0;
  for (const auto& item : items_) total += item.weight;
  return total;
}

const RubricItem& Rubric::item(int number) const {
  for (const auto& item : items_) {
    if (item.number == number) return item;
  }
  throw ValidationError("rubric has no item numbered " + std::to_string(number));
}

const RubricItem* Rubric::find_by_name(const std::string& name) const {
  const std::string wanted = normalize_item_name(name);
  for (const auto& item : items_) {
    if (normalize_item_name(item.name) == wanted) return &item;
  }
  return nullptr;
}

void Rubric::validate() const {
  if (items_.empty()) throw ValidationError("rubric must have at least one item");
  for (std::size_t i = 0; i < items_.size(); ++i) {
    const auto& item = items_[i];
    if (item.number != static_cast<int>(i) + 1) {
      throw ValidationError("rubric item numbers must be contiguous from 1; got " +
                            std::to_string(item.number) + " at position " +
                            std::to_string(i + 1));
    }
    if (item.name.empty()) {
      throw ValidationError("rubric item " + std::to_string(item.number) +
                            " has an empty name");
    }
    if (item.weight < 0.0) {
      throw ValidationError("rubric item " + std::to_string(item.number) +
                            " has a negative weight");
    }
  }
  if (total_weight() <= 0.0) {
    throw ValidationError("rubric weights must not all be zero");
  }
}

nlohmann::json Rubric::to_json() const {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& item : items_) {
    items.push_back({{"number", item.number},
                     {"name", item.name},
                     {"explanation", item.explanation},
                     {"weight", item.weight}});
  }
  return {{"items", items}};
}

Rubric Rubric::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("items") || !j["items"].is_array()) {
    throw ValidationError("rubric JSON must be an object with an \"items\" array");
  }
  std::vector<RubricItem> items;
  for (const auto& entry : j["items"]) {
    RubricItem item;
    item.number = entry.at("number").get<int>();
    item.name = entry.at("name").get<std::string>();
    item.explanation = entry.value("explanation", std::string{});
    item.weight = entry.value("weight", 1.0);
    items.push_back(std::move(item));
  }
  Rubric rubric(std::move(items));
  rubric.validate();
  return rubric;
}

bool Rubric::operator==(const Rubric& other) const {
  return items_ == other.items_;
}

bool operator==(const RubricItem& a, const RubricItem& b) {
  return a.number == b.number && a.name == b.name &&
         a.explanation == b.explanation && a.weight == b.weight;
}

std::string normalize_item_name(const std::string& name) {
  std::string out;
  out.reserve(name.size());
  bool pending_space = false;
  for (unsigned char c : name) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

}  // namespace asag
