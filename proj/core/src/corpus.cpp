#include "asag/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "asag/errors.hpp"

namespace asag::corpus {

using nlohmann::json;

void ScoreScale::validate() const {
  if (kind == Kind::NumericRange) {
    if (!(min < max)) {
      throw ValidationError("numeric-range scale requires min < max");
    }
  } else {
    if (labels.empty()) {
      throw ValidationError("label-map scale requires a non-empty label table");
    }
    for (const auto& [label, value] : labels) {
      if (value < 0.0 || value > 100.0) {
        throw ValidationError("label-map value for \"" + label +
                              "\" must be in [0,100]");
      }
    }
  }
}

json ScoreScale::to_json() const {
  json j;
  if (kind == Kind::NumericRange) {
    j["kind"] = "numeric-range";
    j["min"] = min;
    j["max"] = max;
  } else {
    j["kind"] = "label-map";
    j["labels"] = labels;
  }
  return j;
}

ScoreScale ScoreScale::from_json(const json& j) {
  ScoreScale scale;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "numeric-range") {
    scale.kind = Kind::NumericRange;
    scale.min = j.at("min").get<double>();
    scale.max = j.at("max").get<double>();
  } else if (kind == "label-map") {
    scale.kind = Kind::LabelMap;
    scale.labels = j.at("labels").get<std::map<std::string, double>>();
  } else {
    throw ValidationError("unknown scale kind \"" + kind + "\"");
  }
  scale.validate();
  return scale;
}

double normalize_score(const RawScore& raw, const ScoreScale& scale) {
  if (scale.kind == ScoreScale::Kind::NumericRange) {
    if (!std::holds_alternative<double>(raw)) {
      throw ValidationError("numeric-range scale requires a numeric gold score");
    }
    const double value = std::get<double>(raw);
    if (!std::isfinite(value) || value < scale.min || value > scale.max) {
      std::ostringstream msg;
      msg << "gold score " << value << " outside scale [" << scale.min << ","
          << scale.max << "]";
      throw ValidationError(msg.str());
    }
    // Divide before scaling so the endpoints map to exactly 0 and 100.
    return (value - scale.min) / (scale.max - scale.min) * 100.0;
  }
  if (!std::holds_alternative<std::string>(raw)) {
    throw ValidationError("label-map scale requires a label gold score");
  }
  const std::string& label = std::get<std::string>(raw);
  auto it = scale.labels.find(label);
  if (it == scale.labels.end()) {
    throw ValidationError("unknown score label \"" + label + "\"");
  }
  return it->second;
}

Dataset::Dataset(std::string name, std::vector<Question> questions,
                 std::vector<Submission> submissions, ScoreScale scale)
    : name_(std::move(name)),
      scale_(std::move(scale)),
      questions_(std::move(questions)),
      submissions_(std::move(submissions)) {
  scale_.validate();
  build_index();
}

void Dataset::build_index() {
  question_index_.clear();
  submission_index_.clear();
  for (std::size_t i = 0; i < questions_.size(); ++i) {
    const auto& q = questions_[i];
    if (q.prompt_text.empty()) {
      throw ValidationError("question \"" + q.question_id +
                            "\" has an empty prompt_text");
    }
    if (q.rubric) q.rubric->validate();
    if (!question_index_.emplace(q.question_id, i).second) {
      throw ValidationError("duplicate question_id \"" + q.question_id + "\"");
    }
  }
  std::vector<std::string> dangling;
  for (std::size_t i = 0; i < submissions_.size(); ++i) {
    const auto& s = submissions_[i];
    if (!submission_index_.emplace(s.submission_id, i).second) {
      throw ValidationError("duplicate submission_id \"" + s.submission_id + "\"");
    }
    if (s.gold_percent < 0.0 || s.gold_percent > 100.0) {
      throw ValidationError("submission \"" + s.submission_id +
                            "\" has gold_percent outside [0,100]");
    }
    auto qit = question_index_.find(s.question_id);
    if (qit == question_index_.end()) {
      dangling.push_back(s.submission_id);
      continue;
    }
    if (s.gold_items) {
      const auto& q = questions_[qit->second];
      if (!q.rubric) {
        throw ValidationError("submission \"" + s.submission_id +
                              "\" carries gold_items but question \"" +
                              s.question_id + "\" has no rubric");
      }
      const auto expected = q.rubric->item_numbers();
      std::vector<int> got;
      got.reserve(s.gold_items->size());
      for (const auto& [number, _] : *s.gold_items) got.push_back(number);
      if (got != expected) {
        throw ValidationError("submission \"" + s.submission_id +
                              "\" gold_items keys do not match the rubric of \"" +
                              s.question_id + "\"");
      }
    }
  }
  if (!dangling.empty()) {
    std::ostringstream msg;
    msg << "submissions reference unknown questions:";
    for (const auto& id : dangling) msg << " " << id;
    throw ValidationError(msg.str());
  }
}

const Question& Dataset::question(const std::string& question_id) const {
  auto it = question_index_.find(question_id);
  if (it == question_index_.end()) {
    throw ValidationError("unknown question_id \"" + question_id + "\"");
  }
  return questions_[it->second];
}

const Submission& Dataset::submission(const std::string& submission_id) const {
  auto it = submission_index_.find(submission_id);
  if (it == submission_index_.end()) {
    throw ValidationError("unknown submission_id \"" + submission_id + "\"");
  }
  return submissions_[it->second];
}

bool Dataset::has_question(const std::string& question_id) const {
  return question_index_.count(question_id) > 0;
}

bool Dataset::has_submission(const std::string& submission_id) const {
  return submission_index_.count(submission_id) > 0;
}

bool Dataset::operator==(const Dataset& other) const {
  return name_ == other.name_ && scale_ == other.scale_ &&
         questions_ == other.questions_ && submissions_ == other.submissions_;
}

namespace {

json raw_score_to_json(const RawScore& raw) {
  if (std::holds_alternative<double>(raw)) return std::get<double>(raw);
  return std::get<std::string>(raw);
}

RawScore raw_score_from_json(const json& j, int line_number) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  throw ValidationError("line " + std::to_string(line_number) +
                        ": field \"gold_raw\" must be a number or a string");
}

std::string require_string(const json& j, const char* field, int line_number) {
  if (!j.contains(field) || !j[field].is_string()) {
    throw ValidationError("line " + std::to_string(line_number) +
                          ": missing or non-string field \"" + field + "\"");
  }
  return j[field].get<std::string>();
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& path, const ScoreScale& scale,
                     const std::string& name) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open dataset file " + path.string());
  }
  std::vector<Question> questions;
  std::vector<Submission> submissions;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ValidationError("line " + std::to_string(line_number) +
                            ": invalid JSON: " + e.what());
    }
    const std::string type = require_string(j, "type", line_number);
    if (type == "question") {
      Question q;
      q.question_id = require_string(j, "question_id", line_number);
      q.prompt_text = require_string(j, "prompt_text", line_number);
      if (j.contains("reference_solution")) {
        q.reference_solution = require_string(j, "reference_solution", line_number);
      }
      if (j.contains("rubric")) {
        try {
          q.rubric = Rubric::from_json(j["rubric"]);
        } catch (const ValidationError& e) {
          throw ValidationError("line " + std::to_string(line_number) + ": " +
                                e.what());
        }
      }
      questions.push_back(std::move(q));
    } else if (type == "submission") {
      Submission s;
      s.submission_id = require_string(j, "submission_id", line_number);
      s.question_id = require_string(j, "question_id", line_number);
      s.response_text = require_string(j, "response_text", line_number);
      if (!j.contains("gold_raw")) {
        throw ValidationError("line " + std::to_string(line_number) +
                              ": missing field \"gold_raw\"");
      }
      s.gold_raw = raw_score_from_json(j["gold_raw"], line_number);
      try {
        s.gold_percent = normalize_score(s.gold_raw, scale);
      } catch (const ValidationError& e) {
        throw ValidationError("line " + std::to_string(line_number) +
                              ": field \"gold_raw\": " + e.what());
      }
      if (j.contains("gold_items")) {
        if (!j["gold_items"].is_object()) {
          throw ValidationError("line " + std::to_string(line_number) +
                                ": field \"gold_items\" must be an object");
        }
        std::map<int, bool> items;
        for (const auto& [key, value] : j["gold_items"].items()) {
          if (!value.is_boolean()) {
            throw ValidationError("line " + std::to_string(line_number) +
                                  ": gold_items values must be booleans");
          }
          try {
            items[std::stoi(key)] = value.get<bool>();
          } catch (const std::exception&) {
            throw ValidationError("line " + std::to_string(line_number) +
                                  ": gold_items key \"" + key +
                                  "\" is not an integer");
          }
        }
        s.gold_items = std::move(items);
      }
      submissions.push_back(std::move(s));
    } else {
      throw ValidationError("line " + std::to_string(line_number) +
                            ": unknown record type \"" + type + "\"");
    }
  }
  return Dataset(name.empty() ? path.stem().string() : name, std::move(questions),
                 std::move(submissions), scale);
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ValidationError("cannot open output file " + path.string());
  }
  for (const auto& q : dataset.questions()) {
    json j{{"type", "question"},
           {"question_id", q.question_id},
           {"prompt_text", q.prompt_text}};
    if (q.reference_solution) j["reference_solution"] = *q.reference_solution;
    if (q.rubric) j["rubric"] = q.rubric->to_json();
    out << j.dump() << "\n";
  }
  for (const auto& s : dataset.submissions()) {
    json j{{"type", "submission"},
           {"submission_id", s.submission_id},
           {"question_id", s.question_id},
           {"response_text", s.response_text},
           {"gold_raw", raw_score_to_json(s.gold_raw)}};
    if (s.gold_items) {
      json items = json::object();
      for (const auto& [number, selected] : *s.gold_items) {
        items[std::to_string(number)] = selected;
      }
      j["gold_items"] = items;
    }
    out << j.dump() << "\n";
  }
}

DatasetDescriptor load_descriptor(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open descriptor file " + path.string());
  }
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("descriptor " + path.string() + ": invalid JSON: " +
                          e.what());
  }
  DatasetDescriptor desc;
  desc.name = j.at("name").get<std::string>();
  desc.scale = ScoreScale::from_json(j.at("scale"));
  return desc;
}

std::vector<const Submission*> example_pool(const Dataset& dataset,
                                            const std::string& question_id,
                                            const std::string& exclude) {
  if (!dataset.has_question(question_id)) {
    throw ValidationError("unknown question_id \"" + question_id + "\"");
  }
  std::vector<const Submission*> pool;
  for (const auto& s : dataset.submissions()) {
    if (s.question_id == question_id && s.submission_id != exclude) {
      pool.push_back(&s);
    }
  }
  std::sort(pool.begin(), pool.end(), [](const Submission* a, const Submission* b) {
    return a->submission_id < b->submission_id;
  });
  return pool;
}

bool operator==(const Question& a, const Question& b) {
  return a.question_id == b.question_id && a.prompt_text == b.prompt_text &&
         a.reference_solution == b.reference_solution && a.rubric == b.rubric;
}

bool operator==(const Submission& a, const Submission& b) {
  return a.submission_id == b.submission_id && a.question_id == b.question_id &&
         a.response_text == b.response_text && a.gold_raw == b.gold_raw &&
         a.gold_percent == b.gold_percent && a.gold_items == b.gold_items;
}

bool operator==(const ScoreScale& a, const ScoreScale& b) {
  return a.kind == b.kind && a.min == b.min && a.max == b.max &&
         a.labels == b.labels;
}

}  // namespace asag::corpus
