#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "asag/rubric.hpp"

namespace asag::corpus {

struct Question {
  std::string question_id;
  std::string prompt_text;
  std::optional<std::string> reference_solution;
  std::optional<Rubric> rubric;
};

// Raw gold score as it appears in the source data: numeric for range
// scales, a label string for categorical ones.
using RawScore = std::variant<double, std::string>;

struct Submission {
  std::string submission_id;
  std::string question_id;
  std::string response_text;
  RawScore gold_raw;
  double gold_percent = 0.0;  // derived from gold_raw via the dataset scale
  std::optional<std::map<int, bool>> gold_items;
};

struct ScoreScale {
  enum class Kind { NumericRange, LabelMap };
  Kind kind = Kind::NumericRange;
  double min = 0.0;
  double max = 100.0;
  std::map<std::string, double> labels;  // label -> percent, LabelMap only

  void validate() const;
  nlohmann::json to_json() const;
  static ScoreScale from_json(const nlohmann::json& j);
};

class Dataset {
 public:
  Dataset() = default;
  Dataset(std::string name, std::vector<Question> questions,
          std::vector<Submission> submissions, ScoreScale scale);

  const std::string& name() const { return name_; }
  const ScoreScale& scale() const { return scale_; }
  const std::vector<Question>& questions() const { return questions_; }
  const std::vector<Submission>& submissions() const { return submissions_; }

  const Question& question(const std::string& question_id) const;
  const Submission& submission(const std::string& submission_id) const;
  bool has_question(const std::string& question_id) const;
  bool has_submission(const std::string& submission_id) const;

  bool operator==(const Dataset& other) const;

 private:
  void build_index();  // validates uniqueness, references, gold_items keys

  std::string name_;
  ScoreScale scale_;
  std::vector<Question> questions_;
  std::vector<Submission> submissions_;
  std::map<std::string, std::size_t> question_index_;
  std::map<std::string, std::size_t> submission_index_;
};

// Linear map of raw onto [0,100] for numeric ranges, table lookup for
// label maps. Throws ValidationError for out-of-range or unknown input.
double normalize_score(const RawScore& raw, const ScoreScale& scale);

// Reads the normalized JSONL schema: one JSON object per line, questions
// and submissions distinguished by "type". Errors carry the line number.
Dataset load_dataset(const std::filesystem::path& path, const ScoreScale& scale,
                     const std::string& name = "");

// Writes the normalized JSONL schema with canonical (key-sorted) object
// serialization, so identical datasets produce identical bytes.
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);

struct DatasetDescriptor {
  std::string name;
  ScoreScale scale;
};

DatasetDescriptor load_descriptor(const std::filesystem::path& path);

// Leave-one-out example pool: all submissions of the question except
// `exclude`, sorted ascending by submission_id.
std::vector<const Submission*> example_pool(const Dataset& dataset,
                                            const std::string& question_id,
                                            const std::string& exclude);

bool operator==(const Question& a, const Question& b);
bool operator==(const Submission& a, const Submission& b);
bool operator==(const ScoreScale& a, const ScoreScale& b);

}  // namespace asag::corpus
