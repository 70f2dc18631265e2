#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "asag/corpus.hpp"
#include "asag/rubric.hpp"

namespace asag::prompting {

// A grading prompt is assembled from four components, in this order.
enum class Component { Instructions = 0, Question = 1, Examples = 2, Submission = 3 };

struct PromptTemplate {
  std::string template_id;
  // Generic grading instructions, identical across courses and datasets;
  // must state the JSON output contract (integer grade 0-100 + feedback).
  std::string instructions_text;
  // Placeholders {response},{grade},{feedback}.
  std::string example_block_format;
  // Placeholders {response},{items},{feedback}; used in rubric mode.
  std::string rubric_example_block_format;
  // Placeholders {instructions},{question},{examples},{submission} and
  // optionally {rubric} (required for rubric prompts, after {question}).
  std::string layout_text;

  // Built-in defaults; also shipped as text assets under assets/templates.
  static PromptTemplate builtin_grading();
  static PromptTemplate builtin_rubric();

  // Sectioned plain-text format: lines of "--- <section> ---" introduce
  // the instructions / example / rubric_example / layout sections.
  static PromptTemplate load(const std::filesystem::path& path);

  // Throws ValidationError when a required placeholder is missing or the
  // instructions omit the output contract keywords.
  void validate(bool rubric_mode) const;
};

struct Span {
  std::size_t offset = 0;
  std::size_t length = 0;
  bool operator==(const Span&) const = default;
};

struct AssembledPrompt {
  std::string text;
  // One span per component, in layout order, disjoint. For rubric prompts
  // the Question span extends over the rendered rubric block.
  std::array<Span, 4> component_spans;
  std::vector<std::string> example_ids;

  std::string_view component(Component c) const;
};

struct GradedExample {
  const corpus::Submission* submission = nullptr;
  double grade_percent = 0.0;
  std::optional<std::string> feedback;
};

struct RubricExample {
  const corpus::Submission* submission = nullptr;
  std::map<int, bool> items;
  std::optional<std::string> feedback;
};

// Rendered in place of {examples} when the example list is empty.
extern const std::string kEmptyExamplesMarker;

// Assembles the scalar-grading prompt: instructions, question, example
// blocks (grade rendered as an integer 0-100), target response. Reference
// solutions are never included.
AssembledPrompt build_grading_prompt(const PromptTemplate& tmpl,
                                     const corpus::Question& question,
                                     const std::vector<GradedExample>& examples,
                                     const corpus::Submission& target);

// Rubric variant: enumerates every item (number, name, explanation),
// instructs per-item true/false decisions; example blocks show per-item
// selections instead of a scalar grade.
AssembledPrompt build_rubric_prompt(const PromptTemplate& tmpl,
                                    const corpus::Question& question,
                                    const Rubric& rubric,
                                    const std::vector<RubricExample>& examples,
                                    const corpus::Submission& target);

}  // namespace asag::prompting
