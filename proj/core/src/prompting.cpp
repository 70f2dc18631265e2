#include "asag/prompting.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "asag/errors.hpp"

namespace asag::prompting {

const std::string kEmptyExamplesMarker = "(no graded examples provided)";

namespace {

const std::string kGradingInstructions =
    "You are an experienced grader for a university course. Grade the student "
    "response to the question below on a scale from 0 to 100, judging "
    "correctness and completeness of the response itself. When graded examples "
    "are provided, use them to calibrate your grading standard.\n"
    "Respond with a single JSON object containing exactly two fields: an "
    "integer \"grade\" between 0 and 100, and a string \"feedback\" with "
    "feedback addressed to the student. Do not output anything other than "
    "this JSON object.";

const std::string kRubricInstructions =
    "You are an experienced grader for a university course. A grading rubric "
    "is provided below. For each rubric item, decide whether the student "
    "response satisfies that item (true) or not (false), based on the item's "
    "explanation. When graded examples are provided, use them to calibrate "
    "your decisions.\n"
    "Respond with a single JSON object containing a string \"feedback\" and a "
    "\"rubric_items\" list with one entry per rubric item; each entry has the "
    "item \"name\" (exactly as given) and a boolean \"selected\". Do not "
    "invent rubric items, omit any, or output anything other than this JSON "
    "object.";

const std::string kGradingLayout =
    "{instructions}\n"
    "\n"
    "## Question\n"
    "\n"
    "{question}\n"
    "\n"
    "## Graded examples\n"
    "\n"
    "{examples}\n"
    "\n"
    "## Student response to grade\n"
    "\n"
    "{submission}\n";

const std::string kRubricLayout =
    "{instructions}\n"
    "\n"
    "## Question\n"
    "\n"
    "{question}\n"
    "\n"
    "## Rubric\n"
    "\n"
    "{rubric}\n"
    "\n"
    "## Graded examples\n"
    "\n"
    "{examples}\n"
    "\n"
    "## Student response to grade\n"
    "\n"
    "{submission}\n";

const std::string kExampleBlock =
    "### Example\n"
    "Response: {response}\n"
    "Grade: {grade}\n"
    "Feedback: {feedback}";

const std::string kRubricExampleBlock =
    "### Example\n"
    "Response: {response}\n"
    "Rubric items:\n"
    "{items}\n"
    "Feedback: {feedback}";

// Substitutes {name} placeholders, recording the span of each inserted
// value. Unknown placeholder names are an error; inserted text is never
// rescanned.
std::string substitute(const std::string& format,
                       const std::map<std::string, std::string>& values,
                       std::map<std::string, Span>* spans_out = nullptr) {
  std::string out;
  out.reserve(format.size());
  for (std::size_t i = 0; i < format.size();) {
    if (format[i] == '{') {
      std::size_t j = i + 1;
      while (j < format.size() &&
             (std::isalnum(static_cast<unsigned char>(format[j])) || format[j] == '_')) {
        ++j;
      }
      if (j < format.size() && format[j] == '}' && j > i + 1) {
        const std::string name = format.substr(i + 1, j - i - 1);
        auto it = values.find(name);
        if (it == values.end()) {
          throw ValidationError("unknown placeholder {" + name + "} in template");
        }
        if (spans_out) (*spans_out)[name] = Span{out.size(), it->second.size()};
        out += it->second;
        i = j + 1;
        continue;
      }
    }
    out.push_back(format[i]);
    ++i;
  }
  return out;
}

std::size_t count_placeholder(const std::string& text, const std::string& name) {
  const std::string needle = "{" + name + "}";
  std::size_t count = 0;
  for (std::size_t pos = text.find(needle); pos != std::string::npos;
       pos = text.find(needle, pos + needle.size())) {
    ++count;
  }
  return count;
}

std::string render_rubric(const Rubric& rubric) {
  std::ostringstream out;
  for (std::size_t i = 0; i < rubric.items().size(); ++i) {
    const auto& item = rubric.items()[i];
    if (i) out << "\n";
    out << item.number << ". " << item.name;
    if (!item.explanation.empty()) out << ": " << item.explanation;
  }
  return out.str();
}

std::string join_blocks(const std::vector<std::string>& blocks) {
  if (blocks.empty()) return kEmptyExamplesMarker;
  std::string out;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (i) out += "\n\n";
    out += blocks[i];
  }
  return out;
}

AssembledPrompt assemble(const PromptTemplate& tmpl, bool rubric_mode,
                         const std::string& question_text,
                         const std::string& rubric_text,
                         const std::string& examples_text,
                         const std::string& submission_text,
                         std::vector<std::string> example_ids) {
  tmpl.validate(rubric_mode);
  std::map<std::string, std::string> values{
      {"instructions", tmpl.instructions_text},
      {"question", question_text},
      {"examples", examples_text},
      {"submission", submission_text},
  };
  if (rubric_mode) values["rubric"] = rubric_text;

  std::map<std::string, Span> spans;
  AssembledPrompt prompt;
  prompt.text = substitute(tmpl.layout_text, values, &spans);
  prompt.example_ids = std::move(example_ids);

  Span question_span = spans.at("question");
  if (rubric_mode) {
    // The rendered rubric belongs to the question component.
    const Span rubric_span = spans.at("rubric");
    question_span.length = rubric_span.offset + rubric_span.length - question_span.offset;
  }
  prompt.component_spans = {spans.at("instructions"), question_span,
                            spans.at("examples"), spans.at("submission")};
  return prompt;
}

}  // namespace

std::string_view AssembledPrompt::component(Component c) const {
  const Span& span = component_spans[static_cast<std::size_t>(c)];
  return std::string_view(text).substr(span.offset, span.length);
}

PromptTemplate PromptTemplate::builtin_grading() {
  return PromptTemplate{"grading-v1", kGradingInstructions, kExampleBlock,
                        kRubricExampleBlock, kGradingLayout};
}

PromptTemplate PromptTemplate::builtin_rubric() {
  return PromptTemplate{"rubric-v1", kRubricInstructions, kExampleBlock,
                        kRubricExampleBlock, kRubricLayout};
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open template file " + path.string());
  }
  PromptTemplate tmpl;
  tmpl.template_id = path.stem().string();
  std::map<std::string, std::string> sections;
  std::string current;
  std::string line;
  while (std::getline(in, line)) {
    if (line.size() > 8 && line.rfind("--- ", 0) == 0 &&
        line.compare(line.size() - 4, 4, " ---") == 0) {
      current = line.substr(4, line.size() - 8);
      continue;
    }
    if (current.empty()) {
      if (!line.empty()) {
        throw ValidationError("template " + path.string() +
                              ": content before the first section header");
      }
      continue;
    }
    auto& text = sections[current];
    if (!text.empty()) text += "\n";
    text += line;
  }
  auto take = [&sections](const std::string& name) -> std::string {
    auto it = sections.find(name);
    return it == sections.end() ? std::string{} : it->second;
  };
  tmpl.instructions_text = take("instructions");
  tmpl.example_block_format = take("example");
  tmpl.rubric_example_block_format = take("rubric_example");
  tmpl.layout_text = take("layout");
  if (tmpl.layout_text.empty() || tmpl.instructions_text.empty()) {
    throw ValidationError("template " + path.string() +
                          ": requires instructions and layout sections");
  }
  if (tmpl.layout_text.back() != '\n') tmpl.layout_text += "\n";
  return tmpl;
}

void PromptTemplate::validate(bool rubric_mode) const {
  const char* required[] = {"instructions", "question", "examples", "submission"};
  for (const char* name : required) {
    if (count_placeholder(layout_text, name) != 1) {
      throw ValidationError("template layout must contain {" + std::string(name) +
                            "} exactly once");
    }
  }
  if (rubric_mode) {
    if (count_placeholder(layout_text, "rubric") != 1) {
      throw ValidationError("rubric template layout must contain {rubric} exactly once");
    }
    if (layout_text.find("{rubric}") < layout_text.find("{question}")) {
      throw ValidationError("{rubric} must appear after {question} in the layout");
    }
    if (rubric_example_block_format.find("{items}") == std::string::npos) {
      throw ValidationError("rubric example block must contain {items}");
    }
  } else if (count_placeholder(layout_text, "rubric") != 0) {
    throw ValidationError("non-rubric template layout must not contain {rubric}");
  }
  if (instructions_text.find("feedback") == std::string::npos) {
    throw ValidationError("instructions must state the JSON output contract");
  }
}

AssembledPrompt build_grading_prompt(const PromptTemplate& tmpl,
                                     const corpus::Question& question,
                                     const std::vector<GradedExample>& examples,
                                     const corpus::Submission& target) {
  if (target.response_text.empty()) {
    throw ValidationError("target submission has an empty response");
  }
  std::vector<std::string> blocks;
  std::vector<std::string> ids;
  for (const auto& ex : examples) {
    // Grades are shown as integers to mirror the requested output format.
    const long grade = std::lround(ex.grade_percent);
    blocks.push_back(substitute(
        tmpl.example_block_format,
        {{"response", ex.submission->response_text},
         {"grade", std::to_string(grade)},
         {"feedback", ex.feedback.value_or("")}}));
    ids.push_back(ex.submission->submission_id);
  }
  return assemble(tmpl, /*rubric_mode=*/false, question.prompt_text, "",
                  join_blocks(blocks), target.response_text, std::move(ids));
}

AssembledPrompt build_rubric_prompt(const PromptTemplate& tmpl,
                                    const corpus::Question& question,
                                    const Rubric& rubric,
                                    const std::vector<RubricExample>& examples,
                                    const corpus::Submission& target) {
  if (target.response_text.empty()) {
    throw ValidationError("target submission has an empty response");
  }
  rubric.validate();
  const auto expected = rubric.item_numbers();
  std::vector<std::string> blocks;
  std::vector<std::string> ids;
  for (const auto& ex : examples) {
    std::vector<int> got;
    got.reserve(ex.items.size());
    for (const auto& [number, _] : ex.items) got.push_back(number);
    if (got != expected) {
      throw ValidationError("example \"" + ex.submission->submission_id +
                            "\" is missing rubric labels");
    }
    std::ostringstream items;
    for (std::size_t i = 0; i < rubric.items().size(); ++i) {
      const auto& item = rubric.items()[i];
      if (i) items << "\n";
      items << "- " << item.name << ": "
            << (ex.items.at(item.number) ? "true" : "false");
    }
    blocks.push_back(substitute(
        tmpl.rubric_example_block_format,
        {{"response", ex.submission->response_text},
         {"items", items.str()},
         {"feedback", ex.feedback.value_or("")}}));
    ids.push_back(ex.submission->submission_id);
  }
  return assemble(tmpl, /*rubric_mode=*/true, question.prompt_text,
                  render_rubric(rubric), join_blocks(blocks),
                  target.response_text, std::move(ids));
}

}  // namespace asag::prompting
