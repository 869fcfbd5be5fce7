#include "premsel/tptp.hpp"

#include <algorithm>
#include <array>
#include <sstream>
#include <unordered_set>

#include "premsel/error.hpp"

namespace premsel {
namespace {

bool is_blank(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_alnum(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_blank(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_blank(s.back())) s.remove_suffix(1);
  return s;
}

constexpr std::array<std::string_view, 3> kOps3 = {"<=>", "<~>", "-->"};
constexpr std::array<std::string_view, 14> kOps2 = {"=>", "<=", "~|", "~&", "!=", "!>", "?*",
                                                   "!!", "??", ":=", "==", "@+", "@-", "@="};
constexpr std::string_view kOps1 = "&|~=!?@*+><^-";
constexpr std::string_view kPunct = "()[],.:";

constexpr std::array<std::string_view, 6> kWrappers = {"fof", "cnf", "tff", "thf", "tcf", "tpi"};

std::string location(std::string_view text, std::size_t pos) {
  return "offset " + std::to_string(pos) + " in '" + std::string(text.substr(0, 80)) +
         (text.size() > 80 ? "...'" : "'");
}

std::size_t scan_number(std::string_view s, std::size_t i) {
  if (s[i] == '+' || s[i] == '-') ++i;
  while (i < s.size() && is_digit(s[i])) ++i;
  if (i + 1 < s.size() && s[i] == '.' && is_digit(s[i + 1])) {
    ++i;
    while (i < s.size() && is_digit(s[i])) ++i;
  } else if (i + 1 < s.size() && s[i] == '/' && is_digit(s[i + 1])) {
    ++i;
    while (i < s.size() && is_digit(s[i])) ++i;
    return i;
  }
  if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
    std::size_t j = i + 1;
    if (j < s.size() && (s[j] == '+' || s[j] == '-')) ++j;
    if (j < s.size() && is_digit(s[j])) {
      i = j;
      while (i < s.size() && is_digit(s[i])) ++i;
    }
  }
  return i;
}

bool is_functor(TokenKind kind) {
  return kind == TokenKind::LowerWord || kind == TokenKind::SingleQuoted ||
         kind == TokenKind::DoubleQuoted || kind == TokenKind::Number;
}

}  // namespace

std::vector<RawExampleBlock> parse_dataset_stream(std::istream& in) {
  std::vector<RawExampleBlock> blocks;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
    if (trim(view).empty()) continue;

    const char prefix = view.front();
    if ((prefix != 'C' && prefix != '+' && prefix != '-') || view.size() < 2 ||
        !is_blank(view[1])) {
      throw Error(ErrorCode::MalformedLine,
                  "line " + std::to_string(line_no) + ": expected 'C ', '+ ' or '- ' prefix");
    }
    const std::string_view formula = trim(view.substr(2));
    if (formula.empty()) {
      throw Error(ErrorCode::MalformedLine, "line " + std::to_string(line_no) + ": empty formula");
    }
    if (prefix == 'C') {
      blocks.push_back(RawExampleBlock{std::string(formula), {}, {}});
      continue;
    }
    if (blocks.empty()) {
      throw Error(ErrorCode::OrphanAxiom,
                  "line " + std::to_string(line_no) + ": premise before any conjecture");
    }
    auto& target = prefix == '+' ? blocks.back().positives : blocks.back().negatives;
    target.emplace_back(formula);
  }
  if (blocks.empty()) throw Error(ErrorCode::EmptyInput, "dataset contains no conjecture");
  return blocks;
}

std::vector<RawExampleBlock> parse_dataset(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_dataset_stream(in);
}

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  const auto emit = [&](TokenKind kind, std::size_t end) {
    tokens.push_back(Token{kind, s.substr(i, end - i)});
    i = end;
  };

  while (i < s.size()) {
    const char c = s[i];
    if (is_blank(c)) {
      ++i;
    } else if (c == '%') {
      while (i < s.size() && s[i] != '\n') ++i;
    } else if (c == '/' && i + 1 < s.size() && s[i + 1] == '*') {
      const auto end = s.find("*/", i + 2);
      if (end == std::string_view::npos) {
        throw Error(ErrorCode::UnexpectedCharacter, "unterminated comment at " + location(s, i));
      }
      i = end + 2;
    } else if (c >= 'a' && c <= 'z') {
      std::size_t j = i + 1;
      while (j < s.size() && is_alnum(s[j])) ++j;
      emit(TokenKind::LowerWord, j);
    } else if ((c >= 'A' && c <= 'Z') || c == '_') {
      std::size_t j = i + 1;
      while (j < s.size() && is_alnum(s[j])) ++j;
      emit(TokenKind::UpperWord, j);
    } else if (c == '$') {
      std::size_t j = i + 1;
      if (j < s.size() && s[j] == '$') ++j;
      const std::size_t name_start = j;
      while (j < s.size() && is_alnum(s[j])) ++j;
      if (j == name_start) {
        throw Error(ErrorCode::UnexpectedCharacter, "bare '$' at " + location(s, i));
      }
      emit(TokenKind::DollarWord, j);
    } else if (c == '\'' || c == '"') {
      std::size_t j = i + 1;
      while (j < s.size() && s[j] != c) j += s[j] == '\\' ? 2 : 1;
      if (j >= s.size()) {
        throw Error(ErrorCode::UnbalancedQuote, "unterminated quote at " + location(s, i));
      }
      emit(c == '\'' ? TokenKind::SingleQuoted : TokenKind::DoubleQuoted, j + 1);
    } else if (is_digit(c) ||
               ((c == '+' || c == '-') && i + 1 < s.size() && is_digit(s[i + 1]))) {
      emit(TokenKind::Number, scan_number(s, i));
    } else {
      const auto rest = s.substr(i);
      const auto match = [&](auto& table) {
        return std::find_if(table.begin(), table.end(),
                            [&](std::string_view op) { return rest.starts_with(op); });
      };
      if (auto op3 = match(kOps3); op3 != kOps3.end()) {
        emit(TokenKind::Operator, i + op3->size());
      } else if (auto op2 = match(kOps2); op2 != kOps2.end()) {
        emit(TokenKind::Operator, i + op2->size());
      } else if (kPunct.find(c) != std::string_view::npos) {
        emit(TokenKind::Punct, i + 1);
      } else if (kOps1.find(c) != std::string_view::npos) {
        emit(TokenKind::Operator, i + 1);
      } else {
        throw Error(ErrorCode::UnexpectedCharacter,
                    "byte 0x" + std::to_string(static_cast<unsigned char>(c)) + " at " +
                        location(s, i));
      }
    }
  }
  return tokens;
}

std::vector<std::string_view> functor_tokens(std::string_view formula) {
  const auto tokens = tokenize(formula);
  std::vector<std::string_view> functors;

  const bool wrapped =
      tokens.size() >= 2 && tokens[0].kind == TokenKind::LowerWord &&
      std::find(kWrappers.begin(), kWrappers.end(), tokens[0].text) != kWrappers.end() &&
      tokens[1].text == "(";
  if (!wrapped) {
    for (const auto& t : tokens) {
      if (is_functor(t.kind)) functors.push_back(t.text);
    }
    return functors;
  }

  // Arguments of the wrapper: 0 name, 1 role, 2 formula, 3+ annotations.
  int depth = 0;
  int argument = 0;
  for (std::size_t k = 2; k < tokens.size(); ++k) {
    const auto& t = tokens[k];
    if (t.kind == TokenKind::Punct) {
      if (t.text == "(" || t.text == "[") {
        ++depth;
      } else if (t.text == ")" || t.text == "]") {
        if (--depth < 0) break;
      } else if (t.text == "," && depth == 0) {
        ++argument;
      }
      continue;
    }
    if (argument == 2 && is_functor(t.kind)) functors.push_back(t.text);
  }
  return functors;
}

FunctorCounts extract_functors(std::string_view formula) {
  FunctorCounts counts;
  for (auto name : functor_tokens(formula)) {
    auto it = counts.find(name);
    if (it == counts.end()) {
      counts.emplace(std::string(name), 1U);
    } else {
      ++it->second;
    }
  }
  return counts;
}

CorpusStatistics corpus_statistics(std::span<const RawExampleBlock> blocks) {
  if (blocks.empty()) throw Error(ErrorCode::EmptyInput, "no blocks");

  CorpusStatistics stats;
  stats.blocks = blocks.size();
  stats.min_axioms = blocks.front().axiom_count();

  std::unordered_set<std::string_view> all;
  std::unordered_set<std::string_view> conjectures;
  std::unordered_set<std::string_view> axioms;
  for (const auto& block : blocks) {
    all.insert(block.conjecture_text);
    conjectures.insert(block.conjecture_text);
    for (const auto* side : {&block.positives, &block.negatives}) {
      for (const auto& axiom : *side) {
        all.insert(axiom);
        axioms.insert(axiom);
      }
    }
    stats.positives += block.positives.size();
    stats.negatives += block.negatives.size();
    stats.min_axioms = std::min(stats.min_axioms, block.axiom_count());
    stats.max_axioms = std::max(stats.max_axioms, block.axiom_count());
  }
  stats.unique_formulae = all.size();
  stats.unique_conjectures = conjectures.size();
  stats.unique_axioms = axioms.size();
  stats.pairs = stats.positives + stats.negatives;
  stats.mean_axioms = static_cast<double>(stats.pairs) / static_cast<double>(stats.blocks);
  return stats;
}

std::vector<std::string> unique_formulae(std::span<const RawExampleBlock> blocks) {
  std::vector<std::string> out;
  std::unordered_set<std::string_view> seen;
  const auto add = [&](const std::string& f) {
    if (seen.insert(f).second) out.push_back(f);
  };
  for (const auto& block : blocks) {
    add(block.conjecture_text);
    for (const auto& a : block.positives) add(a);
    for (const auto& a : block.negatives) add(a);
  }
  return out;
}

}  // namespace premsel
