#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace premsel {

/// One conjecture with its useful (+) and redundant (-) premises, as listed
/// in the line-oriented "C / + / -" dataset format.
struct RawExampleBlock {
  std::string conjecture_text;
  std::vector<std::string> positives;
  std::vector<std::string> negatives;

  std::size_t axiom_count() const noexcept { return positives.size() + negatives.size(); }
  bool operator==(const RawExampleBlock&) const = default;
};

/// Functor symbol -> occurrence count (>= 1). Ordered so iteration is byte-sorted.
using FunctorCounts = std::map<std::string, std::uint32_t, std::less<>>;

/// Parses the dataset format. Whitespace-only lines are skipped, "\r\n" is accepted.
/// Throws Error(MalformedLine | OrphanAxiom | EmptyInput).
std::vector<RawExampleBlock> parse_dataset_stream(std::istream& in);
std::vector<RawExampleBlock> parse_dataset(std::string_view text);

enum class TokenKind {
  LowerWord,    // functor/predicate names and keywords
  UpperWord,    // variables
  DollarWord,   // $true, $false, $$system
  SingleQuoted, // 'quoted atom'
  DoubleQuoted, // "distinct object"
  Number,
  Punct,        // ( ) [ ] , . :
  Operator,     // connectives, quantifiers, equality
};

struct Token {
  TokenKind kind;
  std::string_view text;
};

/// Splits TPTP text into tokens; comments and whitespace are dropped.
/// Throws Error(UnbalancedQuote | UnexpectedCharacter).
std::vector<Token> tokenize(std::string_view formula);

/// Functor tokens of the formula body, in source order. The fof/cnf wrapper
/// keyword, name, role and trailing annotations are not part of the body.
std::vector<std::string_view> functor_tokens(std::string_view formula);

FunctorCounts extract_functors(std::string_view formula);

struct CorpusStatistics {
  std::size_t blocks = 0;
  std::size_t unique_formulae = 0;
  std::size_t unique_conjectures = 0;
  std::size_t unique_axioms = 0;
  std::size_t pairs = 0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::size_t min_axioms = 0;
  std::size_t max_axioms = 0;
  double mean_axioms = 0.0;
};

/// Throws Error(EmptyInput) on an empty block list.
CorpusStatistics corpus_statistics(std::span<const RawExampleBlock> blocks);

/// Every distinct formula string, conjectures and axioms alike, in order of first appearance.
std::vector<std::string> unique_formulae(std::span<const RawExampleBlock> blocks);

}  // namespace premsel
