#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "diel/relation.hpp"

namespace diel::match {

class PatternError : public std::runtime_error {
   public:
    PatternError(std::size_t position, const std::string& message);
    /// 0-based byte offset into the pattern text.
    std::size_t position;
};

/// Parsed pattern over row-value symbols. Symbols are maximal runs of
/// non-special characters (`down`, `move`); whitespace separates adjacent
/// symbols; `\` escapes a special character.
struct PatternNode {
    enum class Kind { Symbol, Concat, Alternation, Star, Plus, Optional, Capture, Group };
    Kind kind = Kind::Symbol;
    std::string symbol;
    std::vector<PatternNode> children;
    /// Capture number (1-based, left to right) for Kind::Capture.
    std::size_t group = 0;
};

auto parse_pattern(std::string_view pattern) -> PatternNode;

struct NfaState {
    enum class Kind { Symbol, Split, Epsilon, Open, Close, Accept };
    Kind kind = Kind::Epsilon;
    std::string symbol;
    /// Primary successor; for Split the preferred branch.
    std::size_t out = 0;
    /// Secondary successor of a Split.
    std::size_t out2 = 0;
    std::size_t group = 0;
};

/// Thompson NFA. State count is linear in pattern size.
struct CompiledNfa {
    std::vector<NfaState> states;
    std::size_t start = 0;
    std::size_t accept = 0;
    std::size_t group_count = 0;
    std::string source;
};

auto compile_pattern(std::string_view pattern) -> CompiledNfa;

/// Whole-sequence acceptance test (anchored at both ends).
auto accepts(const CompiledNfa& nfa, const std::vector<std::string>& symbols) -> bool;

/// One match found in a symbol sequence.
struct MatchSpan {
    std::size_t begin = 0;
    std::size_t end = 0;
    /// Positions consumed by a symbol inside at least one capturing group,
    /// ascending.
    std::vector<std::size_t> captured;
    /// Per capture group (index 0 is group 1): [begin, end) of its last
    /// iteration, or nullopt when the group did not participate.
    std::vector<std::optional<std::pair<std::size_t, std::size_t>>> groups;
};

/// Non-overlapping, leftmost, longest matches; among paths of the longest
/// length, the one preferred by greedy quantifiers and left alternatives
/// wins. Empty matches are skipped. A nullopt symbol (null value) matches
/// nothing.
auto find_matches(const CompiledNfa& nfa, const std::vector<std::optional<std::string>>& symbols)
    -> std::vector<MatchSpan>;

/// Runs the pattern over `column` of `rows` (already in timestep order).
/// Output schema: `mg integer` followed by `projection` columns of `rows`
/// (all columns when `projection` is empty). Only rows consumed inside
/// capturing groups are emitted, each tagged with the match occurrence.
auto run_match(const Relation& rows, std::string_view column, const CompiledNfa& nfa,
               const std::vector<std::string>& projection = {}) -> Relation;

}  // namespace diel::match
