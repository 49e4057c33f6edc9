#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "steer/grammar/lexicon.hpp"

namespace steer::parser {

using grammar::Category;
using grammar::Dictionary;
using grammar::Semantics;

// Inclusive word span [start, end].
struct Span {
  int start = 0;
  int end = 0;
  friend bool operator==(const Span&, const Span&) = default;
  friend auto operator<=>(const Span&, const Span&) = default;
};

struct ChartNode {
  int id = -1;  // construction order within its chart
  Span span;
  Category category;
  Semantics semantics;
  std::optional<int> left;
  std::optional<int> right;

  bool lexical() const { return !left.has_value(); }
};

enum class ParseStatus { no_parse, partial, complete };

std::string_view to_string(ParseStatus status);

// Immutable snapshot of the chart's final cell.
struct ParseResult {
  ParseStatus status = ParseStatus::no_parse;
  std::optional<ChartNode> best;
  std::vector<ChartNode> alternatives;
  std::uint64_t version = 0;
};

// S or VP, saturated, and a complete INSTRUCT clause.
bool submittable(const ChartNode& node);

// Number of object-site attachments inside the node's clause.
int object_attachments(const ChartNode& node);

// Applies forward application (X/Y Y -> X), then backward application
// (Y X\Y -> X). Returns no node when neither applies, the spans are not
// adjacent, or the semantics clash.
std::optional<ChartNode> combine(const ChartNode& left, const ChartNode& right);

// (span, category, serialized semantics); used to compare chart contents.
using CellItem = std::tuple<int, int, std::string, std::string>;

class Chart {
 public:
  // Appends one word, adds its lexical nodes at (n-1, n-1), and fills every
  // cell ending at the new column. Unknown words occupy a column with no
  // lexical node.
  ParseResult feed_word(std::string_view word, const Dictionary& dict);

  // Appends a word's lexical nodes only; pair with complete_spans() to run
  // the batch span loop.
  void add_word(std::string_view word, const Dictionary& dict);
  // Bottom-up span loop over the whole chart (span length 2..n).
  void complete_spans();

  ParseResult result() const;

  // Empties the chart; the version counter keeps counting.
  void reset();

  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const ChartNode& node(int id) const { return nodes_.at(id); }
  std::vector<ChartNode> cell(int start, int end) const;
  std::uint64_t combine_attempts() const { return attempts_; }
  std::uint64_t version() const { return version_; }

  std::set<CellItem> contents() const;

  // Upper-triangular text table: row = start index, column = end index.
  std::string dump(const Dictionary& dict, const std::optional<ChartNode>& best = std::nullopt) const;

 private:
  void fill_cell(int start, int end);
  void insert(ChartNode node);
  std::vector<int>& cell_ids(int start, int end) { return cells_[start][end - start]; }
  const std::vector<int>& cell_ids(int start, int end) const { return cells_[start][end - start]; }
  std::string bracketed(const ChartNode& node) const;
  std::string words(Span span) const;

  std::vector<std::string> tokens_;
  std::vector<ChartNode> nodes_;
  // cells_[start][end - start]
  std::vector<std::vector<std::vector<int>>> cells_;
  std::uint64_t attempts_ = 0;
  std::uint64_t version_ = 0;
};

Chart parse_batch(const std::vector<std::string>& tokens, const Dictionary& dict);

// Context check used by best_parse; true when every referent of the parse
// resolves in the current world.
using ReferentCheck = std::function<bool(const ChartNode&)>;

// Deterministic choice among the final-cell parses: drop parses that are
// not submittable or fail the context check, prefer action attachment over
// object attachment, then the earliest constructed node.
std::optional<ChartNode> best_parse(const ParseResult& result, const ReferentCheck& resolvable = {});

}  // namespace steer::parser
