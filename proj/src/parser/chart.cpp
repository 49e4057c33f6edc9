#include "steer/parser/chart.hpp"

#include <algorithm>
#include <sstream>

namespace steer::parser {

using grammar::Slash;
using grammar::Term;
using grammar::TermKind;

std::string_view to_string(ParseStatus status) {
  switch (status) {
    case ParseStatus::no_parse:
      return "no_parse";
    case ParseStatus::partial:
      return "partial";
    case ParseStatus::complete:
      return "complete";
  }
  return "?";
}

bool submittable(const ChartNode& node) {
  const Category& c = node.category;
  if (!c.is_atomic() || (c.symbol() != "S" && c.symbol() != "VP")) return false;
  if (!node.semantics.saturated()) return false;
  const Term& t = node.semantics.term();
  return t.is_clause() && t.concrete() && !t.action()->args.empty();
}

namespace {

int count_object_sites(const Term& t) {
  int n = t.kind == TermKind::referent ? static_cast<int>(t.modifiers.size()) : 0;
  for (const Term& a : t.args) n += count_object_sites(a);
  for (const Term& m : t.modifiers) n += count_object_sites(m);
  return n;
}

}  // namespace

int object_attachments(const ChartNode& node) { return count_object_sites(node.semantics.term()); }

std::optional<ChartNode> combine(const ChartNode& left, const ChartNode& right) {
  if (left.span.end + 1 != right.span.start) return std::nullopt;
  auto make = [&](const Category& result, const ChartNode& functor,
                  const ChartNode& argument) -> std::optional<ChartNode> {
    try {
      ChartNode n;
      n.span = {left.span.start, right.span.end};
      n.category = result;
      n.semantics = functor.semantics.apply(argument.semantics);
      n.left = left.id;
      n.right = right.id;
      return n;
    } catch (const grammar::SemanticError&) {
      return std::nullopt;
    }
  };
  const Category& l = left.category;
  const Category& r = right.category;
  if (!l.is_atomic() && l.slash() == Slash::forward && l.argument().accepts(r)) {
    if (auto n = make(l.result(), left, right)) return n;
  }
  if (!r.is_atomic() && r.slash() == Slash::backward && r.argument().accepts(l)) {
    if (auto n = make(r.result(), right, left)) return n;
  }
  return std::nullopt;
}

void Chart::add_word(std::string_view word, const Dictionary& dict) {
  const int i = size();
  tokens_.push_back(grammar::normalize_token(word));
  for (auto& row : cells_) row.emplace_back();
  cells_.emplace_back(1);
  for (const auto& entry : dict.lookup(tokens_.back())) {
    ChartNode n;
    n.span = {i, i};
    n.category = entry.category;
    n.semantics = entry.instantiate();
    insert(std::move(n));
  }
}

ParseResult Chart::feed_word(std::string_view word, const Dictionary& dict) {
  add_word(word, dict);
  const int end = size() - 1;
  // Cells ending at the new column; later starts first so that every right
  // operand cell [m+1][end] is complete before it is used.
  for (int start = end - 1; start >= 0; --start) fill_cell(start, end);
  ++version_;
  return result();
}

void Chart::complete_spans() {
  const int n = size();
  for (int len = 2; len <= n; ++len) {
    for (int start = 0; start + len <= n; ++start) fill_cell(start, start + len - 1);
  }
  ++version_;
}

void Chart::fill_cell(int start, int end) {
  for (int mid = start; mid < end; ++mid) {
    // Copy the id lists: insert() may grow the target cell only.
    const std::vector<int> lefts = cell_ids(start, mid);
    const std::vector<int> rights = cell_ids(mid + 1, end);
    for (int l : lefts) {
      for (int r : rights) {
        ++attempts_;
        if (auto n = combine(nodes_[l], nodes_[r])) insert(std::move(*n));
      }
    }
  }
}

void Chart::insert(ChartNode node) {
  auto& ids = cell_ids(node.span.start, node.span.end);
  for (int id : ids) {
    const ChartNode& other = nodes_[id];
    if (other.category == node.category && other.semantics == node.semantics) return;
  }
  node.id = static_cast<int>(nodes_.size());
  ids.push_back(node.id);
  nodes_.push_back(std::move(node));
}

std::vector<ChartNode> Chart::cell(int start, int end) const {
  std::vector<ChartNode> out;
  if (start < 0 || end >= size() || start > end) return out;
  for (int id : cell_ids(start, end)) out.push_back(nodes_[id]);
  return out;
}

ParseResult Chart::result() const {
  ParseResult r;
  r.version = version_;
  if (tokens_.empty() || nodes_.empty()) return r;
  r.alternatives = cell(0, size() - 1);
  const bool complete = std::any_of(r.alternatives.begin(), r.alternatives.end(), submittable);
  r.status = complete ? ParseStatus::complete : ParseStatus::partial;
  r.best = best_parse(r);
  return r;
}

void Chart::reset() {
  tokens_.clear();
  nodes_.clear();
  cells_.clear();
  attempts_ = 0;
  ++version_;
}

std::set<CellItem> Chart::contents() const {
  std::set<CellItem> out;
  for (const ChartNode& n : nodes_) {
    out.emplace(n.span.start, n.span.end, n.category.str(), n.semantics.str());
  }
  return out;
}

std::string Chart::words(Span span) const {
  std::string out;
  for (int i = span.start; i <= span.end; ++i) {
    if (i > span.start) out += ' ';
    out += tokens_[i];
  }
  return out;
}

// "grab (the mug) (by the top)": the left spine flattened, multi-word right
// constituents in parentheses; object attachment folds into the object.
std::string Chart::bracketed(const ChartNode& node) const {
  if (node.lexical()) return tokens_[node.span.start];
  const ChartNode& l = nodes_[*node.left];
  const ChartNode& r = nodes_[*node.right];
  std::string head = bracketed(l);
  std::string tail = words(r.span);
  const Category& c = node.category;
  if (c.is_atomic() && c.feature() == "np" && !head.empty() && head.back() == ')') {
    head.pop_back();
    return head + " " + tail + ")";
  }
  if (r.span.start != r.span.end) tail = "(" + tail + ")";
  return head + " " + tail;
}

std::string Chart::dump(const Dictionary& dict, const std::optional<ChartNode>& best) const {
  const int n = size();
  if (n == 0) return "(empty chart)\n";
  // grid[row][col] -> lines
  std::vector<std::vector<std::vector<std::string>>> grid(n + 1, std::vector<std::vector<std::string>>(n + 1));
  grid[0][0] = {"Idx"};
  for (int k = 0; k < n; ++k) grid[0][k + 1] = {std::to_string(k)};
  for (int j = 0; j < n; ++j) {
    grid[j + 1][0] = {std::to_string(j)};
    grid[j + 1][j + 1] = {tokens_[j]};
    for (int k = j + 1; k < n; ++k) {
      for (int id : cell_ids(j, k)) {
        const ChartNode& node = nodes_[id];
        std::string text = dict.label(node.category) + " -> " +
                           (j == 0 && k == n - 1 ? bracketed(node) : words(node.span));
        const Category* result = &node.category;
        while (!result->is_atomic()) result = &result->result();
        if (!node.category.is_atomic() && !result->feature().empty()) {
          std::string f = result->feature();
          std::transform(f.begin(), f.end(), f.begin(), [](unsigned char ch) { return std::toupper(ch); });
          text += " (modifies " + f + ")";
        }
        if (best && best->id == id) text = "*" + text;
        grid[j + 1][k + 1].push_back(std::move(text));
      }
    }
  }
  std::vector<std::size_t> width(n + 1, 0);
  for (const auto& row : grid) {
    for (int c = 0; c <= n; ++c) {
      for (const auto& line : row[c]) width[c] = std::max(width[c], line.size());
    }
  }
  std::ostringstream out;
  auto rule = [&] {
    out << '+';
    for (int c = 0; c <= n; ++c) out << std::string(width[c] + 2, '-') << '+';
    out << '\n';
  };
  rule();
  for (const auto& row : grid) {
    std::size_t height = 1;
    for (const auto& c : row) height = std::max(height, c.size());
    for (std::size_t line = 0; line < height; ++line) {
      out << '|';
      for (int c = 0; c <= n; ++c) {
        std::string text = line < row[c].size() ? row[c][line] : "";
        out << ' ' << text << std::string(width[c] - text.size(), ' ') << " |";
      }
      out << '\n';
    }
    rule();
  }
  return out.str();
}

Chart parse_batch(const std::vector<std::string>& tokens, const Dictionary& dict) {
  Chart chart;
  for (const auto& t : tokens) chart.add_word(t, dict);
  chart.complete_spans();
  return chart;
}

std::optional<ChartNode> best_parse(const ParseResult& result, const ReferentCheck& resolvable) {
  if (result.status != ParseStatus::complete) return std::nullopt;
  std::vector<const ChartNode*> candidates;
  for (const ChartNode& n : result.alternatives) {
    if (submittable(n)) candidates.push_back(&n);
  }
  std::stable_sort(candidates.begin(), candidates.end(), [](const ChartNode* a, const ChartNode* b) {
    const int oa = object_attachments(*a);
    const int ob = object_attachments(*b);
    if (oa != ob) return oa < ob;
    return a->id < b->id;
  });
  for (const ChartNode* n : candidates) {
    if (!resolvable || resolvable(*n)) return *n;
  }
  return std::nullopt;
}

}  // namespace steer::parser
