#include "steer/grammar/category.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace steer::grammar {

struct Category::Node {
  std::string symbol;
  std::string feature;
  Category result;
  Category argument;
  Slash slash = Slash::forward;
  bool atomic = true;
};

namespace {

constexpr std::array<std::string_view, 9> kAtoms = {"S", "NP", "N", "VP", "PP", "DET", "P", "ADV", "CONJ"};

const std::string kEmpty;

}  // namespace

bool is_known_atom(std::string_view symbol) {
  return std::find(kAtoms.begin(), kAtoms.end(), symbol) != kAtoms.end();
}

Category Category::atom(std::string symbol, std::string feature) {
  auto node = std::make_shared<Node>();
  node->symbol = std::move(symbol);
  node->feature = std::move(feature);
  return Category(std::move(node));
}

Category Category::functor(Category result, Slash slash, Category argument) {
  auto node = std::make_shared<Node>();
  node->atomic = false;
  node->result = std::move(result);
  node->argument = std::move(argument);
  node->slash = slash;
  return Category(std::move(node));
}

bool Category::is_atomic() const { return node_ && node_->atomic; }

const std::string& Category::symbol() const { return is_atomic() ? node_->symbol : kEmpty; }
const std::string& Category::feature() const { return is_atomic() ? node_->feature : kEmpty; }
const Category& Category::result() const { return node_->result; }
const Category& Category::argument() const { return node_->argument; }
Slash Category::slash() const { return node_->slash; }

int Category::arity() const {
  int n = 0;
  const Category* c = this;
  while (!c->is_atomic()) {
    ++n;
    c = &c->result();
  }
  return n;
}

int Category::depth() const {
  if (is_atomic()) return 0;
  return 1 + std::max(result().depth(), argument().depth());
}

bool Category::accepts(const Category& actual) const {
  if (is_atomic() != actual.is_atomic()) return false;
  if (is_atomic()) {
    return symbol() == actual.symbol() && (feature().empty() || feature() == actual.feature());
  }
  return slash() == actual.slash() && result().accepts(actual.result()) && argument().accepts(actual.argument());
}

std::string Category::str() const {
  if (!node_) return "<invalid>";
  if (is_atomic()) {
    return feature().empty() ? symbol() : symbol() + "[" + feature() + "]";
  }
  auto wrap = [](const Category& c) { return c.is_atomic() ? c.str() : "(" + c.str() + ")"; };
  return wrap(result()) + (slash() == Slash::forward ? "/" : "\\") + wrap(argument());
}

bool operator==(const Category& a, const Category& b) {
  if (a.node_ == b.node_) return true;
  if (!a.node_ || !b.node_) return false;
  if (a.is_atomic() != b.is_atomic()) return false;
  if (a.is_atomic()) return a.symbol() == b.symbol() && a.feature() == b.feature();
  return a.slash() == b.slash() && a.result() == b.result() && a.argument() == b.argument();
}

namespace {

class CategoryReader {
 public:
  explicit CategoryReader(std::string_view text) : text_(text) {}

  Category read() {
    Category c = read_chain();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return c;
  }

 private:
  Category read_chain() {
    Category left = read_primary();
    for (;;) {
      skip_space();
      if (pos_ >= text_.size()) break;
      char c = text_[pos_];
      if (c != '/' && c != '\\') break;
      ++pos_;
      Category right = read_primary();
      left = Category::functor(left, c == '/' ? Slash::forward : Slash::backward, right);
    }
    return left;
  }

  Category read_primary() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of category");
    if (text_[pos_] == '(') {
      ++pos_;
      Category inner = read_chain();
      skip_space();
      if (pos_ >= text_.size() || text_[pos_] != ')') fail("missing ')'");
      ++pos_;
      return inner;
    }
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isupper(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    std::string symbol(text_.substr(start, pos_ - start));
    if (symbol.empty()) fail("expected atomic category");
    if (!is_known_atom(symbol)) fail("unknown atomic category '" + symbol + "'");
    std::string feature;
    if (pos_ < text_.size() && text_[pos_] == '[') {
      std::size_t close = text_.find(']', pos_);
      if (close == std::string_view::npos) fail("missing ']'");
      feature = std::string(text_.substr(pos_ + 1, close - pos_ - 1));
      if (feature.empty()) fail("empty feature");
      pos_ = close + 1;
    }
    return Category::atom(std::move(symbol), std::move(feature));
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw CategoryError("category '" + std::string(text_) + "': " + what);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

Category parse_category(std::string_view text) { return CategoryReader(text).read(); }

}  // namespace steer::grammar
