#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

namespace steer::grammar {

enum class Slash { forward, backward };

// A syntactic category: either an atom such as NP or S[np], or a functor
// X/Y (argument Y expected on the right) or X\Y (argument on the left).
// Immutable; copies share structure.
class Category {
 public:
  Category() = default;

  static Category atom(std::string symbol, std::string feature = {});
  static Category functor(Category result, Slash slash, Category argument);

  bool valid() const { return node_ != nullptr; }
  bool is_atomic() const;

  const std::string& symbol() const;
  const std::string& feature() const;
  const Category& result() const;
  const Category& argument() const;
  Slash slash() const;

  // Number of arguments consumed before reaching an atomic result.
  int arity() const;
  // Nesting depth; atoms have depth 0.
  int depth() const;

  // Argument matching: atoms match when symbols agree and the expected
  // feature is empty or equal to the actual one.
  bool accepts(const Category& actual) const;

  std::string str() const;

  friend bool operator==(const Category& a, const Category& b);
  friend bool operator<(const Category& a, const Category& b) { return a.str() < b.str(); }

 private:
  struct Node;
  explicit Category(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

class CategoryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parses slash notation, e.g. "(S\\NP)/NP" or "S[np]\\VP". Slashes are
// left-associative. Throws CategoryError.
Category parse_category(std::string_view text);

bool is_known_atom(std::string_view symbol);

}  // namespace steer::grammar
