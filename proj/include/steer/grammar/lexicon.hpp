#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "steer/grammar/category.hpp"
#include "steer/grammar/semantics.hpp"

namespace steer::grammar {

struct LexEntry {
  std::string word;
  Category category;
  Term semantics;  // template with $1..$arity slots
  int line = 0;

  Semantics instantiate() const { return Semantics::lexical(semantics, category.arity()); }
};

class GrammarError : public std::runtime_error {
 public:
  GrammarError(int line, const std::string& what)
      : std::runtime_error("grammar line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Lowercases, folds typographic apostrophes, strips surrounding punctuation
// but keeps inner apostrophes ("Don't," -> "don't").
std::string normalize_token(std::string_view raw);
// Splits on whitespace and normalizes; drops tokens that normalize to "".
std::vector<std::string> tokenize(std::string_view utterance);

// Word -> lexical entries. Immutable once loaded.
class Dictionary {
 public:
  // All entries for the token (normalized first); empty when unknown.
  std::span<const LexEntry> lookup(std::string_view word) const;

  // Throws GrammarError on a duplicate (word, category) pair or when the
  // template's slots do not match the category's arity.
  void add(LexEntry entry);
  void add_label(const Category& category, std::string label);

  // Display label used by chart dumps: an explicit @label alias, the atom
  // symbol without features, or the slash notation.
  std::string label(const Category& category) const;

  std::size_t size() const;
  std::vector<LexEntry> entries() const;
  const std::map<std::string, std::string>& labels() const { return labels_; }

  // Grammar-file text that loads back into an equivalent dictionary.
  std::string to_text() const;

 private:
  std::map<std::string, std::vector<LexEntry>, std::less<>> entries_;
  std::map<std::string, std::string> labels_;  // category string -> label
};

// Grammar document, one entry per line:
//   word <TAB> category <TAB> template
//   @label <TAB> name <TAB> category
// '#' starts a comment line; blank lines are ignored.
Dictionary load_grammar(std::string_view text);
Dictionary load_grammar_file(const std::filesystem::path& path);

// A stand-in argument of the given category, used to check that every
// template saturates to a concrete term.
Semantics placeholder_for(const Category& category);

}  // namespace steer::grammar
