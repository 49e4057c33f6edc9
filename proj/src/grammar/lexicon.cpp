#include "steer/grammar/lexicon.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace steer::grammar {

std::string normalize_token(std::string_view raw) {
  std::string s;
  s.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    // U+2019 RIGHT SINGLE QUOTATION MARK
    if (i + 2 < raw.size() && static_cast<unsigned char>(raw[i]) == 0xE2 &&
        static_cast<unsigned char>(raw[i + 1]) == 0x80 && static_cast<unsigned char>(raw[i + 2]) == 0x99) {
      s += '\'';
      i += 2;
      continue;
    }
    s += static_cast<char>(std::tolower(static_cast<unsigned char>(raw[i])));
  }
  auto keep = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; };
  auto first = std::find_if(s.begin(), s.end(), keep);
  auto last = std::find_if(s.rbegin(), s.rend(), keep).base();
  if (first >= last) return {};
  return std::string(first, last);
}

std::vector<std::string> tokenize(std::string_view utterance) {
  std::vector<std::string> out;
  std::istringstream in{std::string(utterance)};
  std::string raw;
  while (in >> raw) {
    std::string t = normalize_token(raw);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

std::span<const LexEntry> Dictionary::lookup(std::string_view word) const {
  auto it = entries_.find(normalize_token(word));
  if (it == entries_.end()) return {};
  return it->second;
}

void Dictionary::add(LexEntry entry) {
  entry.word = normalize_token(entry.word);
  if (entry.word.empty()) throw GrammarError(entry.line, "empty word");
  const int arity = entry.category.arity();
  const int slots = max_slot(entry.semantics);
  if (slots != arity) {
    throw GrammarError(entry.line, "arity mismatch for '" + entry.word + "': category " + entry.category.str() +
                                       " consumes " + std::to_string(arity) + " argument(s), template binds " +
                                       std::to_string(slots));
  }
  for (int i = 1; i <= arity; ++i) {
    if (!references_slot(entry.semantics, i)) {
      throw GrammarError(entry.line, "template for '" + entry.word + "' never uses $" + std::to_string(i));
    }
  }
  auto& bucket = entries_[entry.word];
  for (const LexEntry& e : bucket) {
    if (e.category == entry.category) {
      throw GrammarError(entry.line, "duplicate entry '" + entry.word + "' " + entry.category.str() +
                                         " (first defined on line " + std::to_string(e.line) + ")");
    }
  }
  bucket.push_back(std::move(entry));
}

void Dictionary::add_label(const Category& category, std::string label) {
  labels_[category.str()] = std::move(label);
}

std::string Dictionary::label(const Category& category) const {
  if (auto it = labels_.find(category.str()); it != labels_.end()) return it->second;
  if (category.is_atomic()) return category.symbol();
  return category.str();
}

std::size_t Dictionary::size() const {
  std::size_t n = 0;
  for (const auto& [word, bucket] : entries_) n += bucket.size();
  return n;
}

std::vector<LexEntry> Dictionary::entries() const {
  std::vector<LexEntry> out;
  for (const auto& [word, bucket] : entries_) out.insert(out.end(), bucket.begin(), bucket.end());
  return out;
}

std::string Dictionary::to_text() const {
  std::string out;
  for (const auto& [cat, name] : labels_) out += "@label\t" + name + "\t" + cat + "\n";
  for (const auto& [word, bucket] : entries_) {
    for (const LexEntry& e : bucket) {
      out += e.word + "\t" + e.category.str() + "\t" + serialize(e.semantics) + "\n";
    }
  }
  return out;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t pos = 0;
  while (pos <= line.size()) {
    std::size_t tab = line.find('\t', pos);
    std::string field = line.substr(pos, tab == std::string::npos ? std::string::npos : tab - pos);
    auto not_space = [](unsigned char c) { return !std::isspace(c); };
    field.erase(field.begin(), std::find_if(field.begin(), field.end(), not_space));
    field.erase(std::find_if(field.rbegin(), field.rend(), not_space).base(), field.end());
    if (!field.empty()) fields.push_back(std::move(field));
    if (tab == std::string::npos) break;
    pos = tab + 1;
  }
  return fields;
}

}  // namespace

Dictionary load_grammar(std::string_view text) {
  Dictionary dict;
  std::istringstream in{std::string(text)};
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    auto fields = split_fields(line);
    if (fields.size() != 3) {
      throw GrammarError(number, "expected 3 tab-separated fields, got " + std::to_string(fields.size()));
    }
    try {
      if (fields[0] == "@label") {
        dict.add_label(parse_category(fields[2]), fields[1]);
        continue;
      }
      LexEntry entry{fields[0], parse_category(fields[1]), parse_template(fields[2]), number};
      dict.add(std::move(entry));
    } catch (const CategoryError& e) {
      throw GrammarError(number, e.what());
    } catch (const SemanticError& e) {
      throw GrammarError(number, e.what());
    }
  }
  return dict;
}

Dictionary load_grammar_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw GrammarError(0, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_grammar(buf.str());
}

Semantics placeholder_for(const Category& category) {
  if (!category.is_atomic()) throw SemanticError("no placeholder for functional category " + category.str());
  const std::string& s = category.symbol();
  if (s == "S" || s == "VP") {
    return Semantics::lexical(
        Term::frame(std::string(kClausePredicate),
                    {Term::role("speaker"), Term::role("listener"),
                     Term::frame("act", {Term::role("listener"), Term::referent("thing")})}),
        0);
  }
  if (s == "PP") return Semantics::lexical(Term::frame("at", {Term::referent("thing")}), 0);
  return Semantics::lexical(Term::referent("thing"), 0);
}

}  // namespace steer::grammar
