#include "steer/grammar/semantics.hpp"

#include <algorithm>
#include <cctype>

namespace steer::grammar {

Term Term::frame(std::string predicate, std::vector<Term> args) {
  Term t;
  t.kind = TermKind::frame;
  t.name = std::move(predicate);
  t.args = std::move(args);
  return t;
}

Term Term::referent(std::string name) {
  Term t;
  t.kind = TermKind::referent;
  t.name = std::move(name);
  return t;
}

Term Term::role(std::string name) {
  Term t;
  t.kind = TermKind::role;
  t.name = std::move(name);
  return t;
}

Term Term::slot_ref(int index) {
  Term t;
  t.kind = TermKind::slot;
  t.slot = index;
  return t;
}

bool Term::is_clause() const {
  return kind == TermKind::frame && name == kClausePredicate && args.size() == 3 &&
         args[2].kind == TermKind::frame;
}

const Term* Term::action() const { return is_clause() ? &args[2] : nullptr; }

const Term* Term::object() const {
  const Term* act = action();
  if (!act || act->args.size() < 2 || act->args[1].kind != TermKind::referent) return nullptr;
  return &act->args[1];
}

bool Term::concrete() const {
  if (kind == TermKind::slot || kind == TermKind::builtin) return false;
  auto ok = [](const Term& t) { return t.concrete(); };
  return std::all_of(args.begin(), args.end(), ok) && std::all_of(modifiers.begin(), modifiers.end(), ok);
}

namespace {

void write(const Term& t, bool spaced, std::string& out) {
  switch (t.kind) {
    case TermKind::role:
      out += t.name;
      return;
    case TermKind::slot:
      out += "$" + std::to_string(t.slot);
      return;
    case TermKind::referent:
      out += t.name;
      if (!t.modifiers.empty()) {
        out += '[';
        for (std::size_t i = 0; i < t.modifiers.size(); ++i) {
          if (i) out += ", ";
          write(t.modifiers[i], true, out);
        }
        out += ']';
      }
      return;
    case TermKind::builtin:
    case TermKind::frame: {
      if (t.kind == TermKind::builtin) out += '@';
      out += t.name;
      out += '(';
      bool first = true;
      for (const Term& a : t.args) {
        if (!first) out += spaced ? ", " : ",";
        first = false;
        write(a, spaced, out);
      }
      for (const Term& m : t.modifiers) {
        if (!first) out += ", ";
        first = false;
        write(m, true, out);
      }
      out += ')';
      return;
    }
  }
}

class TemplateReader {
 public:
  explicit TemplateReader(std::string_view text) : text_(text) {}

  Term read() {
    Term t = read_term();
    skip_space();
    if (pos_ != text_.size()) fail("trailing input");
    return t;
  }

 private:
  Term read_term() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end");
    char c = text_[pos_];
    if (c == '$') {
      ++pos_;
      std::size_t start = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (start == pos_) fail("slot without index");
      int index = std::stoi(std::string(text_.substr(start, pos_ - start)));
      if (index < 1) fail("slot indices start at 1");
      return Term::slot_ref(index);
    }
    bool builtin = false;
    if (c == '@') {
      builtin = true;
      ++pos_;
    }
    std::string name = read_identifier();
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == '(') {
      ++pos_;
      Term t = Term::frame(std::move(name));
      if (builtin) t.kind = TermKind::builtin;
      skip_space();
      if (pos_ < text_.size() && text_[pos_] == ')') {
        ++pos_;
        return t;
      }
      for (;;) {
        t.args.push_back(read_term());
        skip_space();
        if (pos_ >= text_.size()) fail("missing ')'");
        if (text_[pos_] == ',') {
          ++pos_;
          continue;
        }
        if (text_[pos_] == ')') {
          ++pos_;
          break;
        }
        fail("expected ',' or ')'");
      }
      return t;
    }
    if (builtin) fail("builtin @" + name + " needs arguments");
    if (name == "speaker" || name == "listener") return Term::role(std::move(name));
    return Term::referent(std::move(name));
  }

  std::string read_identifier() {
    std::size_t start = pos_;
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'' || c == '-') {
        ++pos_;
      } else {
        break;
      }
    }
    if (start == pos_) fail("expected identifier");
    return std::string(text_.substr(start, pos_ - start));
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw SemanticError("template '" + std::string(text_) + "' at " + std::to_string(pos_) + ": " + what);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

Term substitute(const Term& t, int index, const Term& value) {
  if (t.kind == TermKind::slot) return t.slot == index ? value : t;
  Term out = t;
  for (Term& a : out.args) a = substitute(a, index, value);
  for (Term& m : out.modifiers) m = substitute(m, index, value);
  return out;
}

Term strip_modifiers(Term t) {
  t.modifiers.clear();
  return t;
}

const Term& require_clause(const Term& t, const char* op) {
  if (!t.is_clause()) throw SemanticError(std::string("@") + op + " expects a clause, got " + serialize(t));
  return t;
}

Term apply_builtin(const Term& b) {
  const std::string& op = b.name;
  auto need = [&](std::size_t n) {
    if (b.args.size() != n) throw SemanticError("@" + op + " takes " + std::to_string(n) + " arguments");
  };
  if (op == "act") {
    need(2);
    Term base = require_clause(b.args[0], "act");
    base.modifiers.push_back(b.args[1]);
    return base;
  }
  if (op == "join") {
    need(2);
    Term base = require_clause(b.args[0], "join");
    const Term& other = require_clause(b.args[1], "join");
    base.modifiers.push_back(strip_modifiers(*other.action()));
    base.modifiers.insert(base.modifiers.end(), other.modifiers.begin(), other.modifiers.end());
    return base;
  }
  if (op == "onobj") {
    need(2);
    Term base = b.args[0];
    if (base.kind == TermKind::referent) {
      base.modifiers.push_back(b.args[1]);
      return base;
    }
    require_clause(base, "onobj");
    if (!base.object()) throw SemanticError("@onobj: clause has no object: " + serialize(base));
    base.args[2].args[1].modifiers.push_back(b.args[1]);
    return base;
  }
  if (op == "obj") {
    need(1);
    const Term& x = b.args[0];
    if (x.kind == TermKind::referent) return strip_modifiers(x);
    require_clause(x, "obj");
    if (!x.object()) throw SemanticError("@obj: clause has no object: " + serialize(x));
    return strip_modifiers(*x.object());
  }
  if (op == "action") {
    need(1);
    return *require_clause(b.args[0], "action").action();
  }
  throw SemanticError("unknown builtin @" + op);
}

}  // namespace

std::string serialize(const Term& term) {
  std::string out;
  write(term, false, out);
  return out;
}

Term parse_template(std::string_view text) { return TemplateReader(text).read(); }

int max_slot(const Term& term) {
  int m = term.kind == TermKind::slot ? term.slot : 0;
  for (const Term& a : term.args) m = std::max(m, max_slot(a));
  for (const Term& x : term.modifiers) m = std::max(m, max_slot(x));
  return m;
}

bool references_slot(const Term& term, int index) {
  if (term.kind == TermKind::slot) return term.slot == index;
  auto has = [index](const Term& t) { return references_slot(t, index); };
  return std::any_of(term.args.begin(), term.args.end(), has) ||
         std::any_of(term.modifiers.begin(), term.modifiers.end(), has);
}

Term evaluate(const Term& term) {
  if (term.kind == TermKind::slot) throw SemanticError("unbound slot $" + std::to_string(term.slot));
  Term out = term;
  for (Term& a : out.args) a = evaluate(a);
  for (Term& m : out.modifiers) m = evaluate(m);
  if (out.kind == TermKind::builtin) return apply_builtin(out);
  return out;
}

Semantics Semantics::lexical(const Term& body, int arity) {
  Semantics s;
  s.arity_ = arity;
  s.body_ = arity == 0 ? evaluate(body) : body;
  return s;
}

Semantics Semantics::apply(const Semantics& argument) const {
  if (saturated()) throw SemanticError("semantics already saturated: " + str());
  if (!argument.saturated()) throw SemanticError("argument is not saturated: " + argument.str());
  Semantics out = *this;
  out.body_ = substitute(body_, next_slot_, argument.body_);
  ++out.next_slot_;
  if (out.saturated()) out.body_ = evaluate(out.body_);
  return out;
}

}  // namespace steer::grammar
