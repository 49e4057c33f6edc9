#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace steer::grammar {

enum class TermKind { frame, referent, role, slot, builtin };

// One node of a first-order-logic style meaning representation.
//
//   frame     predicate(args..., modifiers...)   e.g. graspObject(listener,mug)
//   referent  an object name; its modifiers are object-site attachments
//   role      speaker / listener
//   slot      $n placeholder inside a lexical template
//   builtin   @op(...) evaluated once every slot of a template is bound
//             (@act, @onobj, @obj, @action, @join)
//
// Modifiers on a frame attach to the action; modifiers on a referent attach
// to the object. The two sites are never inferred from argument order.
struct Term {
  TermKind kind = TermKind::referent;
  std::string name;
  std::vector<Term> args;
  std::vector<Term> modifiers;
  int slot = 0;

  static Term frame(std::string predicate, std::vector<Term> args = {});
  static Term referent(std::string name);
  static Term role(std::string name);
  static Term slot_ref(int index);

  // INSTRUCT(speaker,listener,<action>)
  bool is_clause() const;
  const Term* action() const;
  // Object referent of a clause (second argument of its action), if any.
  const Term* object() const;

  bool concrete() const;

  friend bool operator==(const Term&, const Term&) = default;
};

class SemanticError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kClausePredicate = "INSTRUCT";

// Canonical text form: INSTRUCT(speaker,listener,graspObject(listener,mug), by(mug, top)).
// Core arguments are comma-joined without spaces; modifiers and everything
// nested inside them use ", ". Object-site modifiers render as mug[...].
std::string serialize(const Term& term);

// Parses template syntax such as "INSTRUCT(speaker,listener,graspObject(listener,$1))"
// or "@act($2, by(@obj($2), $1))". Throws SemanticError.
Term parse_template(std::string_view text);

// Highest slot index referenced (0 when none).
int max_slot(const Term& term);
bool references_slot(const Term& term, int index);

// Evaluates every builtin in a slot-free term. Throws SemanticError on a
// type clash (e.g. @action applied to a referent).
Term evaluate(const Term& term);

// Semantics of a chart node: a lexical template with the first `bound`
// slots already substituted. Saturated semantics hold a concrete term.
class Semantics {
 public:
  Semantics() = default;
  static Semantics lexical(const Term& body, int arity);

  bool saturated() const { return next_slot_ > arity_; }
  int remaining() const { return arity_ - next_slot_ + 1; }
  const Term& term() const { return body_; }

  // Binds the next slot to a saturated argument. Throws SemanticError.
  Semantics apply(const Semantics& argument) const;

  std::string str() const { return serialize(body_); }

  friend bool operator==(const Semantics&, const Semantics&) = default;

 private:
  Term body_;
  int arity_ = 0;
  int next_slot_ = 1;
};

}  // namespace steer::grammar
