#include <doctest.h>

#include <set>

#include "steer/grammar/lexicon.hpp"

using namespace steer::grammar;

namespace {

const Dictionary& shipped() {
  static const Dictionary d = load_grammar_file(STEER_DATA_DIR "/grammar/english.grammar");
  return d;
}

std::set<std::string> entry_set(const Dictionary& d) {
  std::set<std::string> out;
  for (const auto& e : d.entries()) out.insert(e.word + "|" + e.category.str() + "|" + serialize(e.semantics));
  return out;
}

}  // namespace

TEST_CASE("lookup") {
  auto mug = shipped().lookup("mug");
  REQUIRE(mug.size() == 1);
  CHECK(mug[0].category.str() == "N");
  CHECK(serialize(mug[0].semantics) == "mug");
  CHECK(shipped().lookup("xyzzy").empty());
  auto the = shipped().lookup("The");
  REQUIRE(the.size() == 1);
  CHECK(the[0].category.str() == "NP/N");
  CHECK(shipped().lookup("by").size() == 2);
  CHECK(shipped().lookup("Don\xE2\x80\x99t,").size() == 1);
}

TEST_CASE("token normalization") {
  CHECK(normalize_token("Mug.") == "mug");
  CHECK(normalize_token("don't") == "don't");
  CHECK(normalize_token("\"Top!\"") == "top");
  CHECK(tokenize("  Grab the MUG, ... now") == std::vector<std::string>{"grab", "the", "mug", "now"});
}

TEST_CASE("shipped vocabulary covers the scenario utterances") {
  for (const char* w : {"grab", "the", "mug", "by", "top", "pass", "don't", "spill", "it", "but", "keep",
                        "upright", "and", "avoid", "going", "over", "laptop", "hand", "me", "screwdriver",
                        "move", "faster", "go", "from"}) {
    CHECK_MESSAGE(!shipped().lookup(w).empty(), w);
  }
}

TEST_CASE("load errors") {
  CHECK(load_grammar("").size() == 0);
  CHECK(load_grammar("# only a comment\n\n").size() == 0);
  try {
    load_grammar("mug\tN\tmug\nhand\t(VP/NP)/NP\thandObject(listener,$1)\n");
    FAIL("expected arity error");
  } catch (const GrammarError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(load_grammar("mug\tN\tmug\nmug\tN\tcup\n"), GrammarError);
  CHECK_THROWS_AS(load_grammar("mug\tN\n"), GrammarError);
  CHECK_THROWS_AS(load_grammar("mug\tQ\tmug\n"), GrammarError);
  CHECK_THROWS_AS(load_grammar("grab\tVP/NP\tgrasp(listener,$1\n"), GrammarError);
}

TEST_CASE("round trip through text") {
  const Dictionary& d = shipped();
  Dictionary again = load_grammar(d.to_text());
  CHECK(entry_set(again) == entry_set(d));
  CHECK(again.labels() == d.labels());
}

TEST_CASE("every template saturates to a concrete term") {
  for (const auto& e : shipped().entries()) {
    Semantics s = e.instantiate();
    Category c = e.category;
    while (!c.is_atomic()) {
      s = s.apply(placeholder_for(c.argument()));
      c = c.result();
    }
    CHECK_MESSAGE(s.saturated(), e.word);
    CHECK_MESSAGE(s.term().concrete(), e.word);
    CHECK_MESSAGE(s.str().find('$') == std::string::npos, e.word);
    CHECK(e.category.depth() <= 4);
  }
}
