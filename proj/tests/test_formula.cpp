#include <catch2/catch_amalgamated.hpp>

#include "geocv/formula.hpp"

using namespace geocv;

TEST_CASE("walkthrough formula parses with explicit ones column") {
  ModelSpec s = parse_formula("cadmium ~ -1 + y.intercept + elev + dist + om + spatial");
  REQUIRE(s.response == "cadmium");
  REQUIRE(s.covariates == std::vector<std::string>{"y.intercept", "elev", "dist", "om"});
  REQUIRE_FALSE(s.intercept);
  REQUIRE(s.spatial);
}

TEST_CASE("intercept-only formula") {
  ModelSpec s = parse_formula("y ~ 1");
  REQUIRE(s.response == "y");
  REQUIRE(s.covariates.empty());
  REQUIRE(s.intercept);
  REQUIRE_FALSE(s.spatial);
}

TEST_CASE("duplicate covariate is rejected") {
  REQUIRE_THROWS_WITH(parse_formula("y ~ elev + elev"),
                      Catch::Matchers::ContainsSubstring("duplicate"));
}

TEST_CASE("missing tilde reports a position") {
  REQUIRE_THROWS_WITH(parse_formula("y elev + om"),
                      Catch::Matchers::ContainsSubstring("position"));
}

TEST_CASE("double spatial term is rejected") {
  REQUIRE_THROWS_WITH(parse_formula("y ~ spatial + x + spatial"),
                      Catch::Matchers::ContainsSubstring("twice"));
}

TEST_CASE("empty right-hand side is rejected") {
  REQUIRE_THROWS_AS(parse_formula("y ~ "), error);
  REQUIRE_THROWS_AS(parse_formula("y ~"), error);
}

TEST_CASE("whitespace is insignificant") {
  ModelSpec a = parse_formula("y~x1+x2+spatial");
  ModelSpec b = parse_formula("  y ~  x1 +\tx2 + spatial ");
  REQUIRE(a.response == b.response);
  REQUIRE(a.covariates == b.covariates);
  REQUIRE(a.spatial == b.spatial);
}

TEST_CASE("response reused as covariate is rejected") {
  REQUIRE_THROWS_AS(parse_formula("y ~ y"), error);
}

TEST_CASE("parse-print-parse round trip") {
  for (const std::string text :
       {"cadmium ~ -1 + y.intercept + elev + dist + om + spatial", "y ~ 1", "y ~ x1 + x2",
        "y ~ -1 + a.b_c + spatial"}) {
    ModelSpec a = parse_formula(text);
    ModelSpec b = parse_formula(print_formula(a));
    REQUIRE(a.response == b.response);
    REQUIRE(a.covariates == b.covariates);
    REQUIRE(a.intercept == b.intercept);
    REQUIRE(a.spatial == b.spatial);
  }
}

TEST_CASE("covariate order is preserved") {
  ModelSpec s = parse_formula("y ~ c + a + b");
  REQUIRE(s.covariates == std::vector<std::string>{"c", "a", "b"});
}

TEST_CASE("family names parse and print") {
  REQUIRE(parse_family("normal") == Family::normal);
  REQUIRE(parse_family("bernoulli") == Family::bernoulli);
  REQUIRE_THROWS_AS(parse_family("binomial"), error);
  REQUIRE(family_name(Family::bernoulli) == "bernoulli");
}
