#pragma once

#include <algorithm>
#include <cctype>
#include <string>
#include <vector>

#include "geocv/common.hpp"

namespace geocv {

enum class Family { normal, bernoulli };

inline Family parse_family(const std::string& s) {
  if (s == "normal") return Family::normal;
  if (s == "bernoulli") return Family::bernoulli;
  throw error("unknown family '" + s + "'");
}

inline std::string family_name(Family f) {
  return f == Family::normal ? "normal" : "bernoulli";
}

struct ModelSpec {
  std::string response;
  std::vector<std::string> covariates;  // design-matrix column order
  bool intercept = true;
  bool spatial = false;
  Family family = Family::normal;
};

// Grammar:  formula := ident "~" term ("+" term)*
//           term    := "1" | "-1" | "spatial" | ident
// "-1" drops the intercept, a literal "1" forces it, "spatial" adds the one
// latent field; everything else is a covariate column name.
inline ModelSpec parse_formula(const std::string& text) {
  ModelSpec spec;
  size_t pos = 0;
  auto skip_ws = [&] { while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos; };
  auto parse_ident = [&]() -> std::string {
    skip_ws();
    size_t start = pos;
    if (pos >= text.size() || !std::isalpha(static_cast<unsigned char>(text[pos])))
      throw error("formula: expected identifier at position " + std::to_string(pos));
    ++pos;
    while (pos < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '.' ||
            text[pos] == '_'))
      ++pos;
    return text.substr(start, pos - start);
  };

  spec.response = parse_ident();
  skip_ws();
  if (pos >= text.size() || text[pos] != '~')
    throw error("formula: missing '~' at position " + std::to_string(pos));
  ++pos;

  bool first = true;
  while (true) {
    skip_ws();
    if (pos >= text.size()) {
      if (first) throw error("formula: empty right-hand side");
      break;
    }
    if (!first) {
      if (text[pos] != '+')
        throw error("formula: expected '+' at position " + std::to_string(pos));
      ++pos;
      skip_ws();
    }
    first = false;
    if (pos < text.size() && text[pos] == '-') {
      ++pos;
      skip_ws();
      if (pos >= text.size() || text[pos] != '1')
        throw error("formula: expected '1' after '-' at position " + std::to_string(pos));
      ++pos;
      spec.intercept = false;
    } else if (pos < text.size() && text[pos] == '1') {
      ++pos;
      spec.intercept = true;
    } else {
      std::string id = parse_ident();
      if (id == "spatial") {
        if (spec.spatial) throw error("formula: 'spatial' given twice");
        spec.spatial = true;
      } else {
        if (id == spec.response)
          throw error("formula: response '" + id + "' reused as covariate");
        if (std::find(spec.covariates.begin(), spec.covariates.end(), id) !=
            spec.covariates.end())
          throw error("formula: duplicate covariate '" + id + "'");
        spec.covariates.push_back(id);
      }
    }
    skip_ws();
    if (pos >= text.size()) break;
  }
  return spec;
}

inline std::string print_formula(const ModelSpec& spec) {
  std::string out = spec.response + " ~ ";
  std::vector<std::string> terms;
  terms.push_back(spec.intercept ? "1" : "-1");
  for (const auto& c : spec.covariates) terms.push_back(c);
  if (spec.spatial) terms.push_back("spatial");
  for (size_t i = 0; i < terms.size(); ++i) {
    if (i) out += " + ";
    out += terms[i];
  }
  return out;
}

}  // namespace geocv
