#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "detopt/crn.hpp"

namespace detopt {

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, int column, const std::string& message)
      : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message),
        line(line),
        column(column) {}

  int line;
  int column;
};

/// One parsed reaction line with its optional rate annotation.
struct ReactionLine {
  Reaction reaction;
  std::optional<double> rate;
  int line_no = 0;
};

/// Intermediate form of a parsed network file.
///
/// Grammar, one item per line ('#' starts a comment anywhere):
///   @species NAME NAME ...        optional declaration; fixes species order
///   @fully_open                   append missing flow reactions after parsing
///   complex "->" complex [ "@" positive-decimal ]
/// where complex is "0" or a "+"-separated list of terms, each an optional
/// positive integer coefficient followed by a species name ("2 X3" and "2X3"
/// are both accepted). Species names match [A-Za-z][A-Za-z0-9_]*. Without a
/// declaration line, first appearance defines the species order; with one,
/// undeclared species are an error.
struct NetworkDocument {
  std::vector<std::string> species;
  bool explicit_declaration = false;
  std::vector<ReactionLine> reactions;
  bool fully_open_directive = false;
};

namespace detail {

inline bool is_name_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
inline bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

class LineScanner {
 public:
  LineScanner(std::string_view text, int line_no) : text_(text), line_(line_no) {}

  void skip_spaces() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  }

  bool at_end() {
    skip_spaces();
    return pos_ >= text_.size();
  }

  char peek() {
    skip_spaces();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  int column() const { return static_cast<int>(pos_) + 1; }

  bool consume(std::string_view token) {
    skip_spaces();
    if (text_.substr(pos_, token.size()) == token) {
      pos_ += token.size();
      return true;
    }
    return false;
  }

  std::string read_name() {
    skip_spaces();
    const int col = column();
    if (pos_ >= text_.size() || !is_name_start(text_[pos_])) {
      throw ParseError(line_, col, "expected a species name");
    }
    size_t start = pos_;
    while (pos_ < text_.size() && is_name_char(text_[pos_])) ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  std::optional<long> try_read_integer() {
    skip_spaces();
    if (pos_ >= text_.size() || std::isdigit(static_cast<unsigned char>(text_[pos_])) == 0) {
      return std::nullopt;
    }
    size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])) != 0) ++pos_;
    return std::stol(std::string(text_.substr(start, pos_ - start)));
  }

  double read_decimal() {
    skip_spaces();
    const int col = column();
    const std::string rest(text_.substr(pos_));
    size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(rest, &used);
    } catch (const std::exception&) {
      throw ParseError(line_, col, "expected a decimal number");
    }
    pos_ += used;
    return value;
  }

  [[noreturn]] void fail(const std::string& message) { throw ParseError(line_, column(), message); }

  int line() const { return line_; }

 private:
  std::string_view text_;
  size_t pos_ = 0;
  int line_;
};

// complex := "0" | term ("+" term)*, term := [coeff] name
inline Complex parse_complex(LineScanner& s, std::vector<std::string>& species, bool strict,
                             const char* side) {
  if (s.peek() == '0') {
    s.consume("0");
    if (s.peek() == '+') s.fail("the zero complex cannot be combined with other terms");
    return Complex::zero();
  }
  Complex c;
  while (true) {
    const int col = s.column();
    long coeff = 1;
    if (auto k = s.try_read_integer()) {
      coeff = *k;
      if (coeff <= 0) throw ParseError(s.line(), col, "coefficient must be a positive integer");
    }
    const std::string name = s.read_name();
    int index = -1;
    for (size_t i = 0; i < species.size(); ++i) {
      if (species[i] == name) {
        index = static_cast<int>(i);
        break;
      }
    }
    if (index < 0) {
      if (strict) throw ParseError(s.line(), col, "unknown species '" + name + "' (not in @species declaration)");
      species.push_back(name);
      index = static_cast<int>(species.size()) - 1;
    }
    c.add(index, static_cast<int>(coeff));
    if (!s.consume("+")) break;
  }
  if (c.is_zero()) s.fail(std::string("empty ") + side + " complex");
  return c;
}

}  // namespace detail

inline NetworkDocument parse_document(const std::string& text) {
  NetworkDocument doc;
  int line_no = 0;
  size_t pos = 0;
  bool seen_reaction = false;
  while (pos <= text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (size_t hash = line.find('#'); hash != std::string::npos) line.resize(hash);

    detail::LineScanner s(line, line_no);
    if (s.at_end()) {
      if (pos > text.size()) break;
      continue;
    }

    if (s.peek() == '@') {
      s.consume("@");
      const std::string directive = s.read_name();
      if (directive == "fully_open") {
        if (!s.at_end()) s.fail("unexpected text after @fully_open");
        doc.fully_open_directive = true;
      } else if (directive == "species") {
        if (doc.explicit_declaration) s.fail("duplicate @species declaration");
        if (seen_reaction) s.fail("@species declaration must precede all reactions");
        if (!doc.species.empty()) s.fail("@species declaration must precede all reactions");
        while (!s.at_end()) {
          const int col = s.column();
          const std::string name = s.read_name();
          for (const std::string& existing : doc.species) {
            if (existing == name) throw ParseError(line_no, col, "duplicate species name '" + name + "'");
          }
          doc.species.push_back(name);
        }
        if (doc.species.empty()) s.fail("@species declaration lists no species");
        doc.explicit_declaration = true;
      } else {
        s.fail("unknown directive '@" + directive + "'");
      }
      continue;
    }

    Complex reactant = detail::parse_complex(s, doc.species, doc.explicit_declaration, "reactant");
    if (!s.consume("->")) s.fail("expected '->'");
    Complex product = detail::parse_complex(s, doc.species, doc.explicit_declaration, "product");
    std::optional<double> rate;
    if (s.consume("@")) {
      const int col = s.column();
      const double value = s.read_decimal();
      if (!(value > 0.0) || !std::isfinite(value)) {
        throw ParseError(line_no, col, "rate must be a finite positive number");
      }
      rate = value;
    }
    if (!s.at_end()) s.fail("unexpected trailing text");
    Reaction reaction;
    try {
      reaction = Reaction::make(std::move(reactant), std::move(product));
    } catch (const std::invalid_argument& e) {
      throw ParseError(line_no, 1, e.what());
    }
    doc.reactions.push_back(ReactionLine{std::move(reaction), rate, line_no});
    seen_reaction = true;
  }
  return doc;
}

/// Lowers a document to a Network plus, when every reaction line carries a
/// rate annotation, the corresponding RateAssignment.
inline std::pair<Network, std::optional<RateAssignment>> document_network(const NetworkDocument& doc) {
  Network net;
  net.species_count = static_cast<int>(doc.species.size());
  int rated = 0;
  for (const ReactionLine& rl : doc.reactions) {
    net.reactions.push_back(rl.reaction);
    if (rl.rate) ++rated;
  }
  if (rated != 0 && rated != static_cast<int>(doc.reactions.size())) {
    for (const ReactionLine& rl : doc.reactions) {
      if (!rl.rate) throw ParseError(rl.line_no, 1, "mixed rated and unrated reactions");
    }
  }
  if (doc.fully_open_directive) {
    if (rated != 0) {
      throw ParseError(1, 1, "@fully_open cannot be combined with rated reactions (flow rates would be unspecified)");
    }
    net = fully_open_extension(net);
  }
  validate(net);
  std::optional<RateAssignment> rates;
  if (rated != 0) {
    Eigen::VectorXd v(net.reaction_count());
    for (int k = 0; k < net.reaction_count(); ++k) v(k) = *doc.reactions[k].rate;
    rates = RateAssignment(std::move(v));
  }
  return {std::move(net), std::move(rates)};
}

inline std::pair<Network, std::optional<RateAssignment>> parse_network(const std::string& text) {
  return document_network(parse_document(text));
}

namespace detail {

inline std::string format_17g(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

inline std::string complex_to_string(const Complex& c) {
  if (c.is_zero()) return "0";
  std::string out;
  for (const auto& [i, k] : c.coefficients) {
    if (!out.empty()) out += " + ";
    if (k != 1) out += std::to_string(k) + " ";
    out += "X" + std::to_string(i + 1);
  }
  return out;
}

}  // namespace detail

/// Serializes a network (and optional rates) to the text format. Species are
/// written with canonical 1-based names X1..Xn; rates carry 17 significant
/// digits so a round trip reproduces the exact doubles.
inline std::string serialize_network(const Network& net,
                                     const std::optional<RateAssignment>& rates = std::nullopt) {
  validate(net);
  if (rates && rates->values.size() != net.reaction_count()) {
    throw std::invalid_argument("serialize_network: rate count does not match reaction count");
  }
  std::string out = "@species";
  for (int i = 0; i < net.species_count; ++i) out += " X" + std::to_string(i + 1);
  out += "\n";
  for (int k = 0; k < net.reaction_count(); ++k) {
    const Reaction& r = net.reactions[k];
    out += detail::complex_to_string(r.reactant) + " -> " + detail::complex_to_string(r.product);
    if (rates) out += " @ " + detail::format_17g(rates->values(k));
    out += "\n";
  }
  return out;
}

}  // namespace detopt
