// Text format for reaction networks (.rxn).
//
//   # comment
//   species data: X1 X2 X3        (optional declarations; kinds data|param)
//   species: A B
//   X1 + th2 -> X2 + th2 ; k=1
//   0 <-> 2 th1 ; kf=11, kr=1
//
// One statement per line. Species not declared are registered as generic in
// order of first appearance.

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <string>

#include "crnem/error.hpp"
#include "crnem/network.hpp"

namespace crnem::crn {

namespace {

class LineCursor {
 public:
  LineCursor(std::string_view line, std::size_t line_no) : line_(line), line_no_(line_no) {}

  void skip_ws() {
    while (pos_ < line_.size() && std::isspace(static_cast<unsigned char>(line_[pos_]))) ++pos_;
  }
  bool at_end() {
    skip_ws();
    return pos_ >= line_.size();
  }
  char peek() {
    skip_ws();
    return pos_ < line_.size() ? line_[pos_] : '\0';
  }
  bool consume(std::string_view token) {
    skip_ws();
    if (line_.substr(pos_, token.size()) == token) {
      pos_ += token.size();
      return true;
    }
    return false;
  }
  void expect(std::string_view token) {
    if (!consume(token)) fail("expected '" + std::string(token) + "'");
  }

  std::optional<std::string> identifier() {
    skip_ws();
    std::size_t end = pos_;
    auto alpha = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; };
    if (end >= line_.size() || !alpha(line_[end])) return std::nullopt;
    while (end < line_.size() &&
           (alpha(line_[end]) || std::isdigit(static_cast<unsigned char>(line_[end]))))
      ++end;
    std::string id(line_.substr(pos_, end - pos_));
    pos_ = end;
    return id;
  }

  std::optional<int> integer() {
    skip_ws();
    std::size_t end = pos_;
    while (end < line_.size() && std::isdigit(static_cast<unsigned char>(line_[end]))) ++end;
    if (end == pos_) return std::nullopt;
    int value = 0;
    auto [ptr, ec] = std::from_chars(line_.data() + pos_, line_.data() + end, value);
    if (ec != std::errc{}) fail("integer out of range");
    (void)ptr;
    pos_ = end;
    return value;
  }

  double number() {
    skip_ws();
    double value = 0.0;
    const char* first = line_.data() + pos_;
    const char* last = line_.data() + line_.size();
    if (pos_ < line_.size() && line_[pos_] == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{}) fail("expected a number");
    pos_ = static_cast<std::size_t>(ptr - line_.data());
    return value;
  }

  std::size_t column() const { return pos_ + 1; }
  std::size_t save() const { return pos_; }
  void restore(std::size_t p) { pos_ = p; }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, line_no_, pos_ + 1); }

 private:
  std::string_view line_;
  std::size_t line_no_;
  std::size_t pos_ = 0;
};

struct Term {
  int coefficient;
  std::string species;
};

std::vector<Term> parse_side(LineCursor& cur) {
  std::vector<Term> terms;
  const std::size_t start = cur.save();
  if (auto zero = cur.integer(); zero && *zero == 0) {
    if (!cur.identifier()) return terms;  // the empty complex "0"
    cur.restore(start);
    cur.fail("coefficient must be positive");
  }
  cur.restore(start);
  do {
    const int coefficient = cur.integer().value_or(1);
    if (coefficient <= 0) cur.fail("coefficient must be positive");
    auto name = cur.identifier();
    if (!name) cur.fail("expected species name");
    terms.push_back({coefficient, std::move(*name)});
  } while (cur.consume("+"));
  return terms;
}

Complex to_complex(ReactionNetwork& net, const std::vector<Term>& terms) {
  for (const auto& t : terms)
    if (!net.find_species(t.species)) net.add_species(t.species);
  Complex c(net.species_count(), 0);
  for (const auto& t : terms) c[*net.find_species(t.species)] += t.coefficient;
  return c;
}

double parse_rate(LineCursor& cur, std::string_view key) {
  cur.expect(key);
  cur.expect("=");
  const std::size_t start = cur.save();
  const double v = cur.number();
  if (!(v > 0.0) || !std::isfinite(v)) {
    cur.restore(start);
    cur.fail("nonpositive rate");
  }
  return v;
}

bool parse_declaration(LineCursor& cur, ReactionNetwork& net) {
  const std::size_t start = cur.save();
  auto word = cur.identifier();
  if (!word || *word != "species") {
    cur.restore(start);
    return false;
  }
  SpeciesKind kind = SpeciesKind::generic;
  const std::size_t after = cur.save();
  if (auto k = cur.identifier()) {
    if (*k == "data")
      kind = SpeciesKind::data;
    else if (*k == "param")
      kind = SpeciesKind::parameter;
    else
      cur.restore(after);
  }
  if (!cur.consume(":")) {
    cur.restore(start);
    return false;
  }
  while (!cur.at_end()) {
    const std::size_t col = cur.column();
    auto name = cur.identifier();
    if (!name) cur.fail("expected species name");
    if (net.find_species(*name)) {
      cur.restore(col - 1);
      cur.fail("duplicate species declaration '" + *name + "'");
    }
    net.add_species(*name, kind);
  }
  return true;
}

std::string format_rate(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const char* kind_label(SpeciesKind k) {
  switch (k) {
    case SpeciesKind::data: return "species data:";
    case SpeciesKind::parameter: return "species param:";
    case SpeciesKind::generic: break;
  }
  return "species:";
}

}  // namespace

ReactionNetwork parse_network(std::string_view text) {
  ReactionNetwork net;
  std::size_t line_no = 0;
  std::size_t begin = 0;
  while (begin <= text.size()) {
    std::size_t end = text.find('\n', begin);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(begin, end - begin);
    begin = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);

    LineCursor cur(line, line_no);
    if (cur.at_end()) {
      if (end == text.size()) break;
      continue;
    }
    if (parse_declaration(cur, net)) continue;

    const auto lhs = parse_side(cur);
    bool reversible = false;
    if (cur.consume("<->"))
      reversible = true;
    else if (!cur.consume("->"))
      cur.fail("expected '->' or '<->'");
    if (cur.at_end() || cur.peek() == ';') cur.fail("missing product side");
    const auto rhs = parse_side(cur);
    cur.expect(";");

    double forward = 0.0, backward = 0.0;
    if (reversible) {
      forward = parse_rate(cur, "kf");
      cur.expect(",");
      backward = parse_rate(cur, "kr");
    } else {
      forward = parse_rate(cur, "k");
    }
    if (!cur.at_end()) cur.fail("unexpected trailing input");

    Complex y = to_complex(net, lhs);
    Complex y2 = to_complex(net, rhs);
    y.resize(net.species_count(), 0);
    if (y == y2) cur.fail("reactant and product complexes are identical");
    net.add_reaction({y, y2, forward});
    if (reversible) net.add_reaction({y2, y, backward});
    if (end == text.size()) break;
  }
  return net;
}

std::string print_network(const ReactionNetwork& net) {
  std::string out = "# reaction network: " + std::to_string(net.species_count()) + " species, " +
                    std::to_string(net.reaction_count()) + " reactions\n";
  const auto& sp = net.species();
  for (std::size_t i = 0; i < sp.size();) {
    std::size_t j = i;
    out += kind_label(sp[i].kind);
    while (j < sp.size() && sp[j].kind == sp[i].kind) out += " " + sp[j++].name;
    out += "\n";
    i = j;
  }
  const auto& rx = net.reactions();
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const bool paired = i + 1 < rx.size() && rx[i + 1].reactant == rx[i].product &&
                        rx[i + 1].product == rx[i].reactant;
    if (paired) {
      out += net.complex_to_string(rx[i].reactant) + " <-> " + net.complex_to_string(rx[i].product) +
             " ; kf=" + format_rate(rx[i].rate) + ", kr=" + format_rate(rx[i + 1].rate) + "\n";
      ++i;
    } else {
      out += net.reaction_to_string(rx[i]) + " ; k=" + format_rate(rx[i].rate) + "\n";
    }
  }
  return out;
}

}  // namespace crnem::crn
