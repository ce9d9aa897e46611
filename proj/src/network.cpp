#include "crnem/network.hpp"

#include <algorithm>
#include <cmath>

#include "crnem/error.hpp"

namespace crnem::crn {

std::vector<int> Reaction::net_change() const {
  std::vector<int> d(product.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = product[i] - reactant[i];
  return d;
}

bool is_valid_identifier(std::string_view name) {
  if (name.empty()) return false;
  auto alpha = [](char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_'; };
  auto digit = [](char c) { return c >= '0' && c <= '9'; };
  if (!alpha(name.front())) return false;
  return std::all_of(name.begin() + 1, name.end(), [&](char c) { return alpha(c) || digit(c); });
}

ReactionNetwork::ReactionNetwork(std::vector<Species> species) {
  for (auto& s : species) add_species(std::move(s.name), s.kind);
}

std::size_t ReactionNetwork::add_species(std::string name, SpeciesKind kind) {
  if (!is_valid_identifier(name)) throw ValidationError("invalid species name '" + name + "'");
  if (find_species(name)) throw ValidationError("duplicate species '" + name + "'");
  species_.push_back({std::move(name), kind});
  for (auto& r : reactions_) {
    r.reactant.push_back(0);
    r.product.push_back(0);
  }
  return species_.size() - 1;
}

std::optional<std::size_t> ReactionNetwork::find_species(std::string_view name) const {
  for (std::size_t i = 0; i < species_.size(); ++i)
    if (species_[i].name == name) return i;
  return std::nullopt;
}

void ReactionNetwork::add_reaction(Reaction reaction) {
  const std::size_t n = species_.size();
  if (reaction.reactant.size() != n || reaction.product.size() != n)
    throw ValidationError("reaction stoichiometry does not match species count");
  auto negative = [](int v) { return v < 0; };
  if (std::any_of(reaction.reactant.begin(), reaction.reactant.end(), negative) ||
      std::any_of(reaction.product.begin(), reaction.product.end(), negative))
    throw ValidationError("negative stoichiometric coefficient");
  if (!(reaction.rate > 0.0) || !std::isfinite(reaction.rate))
    throw ValidationError("reaction rate must be positive and finite");
  if (reaction.reactant == reaction.product)
    throw ValidationError("null reaction: " + reaction_to_string(reaction));
  reactions_.push_back(std::move(reaction));
}

std::string ReactionNetwork::complex_to_string(const Complex& c) const {
  std::string out;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i] == 0) continue;
    if (!out.empty()) out += " + ";
    if (c[i] != 1) out += std::to_string(c[i]) + " ";
    out += species_[i].name;
  }
  return out.empty() ? "0" : out;
}

std::string ReactionNetwork::reaction_to_string(const Reaction& r) const {
  return complex_to_string(r.reactant) + " -> " + complex_to_string(r.product);
}

ReactionNetwork network_generated_by(const intlat::LatticeBasis& basis,
                                     const std::vector<std::string>& names) {
  const std::size_t n = basis.ambient_dim();
  if (!names.empty() && names.size() != n)
    throw ValidationError("network_generated_by: species name count does not match dimension");
  ReactionNetwork net;
  for (std::size_t j = 0; j < n; ++j)
    net.add_species(names.empty() ? "X" + std::to_string(j + 1) : names[j], SpeciesKind::data);

  const auto rows = basis.matrix().to_int64();
  for (const auto& b : rows) {
    Complex plus(n, 0), minus(n, 0);
    for (std::size_t j = 0; j < n; ++j) {
      if (b[j] > 0) plus[j] = static_cast<int>(b[j]);
      if (b[j] < 0) minus[j] = static_cast<int>(-b[j]);
    }
    net.add_reaction({plus, minus, 1.0});
    net.add_reaction({minus, plus, 1.0});
  }
  return net;
}

}  // namespace crnem::crn
