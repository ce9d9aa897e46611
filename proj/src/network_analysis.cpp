#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <unordered_set>

#include "crnem/error.hpp"
#include "crnem/lp.hpp"
#include "crnem/network.hpp"

namespace crnem::crn {

Eigen::MatrixXd stoichiometric_matrix(const ReactionNetwork& net) {
  Eigen::MatrixXd n(static_cast<Eigen::Index>(net.species_count()),
                    static_cast<Eigen::Index>(net.reaction_count()));
  for (std::size_t r = 0; r < net.reaction_count(); ++r) {
    const auto d = net.reactions()[r].net_change();
    for (std::size_t i = 0; i < d.size(); ++i)
      n(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(r)) = d[i];
  }
  return n;
}

namespace {

struct SubspaceSplit {
  Eigen::MatrixXd range;       // orthonormal basis of the column space
  Eigen::MatrixXd complement;  // orthonormal basis of its orthogonal complement
};

SubspaceSplit split_column_space(const Eigen::MatrixXd& m) {
  const Eigen::Index n = m.rows();
  if (m.cols() == 0 || m.isZero(0.0)) return {Eigen::MatrixXd(n, 0), Eigen::MatrixXd::Identity(n, n)};
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullU);
  const auto& s = svd.singularValues();
  const double tol = std::max<double>(static_cast<double>(std::max(m.rows(), m.cols())), 1.0) *
                     s(0) * 1e-12;
  Eigen::Index rank = 0;
  while (rank < s.size() && s(rank) > tol) ++rank;
  return {svd.matrixU().leftCols(rank), svd.matrixU().rightCols(n - rank)};
}

using Mask = std::uint32_t;

Mask to_mask(const SpeciesSet& t) {
  Mask m = 0;
  for (auto i : t) m |= Mask{1} << i;
  return m;
}

SpeciesSet from_mask(Mask m) {
  SpeciesSet t;
  for (std::size_t i = 0; m; ++i, m >>= 1)
    if (m & 1u) t.push_back(i);
  return t;
}

struct ReactionMasks {
  Mask reactants;
  Mask products;
};

std::vector<ReactionMasks> reaction_masks(const ReactionNetwork& net) {
  std::vector<ReactionMasks> out;
  for (const auto& r : net.reactions()) {
    ReactionMasks m{0, 0};
    for (std::size_t i = 0; i < r.reactant.size(); ++i) {
      if (r.reactant[i] > 0) m.reactants |= Mask{1} << i;
      if (r.product[i] > 0) m.products |= Mask{1} << i;
    }
    out.push_back(m);
  }
  return out;
}

class SiphonSearch {
 public:
  explicit SiphonSearch(std::vector<ReactionMasks> rx) : rx_(std::move(rx)) {}

  void run(Mask seed) { grow(seed); }

  std::vector<Mask> minimal() const {
    std::vector<Mask> sorted = found_;
    std::sort(sorted.begin(), sorted.end(), [](Mask a, Mask b) {
      const int pa = std::popcount(a), pb = std::popcount(b);
      return pa != pb ? pa < pb : a < b;
    });
    std::vector<Mask> out;
    for (Mask m : sorted)
      if (std::none_of(out.begin(), out.end(), [m](Mask k) { return (k & m) == k; })) out.push_back(m);
    return out;
  }

 private:
  void grow(Mask t) {
    if (!visited_.insert(t).second) return;
    for (Mask f : found_)
      if ((f & t) == f) return;
    for (const auto& r : rx_) {
      if ((r.products & t) && !(r.reactants & t)) {
        // some reactant of this reaction must join the siphon
        for (Mask rest = r.reactants; rest; rest &= rest - 1) grow(t | (rest & -rest));
        return;
      }
    }
    found_.push_back(t);
  }

  std::vector<ReactionMasks> rx_;
  std::vector<Mask> found_;
  std::unordered_set<Mask> visited_;
};

}  // namespace

Eigen::MatrixXd stoichiometric_subspace(const ReactionNetwork& net) {
  return split_column_space(stoichiometric_matrix(net)).range;
}

Eigen::MatrixXd conservation_basis(const ReactionNetwork& net) {
  return split_column_space(stoichiometric_matrix(net)).complement;
}

bool is_weakly_reversible(const ReactionNetwork& net) {
  std::map<Complex, std::size_t> ids;
  auto id_of = [&](const Complex& c) { return ids.emplace(c, ids.size()).first->second; };
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (const auto& r : net.reactions()) {
    const std::size_t a = id_of(r.reactant);
    edges.emplace_back(a, id_of(r.product));
  }
  const std::size_t k = ids.size();
  std::vector<std::vector<std::size_t>> adj(k);
  for (auto [a, b] : edges) adj[a].push_back(b);

  auto reaches = [&](std::size_t from, std::size_t to) {
    std::vector<bool> seen(k, false);
    std::vector<std::size_t> stack{from};
    seen[from] = true;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      if (u == to) return true;
      for (auto v : adj[u])
        if (!seen[v]) seen[v] = true, stack.push_back(v);
    }
    return false;
  };
  return std::all_of(edges.begin(), edges.end(), [&](auto e) { return reaches(e.second, e.first); });
}

std::vector<std::optional<std::size_t>> reverse_reactions(const ReactionNetwork& net) {
  const auto& rx = net.reactions();
  std::vector<std::optional<std::size_t>> rev(rx.size());
  for (std::size_t i = 0; i < rx.size(); ++i)
    for (std::size_t j = 0; j < rx.size(); ++j)
      if (rx[j].reactant == rx[i].product && rx[j].product == rx[i].reactant) {
        rev[i] = j;
        break;
      }
  return rev;
}

bool is_reversible(const ReactionNetwork& net) {
  const auto rev = reverse_reactions(net);
  return std::all_of(rev.begin(), rev.end(), [](const auto& r) { return r.has_value(); });
}

bool is_siphon(const ReactionNetwork& net, const SpeciesSet& t) {
  std::vector<bool> in(net.species_count(), false);
  for (auto i : t) {
    if (i >= net.species_count()) throw ValidationError("species index out of range");
    in[i] = true;
  }
  for (const auto& r : net.reactions()) {
    bool produces = false, consumes = false;
    for (std::size_t i = 0; i < in.size(); ++i) {
      if (!in[i]) continue;
      produces = produces || r.product[i] > 0;
      consumes = consumes || r.reactant[i] > 0;
    }
    if (produces && !consumes) return false;
  }
  return true;
}

SiphonReport find_minimal_siphons(const ReactionNetwork& net) {
  const std::size_t n = net.species_count();
  if (n > kMaxSiphonSpecies)
    throw ValidationError("siphon search supports at most " + std::to_string(kMaxSiphonSpecies) +
                          " species");
  SiphonSearch search(reaction_masks(net));
  for (std::size_t s = 0; s < n; ++s) search.run(Mask{1} << s);
  SiphonReport report;
  for (Mask m : search.minimal()) report.minimal_siphons.push_back(from_mask(m));
  return report;
}

bool verify_critical_witness(const ReactionNetwork& net, const SpeciesSet& t,
                             const CriticalWitness& w, double tol) {
  const auto n = static_cast<Eigen::Index>(net.species_count());
  if (w.x.size() != n || w.y.size() != n) return false;
  const Mask mask = to_mask(t);
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool in_t = (mask >> i) & 1u;
    if (in_t && w.x(i) != 0.0) return false;
    if (!in_t && !(w.x(i) > 0.0)) return false;
    if (!(w.y(i) > 0.0)) return false;
  }
  const Eigen::MatrixXd c = conservation_basis(net);
  const Eigen::VectorXd diff = w.x - w.y;
  const double distance = c.cols() == 0 ? 0.0 : (c.transpose() * diff).norm();
  return distance < tol;
}

CriticalSiphonResult is_critical_siphon(const ReactionNetwork& net, const SpeciesSet& t) {
  if (!is_siphon(net, t)) throw ValidationError("species set is not a siphon");
  constexpr double eps = 1e-6;
  const auto n = static_cast<Eigen::Index>(net.species_count());
  const Eigen::MatrixXd stoich = stoichiometric_matrix(net);
  const auto r = stoich.cols();
  const Mask mask = to_mask(t);

  // Variables: p (x - eps, species outside T), q = y - eps, lambda+, lambda-.
  std::vector<Eigen::Index> outside;
  for (Eigen::Index i = 0; i < n; ++i)
    if (!((mask >> i) & 1u)) outside.push_back(i);
  const auto np = static_cast<Eigen::Index>(outside.size());
  const Eigen::Index cols = np + n + 2 * r;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + 1, cols);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n + 1);
  for (Eigen::Index k = 0; k < np; ++k) a(outside[static_cast<std::size_t>(k)], k) = 1.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    a(i, np + i) = -1.0;
    if ((mask >> i) & 1u) b(i) = eps;
  }
  a.block(0, np + n, n, r) = -stoich;
  a.block(0, np + n + r, n, r) = stoich;
  a.row(n).segment(np, n).setOnes();
  b(n) = 1.0 - static_cast<double>(n) * eps;

  const lp::Result res = lp::minimize(a, b, Eigen::VectorXd::Zero(cols));
  if (res.status != lp::Status::optimal) return {};

  CriticalWitness w;
  w.x = Eigen::VectorXd::Zero(n);
  for (Eigen::Index k = 0; k < np; ++k) w.x(outside[static_cast<std::size_t>(k)]) = res.x(k) + eps;
  w.y = res.x.segment(np, n).array() + eps;
  if (!verify_critical_witness(net, t, w))
    throw MathError("critical siphon witness failed verification");
  return {true, std::move(w)};
}

SiphonReport analyze_siphons(const ReactionNetwork& net) {
  SiphonReport report = find_minimal_siphons(net);
  for (const auto& t : report.minimal_siphons) {
    auto res = is_critical_siphon(net, t);
    report.critical.push_back(res.critical);
    report.certificates.push_back(std::move(res.witness));
  }
  return report;
}

bool is_prime_lattice_network(const intlat::LatticeBasis& basis) { return intlat::is_saturated(basis); }

std::optional<intlat::IntMatrix> lattice_generators(const ReactionNetwork& net) {
  const auto rev = reverse_reactions(net);
  const auto& rx = net.reactions();
  std::vector<std::vector<std::int64_t>> gens;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    if (!rev[i]) return std::nullopt;
    if (*rev[i] < i) continue;
    std::vector<std::int64_t> b(net.species_count());
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (rx[i].reactant[j] > 0 && rx[i].product[j] > 0) return std::nullopt;
      b[j] = rx[i].reactant[j] - rx[i].product[j];
    }
    gens.push_back(std::move(b));
  }
  if (gens.empty()) return intlat::IntMatrix(0, net.species_count());
  return intlat::IntMatrix::from_rows(gens);
}

std::optional<DetailedBalance> detailed_balance_point(const ReactionNetwork& net) {
  const auto rev = reverse_reactions(net);
  if (std::any_of(rev.begin(), rev.end(), [](const auto& r) { return !r.has_value(); }))
    throw ValidationError("detailed balance requires a reversible network");
  const auto n = static_cast<Eigen::Index>(net.species_count());
  const auto& rx = net.reactions();
  if (rx.empty()) return DetailedBalance{Eigen::VectorXd::Ones(n), 0.0};

  const auto m = static_cast<Eigen::Index>(rx.size());
  Eigen::MatrixXd lhs(m, n);
  Eigen::VectorXd rhs(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const auto& r = rx[static_cast<std::size_t>(k)];
    for (Eigen::Index i = 0; i < n; ++i)
      lhs(k, i) = r.reactant[static_cast<std::size_t>(i)] - r.product[static_cast<std::size_t>(i)];
    rhs(k) = std::log(rx[*rev[static_cast<std::size_t>(k)]].rate / r.rate);
  }
  const Eigen::VectorXd log_q = lhs.completeOrthogonalDecomposition().solve(rhs);
  const double residual = (lhs * log_q - rhs).cwiseAbs().maxCoeff();
  if (residual >= 1e-9 * (1.0 + rhs.cwiseAbs().maxCoeff())) return std::nullopt;
  return DetailedBalance{log_q.array().exp(), residual};
}

}  // namespace crnem::crn
