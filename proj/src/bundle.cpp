#include "whe/bundle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "whe/errors.hpp"

namespace whe {

EquivariantLineBundle EquivariantLineBundle::make(int degree, int w0, int w1) {
  if (w1 - w0 != degree) {
    std::ostringstream os;
    os << "line bundle O(" << degree << ") with lifts (" << w0 << "," << w1
       << ") violates w1 - w0 = degree";
    throw InvalidBundle(os.str());
  }
  return {degree, w0, w1};
}

std::string EquivariantLineBundle::describe() const {
  std::ostringstream os;
  os << "O(" << degree << ")[" << w0 << "," << w1 << "]";
  return os.str();
}

bool coupling_admissible(const EquivariantLineBundle& from, const EquivariantLineBundle& to,
                         int k) {
  return k + to.w0 - from.w0 == 0 && k >= 0 && k <= to.degree - from.degree;
}

std::vector<Coupling> admissible_couplings(const std::vector<EquivariantLineBundle>& s) {
  std::vector<Coupling> out;
  const int r = static_cast<int>(s.size());
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) {
      if (i == j) continue;
      const int k = s[i].w0 - s[j].w0;
      if (!coupling_admissible(s[i], s[j], k)) continue;
      // both directions admissible only for isomorphic summands; keep one
      if (i > j && coupling_admissible(s[j], s[i], s[j].w0 - s[i].w0)) continue;
      out.push_back({i, j, k});
    }
  return out;
}

EquivariantBundle::EquivariantBundle(std::vector<EquivariantLineBundle> summands,
                                     std::vector<Coupling> couplings)
    : summands_(std::move(summands)), couplings_(std::move(couplings)) {
  if (summands_.empty()) throw InvalidBundle("bundle needs at least one summand");
  for (const auto& s : summands_) EquivariantLineBundle::make(s.degree, s.w0, s.w1);
  for (size_t a = 0; a < couplings_.size(); ++a) {
    const auto& c = couplings_[a];
    if (c.from < 0 || c.to < 0 || c.from >= rank() || c.to >= rank() || c.from == c.to)
      throw InvalidBundle("coupling refers to invalid summand indices");
    if (!coupling_admissible(summands_[c.from], summands_[c.to], c.k)) {
      std::ostringstream os;
      os << "coupling " << c.from << "->" << c.to << " with k=" << c.k << " is not invariant";
      throw InvalidBundle(os.str());
    }
    for (size_t b = 0; b < a; ++b) {
      const auto& o = couplings_[b];
      if ((o.from == c.from && o.to == c.to) || (o.from == c.to && o.to == c.from))
        throw InvalidBundle("at most one coupling per pair of summands");
    }
  }
}

EquivariantBundle EquivariantBundle::with_all_couplings(std::vector<EquivariantLineBundle> s) {
  auto c = admissible_couplings(s);
  return EquivariantBundle(std::move(s), std::move(c));
}

int EquivariantBundle::degree() const {
  int d = 0;
  for (const auto& s : summands_) d += s.degree;
  return d;
}

const Coupling* EquivariantBundle::coupling_between(int i, int j) const {
  for (const auto& c : couplings_)
    if ((c.from == i && c.to == j) || (c.from == j && c.to == i)) return &c;
  return nullptr;
}

EquivariantBundle EquivariantBundle::restrict_to(const std::vector<int>& idx) const {
  std::vector<EquivariantLineBundle> s;
  for (int i : idx) s.push_back(summands_.at(i));
  return EquivariantBundle(std::move(s), {});
}

std::vector<std::vector<int>> EquivariantBundle::blocks() const {
  std::vector<int> parent(rank());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& c : couplings_) parent[find(c.from)] = find(c.to);
  std::vector<std::vector<int>> out;
  std::vector<int> slot(rank(), -1);
  for (int i = 0; i < rank(); ++i) {
    const int r = find(i);
    if (slot[r] < 0) {
      slot[r] = static_cast<int>(out.size());
      out.emplace_back();
    }
    out[slot[r]].push_back(i);
  }
  return out;
}

nlohmann::json EquivariantBundle::to_json() const {
  nlohmann::json s = nlohmann::json::array();
  for (const auto& l : summands_) s.push_back({{"degree", l.degree}, {"weights", {l.w0, l.w1}}});
  nlohmann::json c = nlohmann::json::array();
  for (const auto& x : couplings_) c.push_back({{"from", x.from}, {"to", x.to}, {"k", x.k}});
  return {{"summands", s}, {"couplings", c}};
}

std::string EquivariantBundle::describe() const {
  std::ostringstream os;
  for (int i = 0; i < rank(); ++i) os << (i ? "+" : "") << summands_[i].describe();
  if (!couplings_.empty()) os << " coupled";
  return os.str();
}

double coupling_norm_sq(const EquivariantBundle& b, const Coupling& c, double mu) {
  const int D = b.summand(c.to).degree - b.summand(c.from).degree;
  return std::pow(mu, c.k) * std::pow(1.0 - mu, D - c.k);
}

Vec coupling_norm_sq(const EquivariantBundle& b, const Coupling& c, const Grid& g) {
  return g.sample([&](double mu) { return coupling_norm_sq(b, c, mu); });
}

EquivariantBundle make_bundle(const nlohmann::json& spec) {
  if (!spec.is_object() || !spec.contains("summands") || !spec["summands"].is_array())
    throw ConfigError("bundle: expected an object with a 'summands' array");
  std::vector<EquivariantLineBundle> s;
  for (const auto& e : spec["summands"]) {
    if (!e.contains("degree") || !e.contains("weights") || !e["weights"].is_array() ||
        e["weights"].size() != 2)
      throw ConfigError("bundle: each summand needs 'degree' and a 2-element 'weights'");
    s.push_back(EquivariantLineBundle::make(e["degree"].get<int>(), e["weights"][0].get<int>(),
                                            e["weights"][1].get<int>()));
  }
  if (!spec.contains("couplings") || (spec["couplings"].is_array() && spec["couplings"].empty()))
    return EquivariantBundle(std::move(s), {});
  const auto& cs = spec["couplings"];
  if (cs.is_string()) {
    if (cs.get<std::string>() == "auto") return EquivariantBundle::with_all_couplings(std::move(s));
    if (cs.get<std::string>() == "none") return EquivariantBundle(std::move(s), {});
    throw ConfigError("bundle: couplings must be \"auto\", \"none\" or a list");
  }
  std::vector<Coupling> c;
  for (const auto& e : cs) c.push_back({e.at("from").get<int>(), e.at("to").get<int>(), e.at("k").get<int>()});
  return EquivariantBundle(std::move(s), std::move(c));
}

}  // namespace whe
