#include "atb/box.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace atb {

std::string Box::serial() const {
  std::string out;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (i) out += '|';
    out += nodes[i].to_string();
  }
  return out;
}

Box Box::parse(const std::string& s) {
  Box box;
  std::string part;
  std::stringstream ss(s);
  while (std::getline(ss, part, '|')) box.nodes.push_back(NodeId::from_string(part));
  if (box.nodes.empty()) box.nodes.push_back(NodeId{});  // p=1 root serialises as ""
  return box;
}

bool box_order_before(const Box& a, const Box& b) {
  int da = box_depth(a), db = box_depth(b);
  if (da != db) return da < db;
  return a < b;
}

int box_depth(const Box& box) {
  int d = 0;
  for (const NodeId& n : box.nodes) d = std::max(d, n.depth());
  return d;
}

std::optional<std::uint64_t> rho(const Box& box, int q, int p) {
  if (q < 2 || p < 1) throw ContractViolation("rho needs q >= 2, p >= 1");
  std::uint64_t result = 1;
  std::uint64_t exponent = static_cast<std::uint64_t>(p) *
                           static_cast<std::uint64_t>(box_depth(box) + 1);
  for (std::uint64_t i = 0; i < exponent; ++i) {
    if (result > std::numeric_limits<std::uint64_t>::max() / static_cast<std::uint64_t>(q))
      return std::nullopt;
    result *= static_cast<std::uint64_t>(q);
  }
  return result;
}

double log_rho(const Box& box, int q, int p) {
  if (q < 2 || p < 1) throw ContractViolation("log_rho needs q >= 2, p >= 1");
  return static_cast<double>(p) * static_cast<double>(box_depth(box) + 1) *
         std::log(static_cast<double>(q));
}

std::vector<Box> split(const Box& box, int axis, const TreeSpace& trees) {
  const NodeId& node = box.nodes.at(static_cast<std::size_t>(axis));
  const CoordinateTree& tree = trees.axis(axis);
  if (tree.is_leaf(node))
    throw EngineError("cannot split box " + box.serial() + " along axis " +
                      std::to_string(axis) + ": node is a leaf");
  std::vector<Box> out;
  for (const NodeId& child : tree.children(node)) {
    Box b = box;
    b.nodes[static_cast<std::size_t>(axis)] = child;
    out.push_back(std::move(b));
  }
  return out;
}

bool contains(const TreeSpace& trees, const Box& box, const ArmPoint& x) {
  if (box.nodes.size() != x.coords.size() ||
      box.nodes.size() != static_cast<std::size_t>(trees.dimension()))
    throw ContractViolation("box/arm dimension mismatch");
  for (std::size_t i = 0; i < box.nodes.size(); ++i)
    if (!trees.coordinate_in_node(static_cast<int>(i), box.nodes[i], x.coords[i]))
      return false;
  return true;
}

double box_pi_mass(const TreeSpace& trees, const Box& box) {
  double mass = 1.0;
  for (std::size_t i = 0; i < box.nodes.size(); ++i)
    mass *= trees.axis(static_cast<int>(i)).pi_mass(box.nodes[i]);
  return mass;
}

bool mass_at_least(std::uint64_t denom, double gamma) {
  if (!(gamma > 0.0)) return true;
  if (gamma > 1.0) return false;
  int exp = 0;
  double mant = std::frexp(gamma, &exp);  // gamma = mant * 2^exp, mant in [0.5, 1)
  auto num = static_cast<unsigned __int128>(std::ldexp(mant, 53));
  int shift = 53 - exp;  // gamma = num / 2^shift, exactly
  if (shift < 0) return false;   // gamma >= 2^53: impossible for gamma <= 1
  if (shift > 120) return true;  // gamma below any representable sub-box mass
  // 1/denom >= num/2^shift  <=>  2^shift >= num * denom
  unsigned __int128 lhs = static_cast<unsigned __int128>(1) << shift;
  unsigned __int128 rhs = num * static_cast<unsigned __int128>(denom);
  if (rhs < num) return false;  // multiplication wrapped; denom is enormous
  return lhs >= rhs;
}

bool SubBoxKey::empty() const {
  for (const NodePath& r : rel)
    if (!r.empty()) return false;
  return true;
}

std::string SubBoxKey::serial() const {
  std::string out;
  for (std::size_t i = 0; i < rel.size(); ++i) {
    if (i) out += '|';
    out += NodeId{rel[i]}.to_string();
  }
  return out;
}

Box apply_key(const Box& box, const SubBoxKey& key) {
  if (box.nodes.size() != key.rel.size())
    throw ContractViolation("sub-box key dimension mismatch");
  Box out = box;
  for (std::size_t i = 0; i < key.rel.size(); ++i)
    out.nodes[i].path.insert(out.nodes[i].path.end(), key.rel[i].begin(), key.rel[i].end());
  return out;
}

double relative_mass(const TreeSpace& trees, const Box& box, const SubBoxKey& key) {
  double parent = box_pi_mass(trees, box);
  double child = box_pi_mass(trees, apply_key(box, key));
  return child / parent;
}

namespace {

constexpr int kMaxRelativeDepth = 60;
constexpr std::size_t kMaxKeys = 1u << 20;

// Enumerates relative paths on one axis with the running exact denominator,
// then recurses into the next axis. Children only shrink the mass, so
// pruning is sound.
void enumerate_axis(const TreeSpace& trees, const Box& box, double gamma, int axis,
                    SubBoxKey& key, std::uint64_t denom, std::vector<SubBoxKey>& out) {
  int p = trees.dimension();
  if (axis == p) {
    if (out.size() >= kMaxKeys)
      throw StructuralError("sub-box enumeration exceeded the key limit; gamma too small");
    out.push_back(key);
    return;
  }
  const CoordinateTree& tree = trees.axis(axis);

  // DFS over relative paths below this axis's node, in child-index order.
  auto descend = [&](auto&& self, const NodeId& node, std::uint64_t d) -> void {
    enumerate_axis(trees, box, gamma, axis + 1, key, d, out);
    if (static_cast<int>(key.rel[static_cast<std::size_t>(axis)].size()) >= kMaxRelativeDepth)
      return;
    int c = tree.child_count(node);
    if (c == 0) return;
    std::uint64_t next = d * static_cast<std::uint64_t>(c);
    if (next / static_cast<std::uint64_t>(c) != d) return;  // denominator overflow
    if (!mass_at_least(next, gamma)) return;
    for (int j = 0; j < c; ++j) {
      key.rel[static_cast<std::size_t>(axis)].push_back(static_cast<std::uint32_t>(j));
      self(self, node.child(static_cast<std::uint32_t>(j)), next);
      key.rel[static_cast<std::size_t>(axis)].pop_back();
    }
  };
  descend(descend, box.nodes[static_cast<std::size_t>(axis)], denom);
}

}  // namespace

std::vector<SubBoxKey> subboxes_with_mass(const TreeSpace& trees, const Box& box, double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0))
    throw ContractViolation("gamma must lie in (0, 1)");
  std::vector<SubBoxKey> out;
  SubBoxKey key;
  key.rel.assign(static_cast<std::size_t>(trees.dimension()), {});
  enumerate_axis(trees, box, gamma, 0, key, 1, out);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<CandidatePair> candidate_pairs(const TreeSpace& trees, const Box& box, double gamma) {
  std::vector<SubBoxKey> keys = subboxes_with_mass(trees, box, gamma);
  int p = trees.dimension();
  std::vector<CandidatePair> out;
  for (std::size_t a = 0; a < keys.size(); ++a) {
    for (std::size_t b = 0; b < keys.size(); ++b) {
      if (a == b) continue;
      int differing = -1;
      bool eligible = true;
      for (int i = 0; i < p; ++i) {
        if (keys[a].rel[static_cast<std::size_t>(i)] == keys[b].rel[static_cast<std::size_t>(i)])
          continue;
        if (differing >= 0) {
          eligible = false;
          break;
        }
        differing = i;
      }
      if (eligible && differing >= 0)
        out.push_back(CandidatePair{keys[a], keys[b], differing});
    }
  }
  std::sort(out.begin(), out.end(), [](const CandidatePair& x, const CandidatePair& y) {
    if (x.axis != y.axis) return x.axis < y.axis;
    if (x.first != y.first) return x.first < y.first;
    return x.second < y.second;
  });
  return out;
}

}  // namespace atb
