#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "atb/tree.hpp"

namespace atb {

// A box: the product of one tree node per axis.
struct Box {
  std::vector<NodeId> nodes;

  auto operator<=>(const Box&) const = default;

  // Per-axis dotted paths joined by '|', e.g. "0.1|0" for [1/4,1/2) x [0,1/2).
  std::string serial() const;
  static Box parse(const std::string& s);
};

// Ordering used by deterministic tie-breaks: shallower box first, then the
// canonical path order.
bool box_order_before(const Box& a, const Box& b);

int box_depth(const Box& box);

// rho(B) = q^(p(d+1)). Exact when it fits in 64 bits, nullopt on overflow;
// only log rho is ever consumed by the confidence radius.
std::optional<std::uint64_t> rho(const Box& box, int q, int p);
double log_rho(const Box& box, int q, int p);

std::vector<Box> split(const Box& box, int axis, const TreeSpace& trees);

bool contains(const TreeSpace& trees, const Box& box, const ArmPoint& x);

double box_pi_mass(const TreeSpace& trees, const Box& box);

// Exact comparison 1/denom >= gamma, treating gamma as the dyadic rational
// its double representation is.
bool mass_at_least(std::uint64_t denom, double gamma);

// A sub-box of an owning box, as per-axis relative paths below the box's
// nodes. The empty key is the box itself. Keys are canonical (axis-ordered,
// prefix-first within an axis).
struct SubBoxKey {
  std::vector<NodePath> rel;

  auto operator<=>(const SubBoxKey&) const = default;

  bool empty() const;
  int rel_depth(int axis) const { return static_cast<int>(rel.at(static_cast<std::size_t>(axis)).size()); }
  std::string serial() const;  // same shape as Box::serial on relative paths
};

Box apply_key(const Box& box, const SubBoxKey& key);

// Relative mass pi(C|B) of the sub-box under uniform descent.
double relative_mass(const TreeSpace& trees, const Box& box, const SubBoxKey& key);

// All sub-boxes C of B (including B itself) with pi(C|B) >= gamma, in
// canonical order. Terminates because relative mass strictly decreases with
// every split.
std::vector<SubBoxKey> subboxes_with_mass(const TreeSpace& trees, const Box& box, double gamma);

struct CandidatePair {
  SubBoxKey first;
  SubBoxKey second;
  int axis;  // the single axis on which the two keys differ

  bool operator==(const CandidatePair&) const = default;
};

// All ordered pairs (C1, C2) of distinct eligible sub-boxes that agree on
// every axis except exactly one. Deterministic canonical ordering
// (axis, first, second).
std::vector<CandidatePair> candidate_pairs(const TreeSpace& trees, const Box& box, double gamma);

}  // namespace atb
