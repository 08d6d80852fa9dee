#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "atb/error.hpp"
#include "atb/rng.hpp"

namespace atb {

using NodePath = std::vector<std::uint32_t>;

// A tree node, identified by its path of child indices from the root.
// Paths are canonical and comparable; the empty path is the root.
struct NodeId {
  NodePath path;

  auto operator<=>(const NodeId&) const = default;

  int depth() const { return static_cast<int>(path.size()); }
  NodeId child(std::uint32_t index) const;
  NodeId parent() const;  // throws StructuralError on the root

  // Dotted-int serialisation, e.g. "0.1"; the root is the empty string.
  std::string to_string() const;
  static NodeId from_string(const std::string& s);
};

inline int node_depth(const NodeId& node) { return node.depth(); }

// Half-open dyadic interval [lo, hi); nodes with hi == 1 also contain 1.
struct DyadicInterval {
  double lo;
  double hi;
  bool contains(double x) const { return lo <= x && (x < hi || (hi == 1.0 && x == 1.0)); }
};

DyadicInterval dyadic_interval(const NodeId& node);

// One coordinate axis: either the implicit infinite binary subdivision of
// [0,1], or an explicitly loaded finite tree with labelled children.
class CoordinateTree {
 public:
  enum class Kind { dyadic_unit_interval, finite_explicit };

  static CoordinateTree dyadic();
  static CoordinateTree finite(int arity,
                               std::map<NodePath, std::vector<std::string>> children);

  static CoordinateTree from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  Kind kind() const { return kind_; }
  bool is_dyadic() const { return kind_ == Kind::dyadic_unit_interval; }
  int max_arity() const { return max_arity_; }

  // Throws StructuralError if the node does not exist in this tree.
  void validate(const NodeId& node) const;
  bool exists(const NodeId& node) const;

  bool is_leaf(const NodeId& node) const;
  int child_count(const NodeId& node) const;  // 0 for leaves
  std::vector<NodeId> children(const NodeId& node) const;

  // Mass of the node under uniform random descent: the product over strict
  // ancestors of 1 / (number of children). The root has mass 1.
  double pi_mass(const NodeId& node) const;

  // Finite axes only: the label attached to this node by its parent's entry.
  const std::string& label(const NodeId& node) const;

 private:
  CoordinateTree() = default;

  Kind kind_ = Kind::dyadic_unit_interval;
  int max_arity_ = 2;
  // Internal nodes only; a valid node absent from the table is a leaf.
  std::map<NodePath, std::vector<std::string>> table_;
  std::string root_label_ = "root";
};

// A coordinate of an arm: a real in [0,1] on dyadic axes, a leaf node on
// finite axes.
using ArmCoordinate = std::variant<double, NodeId>;

struct ArmPoint {
  std::vector<ArmCoordinate> coords;

  bool operator==(const ArmPoint&) const = default;

  std::string to_string() const;  // ';'-joined coordinates
  static ArmPoint from_string(const std::string& s);
};

// The product arm space: one coordinate tree per axis.
class TreeSpace {
 public:
  explicit TreeSpace(std::vector<CoordinateTree> axes);
  static TreeSpace dyadic(int p);
  static TreeSpace from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  int dimension() const { return static_cast<int>(axes_.size()); }
  int max_arity() const { return max_arity_; }  // q
  const CoordinateTree& axis(int i) const { return axes_.at(static_cast<std::size_t>(i)); }

  bool coordinate_in_node(int axis, const NodeId& node, const ArmCoordinate& c) const;
  ArmCoordinate sample_in_node(int axis, const NodeId& node, Rng& rng) const;

 private:
  std::vector<CoordinateTree> axes_;
  int max_arity_ = 2;
};

// Spec-level free operations on a single tree.
std::vector<NodeId> children(const CoordinateTree& tree, const NodeId& node);
double pi_mass(const CoordinateTree& tree, const NodeId& node);

}  // namespace atb
