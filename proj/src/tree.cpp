#include "atb/tree.hpp"

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

namespace atb {

NodeId NodeId::child(std::uint32_t index) const {
  NodeId c{path};
  c.path.push_back(index);
  return c;
}

NodeId NodeId::parent() const {
  if (path.empty()) throw StructuralError("root node has no parent");
  NodeId p{path};
  p.path.pop_back();
  return p;
}

std::string NodeId::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (i) out += '.';
    out += std::to_string(path[i]);
  }
  return out;
}

NodeId NodeId::from_string(const std::string& s) {
  NodeId node;
  if (s.empty()) return node;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, '.')) {
    if (part.empty()) throw StructuralError("malformed node path: '" + s + "'");
    std::size_t pos = 0;
    unsigned long v = std::stoul(part, &pos);
    if (pos != part.size()) throw StructuralError("malformed node path: '" + s + "'");
    node.path.push_back(static_cast<std::uint32_t>(v));
  }
  return node;
}

DyadicInterval dyadic_interval(const NodeId& node) {
  double lo = 0.0;
  double width = 1.0;
  for (std::uint32_t bit : node.path) {
    width *= 0.5;
    if (bit > 1) throw StructuralError("dyadic path entries must be 0 or 1");
    if (bit == 1) lo += width;
  }
  return {lo, lo + width};
}

CoordinateTree CoordinateTree::dyadic() {
  CoordinateTree t;
  t.kind_ = Kind::dyadic_unit_interval;
  t.max_arity_ = 2;
  return t;
}

CoordinateTree CoordinateTree::finite(int arity,
                                      std::map<NodePath, std::vector<std::string>> children) {
  if (arity < 2) throw ConfigError("tree arity must be at least 2");
  CoordinateTree t;
  t.kind_ = Kind::finite_explicit;
  t.max_arity_ = arity;
  t.table_ = std::move(children);
  // Every internal node must have 2..q children and a valid parent chain.
  for (const auto& [path, labels] : t.table_) {
    if (labels.size() < 2 || labels.size() > static_cast<std::size_t>(arity))
      throw StructuralError("node '" + NodeId{path}.to_string() + "' has " +
                            std::to_string(labels.size()) + " children, want 2.." +
                            std::to_string(arity));
    if (!path.empty()) {
      NodePath parent(path.begin(), path.end() - 1);
      auto it = t.table_.find(parent);
      if (it == t.table_.end() || path.back() >= it->second.size())
        throw StructuralError("node '" + NodeId{path}.to_string() +
                              "' is not reachable from the root");
    }
  }
  return t;
}

void CoordinateTree::validate(const NodeId& node) const {
  if (!exists(node))
    throw StructuralError("unknown node '" + node.to_string() + "'");
}

bool CoordinateTree::exists(const NodeId& node) const {
  if (kind_ == Kind::dyadic_unit_interval) {
    for (std::uint32_t b : node.path)
      if (b > 1) return false;
    return true;
  }
  NodePath prefix;
  for (std::uint32_t idx : node.path) {
    auto it = table_.find(prefix);
    if (it == table_.end() || idx >= it->second.size()) return false;
    prefix.push_back(idx);
  }
  return true;
}

bool CoordinateTree::is_leaf(const NodeId& node) const {
  return child_count(node) == 0;
}

int CoordinateTree::child_count(const NodeId& node) const {
  validate(node);
  if (kind_ == Kind::dyadic_unit_interval) return 2;
  auto it = table_.find(node.path);
  return it == table_.end() ? 0 : static_cast<int>(it->second.size());
}

std::vector<NodeId> CoordinateTree::children(const NodeId& node) const {
  int n = child_count(node);
  std::vector<NodeId> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.push_back(node.child(static_cast<std::uint32_t>(i)));
  return out;
}

double CoordinateTree::pi_mass(const NodeId& node) const {
  validate(node);
  if (kind_ == Kind::dyadic_unit_interval) return std::ldexp(1.0, -node.depth());
  double mass = 1.0;
  NodePath prefix;
  for (std::uint32_t idx : node.path) {
    auto it = table_.find(prefix);
    mass /= static_cast<double>(it->second.size());
    prefix.push_back(idx);
  }
  return mass;
}

const std::string& CoordinateTree::label(const NodeId& node) const {
  if (kind_ != Kind::finite_explicit)
    throw UnsupportedError("labels exist only on finite trees");
  validate(node);
  if (node.path.empty()) return root_label_;
  NodePath parent(node.path.begin(), node.path.end() - 1);
  return table_.at(parent)[node.path.back()];
}

CoordinateTree CoordinateTree::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("tree spec must be an object");
  if (j.contains("kind") && j.at("kind") == "dyadic") return dyadic();
  if (!j.contains("nodes")) {
    if (j.contains("kind"))
      throw ConfigError("unknown tree kind '" + j.at("kind").get<std::string>() + "'");
    throw ConfigError("tree spec needs either kind=dyadic or a nodes table");
  }
  int arity = j.value("arity", 0);
  if (arity < 2) throw ConfigError("finite tree spec needs arity >= 2");
  std::map<NodePath, std::vector<std::string>> table;
  for (const auto& [key, value] : j.at("nodes").items()) {
    NodeId node = NodeId::from_string(key);
    table[node.path] = value.get<std::vector<std::string>>();
  }
  return finite(arity, std::move(table));
}

nlohmann::json CoordinateTree::to_json() const {
  if (kind_ == Kind::dyadic_unit_interval) return {{"kind", "dyadic"}};
  nlohmann::json nodes = nlohmann::json::object();
  for (const auto& [path, labels] : table_) nodes[NodeId{path}.to_string()] = labels;
  return {{"kind", "finite"}, {"arity", max_arity_}, {"nodes", nodes}};
}

std::string ArmPoint::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (i) out += ';';
    if (std::holds_alternative<double>(coords[i])) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", std::get<double>(coords[i]));
      out += buf;
    } else {
      out += "n:" + std::get<NodeId>(coords[i]).to_string();
    }
  }
  return out;
}

ArmPoint ArmPoint::from_string(const std::string& s) {
  ArmPoint p;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ';')) {
    if (part.rfind("n:", 0) == 0) {
      p.coords.emplace_back(NodeId::from_string(part.substr(2)));
    } else {
      p.coords.emplace_back(std::stod(part));
    }
  }
  return p;
}

TreeSpace::TreeSpace(std::vector<CoordinateTree> axes) : axes_(std::move(axes)) {
  if (axes_.empty()) throw ConfigError("arm space needs at least one axis");
  max_arity_ = 2;
  for (const auto& t : axes_) max_arity_ = std::max(max_arity_, t.max_arity());
}

TreeSpace TreeSpace::dyadic(int p) {
  if (p < 1) throw ConfigError("dimension must be >= 1");
  std::vector<CoordinateTree> axes;
  axes.reserve(static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i) axes.push_back(CoordinateTree::dyadic());
  return TreeSpace(std::move(axes));
}

TreeSpace TreeSpace::from_json(const nlohmann::json& j) {
  if (j.is_object() && j.contains("axes")) {
    std::vector<CoordinateTree> axes;
    for (const auto& a : j.at("axes")) axes.push_back(CoordinateTree::from_json(a));
    return TreeSpace(std::move(axes));
  }
  if (j.is_array()) {
    std::vector<CoordinateTree> axes;
    for (const auto& a : j) axes.push_back(CoordinateTree::from_json(a));
    return TreeSpace(std::move(axes));
  }
  throw ConfigError("tree space spec must be an array of axes or {axes: [...]}");
}

nlohmann::json TreeSpace::to_json() const {
  nlohmann::json axes = nlohmann::json::array();
  for (const auto& a : axes_) axes.push_back(a.to_json());
  return {{"axes", axes}};
}

bool TreeSpace::coordinate_in_node(int axis, const NodeId& node, const ArmCoordinate& c) const {
  const CoordinateTree& t = this->axis(axis);
  if (t.is_dyadic()) {
    if (!std::holds_alternative<double>(c))
      throw ContractViolation("dyadic axis expects a real coordinate");
    return dyadic_interval(node).contains(std::get<double>(c));
  }
  if (!std::holds_alternative<NodeId>(c))
    throw ContractViolation("finite axis expects a leaf coordinate");
  const NodePath& leaf = std::get<NodeId>(c).path;
  const NodePath& prefix = node.path;
  if (prefix.size() > leaf.size()) return false;
  return std::equal(prefix.begin(), prefix.end(), leaf.begin());
}

ArmCoordinate TreeSpace::sample_in_node(int axis, const NodeId& node, Rng& rng) const {
  const CoordinateTree& t = this->axis(axis);
  t.validate(node);
  if (t.is_dyadic()) {
    DyadicInterval iv = dyadic_interval(node);
    double width = iv.hi - iv.lo;
    double x = iv.lo + rng.next_double() * width;
    // Rounding can land exactly on the open upper endpoint; pull it back in.
    if (x >= iv.hi && iv.hi != 1.0) x = std::nextafter(iv.hi, iv.lo);
    if (x > 1.0) x = 1.0;
    return x;
  }
  NodeId cur = node;
  while (!t.is_leaf(cur)) {
    int n = t.child_count(cur);
    cur = cur.child(rng.next_below(static_cast<std::uint32_t>(n)));
  }
  return cur;
}

std::vector<NodeId> children(const CoordinateTree& tree, const NodeId& node) {
  return tree.children(node);
}

double pi_mass(const CoordinateTree& tree, const NodeId& node) {
  return tree.pi_mass(node);
}

}  // namespace atb
