#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

#include "atb/box.hpp"
#include "atb/rng.hpp"

using namespace atb;

namespace {

Box root_box(int p) {
  Box b;
  b.nodes.assign(static_cast<std::size_t>(p), NodeId{});
  return b;
}

// Independent brute-force enumeration of dyadic sub-box keys with
// 2^-(total relative depth) >= gamma, used as the oracle for the library
// enumeration.
void oracle_extend(std::vector<NodePath>& rel, int axis, int p, double gamma,
                   std::vector<std::vector<NodePath>>& out) {
  if (axis == p) {
    out.push_back(rel);
    return;
  }
  // every relative path on this axis whose cumulative mass stays eligible,
  // then recurse into the next axis
  std::function<void()> paths = [&]() {
    int total = 0;
    for (const NodePath& r : rel) total += static_cast<int>(r.size());
    if (std::ldexp(1.0, -total) >= gamma) oracle_extend(rel, axis + 1, p, gamma, out);
    if (std::ldexp(1.0, -(total + 1)) >= gamma) {
      for (std::uint32_t b = 0; b < 2; ++b) {
        rel[static_cast<std::size_t>(axis)].push_back(b);
        paths();
        rel[static_cast<std::size_t>(axis)].pop_back();
      }
    }
  };
  paths();
}

std::vector<std::vector<NodePath>> oracle_keys(int p, double gamma) {
  std::vector<NodePath> rel(static_cast<std::size_t>(p));
  std::vector<std::vector<NodePath>> out;
  oracle_extend(rel, 0, p, gamma, out);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::size_t oracle_pair_count(const std::vector<std::vector<NodePath>>& keys) {
  std::size_t count = 0;
  for (std::size_t a = 0; a < keys.size(); ++a)
    for (std::size_t b = 0; b < keys.size(); ++b) {
      if (a == b) continue;
      int differing = 0;
      for (std::size_t i = 0; i < keys[a].size(); ++i)
        if (keys[a][i] != keys[b][i]) ++differing;
      if (differing == 1) ++count;
    }
  return count;
}

}  // namespace

TEST_CASE("box depth is the maximum axis depth") {
  CHECK(box_depth(root_box(2)) == 0);
  Box b;
  b.nodes = {NodeId{{0}}, NodeId{{1, 0, 1}}};
  CHECK(box_depth(b) == 3);
  Box c;
  c.nodes = {NodeId{{0, 1, 0, 1, 0}}};
  CHECK(box_depth(c) == 5);
}

TEST_CASE("rho matches hand evaluation of q^(p(d+1))") {
  CHECK(rho(root_box(1), 2, 1) == 2);  // q=2, p=1, d=0
  Box b;
  b.nodes = {NodeId{{0}}, NodeId{{1, 0, 1}}};  // d = 3
  CHECK(rho(b, 2, 2) == 256);
  Box c;
  c.nodes = {NodeId{{1}}};  // d = 1
  CHECK(rho(c, 3, 1) == 9);
  CHECK(log_rho(c, 3, 1) == doctest::Approx(std::log(9.0)).epsilon(1e-14));
}

TEST_CASE("rho overflows to the log-space value") {
  Box deep;
  deep.nodes = {NodeId{NodePath(70, 0)}};
  CHECK_FALSE(rho(deep, 2, 1).has_value());
  CHECK(log_rho(deep, 2, 1) == doctest::Approx(71.0 * std::log(2.0)));
}

TEST_CASE("rho is monotone nondecreasing in box depth") {
  double prev = -1.0;
  Box b = root_box(1);
  for (int d = 0; d < 12; ++d) {
    double lr = log_rho(b, 2, 1);
    CHECK(lr >= prev);
    prev = lr;
    b.nodes[0] = b.nodes[0].child(1);
  }
}

TEST_CASE("split replaces one axis by its children") {
  TreeSpace trees = TreeSpace::dyadic(2);
  Box b;
  b.nodes = {NodeId{{0}}, NodeId{}};  // [0,1/2) x [0,1]
  auto kids = split(b, 1, trees);
  REQUIRE(kids.size() == 2);
  CHECK(kids[0].nodes[0] == b.nodes[0]);
  CHECK(kids[0].nodes[1].path == NodePath{0});
  CHECK(kids[1].nodes[1].path == NodePath{1});

  auto roots = split(root_box(1), 0, TreeSpace::dyadic(1));
  CHECK(roots.size() == 2);

  std::vector<CoordinateTree> axes{
      CoordinateTree::finite(3, {{{}, {"a", "b", "c"}}})};
  TreeSpace finite(std::move(axes));
  CHECK(split(root_box(1), 0, finite).size() == 3);
}

TEST_CASE("splitting a leaf axis fails") {
  std::vector<CoordinateTree> axes{
      CoordinateTree::finite(2, {{{}, {"a", "b"}}})};
  TreeSpace finite(std::move(axes));
  Box leaf;
  leaf.nodes = {NodeId{{0}}};
  CHECK_THROWS_AS(split(leaf, 0, finite), EngineError);
}

TEST_CASE("split children partition the parent") {
  TreeSpace trees = TreeSpace::dyadic(2);
  Box b;
  b.nodes = {NodeId{{1}}, NodeId{{0}}};
  auto kids = split(b, 0, trees);
  Rng rng(19);
  for (int i = 0; i < 10000; ++i) {
    ArmPoint x;
    x.coords = {ArmCoordinate{0.5 + 0.5 * rng.next_double()},
                ArmCoordinate{0.5 * rng.next_double()}};
    if (!contains(trees, b, x)) continue;
    int owners = 0;
    for (const Box& c : kids)
      if (contains(trees, c, x)) ++owners;
    CHECK(owners == 1);
  }
}

TEST_CASE("contains honors the half-open convention") {
  TreeSpace trees = TreeSpace::dyadic(2);
  Box b;
  b.nodes = {NodeId{{0}}, NodeId{}};  // [0,1/2) x [0,1]
  ArmPoint x;
  x.coords = {ArmCoordinate{0.5}, ArmCoordinate{0.3}};
  CHECK_FALSE(contains(trees, b, x));
  Box r;
  r.nodes = {NodeId{{1}}, NodeId{}};  // [1/2,1] x [0,1]
  ArmPoint ones;
  ones.coords = {ArmCoordinate{1.0}, ArmCoordinate{1.0}};
  CHECK(contains(trees, r, ones));
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    ArmPoint any;
    any.coords = {ArmCoordinate{rng.next_double()}, ArmCoordinate{rng.next_double()}};
    CHECK(contains(trees, root_box(2), any));
  }
}

TEST_CASE("exact mass comparison treats gamma as a dyadic rational") {
  CHECK(mass_at_least(4, 0.25));
  CHECK_FALSE(mass_at_least(5, 0.25));
  CHECK(mass_at_least(1, 0.999));
  double g = 1.0 / std::log(1e4);  // ~0.10857
  CHECK(mass_at_least(9, g));      // 1/9 = 0.111...
  CHECK_FALSE(mass_at_least(10, g));
}

TEST_CASE("sub-box enumeration matches the brute-force oracle") {
  TreeSpace t1 = TreeSpace::dyadic(1);
  auto keys = subboxes_with_mass(t1, root_box(1), 0.25);
  CHECK(keys.size() == 7);  // relative depths 0,1,1,2,2,2,2
  auto oracle = oracle_keys(1, 0.25);
  REQUIRE(keys.size() == oracle.size());
  for (std::size_t i = 0; i < keys.size(); ++i) CHECK(keys[i].rel == oracle[i]);

  CHECK(subboxes_with_mass(t1, root_box(1), 0.6).size() == 1);

  TreeSpace t2 = TreeSpace::dyadic(2);
  auto keys2 = subboxes_with_mass(t2, root_box(2), 0.25);
  CHECK(keys2.size() == 17);
  CHECK(keys2.size() == oracle_keys(2, 0.25).size());

  // The first key is always the box itself.
  CHECK(keys[0].empty());
  CHECK(keys2[0].empty());
}

TEST_CASE("sub-box enumeration below a non-root box uses relative masses") {
  TreeSpace t1 = TreeSpace::dyadic(1);
  Box deep;
  deep.nodes = {NodeId{{1, 0, 1}}};
  auto keys = subboxes_with_mass(t1, deep, 0.25);
  CHECK(keys.size() == 7);
  for (const SubBoxKey& k : keys)
    CHECK(relative_mass(t1, deep, k) >= 0.25);
}

TEST_CASE("candidate pairs match the enumeration oracle") {
  TreeSpace t1 = TreeSpace::dyadic(1);
  auto pairs = candidate_pairs(t1, root_box(1), 0.25);
  CHECK(pairs.size() == 42);  // 7 eligible boxes, all ordered distinct pairs
  CHECK(oracle_pair_count(oracle_keys(1, 0.25)) == 42);

  CHECK(candidate_pairs(t1, root_box(1), 0.6).empty());

  // p=2, gamma=0.5: eligible boxes are B and the four single-split halves;
  // ordered pairs differing on exactly one axis, including those pairing B
  // with a half (the estimator's maximand shape allows unequal depths).
  TreeSpace t2 = TreeSpace::dyadic(2);
  auto pairs2 = candidate_pairs(t2, root_box(2), 0.5);
  CHECK(pairs2.size() == oracle_pair_count(oracle_keys(2, 0.5)));
  CHECK(pairs2.size() == 12);
}

TEST_CASE("candidate pairs are symmetric and structurally sound") {
  TreeSpace t2 = TreeSpace::dyadic(2);
  auto keys = subboxes_with_mass(t2, root_box(2), 0.25);
  std::set<std::pair<std::string, std::string>> seen;
  auto pairs = candidate_pairs(t2, root_box(2), 0.25);
  std::set<std::string> key_serials;
  for (const SubBoxKey& k : keys) key_serials.insert(k.serial());
  for (const CandidatePair& pr : pairs) {
    // both elements appear in the eligible list
    CHECK(key_serials.count(pr.first.serial()) == 1);
    CHECK(key_serials.count(pr.second.serial()) == 1);
    // they differ on exactly the recorded axis
    int differing = -1;
    for (int i = 0; i < 2; ++i)
      if (pr.first.rel[static_cast<std::size_t>(i)] != pr.second.rel[static_cast<std::size_t>(i)]) {
        CHECK(differing == -1);
        differing = i;
      }
    CHECK(differing == pr.axis);
    seen.insert({pr.first.serial(), pr.second.serial()});
  }
  // symmetry: (C1, C2) present iff (C2, C1) present
  for (const auto& [a, b] : seen) CHECK(seen.count({b, a}) == 1);
}

TEST_CASE("box serials round-trip") {
  Box b;
  b.nodes = {NodeId{{0, 1}}, NodeId{{0}}};
  CHECK(b.serial() == "0.1|0");
  CHECK(Box::parse("0.1|0") == b);
  CHECK(Box::parse(root_box(1).serial()) == root_box(1));
}

TEST_CASE("tie-break order prefers shallower boxes") {
  Box shallow = root_box(1);
  Box deep;
  deep.nodes = {NodeId{{0}}};
  CHECK(box_order_before(shallow, deep));
  CHECK_FALSE(box_order_before(deep, shallow));
  Box left, right;
  left.nodes = {NodeId{{0}}};
  right.nodes = {NodeId{{1}}};
  CHECK(box_order_before(left, right));
}
