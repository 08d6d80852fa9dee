#include "atb/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <nlohmann/json.hpp>

namespace atb {

EngineConstants EngineParams::resolve(int p, int q, std::uint64_t horizon) const {
  double g;
  if (gamma.has_value()) {
    g = *gamma;
  } else {
    if (horizon < 3)
      throw ConfigError("quality-free operation (gamma = 1/ln T) needs T >= 3");
    g = 1.0 / std::log(static_cast<double>(horizon));
  }
  return EngineConstants::make(epsilon, g, p, q, radius_scale, optimism_scale);
}

EngineParams EngineParams::from_json(const nlohmann::json& j) {
  EngineParams p;
  p.epsilon = j.value("epsilon", 0.1);
  if (j.value("quality_free", false))
    p.gamma.reset();
  else if (j.contains("gamma"))
    p.gamma = j.at("gamma").get<double>();
  p.radius_scale = j.value("radius_scale", kDefaultRadiusScale);
  p.optimism_scale = j.value("optimism_scale", kDefaultOptimismScale);
  return p;
}

nlohmann::json EngineParams::to_json() const {
  nlohmann::json j{{"epsilon", epsilon},
                   {"radius_scale", radius_scale},
                   {"optimism_scale", optimism_scale}};
  if (gamma.has_value())
    j["gamma"] = *gamma;
  else
    j["quality_free"] = true;
  return j;
}

CellLayout CellLayout::build(const TreeSpace& trees, const Box& box,
                             const EngineConstants& c) {
  CellLayout layout;
  layout.keys = subboxes_with_mass(trees, box, c.gamma);
  layout.max_rel_depth.assign(static_cast<std::size_t>(trees.dimension()), 0);
  layout.cell_log_rho.reserve(layout.keys.size());
  for (const SubBoxKey& key : layout.keys) {
    layout.cell_log_rho.push_back(log_rho(apply_key(box, key), c.q, c.p));
    for (int i = 0; i < trees.dimension(); ++i)
      layout.max_rel_depth[static_cast<std::size_t>(i)] =
          std::max(layout.max_rel_depth[static_cast<std::size_t>(i)], key.rel_depth(i));
  }
  std::vector<CandidatePair> pairs = candidate_pairs(trees, box, c.gamma);
  layout.pairs.reserve(pairs.size());
  auto index_of = [&](const SubBoxKey& k) {
    auto it = std::lower_bound(layout.keys.begin(), layout.keys.end(), k);
    return static_cast<std::size_t>(it - layout.keys.begin());
  };
  for (const CandidatePair& pr : pairs)
    layout.pairs.push_back(PairIdx{index_of(pr.first), index_of(pr.second), pr.axis});
  return layout;
}

Engine::Engine(std::shared_ptr<const TreeSpace> trees, EngineConstants constants)
    : trees_(std::move(trees)), constants_(constants) {
  if (!trees_) throw ConfigError("engine needs an arm space");
  if (trees_->dimension() != constants_.p || trees_->max_arity() > constants_.q)
    throw ConfigError("constants do not match the arm space");
  Box root;
  root.nodes.assign(static_cast<std::size_t>(trees_->dimension()), NodeId{});
  activate(make_record(std::move(root), 0, {}));
}

BoxRecord Engine::make_record(Box box, std::uint64_t activated_at,
                              std::vector<std::pair<ArmPoint, double>> points) {
  BoxRecord rec;
  rec.id = next_id_++;
  rec.box = std::move(box);
  rec.layout = CellLayout::build(*trees_, rec.box, constants_);
  rec.cells.assign(rec.layout.keys.size(), CellStats{});
  rec.cell_radii.assign(rec.layout.keys.size(), kInfinity);
  rec.activated_at = activated_at;
  rec.points = std::move(points);
  for (const auto& [arm, reward] : rec.points) add_hit(rec, arm, reward);
  refresh_cells(rec);
  return rec;
}

void Engine::add_hit(BoxRecord& rec, const ArmPoint& x, double reward) {
  int p = trees_->dimension();
  // Relative descent path of x below the box, per axis, to the tracked depth.
  std::vector<NodePath> rel(static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i) {
    std::size_t s = static_cast<std::size_t>(i);
    int want = rec.layout.max_rel_depth[s];
    const CoordinateTree& tree = trees_->axis(i);
    if (tree.is_dyadic()) {
      double v = std::get<double>(x.coords[s]);
      DyadicInterval iv = dyadic_interval(rec.box.nodes[s]);
      double lo = iv.lo, width = iv.hi - iv.lo;
      for (int d = 0; d < want; ++d) {
        width *= 0.5;
        double mid = lo + width;
        if (v >= mid) {
          rel[s].push_back(1);
          lo = mid;
        } else {
          rel[s].push_back(0);
        }
      }
    } else {
      const NodePath& leaf = std::get<NodeId>(x.coords[s]).path;
      const NodePath& base = rec.box.nodes[s].path;
      for (std::size_t d = base.size(); d < leaf.size(); ++d) rel[s].push_back(leaf[d]);
    }
  }
  auto key_matches = [&](const SubBoxKey& key) {
    for (int i = 0; i < p; ++i) {
      std::size_t s = static_cast<std::size_t>(i);
      const NodePath& kr = key.rel[s];
      if (kr.size() > rel[s].size()) return false;
      if (!std::equal(kr.begin(), kr.end(), rel[s].begin())) return false;
    }
    return true;
  };
  for (std::size_t c = 0; c < rec.layout.keys.size(); ++c)
    if (key_matches(rec.layout.keys[c])) rec.cells[c].add(reward);
}

void Engine::refresh_cells(BoxRecord& rec) const {
  for (std::size_t c = 0; c < rec.cells.size(); ++c)
    rec.cell_radii[c] =
        constants_.radius(rec.cells[c].hits, rec.layout.cell_log_rho[c]);
  rec.radius = rec.cell_radii[0];
  rec.width = width_estimate(rec.layout.pairs, rec.cells, rec.cell_radii);
  rec.index = index_value(rec.cells[0], rec.radius, constants_);
}

void Engine::activate(BoxRecord rec) {
  std::uint64_t id = rec.id;
  queue_.push(QueueEntry{rec.index, box_depth(rec.box), rec.box, id, rec.version});
  active_by_box_.emplace(rec.box, id);
  active_.emplace(id, std::move(rec));
  ++activations_;
}

const BoxRecord& Engine::selected_record() const {
  while (!queue_.empty()) {
    const QueueEntry& top = queue_.top();
    auto it = active_.find(top.id);
    if (it != active_.end() && it->second.version == top.version) return it->second;
    queue_.pop();  // stale entry
  }
  throw EngineError("no active boxes");
}

const Box& Engine::select() const { return selected_record().box; }

StepRow Engine::step(const Environment& env, Rng& rng) {
  const BoxRecord& rec = selected_record();
  Box box = rec.box;  // the record may move on rehash during splits

  ArmPoint x;
  x.coords.reserve(box.nodes.size());
  for (std::size_t i = 0; i < box.nodes.size(); ++i)
    x.coords.push_back(trees_->sample_in_node(static_cast<int>(i), box.nodes[i], rng));

  double reward = env.sample_reward(x, rng);
  if (!(reward >= 0.0 && reward <= 1.0))
    throw ContractViolation("environment produced a reward outside [0,1]");

  StepRow row;
  row.t = t_ + 1;
  row.box = box.serial();
  row.arm = x;
  row.reward = reward;
  row.mu_xt = env.mean(x);
  row.inst_regret = env.mu_star() - row.mu_xt;

  apply_update(box, x, reward, row);
  return row;
}

void Engine::replay_step(const StepRow& row) {
  Box box = Box::parse(row.box);
  while (box.nodes.size() < static_cast<std::size_t>(trees_->dimension()))
    box.nodes.push_back(NodeId{});
  if (!find_active(box))
    throw EngineError("replayed trajectory does not match the engine state at t=" +
                      std::to_string(row.t));
  StepRow scratch = row;
  apply_update(box, row.arm, row.reward, scratch);
}

void Engine::apply_update(const Box& box, const ArmPoint& arm, double reward, StepRow& row) {
  auto it = active_by_box_.find(box);
  if (it == active_by_box_.end()) throw EngineError("updated box is not active");
  std::uint64_t id = it->second;
  BoxRecord& rec = active_.at(id);

  rec.points.emplace_back(arm, reward);
  add_hit(rec, arm, reward);
  refresh_cells(rec);
  ++rec.version;
  queue_.push(QueueEntry{rec.index, box_depth(rec.box), rec.box, id, rec.version});

  // Post-update, pre-split radius of the selected box; feeds the T* rule.
  row.radius_bt = rec.radius;
  ++t_;
  if (rec.radius < best_radius_) {
    best_radius_ = rec.radius;
    best_t_ = t_;
    best_arm_ = arm;
  }

  if (post_update_hook_) post_update_hook_(rec);
  restore_invariant(id);

  if (active_.size() > t_ + 1)
    throw EngineError("active-box count exceeded t + 1");
}

int Engine::restore_invariant() {
  int performed = 0;
  std::vector<std::uint64_t> ids;
  ids.reserve(active_.size());
  for (const auto& [box, id] : active_by_box_) ids.push_back(id);
  for (std::uint64_t id : ids) performed += restore_invariant(id);
  return performed;
}

int Engine::restore_invariant(std::uint64_t start_id) {
  int performed = 0;
  std::vector<std::uint64_t> work{start_id};
  while (!work.empty()) {
    std::uint64_t id = work.back();
    work.pop_back();
    auto it = active_.find(id);
    if (it == active_.end()) continue;
    BoxRecord& rec = it->second;
    if (!(rec.width.value >= constants_.split_threshold() * rec.radius)) continue;

    int axis = rec.width.axis;
    Box parent_box = rec.box;
    std::vector<std::pair<ArmPoint, double>> points = std::move(rec.points);
    std::uint64_t when = t_;

    std::vector<Box> children;
    try {
      children = split(parent_box, axis, *trees_);
    } catch (const EngineError& e) {
      throw EngineError(std::string("width invariant violated but the box cannot split: ") +
                        e.what());
    }

    active_.erase(id);
    active_by_box_.erase(parent_box);
    split_axis_[parent_box] = axis;
    ++splits_;
    ++performed;

    // Each stored point lands in exactly one child; hand it over by move.
    std::vector<std::vector<std::pair<ArmPoint, double>>> buckets(children.size());
    for (auto& pr : points) {
      for (std::size_t c = 0; c < children.size(); ++c) {
        if (contains(*trees_, children[c], pr.first)) {
          buckets[c].push_back(std::move(pr));
          break;
        }
      }
    }
    for (std::size_t c = 0; c < children.size(); ++c) {
      BoxRecord childrec =
          make_record(std::move(children[c]), when, std::move(buckets[c]));
      std::uint64_t cid = childrec.id;
      activate(std::move(childrec));
      work.push_back(cid);
    }
  }
  return performed;
}

ArmPoint Engine::recommend() const {
  if (t_ == 0) throw ContractViolation("no steps taken; nothing to recommend");
  return best_arm_;
}

std::uint64_t Engine::t_star() const {
  if (t_ == 0) throw ContractViolation("no steps taken");
  return best_t_;
}

std::vector<const BoxRecord*> Engine::active_records() const {
  std::vector<const BoxRecord*> out;
  out.reserve(active_by_box_.size());
  for (const auto& [box, id] : active_by_box_) out.push_back(&active_.at(id));
  return out;
}

const BoxRecord* Engine::find_active(const Box& box) const {
  auto it = active_by_box_.find(box);
  return it == active_by_box_.end() ? nullptr : &active_.at(it->second);
}

const BoxRecord& Engine::locate(const ArmPoint& x) const {
  Box box;
  box.nodes.assign(static_cast<std::size_t>(trees_->dimension()), NodeId{});
  for (;;) {
    auto it = active_by_box_.find(box);
    if (it != active_by_box_.end()) return active_.at(it->second);
    auto sp = split_axis_.find(box);
    if (sp == split_axis_.end()) break;
    bool found = false;
    for (Box& child : split(box, sp->second, *trees_)) {
      if (contains(*trees_, child, x)) {
        box = std::move(child);
        found = true;
        break;
      }
    }
    if (!found) break;
  }
  // Fallback: exhaustive scan (used only if the split map is unavailable).
  for (const auto& [b, id] : active_by_box_)
    if (contains(*trees_, b, x)) return active_.at(id);
  throw EngineError("no active box contains the arm " + x.to_string());
}

bool Engine::invariant_holds(double nu_factor) const {
  for (const auto& [id, rec] : active_)
    if (!(rec.width.value < nu_factor * constants_.nu * rec.radius)) return false;
  return true;
}

bool Engine::partition_mass_is_one() const {
  bool all_dyadic = true;
  for (int i = 0; i < trees_->dimension(); ++i)
    if (!trees_->axis(i).is_dyadic()) all_dyadic = false;
  if (all_dyadic) {
    constexpr int kScale = 120;
    unsigned __int128 total = 0;
    for (const auto& [box, id] : active_by_box_) {
      int e = 0;
      for (const NodeId& n : box.nodes) e += n.depth();
      if (e > kScale) return false;  // beyond exact accounting depth
      total += static_cast<unsigned __int128>(1) << (kScale - e);
    }
    return total == static_cast<unsigned __int128>(1) << kScale;
  }
  long double total = 0.0L;
  for (const auto& [box, id] : active_by_box_) {
    long double mass = 1.0L;
    for (std::size_t i = 0; i < box.nodes.size(); ++i)
      mass *= static_cast<long double>(trees_->axis(static_cast<int>(i)).pi_mass(box.nodes[i]));
    total += mass;
  }
  return std::fabs(static_cast<double>(total - 1.0L)) < 1e-12;
}

nlohmann::json Engine::save_state(const Rng& rng) const {
  nlohmann::json actives = nlohmann::json::array();
  for (const auto& [box, id] : active_by_box_) {
    const BoxRecord& rec = active_.at(id);
    nlohmann::json points = nlohmann::json::array();
    for (const auto& [arm, reward] : rec.points)
      points.push_back({arm.to_string(), reward});
    actives.push_back({{"box", box.serial()},
                       {"activated_at", rec.activated_at},
                       {"points", points}});
  }
  nlohmann::json splits = nlohmann::json::object();
  for (const auto& [box, axis] : split_axis_) splits[box.serial()] = axis;
  return {{"format", "atb-run-state-v1"},
          {"trees", trees_->to_json()},
          {"constants",
           {{"epsilon", constants_.epsilon},
            {"gamma", constants_.gamma},
            {"p", constants_.p},
            {"q", constants_.q},
            {"radius_scale", constants_.radius_scale},
            {"optimism_scale", constants_.optimism_scale}}},
          {"t", t_},
          {"activations", activations_},
          {"splits_performed", splits_},
          {"best", {{"radius", best_radius_}, {"t", best_t_}, {"arm", best_arm_.to_string()}}},
          {"active", actives},
          {"split_axes", splits},
          {"rng", rng.save_state()}};
}

std::pair<Engine, Rng> Engine::load_state(const nlohmann::json& j) {
  if (j.value("format", "") != "atb-run-state-v1")
    throw ConfigError("unrecognised run-state document");
  auto trees = std::make_shared<TreeSpace>(TreeSpace::from_json(j.at("trees")));
  const auto& cj = j.at("constants");
  EngineConstants constants = EngineConstants::make(
      cj.at("epsilon").get<double>(), cj.at("gamma").get<double>(), cj.at("p").get<int>(),
      cj.at("q").get<int>(), cj.at("radius_scale").get<double>(),
      cj.at("optimism_scale").get<double>());

  Engine engine(trees, constants);
  // Drop the fresh root; rebuild the saved partition.
  engine.active_.clear();
  engine.active_by_box_.clear();
  while (!engine.queue_.empty()) engine.queue_.pop();
  engine.activations_ = 0;

  for (const auto& a : j.at("active")) {
    Box box = Box::parse(a.at("box").get<std::string>());
    while (box.nodes.size() < static_cast<std::size_t>(trees->dimension()))
      box.nodes.push_back(NodeId{});
    std::vector<std::pair<ArmPoint, double>> points;
    for (const auto& pt : a.at("points"))
      points.emplace_back(ArmPoint::from_string(pt.at(0).get<std::string>()),
                          pt.at(1).get<double>());
    engine.activate(engine.make_record(std::move(box),
                                       a.at("activated_at").get<std::uint64_t>(),
                                       std::move(points)));
  }
  for (const auto& [serial, axis] : j.at("split_axes").items()) {
    Box box = Box::parse(serial);
    while (box.nodes.size() < static_cast<std::size_t>(trees->dimension()))
      box.nodes.push_back(NodeId{});
    engine.split_axis_[box] = axis.get<int>();
  }
  engine.t_ = j.at("t").get<std::uint64_t>();
  engine.activations_ = j.at("activations").get<std::uint64_t>();
  engine.splits_ = j.at("splits_performed").get<std::uint64_t>();
  engine.best_radius_ = j.at("best").at("radius").get<double>();
  engine.best_t_ = j.at("best").at("t").get<std::uint64_t>();
  engine.best_arm_ = ArmPoint::from_string(j.at("best").at("arm").get<std::string>());

  Rng rng(0);
  rng.load_state(j.at("rng").get<std::string>());
  return {std::move(engine), rng};
}

RunRecord run(std::shared_ptr<const TreeSpace> trees, const EngineParams& params,
              const Environment& env, std::uint64_t horizon, Rng& rng) {
  if (horizon < 1) throw ContractViolation("horizon must be >= 1");
  if (env.dimension() != trees->dimension())
    throw ConfigError("environment/arm-space dimension mismatch");
  EngineConstants constants = params.resolve(trees->dimension(), trees->max_arity(), horizon);
  Engine engine(trees, constants);

  RunRecord record;
  record.horizon = horizon;
  record.rows.reserve(horizon);
  double cum = 0.0;
  auto start = std::chrono::steady_clock::now();
  for (std::uint64_t t = 1; t <= horizon; ++t) {
    StepRow row = engine.step(env, rng);
    cum += row.inst_regret;
    row.cum_regret = cum;
    record.rows.push_back(std::move(row));
  }
  auto end = std::chrono::steady_clock::now();
  record.total_seconds = std::chrono::duration<double>(end - start).count();
  record.recommendation = engine.recommend();
  record.t_star = engine.t_star();
  record.activations = engine.activations();
  record.splits = engine.splits();
  return record;
}

CleanReport check_clean(const RunRecord& record, const Environment& env,
                        std::shared_ptr<const TreeSpace> trees, const EngineParams& params) {
  if (record.rows.empty()) return {};
  EngineConstants constants =
      params.resolve(trees->dimension(), trees->max_arity(), record.horizon);
  Engine engine(trees, constants);

  std::unordered_map<std::string, double> mean_cache;
  auto true_mean = [&](const Box& cell_box) {
    std::string key = cell_box.serial();
    auto it = mean_cache.find(key);
    if (it != mean_cache.end()) return it->second;
    BoxMean m = env.box_mean(*trees, cell_box);
    if (m.method == BoxMean::Method::monte_carlo)
      throw UnsupportedError("check_clean needs an exact or quadrature box-mean oracle");
    mean_cache.emplace(std::move(key), m.value);
    return m.value;
  };

  CleanReport report;
  engine.set_post_update_hook([&](const BoxRecord& rec) {
    if (!report.clean) return;
    double rb = rec.radius;
    for (std::size_t c = 0; c < rec.cells.size(); ++c) {
      if (rec.cells[c].hits == 0) continue;
      ++report.cells_checked;
      if (rb > 0.0 && std::isfinite(rb) && std::isfinite(rec.cell_radii[c]))
        report.max_radius_ratio = std::max(report.max_radius_ratio, rec.cell_radii[c] / rb);
      double mu = true_mean(apply_key(rec.box, rec.layout.keys[c]));
      double err = std::fabs(rec.cells[c].mean() - mu);
      if (err > rec.cell_radii[c] * (1.0 + 1e-12) + 1e-12) {
        report.clean = false;
        report.violation = CleanViolation{engine.time(),
                                          apply_key(rec.box, rec.layout.keys[c]).serial(),
                                          rec.cells[c].mean(),
                                          mu,
                                          rec.cell_radii[c],
                                          false};
        return;
      }
    }
  });

  for (const StepRow& row : record.rows) {
    if (!report.clean) break;
    try {
      engine.replay_step(row);
    } catch (const EngineError&) {
      report.clean = false;
      report.violation = CleanViolation{row.t, row.box, 0.0, 0.0, 0.0, true};
      break;
    }
  }
  return report;
}

}  // namespace atb
