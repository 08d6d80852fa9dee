#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "atb/box.hpp"
#include "atb/environment.hpp"
#include "atb/run_record.hpp"
#include "atb/statistics.hpp"
#include "atb/tree.hpp"

namespace atb {

// Run-level parameters before the constants are resolved against a horizon.
// gamma unset selects quality-free operation: gamma = 1/ln(T), which needs
// T >= 3.
struct EngineParams {
  double epsilon = 0.1;
  std::optional<double> gamma = 0.5;
  double radius_scale = kDefaultRadiusScale;
  double optimism_scale = kDefaultOptimismScale;

  EngineConstants resolve(int p, int q, std::uint64_t horizon) const;

  static EngineParams from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// The tracked cells of one box: canonical sub-box keys (the empty key first)
// and the candidate pairs as index pairs into that list.
struct CellLayout {
  std::vector<SubBoxKey> keys;
  std::vector<PairIdx> pairs;
  std::vector<double> cell_log_rho;  // log rho of each cell's absolute box
  std::vector<int> max_rel_depth;    // per axis, over all keys

  static CellLayout build(const TreeSpace& trees, const Box& box, const EngineConstants& c);
};

// Per-active-box state. Index, width estimate and confidence radius change
// only when an arm lands in the box.
struct BoxRecord {
  std::uint64_t id = 0;
  Box box;
  CellLayout layout;
  std::vector<CellStats> cells;
  std::vector<double> cell_radii;
  std::vector<std::pair<ArmPoint, double>> points;
  double radius = kInfinity;  // whole-box cell radius
  WidthEstimate width;
  double index = kInfinity;
  std::uint64_t version = 0;
  std::uint64_t activated_at = 0;

  const CellStats& whole_cell() const { return cells[0]; }
};

// Algorithm state: the active partition, its records, and the running
// recommendation tracker. One engine instance is strictly sequential.
class Engine {
 public:
  Engine(std::shared_ptr<const TreeSpace> trees, EngineConstants constants);

  const EngineConstants& constants() const { return constants_; }
  const TreeSpace& trees() const { return *trees_; }
  std::uint64_t time() const { return t_; }
  std::uint64_t activations() const { return activations_; }
  std::uint64_t splits() const { return splits_; }
  std::size_t active_count() const { return active_.size(); }

  // The argmax-index active box under the deterministic tie-break
  // (higher index, then shallower, then canonical path order).
  const Box& select() const;

  // One full step of the algorithm against the environment.
  StepRow step(const Environment& env, Rng& rng);

  // Replay-driven step: uses the recorded selection, arm and reward instead
  // of sampling. The recorded box must be active.
  void replay_step(const StepRow& row);

  // Splits until no active box violates the width invariant; returns the
  // number of splits performed. step() already restores after every update,
  // so a standalone call is normally a no-op.
  int restore_invariant();

  ArmPoint recommend() const;  // x at the argmin of r_t(B_t); needs t >= 1
  std::uint64_t t_star() const;

  // Active records in canonical box order.
  std::vector<const BoxRecord*> active_records() const;
  const BoxRecord* find_active(const Box& box) const;
  // Point location by descending the historical split tree.
  const BoxRecord& locate(const ArmPoint& x) const;

  // Every historical split: deactivated box -> split axis.
  const std::map<Box, int>& split_history() const { return split_axis_; }

  // True iff W_t(B) < factor * nu * r_t(B) for every active box.
  bool invariant_holds(double nu_factor) const;
  // Exact partition mass accounting: sum over active boxes of pi(B) == 1.
  bool partition_mass_is_one() const;

  nlohmann::json save_state(const Rng& rng) const;
  static std::pair<Engine, Rng> load_state(const nlohmann::json& j);

  // Observer invoked with the just-updated record after its statistics are
  // refreshed and before any splits. Test support (clean checks, invariant
  // suites).
  void set_post_update_hook(std::function<void(const BoxRecord&)> hook) {
    post_update_hook_ = std::move(hook);
  }

 private:
  struct QueueEntry {
    double index;
    int depth;
    Box box;
    std::uint64_t id;
    std::uint64_t version;
  };
  struct QueueOrder {
    bool operator()(const QueueEntry& a, const QueueEntry& b) const {
      if (a.index != b.index) return a.index < b.index;  // max-heap on index
      if (a.depth != b.depth) return a.depth > b.depth;  // shallower first
      return a.box > b.box;                              // canonical path order
    }
  };

  BoxRecord make_record(Box box, std::uint64_t activated_at,
                        std::vector<std::pair<ArmPoint, double>> points);
  void refresh_cells(BoxRecord& rec) const;
  void add_hit(BoxRecord& rec, const ArmPoint& x, double reward);
  void activate(BoxRecord rec);
  const BoxRecord& selected_record() const;
  int restore_invariant(std::uint64_t start_id);
  void apply_update(const Box& box, const ArmPoint& arm, double reward, StepRow& row);

  std::shared_ptr<const TreeSpace> trees_;
  EngineConstants constants_;
  std::uint64_t t_ = 0;
  std::uint64_t next_id_ = 1;
  std::uint64_t activations_ = 0;
  std::uint64_t splits_ = 0;

  std::unordered_map<std::uint64_t, BoxRecord> active_;
  std::map<Box, std::uint64_t> active_by_box_;
  mutable std::priority_queue<QueueEntry, std::vector<QueueEntry>, QueueOrder> queue_;
  std::map<Box, int> split_axis_;  // historical splits, for point location

  double best_radius_ = kInfinity;
  std::uint64_t best_t_ = 0;
  ArmPoint best_arm_;
  std::function<void(const BoxRecord&)> post_update_hook_;
};

// Executes T steps and assembles the trajectory, cumulative regret and the
// recommendation.
RunRecord run(std::shared_ptr<const TreeSpace> trees, const EngineParams& params,
              const Environment& env, std::uint64_t horizon, Rng& rng);

struct CleanViolation {
  std::uint64_t t = 0;
  std::string cell;     // absolute box serial of the offending cell
  double estimate = 0.0;
  double true_mean = 0.0;
  double radius = 0.0;
  bool trace_mismatch = false;  // recorded box not active during replay
};

struct CleanReport {
  bool clean = true;
  std::optional<CleanViolation> violation;
  // Descriptive radius-ratio statistic r_t(C)/r_t(B) over tracked cells.
  double max_radius_ratio = 0.0;
  std::uint64_t cells_checked = 0;
};

// Replays a trajectory and verifies |mu_t(C) - mu(C)| <= r_t(C) for every
// tracked cell with hits, against the environment's exact box-mean oracle.
CleanReport check_clean(const RunRecord& record, const Environment& env,
                        std::shared_ptr<const TreeSpace> trees, const EngineParams& params);

}  // namespace atb
