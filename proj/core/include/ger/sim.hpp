#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ger/dispatch.hpp"
#include "ger/fcs.hpp"
#include "ger/flc.hpp"
#include "ger/ga.hpp"
#include "ger/network.hpp"
#include "ger/scenario.hpp"

namespace ger {

struct TrackingConfig {
  double e_bd_kwh = 30.0;
  double p_cn_kw = 80.0;
};

struct SimulationOptions {
  bool fcs_enabled = true;
  bool shift_enabled = true;
  BalanceConvention convention = BalanceConvention::corrected;
  ShiftOptions shift;
  bool record_rounds = false;
  // Also run the same configuration without sharing to fill the baseline metrics.
  bool compute_baseline = true;
};

struct SimulationConfig {
  Network network;
  TimeGrid grid;
  std::vector<NodeProfile> profiles;  // parallel to network.nodes
  std::optional<StochasticSpec> scenario;
  GaConfig ga;
  TrackingConfig tracking;
  SimulationOptions options;
};

std::vector<Violation> check_config(const SimulationConfig& cfg);

/// Per node, per tracking step.
struct NodeStepRecord {
  double e_b_kwh = 0.0;       // after the step
  double me_ref_kwh = 0.0;    // reference at the end of the step
  double de_ref_kwh = 0.0;    // controller input: reference minus predicted energy
  double deviation_kwh = 0.0; // reference minus realized energy
  double m_a = 1.0;
  double np_c_kw = 0.0;
  double p_c_kw = 0.0;
  double mp_c_kw = 0.0;
  double variation_kw = 0.0;
  double buffer_plan_kw = 0.0;
  double buffer_power_kw = 0.0;  // realized
  double unserved_kw = 0.0;      // variation neither the buffer nor the ports could take
  std::vector<double> port_power_kw;
  std::vector<double> port_ref_kw;
  std::vector<double> port_penalty_kw;
};

struct WindowRecord {
  bool feasible = true;
  std::string event;
  HorizonPlan plan;
  ShiftResult shift;
  std::vector<double> uc;
};

struct StepTransfer {
  std::size_t from = 0;
  std::size_t to = 0;
  double kw = 0.0;
};

struct SimulationTrace {
  std::vector<std::string> node_ids;
  std::vector<std::vector<std::string>> port_ids;
  double dt_track_h = 0.0;
  int substeps = 1;
  std::vector<double> e_start_kwh;
  std::vector<std::vector<NodeStepRecord>> steps;   // [t][node]
  std::vector<std::vector<WindowRecord>> windows;   // [w][node], empty for tracking-only runs
  std::vector<std::vector<StepTransfer>> transfers; // [t]
  std::vector<std::vector<Message>> rounds;         // [t], filled when record_rounds is set
  std::vector<std::string> events;
};

struct NodeMetrics {
  std::string id;
  double mean_abs_deviation_kwh = 0.0;
  double max_abs_deviation_kwh = 0.0;
  std::optional<double> baseline_mean_abs_deviation_kwh;
  std::optional<double> baseline_max_abs_deviation_kwh;
  std::vector<double> uc;           // executed dispatch steps
  std::vector<double> uc_realized;  // tracking steps, against the same references
  double sent_kwh = 0.0;
  double received_kwh = 0.0;
  double unserved_kwh = 0.0;
};

struct Metrics {
  std::vector<NodeMetrics> nodes;
  double mean_abs_deviation_kwh = 0.0;
  std::optional<double> baseline_mean_abs_deviation_kwh;
  double total_shared_kwh = 0.0;
  int constraint_violations = 0;
  int infeasible_windows = 0;
};

struct SimulationResult {
  SimulationTrace trace;
  Metrics metrics;
};

/// Dispatch and reference shift of node i for window w (profile steps w..end).
/// An infeasible window yields feasible = false and a one-step hold plan.
WindowRecord dispatch_window(const SimulationConfig& cfg, std::size_t w, std::size_t i, double e_init_kwh);

Metrics compute_metrics(const SimulationTrace& trace, const std::vector<GerNode>& nodes,
                        const SimulationTrace* baseline = nullptr);

/// Exchange-port state used to keep transfers within port ratings.
struct PortState {
  double scheduled_kw = 0.0;
  double rating_kw = 0.0;
};

/// Scales transfers so each node's exchange port stays within its rating.
/// Each transfer is reduced by the tighter of its two endpoint factors, so
/// what one node sends is still exactly what the other receives.
Matrix apply_port_clamp(const Matrix& transfers, const std::vector<PortState>& ports);

/// Closed loop over the dispatch horizon: receding-horizon dispatch each
/// window, then fuzzy tracking and compensation exchange each tracking step.
SimulationResult run_simulation(const SimulationConfig& cfg);

/// Fixed references for a tracking-only run.
struct NodeReference {
  std::string id;
  double e_init_kwh = 0.0;
  std::vector<double> me_ref_kwh;       // per tracking step, at its end
  std::vector<double> buffer_plan_kw;   // per tracking step
  std::optional<int> t_a;               // tracking steps
  std::vector<double> port_power_kw;    // scheduled, per port (default 0)
};

struct TrackReference {
  int horizon_steps = 1;  // T for the emergency factor, in tracking steps
  std::vector<NodeReference> nodes;

  std::size_t steps() const { return nodes.empty() ? 0 : nodes.front().me_ref_kwh.size(); }
};

std::vector<Violation> check_reference(const TrackReference& ref, const Network& network);

struct TrackingRun {
  Network network;
  TrackReference reference;
  double dt_track_h = 0.05;
  std::optional<StochasticSpec> scenario;
  TrackingConfig tracking;
  SimulationOptions options;
};

SimulationResult run_tracking(const TrackingRun& run);

}  // namespace ger
