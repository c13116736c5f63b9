#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ger/ga.hpp"
#include "ger/network.hpp"

namespace ger {

/// Short-time dispatch decision over one horizon. All series are indexed by
/// step k relative to the horizon start; buffer_energy[k] is the energy at the
/// end of step k.
struct HorizonPlan {
  std::vector<std::vector<double>> port_power;  // [k][port]
  std::vector<double> buffer_power;             // > 0 discharges
  std::vector<double> buffer_energy;
  std::vector<std::vector<double>> penalty;     // comfort-band violation J, [k][port]
  std::vector<std::vector<double>> ref_power;   // dispatch references used, [k][port]
  std::vector<double> u_power;
  double e_init_kwh = 0.0;
  double objective = 0.0;

  std::size_t steps() const { return buffer_power.size(); }
};

enum class BoundSide { none, min, max };

const char* to_string(BoundSide side);

struct ShiftResult {
  std::optional<int> t_a;
  std::optional<int> t_b;
  BoundSide side = BoundSide::none;
  double de_res = 0.0;
  double de_sh = 0.0;
  std::vector<double> me_ref;
};

/// Signed distance of p outside the comfort band around ref; zero inside the
/// band and whenever ref is zero.
double penalty_j(double p, double ref, double alpha);

struct BufferStep {
  double energy_kwh = 0.0;
  bool in_bounds = true;
};

/// One step of buffer dynamics. p_b > 0 discharges (loss 1/eta_dis), p_b <= 0 charges (eta_ch).
BufferStep buffer_step(double e_prev, double p_b, double dt_h, const BufferSpec& spec);

/// Terminal power range [lo, hi] that keeps the energy after one step of dt_h
/// inside [e_min, e_max] and the power inside the buffer rating.
std::pair<double, double> buffer_power_limits(double e_kwh, const BufferSpec& spec, double dt_h);

/// Weighted comfort penalty plus gamma-weighted balance residual.
double objective(const HorizonPlan& plan, const GerNode& node, std::span<const double> p_u);

class InfeasibleDispatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DispatchOptions {
  double dt_h = 0.25;
  BalanceConvention convention = BalanceConvention::corrected;
  GaConfig ga;
};

/// Minimizes the dispatch objective for one node over the profile's horizon.
/// The GA searches one gene per step in [0, 1] that places the buffer power
/// inside the interval still reachable from the current energy (backward-
/// propagated bounds), so every decoded plan meets the buffer bounds and ratings. Master port powers are split per step by an
/// exact weighted water-filling; slave port powers stay at their references.
/// Throws InfeasibleDispatch when no buffer trajectory satisfies the bounds.
HorizonPlan optimize_horizon(const GerNode& node, const NodeProfile& profile, double e_init_kwh,
                             const DispatchOptions& options);

/// Minimum-penalty port powers summing to total_kw, each within +-p_rate.
/// Requires total_kw within the summed ratings and positive weights.
std::vector<double> split_port_power(double total_kw, std::span<const double> refs,
                                     std::span<const RouterPort> ports);

/// Recomputes penalties, balance-derived buffer energy and objective from
/// port and buffer powers. Used by the optimizer and by tests.
HorizonPlan evaluate_plan(const GerNode& node, const NodeProfile& profile, double e_init_kwh,
                          std::vector<std::vector<double>> port_power,
                          std::vector<double> buffer_power, const DispatchOptions& options);

/// Returns the first violated plan invariant, or an empty string.
std::string check_plan(const HorizonPlan& plan, const GerNode& node, double dt_h);

struct ShiftOptions {
  // Use E_ref(t_a) instead of E_ref(t_b) for the headroom of the max-bound case.
  bool literal_max_headroom = false;
};

inline constexpr double kBoundTouchKwh = 1e-6;

ShiftResult compute_shift(const HorizonPlan& plan, const BufferSpec& spec, double dt_h,
                          const ShiftOptions& options = {});

/// Sum over steps of (J / ref)^2; zero-reference steps are skipped.
double uc_index(std::span<const double> penalties, std::span<const double> refs);

/// Uncomfortable index per port of a plan.
std::vector<double> plan_uc(const HorizonPlan& plan);

/// Profile restricted to steps [from, end).
NodeProfile slice_profile(const NodeProfile& profile, std::size_t from);

}  // namespace ger
