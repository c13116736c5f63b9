#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ger {

// Units are fixed across the library: power in kW, energy in kWh, time in h.

enum class Role { master, slave };

const char* to_string(Role role);

/// Energy buffer (B-layer) ratings and initial state.
struct BufferSpec {
  double e_min_kwh = 0.0;
  double e_max_kwh = 0.0;
  double p_rate_kw = 0.0;
  double eta_ch = 1.0;
  double eta_dis = 1.0;
  double e_init_kwh = 0.0;
};

/// One R-layer port with its comfort band around the dispatched reference.
struct RouterPort {
  std::string id;
  double p_rate_kw = 0.0;
  double alpha = 0.0;
  double weight = 0.0;
};

struct GerNode {
  std::string id;
  Role role = Role::master;
  std::vector<RouterPort> ports;
  BufferSpec buffer;
  double gamma = 0.0;
  // Port that carries real-time compensation transfers; empty means the first port.
  std::string exchange_port;

  std::size_t exchange_port_index() const;
};

/// Builds a node with role-derived weights: master ports get 1/alpha and
/// gamma = 0, slave ports get 0 and gamma = 1.
GerNode make_node(std::string id, Role role, std::vector<RouterPort> ports, BufferSpec buffer);

/// Undirected graph over node ids, stored as a dense adjacency matrix.
class Topology {
 public:
  Topology() = default;
  Topology(std::vector<std::string> node_ids, std::vector<std::vector<std::uint8_t>> adjacency);

  static Topology from_edges(std::vector<std::string> node_ids,
                             const std::vector<std::pair<std::string, std::string>>& edges);

  std::size_t size() const { return node_ids_.size(); }
  const std::vector<std::string>& node_ids() const { return node_ids_; }
  const std::vector<std::vector<std::uint8_t>>& adjacency() const { return adjacency_; }
  bool adjacent(std::size_t i, std::size_t j) const { return adjacency_[i][j] != 0; }
  std::vector<std::size_t> neighbors(std::size_t i) const;
  /// Undirected edges (i < j), sorted.
  std::vector<std::pair<std::size_t, std::size_t>> edges() const;
  std::size_t index_of(const std::string& id) const;

  friend bool operator==(const Topology&, const Topology&) = default;

 private:
  std::vector<std::string> node_ids_;
  std::vector<std::vector<std::uint8_t>> adjacency_;
};

struct TimeGrid {
  double dt_dispatch_h = 0.25;
  double dt_track_h = 0.05;
  int horizon = 24;

  /// Tracking sub-steps per dispatch step; 0 when the ratio is not a positive integer.
  int substeps() const;
};

/// Dispatch-step series for one node. ref_kw[k][i] is the reference of port i at step k.
struct NodeProfile {
  std::vector<std::vector<double>> ref_kw;
  std::vector<double> dpv_kw;
  std::vector<double> dwt_kw;
  std::vector<double> dload_kw;
  std::vector<double> pm_kw;

  std::size_t steps() const { return ref_kw.size(); }
  double variation(std::size_t k) const { return dpv_kw[k] + dwt_kw[k] - dload_kw[k]; }
};

struct Violation {
  std::string node;
  std::string field;
  std::string message;
};

std::string format_violations(const std::vector<Violation>& violations);

class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<Violation> violations);
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

struct Network {
  std::vector<GerNode> nodes;
  Topology topology;

  std::size_t index_of(const std::string& id) const;
};

std::vector<Violation> check_buffer(const std::string& node, const BufferSpec& spec);
std::vector<Violation> check_node(const GerNode& node);
std::vector<Violation> check_topology(const Topology& topology);
std::vector<Violation> check_time_grid(const TimeGrid& grid);
std::vector<Violation> check_profile(const GerNode& node, const NodeProfile& profile, int horizon);

/// Checks every node and topology invariant; throws ValidationError listing all of them.
Network validate_network(std::vector<GerNode> nodes, Topology topology);
Network validate_network(Network network);

enum class BalanceConvention {
  corrected,  // refs subtracted: the zero-variation baseline balances with P_B = 0
  literal,    // refs added instead; the baseline then needs P_B = -2 * sum(refs)
};

/// Net U-layer power: sum(dpv) + sum(dwt) - dload -/+ sum(refs) + pm.
double u_layer_power(std::span<const double> dpv, std::span<const double> dwt, double dload,
                     std::span<const double> refs,
                     BalanceConvention convention = BalanceConvention::corrected, double pm = 0.0);

/// U-layer power of a node profile at dispatch step k.
double u_layer_power(const NodeProfile& profile, std::size_t k, BalanceConvention convention);

}  // namespace ger
