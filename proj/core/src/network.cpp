#include "ger/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace ger {

const char* to_string(Role role) { return role == Role::master ? "master" : "slave"; }

std::size_t GerNode::exchange_port_index() const {
  if (exchange_port.empty()) return 0;
  for (std::size_t i = 0; i < ports.size(); ++i) {
    if (ports[i].id == exchange_port) return i;
  }
  throw std::invalid_argument("node " + id + ": unknown exchange port " + exchange_port);
}

GerNode make_node(std::string id, Role role, std::vector<RouterPort> ports, BufferSpec buffer) {
  GerNode node;
  node.id = std::move(id);
  node.role = role;
  node.buffer = buffer;
  node.gamma = role == Role::master ? 0.0 : 1.0;
  for (auto& port : ports) {
    port.weight = (role == Role::master && port.alpha > 0.0) ? 1.0 / port.alpha : 0.0;
  }
  node.ports = std::move(ports);
  return node;
}

Topology::Topology(std::vector<std::string> node_ids,
                   std::vector<std::vector<std::uint8_t>> adjacency)
    : node_ids_(std::move(node_ids)), adjacency_(std::move(adjacency)) {}

Topology Topology::from_edges(std::vector<std::string> node_ids,
                              const std::vector<std::pair<std::string, std::string>>& edges) {
  const std::size_t n = node_ids.size();
  std::vector<std::vector<std::uint8_t>> a(n, std::vector<std::uint8_t>(n, 0));
  Topology topo(std::move(node_ids), {});
  for (const auto& [u, v] : edges) {
    const auto i = topo.index_of(u);
    const auto j = topo.index_of(v);
    a[i][j] = 1;
    a[j][i] = 1;
  }
  topo.adjacency_ = std::move(a);
  return topo;
}

std::vector<std::size_t> Topology::neighbors(std::size_t i) const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < size(); ++j) {
    if (adjacent(i, j)) out.push_back(j);
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> Topology::edges() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < size(); ++i) {
    for (std::size_t j = i + 1; j < size(); ++j) {
      if (adjacent(i, j)) out.emplace_back(i, j);
    }
  }
  return out;
}

std::size_t Topology::index_of(const std::string& id) const {
  const auto it = std::find(node_ids_.begin(), node_ids_.end(), id);
  if (it == node_ids_.end()) throw std::invalid_argument("unknown node id: " + id);
  return static_cast<std::size_t>(it - node_ids_.begin());
}

int TimeGrid::substeps() const {
  if (!(dt_track_h > 0.0) || !(dt_dispatch_h > 0.0)) return 0;
  const double ratio = dt_dispatch_h / dt_track_h;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * rounded) return 0;
  return static_cast<int>(rounded);
}

std::string format_violations(const std::vector<Violation>& violations) {
  std::ostringstream os;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    const auto& v = violations[i];
    if (i) os << "; ";
    if (!v.node.empty()) os << v.node << ": ";
    os << v.field << ": " << v.message;
  }
  return os.str();
}

ValidationError::ValidationError(std::vector<Violation> violations)
    : std::runtime_error(format_violations(violations)), violations_(std::move(violations)) {}

std::size_t Network::index_of(const std::string& id) const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].id == id) return i;
  }
  throw std::invalid_argument("unknown node id: " + id);
}

namespace {

bool finite_all(std::span<const double> xs) {
  return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

std::vector<Violation> check_buffer(const std::string& node, const BufferSpec& b) {
  std::vector<Violation> out;
  auto add = [&](const char* field, const char* msg) { out.push_back({node, field, msg}); };
  if (!std::isfinite(b.e_min_kwh) || !std::isfinite(b.e_max_kwh) || !std::isfinite(b.p_rate_kw) ||
      !std::isfinite(b.eta_ch) || !std::isfinite(b.eta_dis) || !std::isfinite(b.e_init_kwh)) {
    add("buffer", "non-finite value");
    return out;
  }
  if (b.e_min_kwh < 0.0) add("e_min_kwh", "e_min must be non-negative");
  if (!(b.e_min_kwh < b.e_max_kwh)) add("e_max_kwh", "e_min must be below e_max");
  if (!(b.p_rate_kw > 0.0)) add("p_rate_kw", "buffer rating must be positive");
  if (!(b.eta_ch > 0.0 && b.eta_ch <= 1.0)) add("eta_ch", "efficiency must be in (0, 1]");
  if (!(b.eta_dis > 0.0 && b.eta_dis <= 1.0)) add("eta_dis", "efficiency must be in (0, 1]");
  if (b.e_init_kwh < b.e_min_kwh || b.e_init_kwh > b.e_max_kwh)
    add("e_init_kwh", "e_init out of bounds");
  return out;
}

std::vector<Violation> check_node(const GerNode& node) {
  auto out = check_buffer(node.id, node.buffer);
  auto add = [&](std::string field, std::string msg) {
    out.push_back({node.id, std::move(field), std::move(msg)});
  };
  if (node.id.empty()) add("id", "empty node id");
  if (node.ports.empty()) add("ports", "node has no R-layer ports");
  std::set<std::string> port_ids;
  for (const auto& p : node.ports) {
    const std::string field = "ports." + p.id;
    if (!port_ids.insert(p.id).second) add(field, "duplicate port id");
    if (!(p.p_rate_kw > 0.0) || !std::isfinite(p.p_rate_kw)) add(field, "port rating must be positive");
    if (!(p.alpha >= 0.0) || !std::isfinite(p.alpha)) add(field, "alpha must be non-negative");
    if (node.role == Role::master) {
      if (p.alpha == 0.0) {
        add(field, "alpha must be positive on a master port (weight 1/alpha undefined)");
      } else if (p.alpha > 0.0 && std::abs(p.weight - 1.0 / p.alpha) > 1e-12 / p.alpha) {
        add(field, "master port weight must equal 1/alpha");
      }
    } else if (p.weight != 0.0) {
      add(field, "slave port weight must be 0");
    }
  }
  if (node.role == Role::master && node.gamma != 0.0) add("gamma", "master node requires gamma = 0");
  if (node.role == Role::slave && node.gamma != 1.0) add("gamma", "slave node requires gamma = 1");
  if (!node.exchange_port.empty() && !port_ids.count(node.exchange_port))
    add("exchange_port", "unknown exchange port " + node.exchange_port);
  return out;
}

std::vector<Violation> check_topology(const Topology& topology) {
  std::vector<Violation> out;
  const auto& ids = topology.node_ids();
  const auto& a = topology.adjacency();
  std::set<std::string> seen;
  for (const auto& id : ids) {
    if (!seen.insert(id).second) out.push_back({id, "topology", "duplicate id"});
  }
  if (a.size() != ids.size()) {
    out.push_back({"", "adjacency", "matrix size does not match node count"});
    return out;
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() != ids.size()) {
      out.push_back({ids[i], "adjacency", "row length does not match node count"});
      return out;
    }
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i][i] != 0) out.push_back({ids[i], "adjacency", "nonzero diagonal"});
    for (std::size_t j = 0; j < a.size(); ++j) {
      if (a[i][j] > 1) out.push_back({ids[i], "adjacency", "entries must be 0 or 1"});
      if (j > i && a[i][j] != a[j][i])
        out.push_back({ids[i], "adjacency", "asymmetric adjacency with " + ids[j]});
    }
  }
  return out;
}

std::vector<Violation> check_time_grid(const TimeGrid& grid) {
  std::vector<Violation> out;
  if (grid.horizon < 1) out.push_back({"", "time_grid.horizon_steps", "horizon must be >= 1"});
  if (grid.substeps() == 0)
    out.push_back({"", "time_grid.dt_track_h",
                   "dt_dispatch must be a positive integer multiple of dt_track"});
  return out;
}

std::vector<Violation> check_profile(const GerNode& node, const NodeProfile& p, int horizon) {
  std::vector<Violation> out;
  const auto steps = static_cast<std::size_t>(std::max(horizon, 0));
  auto add = [&](std::string field, std::string msg) {
    out.push_back({node.id, std::move(field), std::move(msg)});
  };
  auto check_series = [&](const char* name, const std::vector<double>& s) {
    if (s.size() != steps) {
      add(name, "series length " + std::to_string(s.size()) + " does not match horizon " +
                    std::to_string(steps));
    } else if (!finite_all(s)) {
      add(name, "non-finite value");
    }
  };
  if (p.ref_kw.size() != steps)
    add("ref", "series length " + std::to_string(p.ref_kw.size()) + " does not match horizon " +
                   std::to_string(steps));
  for (std::size_t k = 0; k < p.ref_kw.size(); ++k) {
    if (p.ref_kw[k].size() != node.ports.size()) {
      add("ref", "step " + std::to_string(k) + " has " + std::to_string(p.ref_kw[k].size()) +
                     " port references, expected " + std::to_string(node.ports.size()));
    } else if (!finite_all(p.ref_kw[k])) {
      add("ref", "non-finite value at step " + std::to_string(k));
    }
  }
  check_series("dpv", p.dpv_kw);
  check_series("dwt", p.dwt_kw);
  check_series("dload", p.dload_kw);
  check_series("pm", p.pm_kw);
  return out;
}

Network validate_network(std::vector<GerNode> nodes, Topology topology) {
  std::vector<Violation> out;
  std::set<std::string> ids;
  for (const auto& node : nodes) {
    if (!ids.insert(node.id).second) out.push_back({node.id, "id", "duplicate id"});
    auto v = check_node(node);
    out.insert(out.end(), v.begin(), v.end());
  }
  auto tv = check_topology(topology);
  out.insert(out.end(), tv.begin(), tv.end());
  const std::set<std::string> topo_ids(topology.node_ids().begin(), topology.node_ids().end());
  if (topo_ids != ids) out.push_back({"", "topology", "topology node set differs from node ids"});
  if (!out.empty()) throw ValidationError(std::move(out));
  return Network{std::move(nodes), std::move(topology)};
}

Network validate_network(Network network) {
  return validate_network(std::move(network.nodes), std::move(network.topology));
}

double u_layer_power(std::span<const double> dpv, std::span<const double> dwt, double dload,
                     std::span<const double> refs, BalanceConvention convention, double pm) {
  if (!finite_all(dpv) || !finite_all(dwt) || !finite_all(refs) || !std::isfinite(dload) ||
      !std::isfinite(pm)) {
    throw std::invalid_argument("u_layer_power: non-finite input");
  }
  const double variation = std::accumulate(dpv.begin(), dpv.end(), 0.0) +
                           std::accumulate(dwt.begin(), dwt.end(), 0.0) - dload;
  const double ref_sum = std::accumulate(refs.begin(), refs.end(), 0.0);
  const double sign = convention == BalanceConvention::corrected ? -1.0 : 1.0;
  return variation + sign * ref_sum + pm;
}

double u_layer_power(const NodeProfile& p, std::size_t k, BalanceConvention convention) {
  const double dpv = p.dpv_kw[k];
  const double dwt = p.dwt_kw[k];
  return u_layer_power(std::span(&dpv, 1), std::span(&dwt, 1), p.dload_kw[k], p.ref_kw[k],
                       convention, p.pm_kw[k]);
}

}  // namespace ger
