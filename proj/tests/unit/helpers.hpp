#pragma once

#include <string>
#include <vector>

#include "ger/network.hpp"

namespace ger::test {

inline BufferSpec twoport_buffer(double e_init = 37.0) { return {10.0, 40.0, 80.0, 0.9, 0.9, e_init}; }

// Two-port master used by the sub-case fixtures: port2 alpha 0.2, port3 alpha 0.05.
inline GerNode twoport_node(double e_init = 37.0, Role role = Role::master) {
  return make_node("G1", role, {{"port2", 160.0, 0.2, 0.0}, {"port3", 160.0, 0.05, 0.0}}, twoport_buffer(e_init));
}

inline NodeProfile flat_profile(std::size_t steps, std::vector<double> refs, double variation = 0.0) {
  NodeProfile p;
  p.ref_kw.assign(steps, refs);
  p.dpv_kw.assign(steps, variation > 0.0 ? variation : 0.0);
  p.dwt_kw.assign(steps, 0.0);
  p.dload_kw.assign(steps, variation < 0.0 ? -variation : 0.0);
  p.pm_kw.assign(steps, 0.0);
  return p;
}

inline std::string data_path(const std::string& rel) { return std::string(GER_TEST_DATA_DIR) + "/" + rel; }

}  // namespace ger::test
