#include "ger/io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ger/format.hpp"

namespace ger {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

ConfigError::ConfigError(std::string field, const std::string& message)
    : std::runtime_error(field + ": " + message), field_(std::move(field)) {}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string(), "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

namespace {

// Typed access with dotted-path error messages; rejects keys it was not asked about.
class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const {
    seen_.insert(key);
    return j_.contains(key);
  }
  const json& raw(const std::string& key) const {
    if (!has(key)) throw ConfigError(at(key), "missing");
    return j_.at(key);
  }

  double num(const std::string& key) const { return as_num(raw(key), at(key)); }
  double num(const std::string& key, double fallback) const { return has(key) ? num(key) : fallback; }
  int integer(const std::string& key) const {
    const auto& v = raw(key);
    if (!v.is_number_integer()) throw ConfigError(at(key), "expected an integer");
    return v.get<int>();
  }
  int integer(const std::string& key, int fallback) const { return has(key) ? integer(key) : fallback; }
  bool flag(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError(at(key), "expected true or false");
    return v.get<bool>();
  }
  std::string str(const std::string& key) const {
    const auto& v = raw(key);
    if (!v.is_string()) throw ConfigError(at(key), "expected a string");
    return v.get<std::string>();
  }
  std::string str(const std::string& key, std::string fallback) const {
    return has(key) ? str(key) : fallback;
  }
  std::vector<double> nums(const std::string& key) const {
    const auto& v = raw(key);
    if (!v.is_array()) throw ConfigError(at(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_num(v[i], at(key) + "[" + std::to_string(i) + "]"));
    return out;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(at(it.key()), "unknown key");
    }
  }

  static double as_num(const json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError(path, "expected a number");
    return v.get<double>();
  }

 private:
  const json& j_;
  std::string path_;
  mutable std::set<std::string> seen_;
};

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(what, std::string("invalid JSON: ") + e.what());
  }
}

std::string idx(const std::string& base, std::size_t i) { return base + "[" + std::to_string(i) + "]"; }

Role parse_role(const std::string& s, const std::string& path) {
  if (s == "master") return Role::master;
  if (s == "slave") return Role::slave;
  throw ConfigError(path, "expected \"master\" or \"slave\"");
}

Distribution parse_distribution(const json& j, const std::string& path) {
  Obj o(j, path);
  const std::string kind = o.str("kind");
  Distribution d;
  if (kind == "none") {
  } else if (kind == "gaussian") {
    d = Distribution::gaussian(o.num("mean_kw", 0.0), o.num("stddev_kw"));
  } else if (kind == "beta") {
    d = Distribution::beta(o.num("shape_a", 2.0), o.num("shape_b", 2.0), o.num("span_kw"), o.num("offset_kw", 0.0));
  } else {
    throw ConfigError(o.at("kind"), "expected none, gaussian or beta");
  }
  o.finish();
  return d;
}

ojson distribution_json(const Distribution& d) {
  ojson j;
  j["kind"] = to_string(d.kind);
  if (d.kind == Distribution::Kind::gaussian) {
    j["mean_kw"] = d.mean_kw;
    j["stddev_kw"] = d.stddev_kw;
  } else if (d.kind == Distribution::Kind::beta) {
    j["shape_a"] = d.shape_a;
    j["shape_b"] = d.shape_b;
    j["span_kw"] = d.span_kw;
    j["offset_kw"] = d.offset_kw;
  }
  return j;
}

NodeProfile parse_inline_profile(const json& j, const GerNode& node, const std::string& path) {
  Obj o(j, path);
  NodeProfile p;
  const auto& refs = o.raw("ref_kw");
  if (!refs.is_array()) throw ConfigError(o.at("ref_kw"), "expected an array of per-step port arrays");
  for (std::size_t k = 0; k < refs.size(); ++k) {
    const auto& row = refs[k];
    const std::string rp = idx(o.at("ref_kw"), k);
    if (!row.is_array() || row.size() != node.ports.size())
      throw ConfigError(rp, "expected " + std::to_string(node.ports.size()) + " port values");
    std::vector<double> r;
    for (std::size_t i = 0; i < row.size(); ++i) r.push_back(Obj::as_num(row[i], idx(rp, i)));
    p.ref_kw.push_back(std::move(r));
  }
  const std::size_t n = p.ref_kw.size();
  auto series = [&](const std::string& key) {
    if (!o.has(key)) return std::vector<double>(n, 0.0);
    return o.nums(key);
  };
  p.dpv_kw = series("dpv_kw");
  p.dwt_kw = series("dwt_kw");
  p.dload_kw = series("dload_kw");
  p.pm_kw = series("pm_kw");
  o.finish();
  return p;
}

ojson profile_json(const NodeProfile& p) {
  ojson j;
  j["ref_kw"] = p.ref_kw;
  j["dpv_kw"] = p.dpv_kw;
  j["dwt_kw"] = p.dwt_kw;
  j["dload_kw"] = p.dload_kw;
  j["pm_kw"] = p.pm_kw;
  return j;
}

GerNode parse_node(const json& j, const std::string& path) {
  Obj o(j, path);
  const std::string id = o.str("id");
  const Role role = parse_role(o.str("role", "master"), o.at("role"));
  const auto& ports_j = o.raw("ports");
  if (!ports_j.is_array()) throw ConfigError(o.at("ports"), "expected an array");
  std::vector<RouterPort> ports;
  for (std::size_t i = 0; i < ports_j.size(); ++i) {
    Obj p(ports_j[i], idx(o.at("ports"), i));
    ports.push_back({p.str("id"), p.num("p_rate_kw"), p.num("alpha"), 0.0});
    p.finish();
  }
  Obj b(o.raw("buffer"), o.at("buffer"));
  BufferSpec buffer{b.num("e_min_kwh"), b.num("e_max_kwh"), b.num("p_rate_kw"),
                    b.num("eta_ch", 1.0), b.num("eta_dis", 1.0), b.num("e_init_kwh")};
  b.finish();
  GerNode node = make_node(id, role, std::move(ports), buffer);
  node.exchange_port = o.str("exchange_port", "");
  o.has("profile");
  o.finish();
  return node;
}

Topology parse_topology(const json& j, const std::vector<std::string>& ids) {
  Obj o(j, "topology");
  if (o.has("edges") == o.has("adjacency"))
    throw ConfigError("topology", "give exactly one of `edges` or `adjacency`");
  if (o.has("edges")) {
    const auto& e = o.raw("edges");
    if (!e.is_array()) throw ConfigError("topology.edges", "expected an array of id pairs");
    std::vector<std::pair<std::string, std::string>> edges;
    for (std::size_t i = 0; i < e.size(); ++i) {
      const auto& pair = e[i];
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() || !pair[1].is_string())
        throw ConfigError(idx("topology.edges", i), "expected [\"a\", \"b\"]");
      edges.emplace_back(pair[0].get<std::string>(), pair[1].get<std::string>());
    }
    o.finish();
    try {
      return Topology::from_edges(ids, edges);
    } catch (const std::invalid_argument& ex) {
      throw ConfigError("topology.edges", ex.what());
    }
  }
  const auto& a = o.raw("adjacency");
  if (!a.is_array() || a.size() != ids.size())
    throw ConfigError("topology.adjacency", "expected a " + std::to_string(ids.size()) + "x" +
                                                std::to_string(ids.size()) + " matrix");
  std::vector<std::vector<std::uint8_t>> m;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_array() || a[i].size() != ids.size())
      throw ConfigError(idx("topology.adjacency", i), "row length differs from the node count");
    std::vector<std::uint8_t> row;
    for (std::size_t k = 0; k < a[i].size(); ++k) {
      const auto& v = a[i][k];
      if (!v.is_number_integer() || (v.get<int>() != 0 && v.get<int>() != 1))
        throw ConfigError(idx(idx("topology.adjacency", i), k), "expected 0 or 1");
      row.push_back(static_cast<std::uint8_t>(v.get<int>()));
    }
    m.push_back(std::move(row));
  }
  o.finish();
  return Topology(ids, std::move(m));
}

GaConfig parse_ga(const json& j, std::uint64_t seed) {
  Obj o(j, "ga");
  GaConfig g;
  g.population = o.integer("population", g.population);
  g.generations = o.integer("generations", g.generations);
  g.crossover_rate = o.num("crossover_rate", g.crossover_rate);
  g.mutation_rate = o.num("mutation_rate", g.mutation_rate);
  g.mutation_scale = o.num("mutation_scale", g.mutation_scale);
  g.elitism = o.integer("elitism", g.elitism);
  g.tolerance = o.num("tolerance", g.tolerance);
  g.stall_generations = o.integer("stall_generations", g.stall_generations);
  g.blend_extension = o.num("blend_extension", g.blend_extension);
  g.seed = seed;
  o.finish();
  try {
    check_ga_config(g);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("ga", e.what());
  }
  return g;
}

StochasticSpec parse_scenario(const json& j, const Network& net, std::uint64_t seed) {
  Obj o(j, "scenario");
  const std::string mode = o.str("mode", "default");
  if (mode != "default" && mode != "gaussian" && mode != "explicit")
    throw ConfigError("scenario.mode", "expected default, gaussian or explicit");
  StochasticSpec spec;
  spec.seed = seed;
  for (const auto& node : net.nodes) {
    spec.node_ids.push_back(node.id);
    spec.sources.push_back(mode == "gaussian" ? gaussian_sources(node) : mode == "default" ? default_sources(node)
                                                                                           : SourceSpec{});
  }
  if (o.has("nodes")) {
    Obj nodes(o.raw("nodes"), "scenario.nodes");
    for (std::size_t i = 0; i < net.nodes.size(); ++i) {
      if (!nodes.has(net.nodes[i].id)) continue;
      Obj s(nodes.raw(net.nodes[i].id), nodes.at(net.nodes[i].id));
      auto& src = spec.sources[i];
      if (s.has("pv")) src.pv = parse_distribution(s.raw("pv"), s.at("pv"));
      if (s.has("wind")) src.wind = parse_distribution(s.raw("wind"), s.at("wind"));
      if (s.has("load")) src.load = parse_distribution(s.raw("load"), s.at("load"));
      s.finish();
    }
    nodes.finish();
  }
  o.finish();
  return spec;
}

}  // namespace

LoadedConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  const json root = parse_json(text, "config");
  Obj o(root, "");
  LoadedConfig out;
  auto& cfg = out.sim;

  const auto seed_raw = o.has("seed") ? o.raw("seed") : json(1);
  if (!seed_raw.is_number_unsigned() && !(seed_raw.is_number_integer() && seed_raw.get<long long>() >= 0))
    throw ConfigError("seed", "expected a non-negative integer");
  const auto seed = seed_raw.get<std::uint64_t>();

  Obj g(o.raw("time_grid"), "time_grid");
  cfg.grid.dt_dispatch_h = g.num("dt_dispatch_h", cfg.grid.dt_dispatch_h);
  cfg.grid.dt_track_h = g.num("dt_track_h", cfg.grid.dt_track_h);
  cfg.grid.horizon = g.integer("horizon_steps");
  g.finish();

  const auto& nodes_j = o.raw("nodes");
  if (!nodes_j.is_array() || nodes_j.empty()) throw ConfigError("nodes", "expected a non-empty array");
  std::vector<GerNode> nodes;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < nodes_j.size(); ++i) {
    nodes.push_back(parse_node(nodes_j[i], idx("nodes", i)));
    ids.push_back(nodes.back().id);
  }
  Topology topo = o.has("topology") ? parse_topology(o.raw("topology"), ids)
                                    : Topology::from_edges(ids, {});
  cfg.network.nodes = nodes;
  cfg.network.topology = topo;

  for (std::size_t i = 0; i < nodes_j.size(); ++i) {
    const std::string path = idx("nodes", i) + ".profile";
    const auto& node = nodes[i];
    if (!nodes_j[i].contains("profile")) {
      // No schedule: zero references and variations over the horizon.
      NodeProfile p;
      const auto h = static_cast<std::size_t>(std::max(cfg.grid.horizon, 0));
      p.ref_kw.assign(h, std::vector<double>(node.ports.size(), 0.0));
      p.dpv_kw = p.dwt_kw = p.dload_kw = p.pm_kw = std::vector<double>(h, 0.0);
      cfg.profiles.push_back(std::move(p));
      continue;
    }
    const auto& pj = nodes_j[i]["profile"];
    if (pj.is_string()) {
      const auto file = base_dir / pj.get<std::string>();
      try {
        cfg.profiles.push_back(load_profiles(file, node, cfg.grid.horizon));
      } catch (const ProfileError& e) {
        throw ConfigError(path, e.what());
      }
    } else {
      cfg.profiles.push_back(parse_inline_profile(pj, node, path));
    }
  }

  cfg.ga = o.has("ga") ? parse_ga(o.raw("ga"), seed) : parse_ga(json::object(), seed);
  if (o.has("scenario")) cfg.scenario = parse_scenario(o.raw("scenario"), cfg.network, seed);

  if (o.has("tracking")) {
    Obj t(o.raw("tracking"), "tracking");
    cfg.tracking.e_bd_kwh = t.num("e_bd_kwh", cfg.tracking.e_bd_kwh);
    cfg.tracking.p_cn_kw = t.num("p_cn_kw", cfg.tracking.p_cn_kw);
    t.finish();
  }
  if (o.has("options")) {
    Obj p(o.raw("options"), "options");
    cfg.options.fcs_enabled = p.flag("fcs_enabled", true);
    cfg.options.shift_enabled = p.flag("shift_enabled", true);
    cfg.options.convention = p.flag("literal_balance", false) ? BalanceConvention::literal : BalanceConvention::corrected;
    cfg.options.shift.literal_max_headroom = p.flag("literal_shift_headroom", false);
    p.finish();
  }
  if (o.has("reference")) out.reference = base_dir / o.str("reference");
  o.finish();

  if (auto v = check_config(cfg); !v.empty()) throw ValidationError(std::move(v));
  return out;
}

LoadedConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_file(path), path.parent_path());
}

std::string effective_config_json(const SimulationConfig& cfg) {
  ojson root;
  root["seed"] = cfg.ga.seed;
  root["time_grid"] = {{"dt_dispatch_h", cfg.grid.dt_dispatch_h},
                       {"dt_track_h", cfg.grid.dt_track_h},
                       {"horizon_steps", cfg.grid.horizon}};
  ojson nodes = ojson::array();
  for (std::size_t i = 0; i < cfg.network.nodes.size(); ++i) {
    const auto& n = cfg.network.nodes[i];
    ojson j;
    j["id"] = n.id;
    j["role"] = to_string(n.role);
    if (!n.exchange_port.empty()) j["exchange_port"] = n.exchange_port;
    ojson ports = ojson::array();
    for (const auto& p : n.ports) ports.push_back({{"id", p.id}, {"p_rate_kw", p.p_rate_kw}, {"alpha", p.alpha}});
    j["ports"] = ports;
    const auto& b = n.buffer;
    j["buffer"] = {{"e_min_kwh", b.e_min_kwh}, {"e_max_kwh", b.e_max_kwh}, {"p_rate_kw", b.p_rate_kw},
                   {"eta_ch", b.eta_ch},       {"eta_dis", b.eta_dis},     {"e_init_kwh", b.e_init_kwh}};
    j["profile"] = profile_json(cfg.profiles[i]);
    nodes.push_back(std::move(j));
  }
  root["nodes"] = nodes;
  ojson edges = ojson::array();
  const auto& ids = cfg.network.topology.node_ids();
  for (const auto& [a, b] : cfg.network.topology.edges()) edges.push_back({ids[a], ids[b]});
  root["topology"] = {{"edges", edges}};
  const auto& g = cfg.ga;
  root["ga"] = {{"population", g.population},         {"generations", g.generations},
                {"crossover_rate", g.crossover_rate}, {"mutation_rate", g.mutation_rate},
                {"mutation_scale", g.mutation_scale}, {"elitism", g.elitism},
                {"tolerance", g.tolerance},           {"stall_generations", g.stall_generations},
                {"blend_extension", g.blend_extension}};
  if (cfg.scenario) {
    ojson per_node = ojson::object();
    for (std::size_t i = 0; i < cfg.scenario->node_ids.size(); ++i) {
      const auto& s = cfg.scenario->sources[i];
      per_node[cfg.scenario->node_ids[i]] = {{"pv", distribution_json(s.pv)},
                                             {"wind", distribution_json(s.wind)},
                                             {"load", distribution_json(s.load)}};
    }
    root["scenario"] = {{"mode", "explicit"}, {"nodes", per_node}};
  }
  root["tracking"] = {{"e_bd_kwh", cfg.tracking.e_bd_kwh}, {"p_cn_kw", cfg.tracking.p_cn_kw}};
  root["options"] = {{"fcs_enabled", cfg.options.fcs_enabled},
                     {"shift_enabled", cfg.options.shift_enabled},
                     {"literal_balance", cfg.options.convention == BalanceConvention::literal},
                     {"literal_shift_headroom", cfg.options.shift.literal_max_headroom}};
  return root.dump(2) + "\n";
}

TrackReference parse_reference(const std::string& text) {
  const json root = parse_json(text, "reference");
  Obj o(root, "");
  TrackReference ref;
  ref.horizon_steps = o.integer("horizon_steps");
  const auto& nodes = o.raw("nodes");
  if (!nodes.is_array()) throw ConfigError("nodes", "expected an array");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    Obj n(nodes[i], idx("nodes", i));
    NodeReference r;
    r.id = n.str("id");
    r.e_init_kwh = n.num("e_init_kwh");
    r.me_ref_kwh = n.nums("me_ref_kwh");
    r.buffer_plan_kw = n.has("buffer_plan_kw") ? n.nums("buffer_plan_kw") : std::vector<double>(r.me_ref_kwh.size(), 0.0);
    if (n.has("t_a") && !n.raw("t_a").is_null()) r.t_a = n.integer("t_a");
    if (n.has("port_power_kw")) r.port_power_kw = n.nums("port_power_kw");
    n.finish();
    ref.nodes.push_back(std::move(r));
  }
  o.finish();
  return ref;
}

TrackReference load_reference(const std::filesystem::path& path) { return parse_reference(read_file(path)); }

std::string reference_to_json(const TrackReference& ref) {
  ojson root;
  root["horizon_steps"] = ref.horizon_steps;
  ojson nodes = ojson::array();
  for (const auto& r : ref.nodes) {
    ojson j;
    j["id"] = r.id;
    j["e_init_kwh"] = r.e_init_kwh;
    j["me_ref_kwh"] = r.me_ref_kwh;
    j["buffer_plan_kw"] = r.buffer_plan_kw;
    j["t_a"] = r.t_a ? ojson(*r.t_a) : ojson(nullptr);
    j["port_power_kw"] = r.port_power_kw;
    nodes.push_back(std::move(j));
  }
  root["nodes"] = nodes;
  return root.dump(2) + "\n";
}

TrackingRun make_tracking_run(const LoadedConfig& cfg, TrackReference reference) {
  TrackingRun run;
  run.network = cfg.sim.network;
  // Missing scheduled port powers default to zero.
  for (std::size_t i = 0; i < reference.nodes.size() && i < run.network.nodes.size(); ++i) {
    auto& r = reference.nodes[i];
    if (r.port_power_kw.empty()) r.port_power_kw.assign(run.network.nodes[i].ports.size(), 0.0);
  }
  run.reference = std::move(reference);
  run.dt_track_h = cfg.sim.grid.dt_track_h;
  run.scenario = cfg.sim.scenario;
  run.tracking = cfg.sim.tracking;
  run.options = cfg.sim.options;
  if (auto v = check_reference(run.reference, run.network); !v.empty()) throw ValidationError(std::move(v));
  return run;
}

std::vector<WindowRecord> dispatch_all(const SimulationConfig& cfg) {
  std::vector<WindowRecord> out;
  for (std::size_t i = 0; i < cfg.network.nodes.size(); ++i)
    out.push_back(dispatch_window(cfg, 0, i, cfg.network.nodes[i].buffer.e_init_kwh));
  return out;
}

namespace {

ojson opt_int(const std::optional<int>& v) { return v ? ojson(*v) : ojson(nullptr); }

}  // namespace

std::string plans_to_json(const std::vector<WindowRecord>& plans, const Network& network) {
  ojson nodes = ojson::array();
  for (std::size_t i = 0; i < plans.size(); ++i) {
    const auto& rec = plans[i];
    const auto& node = network.nodes[i];
    ojson j;
    j["id"] = node.id;
    j["role"] = to_string(node.role);
    j["feasible"] = rec.feasible;
    if (!rec.feasible) j["event"] = rec.event;
    j["objective"] = rec.plan.objective;
    j["e_init_kwh"] = rec.plan.e_init_kwh;
    j["buffer_power_kw"] = rec.plan.buffer_power;
    j["buffer_energy_kwh"] = rec.plan.buffer_energy;
    j["u_power_kw"] = rec.plan.u_power;
    ojson ports = ojson::array();
    for (std::size_t p = 0; p < node.ports.size(); ++p) {
      std::vector<double> power;
      std::vector<double> ref;
      std::vector<double> pen;
      for (std::size_t k = 0; k < rec.plan.steps(); ++k) {
        power.push_back(rec.plan.port_power[k][p]);
        ref.push_back(rec.plan.ref_power[k][p]);
        pen.push_back(rec.plan.penalty[k][p]);
      }
      ports.push_back({{"id", node.ports[p].id},
                       {"power_kw", power},
                       {"ref_kw", ref},
                       {"penalty_kw", pen},
                       {"uc", rec.uc.size() > p ? rec.uc[p] : 0.0}});
    }
    j["ports"] = ports;
    j["shift"] = {{"t_a", opt_int(rec.shift.t_a)},   {"t_b", opt_int(rec.shift.t_b)},
                  {"side", to_string(rec.shift.side)}, {"de_res_kwh", rec.shift.de_res},
                  {"de_sh_kwh", rec.shift.de_sh},     {"me_ref_kwh", rec.shift.me_ref}};
    nodes.push_back(std::move(j));
  }
  ojson root;
  root["nodes"] = nodes;
  return root.dump(2) + "\n";
}

std::string flc_to_json(const FuzzyTracker& tracker) {
  auto variable = [](const FuzzyVariable& v) {
    ojson sets = ojson::array();
    for (const auto& s : v.subsets) sets.push_back({{"label", s.label}, {"breakpoints", {s.a, s.b, s.c, s.d}}});
    return ojson{{"name", v.name},
                 {"basic_domain", {v.basic_lo, v.basic_hi}},
                 {"fuzzy_domain", {v.fuzzy_lo, v.fuzzy_hi}},
                 {"sets", sets}};
  };
  ojson rules = ojson::array();
  const auto& out = tracker.output().subsets;
  for (std::size_t r = 0; r < 5; ++r) {
    ojson row = ojson::object();
    row["m_a"] = tracker.urgency().subsets[r].label;
    ojson then = ojson::object();
    for (std::size_t c = 0; c < 5; ++c)
      then[tracker.deviation().subsets[c].label] = out[static_cast<std::size_t>(tracker.rules().table[r][c])].label;
    row["de_ref"] = then;
    rules.push_back(row);
  }
  ojson root;
  root["inference"] = "max-min";
  root["defuzzification"] = "centroid";
  root["samples"] = FuzzyTracker::kSamples;
  root["inputs"] = {variable(tracker.deviation()), variable(tracker.urgency())};
  root["output"] = variable(tracker.output());
  root["rules"] = rules;
  return root.dump(2) + "\n";
}

std::string metrics_to_json(const Metrics& m, const std::vector<std::string>& events) {
  ojson nodes = ojson::array();
  for (const auto& n : m.nodes) {
    ojson j;
    j["id"] = n.id;
    j["mean_abs_deviation_kwh"] = n.mean_abs_deviation_kwh;
    j["max_abs_deviation_kwh"] = n.max_abs_deviation_kwh;
    j["baseline_mean_abs_deviation_kwh"] =
        n.baseline_mean_abs_deviation_kwh ? ojson(*n.baseline_mean_abs_deviation_kwh) : ojson(nullptr);
    j["baseline_max_abs_deviation_kwh"] =
        n.baseline_max_abs_deviation_kwh ? ojson(*n.baseline_max_abs_deviation_kwh) : ojson(nullptr);
    j["uc"] = n.uc;
    j["uc_realized"] = n.uc_realized;
    j["sent_kwh"] = n.sent_kwh;
    j["received_kwh"] = n.received_kwh;
    j["unserved_kwh"] = n.unserved_kwh;
    nodes.push_back(std::move(j));
  }
  ojson root;
  root["mean_abs_deviation_kwh"] = m.mean_abs_deviation_kwh;
  root["baseline_mean_abs_deviation_kwh"] =
      m.baseline_mean_abs_deviation_kwh ? ojson(*m.baseline_mean_abs_deviation_kwh) : ojson(nullptr);
  root["total_shared_kwh"] = m.total_shared_kwh;
  root["constraint_violations"] = m.constraint_violations;
  root["infeasible_windows"] = m.infeasible_windows;
  root["events"] = events;
  root["nodes"] = nodes;
  return root.dump(2) + "\n";
}

namespace {

std::string opt_str(const std::optional<int>& v) { return v ? std::to_string(*v) : ""; }

}  // namespace

void write_trace(const SimulationResult& result, const std::filesystem::path& dir) {
  const auto& tr = result.trace;
  std::filesystem::create_directories(dir);
  const auto f = [](double x) { return format_double(x); };

  std::string tracking =
      "step,node,e_b_kwh,me_ref_kwh,de_ref_kwh,deviation_kwh,m_a,np_c_kw,p_c_kw,mp_c_kw,variation_kw,"
      "buffer_plan_kw,buffer_power_kw,unserved_kw\n";
  std::string ports = "step,node,port,power_kw,ref_kw,penalty_kw\n";
  for (std::size_t t = 0; t < tr.steps.size(); ++t) {
    for (std::size_t i = 0; i < tr.steps[t].size(); ++i) {
      const auto& r = tr.steps[t][i];
      tracking += std::to_string(t) + "," + tr.node_ids[i] + "," + f(r.e_b_kwh) + "," + f(r.me_ref_kwh) + "," +
                  f(r.de_ref_kwh) + "," + f(r.deviation_kwh) + "," + f(r.m_a) + "," + f(r.np_c_kw) + "," +
                  f(r.p_c_kw) + "," + f(r.mp_c_kw) + "," + f(r.variation_kw) + "," + f(r.buffer_plan_kw) + "," +
                  f(r.buffer_power_kw) + "," + f(r.unserved_kw) + "\n";
      for (std::size_t p = 0; p < r.port_power_kw.size(); ++p) {
        ports += std::to_string(t) + "," + tr.node_ids[i] + "," + tr.port_ids[i][p] + "," + f(r.port_power_kw[p]) +
                 "," + f(r.port_ref_kw[p]) + "," + f(r.port_penalty_kw[p]) + "\n";
      }
    }
  }

  std::string windows = "window,node,feasible,objective,t_a,t_b,side,de_res_kwh,de_sh_kwh\n";
  std::string dispatch = "window,node,k,buffer_power_kw,buffer_energy_kwh,me_ref_kwh\n";
  std::string uc = "window,node,port,uc\n";
  for (std::size_t w = 0; w < tr.windows.size(); ++w) {
    for (std::size_t i = 0; i < tr.windows[w].size(); ++i) {
      const auto& rec = tr.windows[w][i];
      const std::string head = std::to_string(w) + "," + tr.node_ids[i] + ",";
      windows += head + (rec.feasible ? "1," : "0,") + f(rec.plan.objective) + "," + opt_str(rec.shift.t_a) + "," +
                 opt_str(rec.shift.t_b) + "," + to_string(rec.shift.side) + "," + f(rec.shift.de_res) + "," +
                 f(rec.shift.de_sh) + "\n";
      for (std::size_t k = 0; k < rec.plan.steps(); ++k) {
        dispatch += head + std::to_string(k) + "," + f(rec.plan.buffer_power[k]) + "," +
                    f(rec.plan.buffer_energy[k]) + "," +
                    f(k < rec.shift.me_ref.size() ? rec.shift.me_ref[k] : rec.plan.buffer_energy[k]) + "\n";
      }
      for (std::size_t p = 0; p < rec.uc.size(); ++p) uc += head + tr.port_ids[i][p] + "," + f(rec.uc[p]) + "\n";
    }
  }

  std::string transfers = "step,from,to,kw\n";
  for (std::size_t t = 0; t < tr.transfers.size(); ++t) {
    for (const auto& x : tr.transfers[t])
      transfers += std::to_string(t) + "," + tr.node_ids[x.from] + "," + tr.node_ids[x.to] + "," + f(x.kw) + "\n";
  }

  write_file(dir / "tracking.csv", tracking);
  write_file(dir / "ports.csv", ports);
  write_file(dir / "windows.csv", windows);
  write_file(dir / "dispatch.csv", dispatch);
  write_file(dir / "uc.csv", uc);
  write_file(dir / "transfers.csv", transfers);
  write_file(dir / "metrics.json", metrics_to_json(result.metrics, tr.events));
  if (!tr.rounds.empty()) {
    std::string rounds;
    for (std::size_t t = 0; t < tr.rounds.size(); ++t) rounds += to_jsonl(tr.rounds[t], tr.node_ids, static_cast<long>(t));
    write_file(dir / "rounds.jsonl", rounds);
  }
}

std::string report_summary(const std::filesystem::path& dir) {
  const auto path = dir / "metrics.json";
  if (!std::filesystem::exists(path)) throw ConfigError(path.string(), "no metrics.json in trace directory");
  const json m = parse_json(read_file(path), path.string());
  std::ostringstream out;
  auto num = [](const json& v) { return v.is_null() ? std::string("n/a") : format_double(v.get<double>()); };
  try {
    out << "trace: " << dir.string() << "\n";
    out << "mean |dE_ref| (kWh): " << num(m.at("mean_abs_deviation_kwh"))
        << "   without sharing: " << num(m.at("baseline_mean_abs_deviation_kwh")) << "\n";
    out << "shared energy (kWh): " << num(m.at("total_shared_kwh")) << "\n";
    out << "constraint violations: " << m.at("constraint_violations").get<int>()
        << "   infeasible windows: " << m.at("infeasible_windows").get<int>() << "\n";
    out << "\nnode        mean|dE|    max|dE|     sent      recv      unserved  UC per port\n";
    for (const auto& n : m.at("nodes")) {
      std::string id = n.at("id").get<std::string>();
      id.resize(std::max<std::size_t>(id.size(), 10), ' ');
      out << id << "  ";
      for (const char* key : {"mean_abs_deviation_kwh", "max_abs_deviation_kwh", "sent_kwh", "received_kwh",
                              "unserved_kwh"}) {
        std::string v = num(n.at(key));
        if (v.size() > 9) v = v.substr(0, 9);
        v.resize(10, ' ');
        out << v;
      }
      std::string ucs;
      for (const auto& u : n.at("uc")) ucs += (ucs.empty() ? "" : " ") + num(u);
      out << ucs << "\n";
    }
    for (const auto& e : m.at("events")) out << "event: " << e.get<std::string>() << "\n";
  } catch (const json::exception& e) {
    throw ConfigError(path.string(), std::string("unexpected layout: ") + e.what());
  }
  return out.str();
}

}  // namespace ger
