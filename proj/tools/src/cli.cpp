#include "cli.hpp"

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <ostream>

#include "ger/io.hpp"
#include "ger/sim.hpp"

namespace gersim {

namespace fs = std::filesystem;

namespace {

struct Invocation {
  std::string config;
  std::string reference;
  std::string out;
  std::string dir;
  std::optional<std::uint64_t> seed;
  bool no_fcs = false;
  bool no_shift = false;
  bool literal_balance = false;
  bool literal_shift_headroom = false;
  bool round_log = false;
};

std::string escape(const std::string& s) {
  std::string o;
  for (const char c : s) {
    if (c == '"' || c == '\\') o += '\\';
    if (c == '\n') {
      o += "\\n";
      continue;
    }
    o += c;
  }
  return o;
}

int fail(std::ostream& err, int code, const std::string& kind, const std::string& message,
         const std::vector<ger::Violation>& violations = {}, const std::string& field = "") {
  err << "error: " << message << "\n";
  err << "{\"code\":" << code << ",\"kind\":\"" << kind << "\"";
  if (!field.empty()) err << ",\"field\":\"" << escape(field) << "\"";
  err << ",\"message\":\"" << escape(message) << "\"";
  if (!violations.empty()) {
    err << ",\"violations\":[";
    for (std::size_t i = 0; i < violations.size(); ++i) {
      const auto& v = violations[i];
      err << (i ? "," : "") << "{\"node\":\"" << escape(v.node) << "\",\"field\":\"" << escape(v.field)
          << "\",\"message\":\"" << escape(v.message) << "\"}";
    }
    err << "]";
  }
  err << "}\n";
  return code;
}

fs::path out_dir(const Invocation& inv) {
  if (!inv.out.empty()) return inv.out;
  if (const char* env = std::getenv("GERSIM_OUT_DIR"); env && *env) return env;
  return "gersim_out";
}

ger::LoadedConfig load(const Invocation& inv) {
  auto cfg = ger::load_config(inv.config);
  auto& sim = cfg.sim;
  if (inv.seed) {
    sim.ga.seed = *inv.seed;
    if (sim.scenario) sim.scenario->seed = *inv.seed;
  }
  if (inv.no_fcs) sim.options.fcs_enabled = false;
  if (inv.no_shift) sim.options.shift_enabled = false;
  if (inv.literal_balance) sim.options.convention = ger::BalanceConvention::literal;
  if (inv.literal_shift_headroom) sim.options.shift.literal_max_headroom = true;
  if (inv.round_log) sim.options.record_rounds = true;
  return cfg;
}

int cmd_validate(const Invocation& inv, std::ostream& out) {
  const auto cfg = load(inv);
  const auto& net = cfg.sim.network;
  out << "ok: " << net.nodes.size() << " nodes, " << net.topology.edges().size() << " edges, "
      << cfg.sim.grid.horizon << " dispatch steps x " << cfg.sim.grid.substeps() << " tracking sub-steps\n";
  return ok;
}

int cmd_dispatch(const Invocation& inv, std::ostream& out, std::ostream& err) {
  const auto cfg = load(inv);
  const auto plans = ger::dispatch_all(cfg.sim);
  const auto text = ger::plans_to_json(plans, cfg.sim.network);
  const auto dir = out_dir(inv);
  fs::create_directories(dir);
  ger::write_file(dir / "plan.json", text);
  out << text;
  for (const auto& p : plans) {
    if (!p.feasible) return fail(err, infeasible, "infeasible", p.event);
  }
  return ok;
}

int cmd_simulate(const Invocation& inv, std::ostream& out) {
  const auto cfg = load(inv);
  const auto result = ger::run_simulation(cfg.sim);
  const auto dir = out_dir(inv);
  ger::write_trace(result, dir);
  ger::write_file(dir / "effective_config.json", ger::effective_config_json(cfg.sim));
  out << ger::report_summary(dir);
  return ok;
}

int cmd_track(const Invocation& inv, std::ostream& out) {
  const auto cfg = load(inv);
  const fs::path ref_path = !inv.reference.empty() ? fs::path(inv.reference) : cfg.reference;
  if (ref_path.empty()) throw ger::ConfigError("reference", "no reference file given (--reference or config key)");
  ger::TrackReference ref;
  try {
    ref = ger::load_reference(ref_path);
  } catch (const ger::ConfigError& e) {
    throw ger::ConfigError(ref_path.string() + ":" + e.field(), e.what());
  }
  const auto result = ger::run_tracking(ger::make_tracking_run(cfg, std::move(ref)));
  const auto dir = out_dir(inv);
  ger::write_trace(result, dir);
  ger::write_file(dir / "effective_config.json", ger::effective_config_json(cfg.sim));
  out << ger::report_summary(dir);
  return ok;
}

int cmd_flc_dump(const Invocation& inv, std::ostream& out) {
  ger::TrackingConfig t;
  if (!inv.config.empty()) t = load(inv).sim.tracking;
  const ger::FuzzyTracker tracker(t.e_bd_kwh, t.p_cn_kw);
  const auto text = ger::flc_to_json(tracker);
  if (!inv.out.empty() || std::getenv("GERSIM_OUT_DIR")) {
    const auto dir = out_dir(inv);
    fs::create_directories(dir);
    ger::write_file(dir / "flc.json", text);
  }
  out << text;
  return ok;
}

int cmd_report(const Invocation& inv, std::ostream& out) {
  const fs::path dir = !inv.dir.empty() ? fs::path(inv.dir) : out_dir(inv);
  out << ger::report_summary(dir);
  return ok;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Grid energy router dispatch and tracking simulator", "gersim"};
  app.require_subcommand(1, 1);
  Invocation inv;

  auto common = [&](CLI::App* sub, bool need_config) {
    auto* c = sub->add_option("-c,--config", inv.config, "JSON config file");
    if (need_config) c->required();
    sub->add_option("-o,--out", inv.out, "output directory (default $GERSIM_OUT_DIR, else ./gersim_out)");
    sub->add_option("--seed", inv.seed, "override the config seed");
    sub->add_flag("--no-fcs", inv.no_fcs, "disable compensation sharing");
    sub->add_flag("--no-shift", inv.no_shift, "disable the buffer reference shift");
    sub->add_flag("--literal-balance", inv.literal_balance, "add port references to the U-layer balance instead of subtracting them");
    sub->add_flag("--literal-shift-headroom", inv.literal_shift_headroom, "max-bound shift headroom measured at the touch step instead of the lowest point before it");
  };

  auto* validate = app.add_subcommand("validate", "check a config and report every violation");
  common(validate, true);
  auto* dispatch = app.add_subcommand("dispatch", "single-window dispatch plan and reference shift per node");
  common(dispatch, true);
  auto* track = app.add_subcommand("track", "tracking-only run against a fixed reference");
  common(track, true);
  track->add_option("-r,--reference", inv.reference, "reference JSON (default: config key `reference`)");
  track->add_flag("--round-log", inv.round_log, "write every exchange message to rounds.jsonl");
  auto* simulate = app.add_subcommand("simulate", "closed-loop dispatch, tracking and sharing");
  common(simulate, true);
  simulate->add_flag("--round-log", inv.round_log, "write every exchange message to rounds.jsonl");
  auto* flc = app.add_subcommand("flc-dump", "rule base and membership breakpoints as JSON");
  common(flc, false);
  auto* report = app.add_subcommand("report", "summary of an existing trace directory");
  report->add_option("dir", inv.dir, "trace directory (default: output directory)");
  report->add_option("-o,--out", inv.out, "trace directory");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return ok;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return ok;
  } catch (const CLI::ParseError& e) {
    return fail(err, usage, "usage", e.what());
  }

  try {
    if (validate->parsed()) return cmd_validate(inv, out);
    if (dispatch->parsed()) return cmd_dispatch(inv, out, err);
    if (track->parsed()) return cmd_track(inv, out);
    if (simulate->parsed()) return cmd_simulate(inv, out);
    if (flc->parsed()) return cmd_flc_dump(inv, out);
    if (report->parsed()) return cmd_report(inv, out);
  } catch (const ger::ValidationError& e) {
    return fail(err, config_error, "validation", e.what(), e.violations());
  } catch (const ger::ConfigError& e) {
    return fail(err, config_error, "config", e.what(), {}, e.field());
  } catch (const ger::InfeasibleDispatch& e) {
    return fail(err, infeasible, "infeasible", e.what());
  } catch (const std::exception& e) {
    return fail(err, internal, "internal", e.what());
  }
  return fail(err, usage, "usage", "no subcommand");
}

}  // namespace gersim
