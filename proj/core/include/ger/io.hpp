#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "ger/dispatch.hpp"
#include "ger/flc.hpp"
#include "ger/sim.hpp"

namespace ger {

/// Malformed or missing config entry; `field` is a dotted path such as
/// `nodes[1].buffer.e_max_kwh`.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message);
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Everything a config file describes. `reference` is only used by tracking-only runs.
struct LoadedConfig {
  SimulationConfig sim;
  std::filesystem::path reference;  // resolved path, empty when absent
};

/// Parses a JSON config. Relative profile and reference paths resolve against base_dir.
LoadedConfig parse_config(const std::string& text, const std::filesystem::path& base_dir);
LoadedConfig load_config(const std::filesystem::path& path);

/// Fully explicit config (inline profiles and scenario) that parses back to the same run.
std::string effective_config_json(const SimulationConfig& cfg);

TrackReference parse_reference(const std::string& text);
TrackReference load_reference(const std::filesystem::path& path);
std::string reference_to_json(const TrackReference& ref);

/// Tracking-only run assembled from a config and a fixed reference.
TrackingRun make_tracking_run(const LoadedConfig& cfg, TrackReference reference);

/// First dispatch window of every node from its configured initial energy,
/// exactly as the closed loop computes it.
std::vector<WindowRecord> dispatch_all(const SimulationConfig& cfg);
std::string plans_to_json(const std::vector<WindowRecord>& plans, const Network& network);

std::string flc_to_json(const FuzzyTracker& tracker);

std::string metrics_to_json(const Metrics& metrics, const std::vector<std::string>& events);

/// Writes tracking.csv, ports.csv, dispatch.csv, windows.csv, uc.csv,
/// transfers.csv, metrics.json and, when rounds were recorded, rounds.jsonl.
void write_trace(const SimulationResult& result, const std::filesystem::path& dir);

/// Human-readable summary of a trace directory written by write_trace.
std::string report_summary(const std::filesystem::path& dir);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& text);

}  // namespace ger
