#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "ger/network.hpp"

namespace ger {

struct Distribution {
  enum class Kind { none, gaussian, beta };
  Kind kind = Kind::none;
  double mean_kw = 0.0;
  double stddev_kw = 0.0;
  double shape_a = 2.0;
  double shape_b = 2.0;
  double span_kw = 0.0;
  double offset_kw = 0.0;

  static Distribution gaussian(double mean_kw, double stddev_kw);
  static Distribution beta(double a, double b, double span_kw, double offset_kw);
};

const char* to_string(Distribution::Kind kind);

/// Real-time forecast-error sources of one node.
struct SourceSpec {
  Distribution pv;
  Distribution wind;
  Distribution load;
};

struct StochasticSpec {
  std::uint64_t seed = 0;
  std::vector<std::string> node_ids;
  std::vector<SourceSpec> sources;  // parallel to node_ids
};

std::vector<Violation> check_stochastic(const StochasticSpec& spec);

/// Gaussian load/wind with stddev 5% of the summed port ratings, PV Beta(2,2)
/// spanning +-10% of the same rating.
SourceSpec default_sources(const GerNode& node);
/// Same ratings, Gaussian for every source.
SourceSpec gaussian_sources(const GerNode& node);

struct VariationSeries {
  std::vector<double> dpv_kw;
  std::vector<double> dwt_kw;
  std::vector<double> dload_kw;

  std::size_t steps() const { return dpv_kw.size(); }
  /// Surplus-positive net variation: dpv + dwt - dload.
  double net(std::size_t k) const { return dpv_kw[k] + dwt_kw[k] - dload_kw[k]; }
};

/// Sub-stream seed for one (node, source) pair; independent of other nodes.
std::uint64_t substream_seed(std::uint64_t seed, const std::string& node_id, std::string_view source);

/// Draws `steps` samples; Gaussian draws are clamped to mean +- 3 stddev.
std::vector<double> sample_distribution(const Distribution& d, std::uint64_t stream_seed, std::size_t steps);

VariationSeries sample_variation(const SourceSpec& sources, std::uint64_t seed,
                                 const std::string& node_id, std::size_t steps);

/// Samples every node of the spec.
std::vector<VariationSeries> sample_variation(const StochasticSpec& spec, std::size_t steps);

class ProfileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses a profile CSV: header `step,ref_port_<id>...,dpv,dwt,dload[,pm]` (kW).
NodeProfile parse_profile_csv(const std::string& text, const GerNode& node, int horizon,
                              const std::string& source_name = "<csv>");
NodeProfile load_profiles(const std::filesystem::path& path, const GerNode& node, int horizon);

std::string profile_to_csv(const NodeProfile& profile, const GerNode& node);

}  // namespace ger
