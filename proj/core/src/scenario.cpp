#include "ger/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "ger/format.hpp"

namespace ger {

Distribution Distribution::gaussian(double mean_kw, double stddev_kw) {
  Distribution d;
  d.kind = Kind::gaussian;
  d.mean_kw = mean_kw;
  d.stddev_kw = stddev_kw;
  return d;
}

Distribution Distribution::beta(double a, double b, double span_kw, double offset_kw) {
  Distribution d;
  d.kind = Kind::beta;
  d.shape_a = a;
  d.shape_b = b;
  d.span_kw = span_kw;
  d.offset_kw = offset_kw;
  return d;
}

const char* to_string(Distribution::Kind kind) {
  switch (kind) {
    case Distribution::Kind::gaussian: return "gaussian";
    case Distribution::Kind::beta: return "beta";
    default: return "none";
  }
}

std::vector<Violation> check_stochastic(const StochasticSpec& spec) {
  std::vector<Violation> out;
  if (spec.node_ids.size() != spec.sources.size())
    out.push_back({"", "scenario", "node ids and sources differ in length"});
  for (std::size_t i = 0; i < std::min(spec.node_ids.size(), spec.sources.size()); ++i) {
    const auto& s = spec.sources[i];
    const std::pair<const char*, const Distribution*> all[] = {{"pv", &s.pv}, {"wind", &s.wind}, {"load", &s.load}};
    for (const auto& [name, d] : all) {
      const std::string field = std::string("scenario.") + name;
      if (d->kind == Distribution::Kind::gaussian && !(d->stddev_kw >= 0.0))
        out.push_back({spec.node_ids[i], field, "stddev must be non-negative"});
      if (d->kind == Distribution::Kind::beta) {
        if (!(d->shape_a > 0.0) || !(d->shape_b > 0.0))
          out.push_back({spec.node_ids[i], field, "beta shapes must be positive"});
        if (!(d->span_kw >= 0.0)) out.push_back({spec.node_ids[i], field, "span must be non-negative"});
      }
    }
  }
  return out;
}

namespace {

double rating_of(const GerNode& node) {
  double r = 0.0;
  for (const auto& p : node.ports) r += p.p_rate_kw;
  return r;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

SourceSpec default_sources(const GerNode& node) {
  const double r = rating_of(node);
  return {Distribution::beta(2.0, 2.0, 0.2 * r, -0.1 * r), Distribution::gaussian(0.0, 0.05 * r),
          Distribution::gaussian(0.0, 0.05 * r)};
}

SourceSpec gaussian_sources(const GerNode& node) {
  const double r = rating_of(node);
  return {Distribution::gaussian(0.0, 0.05 * r), Distribution::gaussian(0.0, 0.05 * r),
          Distribution::gaussian(0.0, 0.05 * r)};
}

std::uint64_t substream_seed(std::uint64_t seed, const std::string& node_id, std::string_view source) {
  return splitmix64(splitmix64(seed ^ fnv1a(node_id)) ^ fnv1a(source));
}

std::vector<double> sample_distribution(const Distribution& d, std::uint64_t stream_seed, std::size_t steps) {
  std::vector<double> out(steps, 0.0);
  std::mt19937_64 rng(stream_seed);
  switch (d.kind) {
    case Distribution::Kind::none:
      break;
    case Distribution::Kind::gaussian: {
      if (d.stddev_kw == 0.0) {
        std::fill(out.begin(), out.end(), d.mean_kw);
        break;
      }
      std::normal_distribution<double> normal(d.mean_kw, d.stddev_kw);
      const double lo = d.mean_kw - 3.0 * d.stddev_kw;
      const double hi = d.mean_kw + 3.0 * d.stddev_kw;
      for (auto& x : out) x = std::clamp(normal(rng), lo, hi);
      break;
    }
    case Distribution::Kind::beta: {
      std::gamma_distribution<double> ga(d.shape_a, 1.0);
      std::gamma_distribution<double> gb(d.shape_b, 1.0);
      for (auto& x : out) {
        const double u = ga(rng);
        const double v = gb(rng);
        const double frac = (u + v) > 0.0 ? u / (u + v) : 0.5;
        x = d.offset_kw + d.span_kw * std::clamp(frac, 0.0, 1.0);
      }
      break;
    }
  }
  return out;
}

VariationSeries sample_variation(const SourceSpec& s, std::uint64_t seed, const std::string& node_id,
                                 std::size_t steps) {
  return {sample_distribution(s.pv, substream_seed(seed, node_id, "pv"), steps),
          sample_distribution(s.wind, substream_seed(seed, node_id, "wind"), steps),
          sample_distribution(s.load, substream_seed(seed, node_id, "load"), steps)};
}

std::vector<VariationSeries> sample_variation(const StochasticSpec& spec, std::size_t steps) {
  if (auto v = check_stochastic(spec); !v.empty()) throw ValidationError(std::move(v));
  std::vector<VariationSeries> out;
  out.reserve(spec.node_ids.size());
  for (std::size_t i = 0; i < spec.node_ids.size(); ++i) {
    out.push_back(sample_variation(spec.sources[i], spec.seed, spec.node_ids[i], steps));
  }
  return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

NodeProfile parse_profile_csv(const std::string& text, const GerNode& node, int horizon,
                              const std::string& source) {
  std::istringstream is(text);
  std::string line;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    rows.push_back(split_csv_line(line));
  }
  if (rows.empty()) throw ProfileError(source + ": empty profile file");
  const auto& header = rows.front();
  auto column = [&](const std::string& name, bool required) -> long {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      if (required) throw ProfileError(source + ": missing column `" + name + "`");
      return -1;
    }
    return it - header.begin();
  };
  column("step", true);
  std::vector<long> ref_cols;
  for (const auto& port : node.ports) ref_cols.push_back(column("ref_port_" + port.id, true));
  const long dpv = column("dpv", true);
  const long dwt = column("dwt", true);
  const long dload = column("dload", true);
  const long pm = column("pm", false);

  const std::size_t data_rows = rows.size() - 1;
  if (static_cast<long>(data_rows) != horizon) {
    throw ProfileError(source + ": " + std::to_string(data_rows) + " data rows, horizon is " +
                       std::to_string(horizon));
  }

  NodeProfile p;
  auto cell = [&](std::size_t r, long c) {
    const auto& row = rows[r];
    const std::string& name = header[static_cast<std::size_t>(c)];
    if (static_cast<std::size_t>(c) >= row.size())
      throw ProfileError(source + ": line " + std::to_string(r + 1) + " missing column `" + name + "`");
    const std::string& s = row[static_cast<std::size_t>(c)];
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(value)) {
      throw ProfileError(source + ": line " + std::to_string(r + 1) + ", column `" + name +
                         "`: non-numeric value `" + s + "`");
    }
    return value;
  };
  for (std::size_t r = 1; r < rows.size(); ++r) {
    std::vector<double> refs;
    for (const long c : ref_cols) refs.push_back(cell(r, c));
    p.ref_kw.push_back(std::move(refs));
    p.dpv_kw.push_back(cell(r, dpv));
    p.dwt_kw.push_back(cell(r, dwt));
    p.dload_kw.push_back(cell(r, dload));
    p.pm_kw.push_back(pm >= 0 ? cell(r, pm) : 0.0);
  }
  return p;
}

NodeProfile load_profiles(const std::filesystem::path& path, const GerNode& node, int horizon) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ProfileError(path.string() + ": cannot open profile file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_profile_csv(ss.str(), node, horizon, path.string());
}

std::string profile_to_csv(const NodeProfile& p, const GerNode& node) {
  std::string out = "step";
  for (const auto& port : node.ports) out += ",ref_port_" + port.id;
  out += ",dpv,dwt,dload,pm\n";
  for (std::size_t k = 0; k < p.steps(); ++k) {
    out += std::to_string(k);
    for (const double r : p.ref_kw[k]) out += "," + format_double(r);
    out += "," + format_double(p.dpv_kw[k]) + "," + format_double(p.dwt_kw[k]) + "," +
           format_double(p.dload_kw[k]) + "," + format_double(p.pm_kw[k]) + "\n";
  }
  return out;
}

}  // namespace ger
