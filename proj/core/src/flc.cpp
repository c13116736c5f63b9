#include "ger/flc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ger {

double FuzzySet::degree(double u) const {
  if (u < a || u > d) return 0.0;
  if (u >= b && u <= c) return 1.0;
  if (u < b) return (u - a) / (b - a);
  return (d - u) / (d - c);
}

double FuzzyVariable::to_fuzzy(double x) const {
  const double clamped = std::clamp(x, basic_lo, basic_hi);
  return fuzzy_lo + (clamped - basic_lo) / (basic_hi - basic_lo) * (fuzzy_hi - fuzzy_lo);
}

double FuzzyVariable::to_basic(double u) const {
  return basic_lo + (u - fuzzy_lo) / (fuzzy_hi - fuzzy_lo) * (basic_hi - basic_lo);
}

std::vector<double> FuzzyVariable::degrees(double x) const {
  const double u = to_fuzzy(x);
  std::vector<double> out;
  out.reserve(subsets.size());
  for (const auto& s : subsets) out.push_back(s.degree(u));
  return out;
}

FuzzyVariable uniform_partition(std::string name, double basic_lo, double basic_hi, double fuzzy_lo,
                                std::array<std::string, 5> labels) {
  if (!(basic_hi > basic_lo)) throw std::invalid_argument(name + ": empty basic domain");
  FuzzyVariable v{std::move(name), basic_lo, basic_hi, fuzzy_lo, fuzzy_lo + 4.0, {}};
  for (int g = 0; g < 5; ++g) {
    const double c = fuzzy_lo + g;
    FuzzySet s{labels[static_cast<std::size_t>(g)], c - 1.0, c, c, c + 1.0};
    if (g == 0) s.a = s.b = v.fuzzy_lo;
    if (g == 4) s.c = s.d = v.fuzzy_hi;
    v.subsets.push_back(std::move(s));
  }
  return v;
}

FuzzyVariable deviation_variable(double e_bd_kwh) {
  return uniform_partition("de_ref", -e_bd_kwh, e_bd_kwh, -2.0, {"NB", "NS", "ZO", "PS", "PB"});
}

FuzzyVariable urgency_variable() {
  return uniform_partition("m_a", 0.0, 1.0, 0.0, {"C", "SC", "M", "SF", "F"});
}

FuzzyVariable compensation_variable(double p_cn_kw) {
  return uniform_partition("np_c", -p_cn_kw, p_cn_kw, -2.0, {"NB", "NS", "ZO", "PS", "PB"});
}

RuleBase RuleBase::standard() {
  enum { NB, NS, ZO, PS, PB };
  RuleBase r;
  //            de_ref:  NB  NS  ZO  PS  PB
  r.table[0] = {PB, PS, ZO, NS, NB};  // C
  r.table[1] = {PB, PS, ZO, NS, NB};  // SC
  r.table[2] = {PB, PS, ZO, NS, NB};  // M
  r.table[3] = {PS, ZO, ZO, ZO, NS};  // SF
  r.table[4] = {PS, ZO, ZO, ZO, NS};  // F
  return r;
}

TrackerInputs compute_inputs(const TrackerState& s) {
  if (s.horizon < 1) throw std::invalid_argument("compute_inputs: horizon must be >= 1");
  TrackerInputs in;
  in.de_ref_kwh = s.me_ref_kwh - s.e_b_kwh;
  if (s.t_a) {
    in.m_a = std::clamp(static_cast<double>(*s.t_a - s.t) / s.horizon, 0.0, 1.0);
  }
  return in;
}

FuzzyTracker::FuzzyTracker(double e_bd_kwh, double p_cn_kw, RuleBase rules)
    : deviation_(deviation_variable(e_bd_kwh)),
      urgency_(urgency_variable()),
      output_(compensation_variable(p_cn_kw)),
      rules_(rules) {
  // Symmetric grid: the i-th and (N-1-i)-th samples are exact negatives.
  constexpr int half = (kSamples - 1) / 2;
  const double step = (output_.fuzzy_hi - output_.fuzzy_lo) / (kSamples - 1);
  const double mid = 0.5 * (output_.fuzzy_lo + output_.fuzzy_hi);
  grid_.resize(kSamples);
  for (int i = 0; i < kSamples; ++i) grid_[static_cast<std::size_t>(i)] = mid + (i - half) * step;
  for (std::size_t g = 0; g < 5; ++g) {
    output_degrees_[g].resize(grid_.size());
    for (std::size_t i = 0; i < grid_.size(); ++i) output_degrees_[g][i] = output_.subsets[g].degree(grid_[i]);
  }
}

double FuzzyTracker::infer(double de_ref_kwh, double m_a) const {
  const auto de = deviation_.degrees(de_ref_kwh);
  const auto ma = urgency_.degrees(m_a);
  std::array<double, 5> strength{};
  for (std::size_t r = 0; r < 5; ++r) {
    if (ma[r] == 0.0) continue;
    for (std::size_t c = 0; c < 5; ++c) {
      const double fire = std::min(ma[r], de[c]);
      auto& s = strength[static_cast<std::size_t>(rules_.table[r][c])];
      s = std::max(s, fire);
    }
  }
  auto aggregate = [&](std::size_t i) {
    double mu = 0.0;
    for (std::size_t g = 0; g < 5; ++g) {
      if (strength[g] > 0.0) mu = std::max(mu, std::min(strength[g], output_degrees_[g][i]));
    }
    return mu;
  };
  // Mirror-paired accumulation so a symmetric aggregate has an exactly zero moment.
  const std::size_t last = grid_.size() - 1;
  const double mid_mu = aggregate(last / 2);
  double area = mid_mu;
  double moment = mid_mu * grid_[last / 2];
  for (std::size_t i = 0; i < last / 2; ++i) {
    const double lo_mu = aggregate(i);
    const double hi_mu = aggregate(last - i);
    area += lo_mu + hi_mu;
    moment += lo_mu * grid_[i] + hi_mu * grid_[last - i];
  }
  if (area <= 0.0) return 0.0;
  return output_.to_basic(moment / area);
}

namespace {

// p_rate - p_b can round so that p_b + limit lands one ulp past the rating.
double room_up(double p_b, double p_rate) {
  double r = p_rate - p_b;
  while (p_b + r > p_rate) r = std::nextafter(r, -p_rate - p_b);
  return r;
}

double room_down(double p_b, double p_rate) {
  double r = -p_rate - p_b;
  while (p_b + r < -p_rate) r = std::nextafter(r, p_rate - p_b);
  return r;
}

}  // namespace

double saturate(double np_c, double p_b, double p_rate) {
  if (p_b > 0.0) return std::max(room_down(p_b, p_rate), std::min(np_c, room_up(p_b, p_rate)));
  return std::min(room_up(p_b, p_rate), std::max(np_c, room_down(p_b, p_rate)));
}

}  // namespace ger
