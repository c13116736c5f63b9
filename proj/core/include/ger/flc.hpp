#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace ger {

/// Trapezoid in fuzzy-domain coordinates. a == b or c == d at a domain edge
/// gives a shoulder that saturates at 1.
struct FuzzySet {
  std::string label;
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double d = 0.0;

  double degree(double u) const;
};

struct FuzzyVariable {
  std::string name;
  double basic_lo = 0.0;
  double basic_hi = 0.0;
  double fuzzy_lo = 0.0;
  double fuzzy_hi = 0.0;
  std::vector<FuzzySet> subsets;

  /// Clamps x into the basic domain and maps it linearly onto the fuzzy domain.
  double to_fuzzy(double x) const;
  double to_basic(double u) const;
  std::vector<double> degrees(double x) const;
};

/// Five uniformly spaced sets on an integer grid, half-width 1, outer sets shouldered.
FuzzyVariable uniform_partition(std::string name, double basic_lo, double basic_hi, double fuzzy_lo,
                                std::array<std::string, 5> labels);

FuzzyVariable deviation_variable(double e_bd_kwh);
FuzzyVariable urgency_variable();
FuzzyVariable compensation_variable(double p_cn_kw);

/// rule[urgency grade][deviation grade] -> output grade (indices into the subsets).
struct RuleBase {
  std::array<std::array<int, 5>, 5> table{};

  static RuleBase standard();
};

struct TrackerState {
  double me_ref_kwh = 0.0;
  double e_b_kwh = 0.0;
  int t = 0;
  std::optional<int> t_a;
  int horizon = 1;
};

struct TrackerInputs {
  double de_ref_kwh = 0.0;
  double m_a = 1.0;
};

/// Deviation from the modified reference and emergency factor; m_a = 1 when no bound is due.
TrackerInputs compute_inputs(const TrackerState& state);

/// Mamdani max-min controller with centroid defuzzification.
class FuzzyTracker {
 public:
  static constexpr int kSamples = 2001;

  FuzzyTracker(double e_bd_kwh, double p_cn_kw, RuleBase rules = RuleBase::standard());

  /// Desired compensation NP_c in kW; positive transmits, negative requests.
  double infer(double de_ref_kwh, double m_a) const;

  const FuzzyVariable& deviation() const { return deviation_; }
  const FuzzyVariable& urgency() const { return urgency_; }
  const FuzzyVariable& output() const { return output_; }
  const RuleBase& rules() const { return rules_; }

 private:
  FuzzyVariable deviation_;
  FuzzyVariable urgency_;
  FuzzyVariable output_;
  RuleBase rules_;
  std::vector<double> grid_;
  std::array<std::vector<double>, 5> output_degrees_;
};

/// Limits NP_c so that |p_b + p_c| stays within the buffer rating.
double saturate(double np_c, double p_b, double p_rate);

}  // namespace ger
