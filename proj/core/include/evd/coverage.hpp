#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "evd/inference.hpp"

namespace evd {

enum class Target { Q95, Q99, Shape };
enum class Variant { Submodel, Gev };
enum class Side { Under, Cover, Over };

[[nodiscard]] std::string_view to_string(Target t);
[[nodiscard]] std::string_view to_string(Variant v);
[[nodiscard]] std::string_view to_string(Side s);
[[nodiscard]] Target target_from_string(std::string_view s);
/// Quantile probability of a quantile target; throws for the shape.
[[nodiscard]] double target_alpha(Target t);

/// One cell of the simulation grid.
struct Scenario {
  double c_true = 0.0;
  int n = 50;
  double a_true = 1.0;
  double b_true = 1.0;
  int replicates = 1000;
  std::uint64_t base_seed = 20090101;
  std::vector<Target> targets{Target::Q95, Target::Q99, Target::Shape};
  double level_k = 0.15;
  double aml_confidence = 0.95;
  /// Simulated values are not rounded; h only enters the exact-likelihood rescue.
  double precision_h = 1e-6;
  /// Worker threads; 0 uses the hardware concurrency.
  unsigned threads = 0;

  void validate() const;
  [[nodiscard]] GevParams truth() const { return {a_true, b_true, c_true}; }
  [[nodiscard]] double true_value(Target t) const;
};

/// Stable hash of (base_seed, round(1000 c), n, replicate).
[[nodiscard]] std::uint64_t replicate_seed(std::uint64_t base_seed, double c_true, int n, int replicate);

/// under iff upper < truth, over iff lower > truth.
[[nodiscard]] Side classify(double lower, double upper, double truth);

struct IntervalOutcome {
  bool failed = false;
  std::string failure;
  double lower = 0.0;
  double upper = 0.0;
  Side side = Side::Cover;
  EndpointStatus lower_status = EndpointStatus::Found;
  EndpointStatus upper_status = EndpointStatus::Found;
  /// Present only when the interval covered the truth.
  std::optional<double> length;

  [[nodiscard]] bool covered() const { return !failed && side == Side::Cover; }
};

struct OutcomeKey {
  Target target;
  IntervalMethod method;
  Variant model;
  auto operator<=>(const OutcomeKey&) const = default;
};

struct ReplicateRecord {
  int replicate_id = 0;
  std::uint64_t seed = 0;
  bool fit_failed = false;
  std::string failure;
  double c_hat = 0.0;
  Family family_selected = Family::Gumbel;
  bool snp = false;
  std::map<OutcomeKey, IntervalOutcome> outcomes;
};

[[nodiscard]] ReplicateRecord run_replicate(const Scenario& s, int replicate_id);

/// All replicates of a scenario, sorted by id. Identical for every thread count.
[[nodiscard]] std::vector<ReplicateRecord> run_scenario(const Scenario& s);

struct FiveNumber {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

/// Min, quartiles (linear interpolation) and max; NaNs for an empty input.
[[nodiscard]] FiveNumber five_number(std::vector<double> values);

struct CoverageRow {
  OutcomeKey key;
  int under = 0;
  int cover = 0;
  int over = 0;
  int failures = 0;
  int snp = 0;
  FiveNumber lengths;
};

struct CoverageSummary {
  Scenario scenario;
  int replicates = 0;
  int snp = 0;
  int fit_failures = 0;
  /// Replicates whose selected submodel matches the sign of the true c.
  int correct = 0;
  /// Replicates whose profile interval for c has endpoints of opposite sign.
  int negative = 0;
  std::vector<CoverageRow> rows;

  [[nodiscard]] const CoverageRow& row(Target t, IntervalMethod m, Variant v) const;
};

[[nodiscard]] CoverageSummary summarize(const std::vector<ReplicateRecord>& records, const Scenario& s);

struct LengthRatio {
  int replicate_id = 0;
  Target target = Target::Q95;
  double ratio = 1.0;
};

/// Profile-interval length ratio submodel / GEV over replicates where both covered.
[[nodiscard]] std::vector<LengthRatio> length_ratio_table(const std::vector<ReplicateRecord>& records);

/// Key = value lines; '#' starts a comment. c and n take comma lists and
/// expand to their cartesian product. Without a c list the simulation grid
/// {-0.5,...,0.5} is used, extended by +-0.01 and +-0.001 for n = 100.
[[nodiscard]] std::vector<Scenario> parse_scenarios(std::istream& in);
[[nodiscard]] std::vector<Scenario> load_scenarios(const std::string& path);

[[nodiscard]] std::vector<double> default_c_grid(int n);

/// c,n,target,method,model,under,cover,over,snp,correct,negative,len_min,len_q1,len_med,len_q3,len_max
void write_summary_csv(std::ostream& out, const std::vector<CoverageSummary>& summaries);
void write_replicates_csv(std::ostream& out, const std::vector<ReplicateRecord>& records);

}  // namespace evd
