#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evd/inference.hpp"

namespace evd {

/// Malformed input file; the message names the offending line.
class ParseError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Shortest decimal form that reads back to the same double.
[[nodiscard]] std::string format_number(double v);

/// One numeric column, optional single header line, LF or CRLF. Blank
/// lines are skipped. A second column is rejected.
[[nodiscard]] std::vector<double> read_sample_values(std::istream& in, const std::string& source = "<input>");

/// precision nullopt means detect_precision on the values.
[[nodiscard]] ObservedSample parse_sample_csv(const std::string& path, std::optional<double> precision = std::nullopt);
[[nodiscard]] ObservedSample parse_sample_stream(std::istream& in, std::optional<double> precision = std::nullopt,
                                                 const std::string& source = "<input>");

void write_sample_csv(std::ostream& out, std::span<const double> values, const std::string& header = "value");

/// Columns: parameter value, R_p, ok, then one column per nuisance coordinate.
void write_profile_csv(std::ostream& out, const ProfileCurve& curve);
/// Reads back grid, r_values, ok, nuisance_trace and parameter_name.
[[nodiscard]] ProfileCurve read_profile_csv(std::istream& in);

/// Pointwise profile-likelihood band for a quantile of the fitted family.
struct BandRow {
  double p = 0.0;
  double observed = 0.0;  // x_(i) for Q-Q rows, NaN for return periods
  double period = 0.0;    // T for return-period rows, 0 for Q-Q rows
  double fitted = 0.0;
  std::optional<double> band_lo;
  std::optional<double> band_hi;
  /// Set when a band endpoint could not be found; the message says which.
  bool flagged = false;
  std::string note;
};

/// Rows sorted by order statistic, plotting positions (i - 0.5)/n.
[[nodiscard]] std::vector<BandRow> emit_qq_data(const FitResult& fit, const ObservedSample& sample, double level_k);

[[nodiscard]] std::vector<double> default_return_periods();

/// alpha = 1 - 1/T for each period T > 1.
[[nodiscard]] std::vector<BandRow> emit_return_period_data(const FitResult& fit, const ObservedSample& sample,
                                                           double level_k, std::span<const double> periods);

void write_qq_csv(std::ostream& out, const std::vector<BandRow>& rows);
void write_return_period_csv(std::ostream& out, const std::vector<BandRow>& rows);

}  // namespace evd
