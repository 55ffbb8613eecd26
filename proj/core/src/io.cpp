#include "evd/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <system_error>

namespace evd {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

namespace {

std::string strip(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  const char* first = s.data();
  if (*first == '+') ++first;
  double v = 0.0;
  const auto res = std::from_chars(first, s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    return std::nullopt;
  }
  return v;
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(strip(std::string_view(line).substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string where(const std::string& source, int line) { return source + ":" + std::to_string(line) + ": "; }

}  // namespace

std::vector<double> read_sample_values(std::istream& in, const std::string& source) {
  std::vector<double> values;
  std::string raw;
  int line = 0;
  bool header_allowed = true;
  while (std::getline(in, raw)) {
    ++line;
    if (line == 1 && raw.starts_with("\xEF\xBB\xBF")) raw.erase(0, 3);
    const std::string text = strip(raw);
    if (text.empty()) continue;
    if (text.find(',') != std::string::npos) {
      const auto cells = split_commas(text);
      for (std::size_t i = 1; i < cells.size(); ++i)
        if (!cells[i].empty()) throw ParseError(where(source, line) + "expected a single column");
    }
    const std::string cell = strip(text.substr(0, text.find(',')));
    const auto v = parse_double(cell);
    if (!v) {
      if (header_allowed) {
        header_allowed = false;
        continue;
      }
      throw ParseError(where(source, line) + "'" + cell + "' is not a number");
    }
    if (!std::isfinite(*v)) throw ParseError(where(source, line) + "non-finite value");
    header_allowed = false;
    values.push_back(*v);
  }
  if (values.empty()) throw ParseError(source + ": no data values");
  if (values.size() < 3) throw ParseError(source + ": at least 3 values are required, found " + std::to_string(values.size()));
  return values;
}

ObservedSample parse_sample_stream(std::istream& in, std::optional<double> precision, const std::string& source) {
  auto values = read_sample_values(in, source);
  if (!precision) return ObservedSample::with_detected_precision(std::move(values));
  return {std::move(values), *precision};
}

ObservedSample parse_sample_csv(const std::string& path, std::optional<double> precision) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return parse_sample_stream(in, precision, path);
}

void write_sample_csv(std::ostream& out, std::span<const double> values, const std::string& header) {
  if (!header.empty()) out << header << '\n';
  for (double v : values) out << format_number(v) << '\n';
}

void write_profile_csv(std::ostream& out, const ProfileCurve& curve) {
  const auto names = curve.spec.coordinate_names();
  out << curve.parameter_name << ",relative_likelihood,ok";
  for (std::size_t j = 0; j < names.size(); ++j)
    if (j != curve.target_index) out << ',' << names[j];
  out << '\n';
  const std::size_t nuisance = names.empty() ? 0 : names.size() - 1;
  for (std::size_t i = 0; i < curve.grid.size(); ++i) {
    out << format_number(curve.grid[i]) << ',' << format_number(curve.r_values[i]) << ',' << (curve.ok[i] ? 1 : 0);
    const auto& tr = curve.nuisance_trace[i];
    for (std::size_t j = 0; j < nuisance; ++j) {
      out << ',';
      if (j < tr.size()) out << format_number(tr[j]);
    }
    out << '\n';
  }
}

ProfileCurve read_profile_csv(std::istream& in) {
  ProfileCurve curve;
  std::string raw;
  if (!std::getline(in, raw)) throw ParseError("profile csv: empty input");
  const auto head = split_commas(strip(raw));
  if (head.size() < 3 || head[1] != "relative_likelihood" || head[2] != "ok")
    throw ParseError("profile csv:1: unexpected header");
  curve.parameter_name = head[0];
  int line = 1;
  while (std::getline(in, raw)) {
    ++line;
    const std::string text = strip(raw);
    if (text.empty()) continue;
    const auto cells = split_commas(text);
    if (cells.size() != head.size()) throw ParseError(where("profile csv", line) + "wrong number of columns");
    const auto t = parse_double(cells[0]);
    const auto r = parse_double(cells[1]);
    if (!t || !r || (cells[2] != "0" && cells[2] != "1"))
      throw ParseError(where("profile csv", line) + "malformed row");
    curve.grid.push_back(*t);
    curve.r_values.push_back(*r);
    curve.ok.push_back(cells[2] == "1");
    std::vector<double> tr;
    for (std::size_t j = 3; j < cells.size(); ++j) {
      if (cells[j].empty()) continue;
      const auto v = parse_double(cells[j]);
      if (!v) throw ParseError(where("profile csv", line) + "malformed nuisance value");
      tr.push_back(*v);
    }
    curve.nuisance_trace.push_back(std::move(tr));
  }
  return curve;
}

namespace {

BandRow band_at(const FitResult& fit, const ObservedSample& sample, double level_k, double p) {
  BandRow row;
  row.p = p;
  row.fitted = quantile(fit.model(), p);
  const ModelSpec spec{fit.spec.family, Parametrization::quantile(p), fit.spec.fixed_threshold};
  try {
    const FitResult q = refit(fit, spec, sample);
    const IntervalResult iv = likelihood_interval(q, sample, 0, level_k);
    const auto usable = [](EndpointStatus s, double v) {
      return std::isfinite(v) && (s == EndpointStatus::Found || s == EndpointStatus::Boundary);
    };
    if (usable(iv.lower_status, iv.lower)) row.band_lo = iv.lower;
    if (usable(iv.upper_status, iv.upper)) row.band_hi = iv.upper;
    if (!row.band_lo || !row.band_hi) {
      row.flagged = true;
      row.note = std::string("lower ") + std::string(to_string(iv.lower_status)) + ", upper " +
                 std::string(to_string(iv.upper_status));
    }
  } catch (const std::exception& e) {
    row.flagged = true;
    row.note = e.what();
  }
  return row;
}

}  // namespace

std::vector<BandRow> emit_qq_data(const FitResult& fit, const ObservedSample& sample, double level_k) {
  std::vector<double> xs(sample.values().begin(), sample.values().end());
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  std::vector<BandRow> rows;
  rows.reserve(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    BandRow row = band_at(fit, sample, level_k, (static_cast<double>(i) + 0.5) / n);
    row.observed = xs[i];
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<double> default_return_periods() { return {2, 5, 10, 20, 25, 50, 100, 200, 500, 1000}; }

std::vector<BandRow> emit_return_period_data(const FitResult& fit, const ObservedSample& sample, double level_k,
                                             std::span<const double> periods) {
  std::vector<BandRow> rows;
  for (double t : periods) {
    if (!(t > 1.0) || !std::isfinite(t)) throw DomainError("return periods must exceed 1, got " + format_number(t));
    BandRow row = band_at(fit, sample, level_k, 1.0 - 1.0 / t);
    row.period = t;
    row.observed = std::numeric_limits<double>::quiet_NaN();
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

std::string opt(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

}  // namespace

void write_qq_csv(std::ostream& out, const std::vector<BandRow>& rows) {
  out << "i,p,observed,fitted,band_lo,band_hi,flagged\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    out << i + 1 << ',' << format_number(r.p) << ',' << format_number(r.observed) << ',' << format_number(r.fitted)
        << ',' << opt(r.band_lo) << ',' << opt(r.band_hi) << ',' << (r.flagged ? 1 : 0) << '\n';
  }
}

void write_return_period_csv(std::ostream& out, const std::vector<BandRow>& rows) {
  out << "period,alpha,level,band_lo,band_hi,flagged\n";
  for (const auto& r : rows)
    out << format_number(r.period) << ',' << format_number(r.p) << ',' << format_number(r.fitted) << ','
        << opt(r.band_lo) << ',' << opt(r.band_hi) << ',' << (r.flagged ? 1 : 0) << '\n';
}

}  // namespace evd
