#include "evd/coverage.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace evd {

std::string_view to_string(Target t) {
  switch (t) {
    case Target::Q95: return "Q.95";
    case Target::Q99: return "Q.99";
    case Target::Shape: return "c";
  }
  return "?";
}

std::string_view to_string(Variant v) { return v == Variant::Gev ? "gev" : "submodel"; }

std::string_view to_string(Side s) {
  switch (s) {
    case Side::Under: return "under";
    case Side::Cover: return "cover";
    case Side::Over: return "over";
  }
  return "?";
}

Target target_from_string(std::string_view s) {
  if (s == "Q.95" || s == "Q0.95" || s == "q95") return Target::Q95;
  if (s == "Q.99" || s == "Q0.99" || s == "q99") return Target::Q99;
  if (s == "c" || s == "shape") return Target::Shape;
  throw DomainError("unknown target '" + std::string(s) + "'");
}

double target_alpha(Target t) {
  switch (t) {
    case Target::Q95: return 0.95;
    case Target::Q99: return 0.99;
    case Target::Shape: break;
  }
  throw DomainError("the shape target has no quantile probability");
}

void Scenario::validate() const {
  if (replicates < 1) throw DomainError("replicates must be >= 1");
  if (n < 3) throw DomainError("sample size must be >= 3");
  if (!(b_true > 0.0)) throw DomainError("scale must be positive");
  if (!(level_k > 0.0 && level_k < 1.0)) throw DomainError("level_k must lie in (0,1)");
  if (!(aml_confidence > 0.0 && aml_confidence < 1.0)) throw DomainError("confidence must lie in (0,1)");
  if (!(precision_h > 0.0)) throw DomainError("precision must be positive");
  if (targets.empty()) throw DomainError("no targets");
  if (!std::isfinite(c_true) || !std::isfinite(a_true)) throw DomainError("non-finite parameter");
}

double Scenario::true_value(Target t) const {
  if (t == Target::Shape) return c_true;
  return quantile(truth(), target_alpha(t));
}

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t replicate_seed(std::uint64_t base_seed, double c_true, int n, int replicate) {
  const auto c_milli = static_cast<std::int64_t>(std::llround(c_true * 1000.0));
  std::uint64_t h = splitmix(base_seed);
  h = splitmix(h ^ static_cast<std::uint64_t>(c_milli));
  h = splitmix(h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(n)));
  h = splitmix(h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(replicate)));
  return h;
}

Side classify(double lower, double upper, double truth) {
  if (upper < truth) return Side::Under;
  if (lower > truth) return Side::Over;
  return Side::Cover;
}

namespace {

IntervalOutcome outcome_of(const IntervalResult& iv, double truth) {
  IntervalOutcome o;
  o.lower = iv.lower;
  o.upper = iv.upper;
  o.lower_status = iv.lower_status;
  o.upper_status = iv.upper_status;
  if (!std::isfinite(iv.lower) && !std::isfinite(iv.upper)) {
    o.failed = true;
    o.failure = "interval has no finite endpoint";
    return o;
  }
  if (iv.lower_status == EndpointStatus::Failed || iv.upper_status == EndpointStatus::Failed) {
    o.failed = true;
    o.failure = "endpoint search failed";
    return o;
  }
  o.side = classify(iv.lower, iv.upper, truth);
  if (o.side == Side::Cover) o.length = iv.upper - iv.lower;
  return o;
}

template <class F>
IntervalOutcome guarded(F&& build, double truth) {
  try {
    return outcome_of(build(), truth);
  } catch (const std::exception& e) {
    IntervalOutcome o;
    o.failed = true;
    o.failure = e.what();
    return o;
  }
}

void add_intervals(ReplicateRecord& rec, const Scenario& s, Target t, Variant v, const FitResult& fit,
                   const ObservedSample& sample, std::size_t index) {
  const double truth = s.true_value(t);
  rec.outcomes[{t, IntervalMethod::ProfileLikelihood, v}] =
      guarded([&] { return likelihood_interval(fit, sample, index, s.level_k); }, truth);
  rec.outcomes[{t, IntervalMethod::Aml, v}] =
      guarded([&] { return aml_interval(fit, sample, index, s.aml_confidence); }, truth);
}

void fail_all(ReplicateRecord& rec, const Scenario& s, const std::string& why) {
  rec.fit_failed = true;
  rec.failure = why;
  IntervalOutcome o;
  o.failed = true;
  o.failure = why;
  for (Target t : s.targets) {
    for (auto m : {IntervalMethod::ProfileLikelihood, IntervalMethod::Aml}) {
      rec.outcomes[{t, m, Variant::Gev}] = o;
      if (t != Target::Shape) rec.outcomes[{t, m, Variant::Submodel}] = o;
    }
  }
}

}  // namespace

ReplicateRecord run_replicate(const Scenario& s, int replicate_id) {
  ReplicateRecord rec;
  rec.replicate_id = replicate_id;
  rec.seed = replicate_seed(s.base_seed, s.c_true, s.n, replicate_id);
  try {
    const ObservedSample sample(evd::sample(s.truth(), static_cast<std::size_t>(s.n), rec.seed), s.precision_h);
    const ModelSpec gev_spec{Family::Gev, Parametrization::natural(), std::nullopt};
    const FitResult gev = fit_mle(gev_spec, sample);
    rec.snp = gev.used_exact_fallback;
    rec.c_hat = gev.mle[2];
    rec.family_selected = select_submodel(rec.c_hat);

    for (Target t : s.targets) {
      if (t == Target::Shape) {
        add_intervals(rec, s, t, Variant::Gev, gev, sample, 2);
        continue;
      }
      const auto coords = Parametrization::quantile(target_alpha(t));
      const auto refit_into = [&](Family f, Variant v) {
        try {
          const FitResult q = refit(gev, ModelSpec{f, coords, std::nullopt}, sample);
          add_intervals(rec, s, t, v, q, sample, 0);
        } catch (const std::exception& e) {
          IntervalOutcome o;
          o.failed = true;
          o.failure = e.what();
          rec.outcomes[{t, IntervalMethod::ProfileLikelihood, v}] = o;
          rec.outcomes[{t, IntervalMethod::Aml, v}] = o;
        }
      };
      refit_into(Family::Gev, Variant::Gev);
      refit_into(rec.family_selected, Variant::Submodel);
    }
  } catch (const std::exception& e) {
    fail_all(rec, s, e.what());
  }
  return rec;
}

std::vector<ReplicateRecord> run_scenario(const Scenario& s) {
  s.validate();
  std::vector<ReplicateRecord> out(static_cast<std::size_t>(s.replicates));
  unsigned workers = s.threads ? s.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(s.replicates));
  std::atomic<int> next{0};
  const auto work = [&] {
    for (int r = next++; r < s.replicates; r = next++) out[static_cast<std::size_t>(r)] = run_replicate(s, r);
  };
  if (workers <= 1) {
    work();
    return out;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (unsigned i = 0; i < workers; ++i) pool.emplace_back(work);
  pool.clear();
  return out;
}

FiveNumber five_number(std::vector<double> v) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (v.empty()) return {nan, nan, nan, nan, nan};
  std::sort(v.begin(), v.end());
  const auto at = [&](double p) {
    const double pos = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  return {v.front(), at(0.25), at(0.5), at(0.75), v.back()};
}

const CoverageRow& CoverageSummary::row(Target t, IntervalMethod m, Variant v) const {
  const OutcomeKey k{t, m, v};
  for (const auto& r : rows)
    if (r.key == k) return r;
  throw std::out_of_range("no coverage row for " + std::string(to_string(t)) + "/" + std::string(to_string(m)) +
                          "/" + std::string(to_string(v)));
}

CoverageSummary summarize(const std::vector<ReplicateRecord>& records, const Scenario& s) {
  if (records.empty()) throw DomainError("no replicate records to summarize");
  CoverageSummary sum;
  sum.scenario = s;
  sum.replicates = static_cast<int>(records.size());

  const Family truth_family = select_submodel(s.c_true);
  std::map<OutcomeKey, std::pair<CoverageRow, std::vector<double>>> acc;
  for (Target t : s.targets) {
    for (auto v : {Variant::Submodel, Variant::Gev}) {
      if (t == Target::Shape && v == Variant::Submodel) continue;
      for (auto m : {IntervalMethod::ProfileLikelihood, IntervalMethod::Aml}) acc[{t, m, v}].first.key = {t, m, v};
    }
  }

  for (const auto& rec : records) {
    if (rec.snp) ++sum.snp;
    if (rec.fit_failed) {
      ++sum.fit_failures;
    } else if (rec.family_selected == truth_family) {
      ++sum.correct;
    }
    for (auto& [key, slot] : acc) {
      auto& [row, lengths] = slot;
      if (rec.snp) ++row.snp;
      const auto it = rec.outcomes.find(key);
      if (it == rec.outcomes.end() || it->second.failed) {
        ++row.failures;
        continue;
      }
      const IntervalOutcome& o = it->second;
      switch (o.side) {
        case Side::Under: ++row.under; break;
        case Side::Cover: ++row.cover; break;
        case Side::Over: ++row.over; break;
      }
      if (o.length) lengths.push_back(*o.length);
    }
    const auto c_it = rec.outcomes.find({Target::Shape, IntervalMethod::ProfileLikelihood, Variant::Gev});
    if (c_it != rec.outcomes.end() && !c_it->second.failed && c_it->second.lower * c_it->second.upper < 0.0)
      ++sum.negative;
  }

  for (auto& [key, slot] : acc) {
    slot.first.lengths = five_number(std::move(slot.second));
    sum.rows.push_back(slot.first);
  }
  return sum;
}

std::vector<LengthRatio> length_ratio_table(const std::vector<ReplicateRecord>& records) {
  std::vector<LengthRatio> out;
  for (const auto& rec : records) {
    for (Target t : {Target::Q95, Target::Q99}) {
      const auto sub = rec.outcomes.find({t, IntervalMethod::ProfileLikelihood, Variant::Submodel});
      const auto gev = rec.outcomes.find({t, IntervalMethod::ProfileLikelihood, Variant::Gev});
      if (sub == rec.outcomes.end() || gev == rec.outcomes.end()) continue;
      if (!sub->second.covered() || !gev->second.covered()) continue;
      const double lg = *gev->second.length;
      if (!(lg > 0.0)) continue;
      out.push_back({rec.replicate_id, t, *sub->second.length / lg});
    }
  }
  return out;
}

std::vector<double> default_c_grid(int n) {
  std::vector<double> c{-0.5, -0.4, -0.3, -0.2, -0.1, -0.05, 0.0, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5};
  if (n == 100) {
    for (double extra : {-0.01, -0.001, 0.001, 0.01}) c.push_back(extra);
    std::sort(c.begin(), c.end());
  }
  return c;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& s, int line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size()) throw DomainError("scenario line " + std::to_string(line) + ": '" + s + "' is not a number");
  return v;
}

long long to_integer(const std::string& s, int line) {
  const double v = to_double(s, line);
  if (v != std::floor(v)) throw DomainError("scenario line " + std::to_string(line) + ": '" + s + "' is not an integer");
  return static_cast<long long>(v);
}

}  // namespace

std::vector<Scenario> parse_scenarios(std::istream& in) {
  Scenario base;
  std::vector<double> cs;
  std::vector<int> ns;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const std::string text = trim(raw);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos)
      throw DomainError("scenario line " + std::to_string(line) + ": expected key = value");
    const std::string key = trim(std::string_view(text).substr(0, eq));
    const std::string value = trim(std::string_view(text).substr(eq + 1));
    if (key == "c") {
      for (const auto& v : split_list(value)) cs.push_back(to_double(v, line));
    } else if (key == "n") {
      for (const auto& v : split_list(value)) ns.push_back(static_cast<int>(to_integer(v, line)));
    } else if (key == "replicates") {
      base.replicates = static_cast<int>(to_integer(value, line));
    } else if (key == "seed") {
      base.base_seed = static_cast<std::uint64_t>(to_integer(value, line));
    } else if (key == "level_k") {
      base.level_k = to_double(value, line);
    } else if (key == "confidence") {
      base.aml_confidence = to_double(value, line);
    } else if (key == "h" || key == "precision") {
      base.precision_h = to_double(value, line);
    } else if (key == "a") {
      base.a_true = to_double(value, line);
    } else if (key == "b") {
      base.b_true = to_double(value, line);
    } else if (key == "threads") {
      base.threads = static_cast<unsigned>(to_integer(value, line));
    } else if (key == "targets") {
      base.targets.clear();
      for (const auto& v : split_list(value)) base.targets.push_back(target_from_string(v));
    } else {
      throw DomainError("scenario line " + std::to_string(line) + ": unknown key '" + key + "'");
    }
  }
  if (ns.empty()) ns = {base.n};
  std::vector<Scenario> out;
  for (int n : ns) {
    for (double c : cs.empty() ? default_c_grid(n) : cs) {
      Scenario s = base;
      s.n = n;
      s.c_true = c;
      s.validate();
      out.push_back(s);
    }
  }
  return out;
}

std::vector<Scenario> load_scenarios(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open scenario file '" + path + "'");
  return parse_scenarios(in);
}

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string_view method_name(IntervalMethod m) { return m == IntervalMethod::Aml ? "aml" : "profile"; }

}  // namespace

void write_summary_csv(std::ostream& out, const std::vector<CoverageSummary>& summaries) {
  out << "c,n,target,method,model,under,cover,over,snp,correct,negative,len_min,len_q1,len_med,len_q3,len_max\n";
  for (const auto& s : summaries) {
    for (const auto& r : s.rows) {
      const bool shape = r.key.target == Target::Shape;
      out << num(s.scenario.c_true) << ',' << s.scenario.n << ',' << to_string(r.key.target) << ','
          << method_name(r.key.method) << ',' << to_string(r.key.model) << ',' << r.under << ',' << r.cover << ','
          << r.over << ',' << r.snp << ',';
      if (shape) out << s.correct;
      out << ',';
      if (shape && r.key.method == IntervalMethod::ProfileLikelihood) out << s.negative;
      out << ',' << num(r.lengths.min) << ',' << num(r.lengths.q1) << ',' << num(r.lengths.median) << ','
          << num(r.lengths.q3) << ',' << num(r.lengths.max) << '\n';
    }
  }
}

void write_replicates_csv(std::ostream& out, const std::vector<ReplicateRecord>& records) {
  out << "replicate,seed,c_hat,family,snp,target,method,model,side,lower,upper,length,failure\n";
  for (const auto& rec : records) {
    for (const auto& [key, o] : rec.outcomes) {
      out << rec.replicate_id << ',' << rec.seed << ',' << num(rec.c_hat) << ',' << to_string(rec.family_selected)
          << ',' << (rec.snp ? 1 : 0) << ',' << to_string(key.target) << ',' << method_name(key.method) << ','
          << to_string(key.model) << ',' << (o.failed ? "failed" : to_string(o.side)) << ',';
      if (!o.failed) out << num(o.lower) << ',' << num(o.upper);
      else out << ',';
      out << ',' << (o.length ? num(*o.length) : "") << ',';
      std::string why = o.failure;
      std::replace(why.begin(), why.end(), ',', ';');
      std::replace(why.begin(), why.end(), '\n', ' ');
      out << why << '\n';
    }
  }
}

}  // namespace evd
