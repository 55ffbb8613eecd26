#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "evd/coverage.hpp"
#include "evd/io.hpp"

namespace evd::cli {

namespace {

using nlohmann::json;

struct Options {
  std::string input;
  std::string precision = "auto";
  std::string family = "auto";
  std::vector<double> alphas;
  double level_k = 0.15;
  double confidence = 0.95;
  bool exact = false;
  std::string out;
  std::string format = "csv";
  std::optional<double> threshold;
  std::vector<std::string> targets;
  std::size_t points = 101;
  std::vector<double> range;
  std::vector<double> periods;
  // simulate
  std::string scenario;
  std::optional<int> replicates;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  std::string records;
  // sample
  std::vector<double> params;
  int n = 0;
  std::optional<int> decimals;
};

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<double> alphas_or_default(const Options& o) {
  return o.alphas.empty() ? std::vector<double>{0.95, 0.99} : o.alphas;
}

void check_options(const Options& o) {
  if (o.format != "csv" && o.format != "json") throw InputError("--format must be csv or json");
  for (double a : o.alphas)
    if (!(a > 0.0 && a < 1.0)) throw InputError("--alpha values must lie in (0,1)");
  if (!(o.level_k > 0.0 && o.level_k < 1.0)) throw InputError("--level-k must lie in (0,1)");
  if (!(o.confidence > 0.0 && o.confidence < 1.0)) throw InputError("--confidence must lie in (0,1)");
}

ObservedSample load_sample(const Options& o) {
  if (o.input.empty()) throw InputError("--input is required");
  std::optional<double> h;
  if (o.precision != "auto") {
    try {
      h = std::stod(o.precision);
    } catch (const std::exception&) {
      throw InputError("--precision must be a positive number or 'auto'");
    }
    if (!(*h > 0.0)) throw InputError("--precision must be positive");
  }
  return parse_sample_csv(o.input, h);
}

FitOptions fit_options(const Options& o) {
  FitOptions f;
  f.policy = o.exact ? KindPolicy::ExactOnly : KindPolicy::ContinuousWithExactFallback;
  return f;
}

const ModelSpec kGevNatural{Family::Gev, Parametrization::natural(), std::nullopt};

/// GEV fit plus the family the options ask for ("auto" picks from c_hat).
struct Fits {
  FitResult gev;
  Family family = Family::Gev;
};

Fits fit_family(const Options& o, const ObservedSample& sample) {
  Fits f{fit_mle(kGevNatural, sample, fit_options(o)), Family::Gev};
  f.family = o.family == "auto" ? select_submodel(f.gev.mle[2]) : family_from_string(o.family);
  if (o.threshold && f.family != Family::Weibull && f.family != Family::Frechet)
    throw InputError("--threshold needs a Weibull or Frechet model");
  return f;
}

FitResult natural_fit(const Options& o, const Fits& f, const ObservedSample& sample) {
  if (f.family == Family::Gev) return f.gev;
  if (o.threshold) return fit_mle({f.family, Parametrization::natural(), o.threshold}, sample, fit_options(o));
  return refit(f.gev, {f.family, Parametrization::natural(), std::nullopt}, sample);
}

/// Output stream: the --out file when given, otherwise out.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : os_(&fallback) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw InputError("cannot write '" + path + "'");
      os_ = file_.get();
    }
  }
  std::ostream& operator*() { return *os_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* os_;
};

json params_json(const ModelSpec& spec, const std::vector<double>& theta) {
  json j = json::object();
  const auto names = spec.coordinate_names();
  for (std::size_t i = 0; i < names.size(); ++i) j[names[i]] = theta[i];
  return j;
}

// ---------------------------------------------------------------------------

struct FitRow {
  std::string model;
  std::string kind;
  std::string parameter;
  double value;
};

int cmd_fit(const Options& o, std::ostream& out) {
  const ObservedSample sample = load_sample(o);
  const Fits f = fit_family(o, sample);
  std::vector<FitRow> rows;
  json j;
  const std::string kind(to_string(f.gev.kind_used));

  const auto add_fit = [&](const std::string& name, const FitResult& fit) {
    const std::string k(to_string(fit.kind_used));
    const auto names = fit.spec.coordinate_names();
    for (std::size_t i = 0; i < names.size(); ++i) rows.push_back({name, k, names[i], fit.mle[i]});
    rows.push_back({name, k, "loglik", fit.loglik_max});
    j["fits"].push_back({{"model", name},
                         {"kind", k},
                         {"params", params_json(fit.spec, fit.mle)},
                         {"loglik", fit.loglik_max},
                         {"exact_fallback", fit.used_exact_fallback},
                         {"converged", fit.converged}});
  };

  add_fit("gev", f.gev);
  rows.push_back({"gev", kind, "exact_fallback", f.gev.used_exact_fallback ? 1.0 : 0.0});

  // The GEV mle mapped to the EV family its shape sign implies.
  const EvParams ev = gev_to_ev(std::get<GevParams>(f.gev.model()));
  const std::string ev_name = "gev->" + std::string(to_string(ev.family));
  rows.push_back({ev_name, kind, "mu", ev.mu});
  rows.push_back({ev_name, kind, "sigma", ev.sigma});
  json evj = {{"family", to_string(ev.family)}, {"mu", ev.mu}, {"sigma", ev.sigma}};
  if (ev.beta) {
    rows.push_back({ev_name, kind, "beta", *ev.beta});
    evj["beta"] = *ev.beta;
  }
  j["gev_mapped"] = evj;

  const double rp0 = gumbel_plausibility(f.gev, sample);
  rows.push_back({"gev", kind, "R_p(c=0)", rp0});
  j["gumbel_plausibility"] = rp0;
  j["selected_family"] = to_string(f.family);
  j["n"] = sample.size();
  j["precision"] = sample.precision();

  if (f.family != Family::Gev) {
    const FitResult sub = natural_fit(o, f, sample);
    add_fit(sub.spec.label(), sub);
    std::optional<LrtResult> lrt;
    if (f.family == Family::Gumbel) {
      lrt = lrt_nested(sub.loglik_max, f.gev.loglik_max);
    } else if (o.threshold) {
      const FitResult full = refit(f.gev, {f.family, Parametrization::natural(), std::nullopt}, sample);
      add_fit(full.spec.label(), full);
      lrt = lrt_nested(sub.loglik_max, full.loglik_max);
    }
    if (lrt) {
      rows.push_back({"lrt", "", "w", lrt->w});
      rows.push_back({"lrt", "", "minus_two_log_w", lrt->minus_two_log_w});
      rows.push_back({"lrt", "", "p_value", lrt->p_value});
      j["lrt"] = {{"w", lrt->w}, {"minus_two_log_w", lrt->minus_two_log_w}, {"p_value", lrt->p_value}};
    }
  }

  Sink sink(o.out, out);
  if (o.format == "json") {
    *sink << j.dump(2) << '\n';
  } else {
    *sink << "model,kind,parameter,value\n";
    for (const auto& r : rows)
      *sink << r.model << ',' << r.kind << ',' << r.parameter << ',' << format_number(r.value) << '\n';
  }
  return kOk;
}

// ---------------------------------------------------------------------------

bool is_gev_name(const std::string& t) { return t == "a" || t == "b" || t == "c"; }

int cmd_profile(const Options& o, std::ostream& out) {
  if (o.targets.size() != 1) throw InputError("profile takes exactly one --target");
  const std::string target = o.targets.front();
  const ObservedSample sample = load_sample(o);
  Options use = o;
  if (o.family == "auto" && (is_gev_name(target) || target == "Q")) use.family = "gev";
  const Fits f = fit_family(use, sample);
  FitResult fit = natural_fit(use, f, sample);
  if (target == "Q") {
    const double alpha = alphas_or_default(o).front();
    fit = refit(fit, {fit.spec.family, Parametrization::quantile(alpha), fit.spec.fixed_threshold}, sample);
  }
  const std::size_t index = fit.spec.index_of(target);
  GridSpec grid;
  grid.points = o.points;
  if (!o.range.empty()) {
    if (o.range.size() != 2 || !(o.range[0] < o.range[1])) throw InputError("--range takes lo,hi with lo < hi");
    grid.range = std::make_pair(o.range[0], o.range[1]);
  }
  const ProfileCurve curve = profile_curve(fit, sample, index, grid);

  Sink sink(o.out, out);
  if (o.format == "json") {
    json j = {{"parameter", curve.parameter_name},
              {"model", curve.spec.label()},
              {"estimate", curve.estimate},
              {"loglik_max", curve.loglik_max}};
    if (curve.spec.coords.alpha) j["alpha"] = *curve.spec.coords.alpha;
    json pts = json::array();
    for (std::size_t i = 0; i < curve.grid.size(); ++i)
      pts.push_back({{"value", curve.grid[i]},
                     {"relative_likelihood", curve.r_values[i]},
                     {"ok", static_cast<bool>(curve.ok[i])},
                     {"nuisance", curve.nuisance_trace[i]}});
    j["points"] = pts;
    *sink << j.dump(2) << '\n';
  } else {
    write_profile_csv(*sink, curve);
  }
  const bool all_ok = std::all_of(curve.ok.begin(), curve.ok.end(), [](bool b) { return b; });
  return all_ok ? kOk : kPartial;
}

// ---------------------------------------------------------------------------

struct IntervalRow {
  std::string model;
  std::string target;
  std::optional<double> alpha;
  std::string method;
  double level = 0.0;
  std::optional<IntervalResult> result;
  std::string note;
};

int cmd_interval(const Options& o, std::ostream& out) {
  const ObservedSample sample = load_sample(o);
  const Fits f = fit_family(o, sample);
  const FitResult base = natural_fit(o, f, sample);
  const std::vector<std::string> targets = o.targets.empty() ? std::vector<std::string>{"Q"} : o.targets;

  std::vector<IntervalRow> rows;
  const auto both = [&](const FitResult& fit, const std::string& name, std::optional<double> alpha) {
    const std::size_t idx = fit.spec.index_of(name);
    const std::string model = fit.spec.label();
    for (const auto method : {IntervalMethod::ProfileLikelihood, IntervalMethod::Aml}) {
      IntervalRow row{model, name, alpha, std::string(to_string(method)),
                      method == IntervalMethod::Aml ? o.confidence : o.level_k, std::nullopt, ""};
      try {
        row.result = method == IntervalMethod::Aml ? aml_interval(fit, sample, idx, o.confidence)
                                                  : likelihood_interval(fit, sample, idx, o.level_k);
      } catch (const std::exception& e) {
        row.note = e.what();
      }
      rows.push_back(std::move(row));
    }
  };
  for (const auto& t : targets) {
    if (t != "Q") {
      both(base, t, std::nullopt);
      continue;
    }
    for (double a : alphas_or_default(o)) {
      try {
        const FitResult q =
            refit(base, {base.spec.family, Parametrization::quantile(a), base.spec.fixed_threshold}, sample);
        both(q, "Q", a);
      } catch (const ConvergenceError& e) {
        rows.push_back({base.spec.label(), "Q", a, "profile", o.level_k, std::nullopt, e.what()});
      }
    }
  }

  bool partial = false;
  for (const auto& r : rows)
    if (!r.result || !r.result->ok()) partial = true;

  Sink sink(o.out, out);
  if (o.format == "json") {
    json arr = json::array();
    for (const auto& r : rows) {
      json j = {{"model", r.model}, {"target", r.target}, {"method", r.method}, {"level", r.level}};
      if (r.alpha) j["alpha"] = *r.alpha;
      if (r.result) {
        j["estimate"] = r.result->estimate;
        j["lower"] = r.result->lower;
        j["upper"] = r.result->upper;
        j["lower_status"] = to_string(r.result->lower_status);
        j["upper_status"] = to_string(r.result->upper_status);
      } else {
        j["error"] = r.note;
      }
      arr.push_back(j);
    }
    *sink << arr.dump(2) << '\n';
  } else {
    *sink << "model,target,alpha,method,level,estimate,lower,upper,lower_status,upper_status,note\n";
    for (const auto& r : rows) {
      *sink << r.model << ',' << r.target << ',' << (r.alpha ? format_number(*r.alpha) : "") << ',' << r.method
            << ',' << format_number(r.level) << ',';
      if (r.result) {
        *sink << format_number(r.result->estimate) << ',' << format_number(r.result->lower) << ','
              << format_number(r.result->upper) << ',' << to_string(r.result->lower_status) << ','
              << to_string(r.result->upper_status) << ',';
      } else {
        std::string note = r.note;
        std::replace(note.begin(), note.end(), ',', ';');
        *sink << ",,,failed,failed," << note;
      }
      *sink << '\n';
    }
  }
  return partial ? kPartial : kOk;
}

// ---------------------------------------------------------------------------

int cmd_simulate(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.scenario.empty()) throw InputError("--scenario is required");
  auto scenarios = load_scenarios(o.scenario);
  std::vector<CoverageSummary> summaries;
  std::vector<ReplicateRecord> all_records;
  for (auto& s : scenarios) {
    if (o.replicates) s.replicates = *o.replicates;
    if (o.seed) s.base_seed = *o.seed;
    if (o.threads) s.threads = o.threads;
    s.validate();
    const auto t0 = std::chrono::steady_clock::now();
    auto recs = run_scenario(s);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    summaries.push_back(summarize(recs, s));
    err << "c=" << format_number(s.c_true) << " n=" << s.n << ": " << s.replicates << " replicates, "
        << summaries.back().snp << " snp, " << summaries.back().fit_failures << " failed fits, "
        << std::round(secs * 10.0) / 10.0 << " s\n";
    if (!o.records.empty()) all_records.insert(all_records.end(), recs.begin(), recs.end());
  }
  if (!o.records.empty()) {
    std::ofstream rec(o.records);
    if (!rec) throw InputError("cannot write '" + o.records + "'");
    write_replicates_csv(rec, all_records);
  }
  Sink sink(o.out, out);
  if (o.format == "json") {
    json arr = json::array();
    for (const auto& s : summaries) {
      for (const auto& r : s.rows) {
        json j = {{"c", s.scenario.c_true},       {"n", s.scenario.n},
                  {"target", to_string(r.key.target)},
                  {"method", r.key.method == IntervalMethod::Aml ? "aml" : "profile"},
                  {"model", to_string(r.key.model)}, {"under", r.under},
                  {"cover", r.cover},               {"over", r.over},
                  {"failures", r.failures},         {"snp", r.snp}};
        if (r.key.target == Target::Shape) {
          j["correct"] = s.correct;
          if (r.key.method == IntervalMethod::ProfileLikelihood) j["negative"] = s.negative;
        }
        if (r.cover > 0)
          j["length"] = {r.lengths.min, r.lengths.q1, r.lengths.median, r.lengths.q3, r.lengths.max};
        arr.push_back(j);
      }
    }
    *sink << arr.dump(2) << '\n';
  } else {
    write_summary_csv(*sink, summaries);
  }
  return kOk;
}

// ---------------------------------------------------------------------------

int write_bands(const Options& o, std::ostream& out, const std::vector<BandRow>& rows, bool qq) {
  Sink sink(o.out, out);
  if (o.format == "json") {
    json arr = json::array();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& r = rows[i];
      json j;
      if (qq) {
        j = {{"i", i + 1}, {"p", r.p}, {"observed", r.observed}, {"fitted", r.fitted}};
      } else {
        j = {{"period", r.period}, {"alpha", r.p}, {"level", r.fitted}};
      }
      if (r.band_lo) j["band_lo"] = *r.band_lo;
      if (r.band_hi) j["band_hi"] = *r.band_hi;
      if (r.flagged) j["flag"] = r.note;
      arr.push_back(j);
    }
    *sink << arr.dump(2) << '\n';
  } else if (qq) {
    write_qq_csv(*sink, rows);
  } else {
    write_return_period_csv(*sink, rows);
  }
  const bool flagged = std::any_of(rows.begin(), rows.end(), [](const BandRow& r) { return r.flagged; });
  return flagged ? kPartial : kOk;
}

int cmd_qq(const Options& o, std::ostream& out) {
  const ObservedSample sample = load_sample(o);
  const Fits f = fit_family(o, sample);
  return write_bands(o, out, emit_qq_data(natural_fit(o, f, sample), sample, o.level_k), true);
}

int cmd_return_periods(const Options& o, std::ostream& out) {
  const ObservedSample sample = load_sample(o);
  const Fits f = fit_family(o, sample);
  const auto periods = o.periods.empty() ? default_return_periods() : o.periods;
  return write_bands(o, out, emit_return_period_data(natural_fit(o, f, sample), sample, o.level_k, periods), false);
}

// ---------------------------------------------------------------------------

int cmd_sample(const Options& o, std::ostream& out) {
  if (o.family == "auto") throw InputError("sample needs an explicit --family");
  if (o.n < 1) throw InputError("--n must be positive");
  if (!o.seed) throw InputError("--seed is required");
  const Family fam = family_from_string(o.family);
  Model m;
  const auto need = [&](std::size_t k) {
    if (o.params.size() != k) throw InputError("--params needs " + std::to_string(k) + " values for " + o.family);
  };
  if (fam == Family::Gev) {
    need(3);
    m = GevParams(o.params[0], o.params[1], o.params[2]);
  } else if (fam == Family::Gumbel) {
    need(2);
    m = EvParams::gumbel(o.params[0], o.params[1]);
  } else {
    need(3);
    m = EvParams(fam, o.params[0], o.params[1], o.params[2]);
  }
  auto xs = sample(m, static_cast<std::size_t>(o.n), *o.seed);
  if (o.decimals) {
    if (*o.decimals < 0 || *o.decimals > 10) throw InputError("--decimals must lie in [0,10]");
    const double scale = std::pow(10.0, *o.decimals);
    for (double& x : xs) {
      x = std::round(x * scale) / scale;
      if (x == 0.0) x = 0.0;
    }
  }
  Sink sink(o.out, out);
  if (o.format == "json") {
    *sink << json(xs).dump() << '\n';
  } else {
    write_sample_csv(*sink, xs, "value");
  }
  return kOk;
}

// ---------------------------------------------------------------------------

void add_common(CLI::App* sub, Options& o, bool data = true) {
  sub->add_option("--out", o.out, "Output file (default stdout)");
  sub->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  if (!data) return;
  sub->add_option("--input", o.input, "CSV file with one column of block maxima")->required();
  sub->add_option("--precision", o.precision, "Measurement precision h, or auto");
  sub->add_option("--family", o.family, "weibull, gumbel, frechet, gev or auto")
      ->check(CLI::IsMember({"weibull", "gumbel", "frechet", "gev", "auto"}));
  sub->add_option("--alpha", o.alphas, "Quantile probability (repeatable)");
  sub->add_option("--level-k", o.level_k, "Relative likelihood level of profile intervals");
  sub->add_option("--confidence", o.confidence, "Confidence of AML intervals");
  sub->add_flag("--exact", o.exact, "Use the exact (grouped) likelihood throughout");
  sub->add_option("--threshold", o.threshold, "Fixed threshold mu for a two-parameter Weibull/Frechet");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Likelihood inference for block maxima under extreme value models", "evd"};
  app.require_subcommand(1);
  Options o;

  auto* fit = app.add_subcommand("fit", "Maximum likelihood fit in GEV and EV coordinates");
  add_common(fit, o);
  auto* profile = app.add_subcommand("profile", "Relative profile likelihood curve of one parameter");
  add_common(profile, o);
  profile->add_option("--target", o.targets, "Parameter: c, a, b, Q, mu, sigma, beta")->required();
  profile->add_option("--points", o.points, "Grid points")->check(CLI::Range(3, 100000));
  profile->add_option("--range", o.range, "Grid range lo hi")->delimiter(',');
  auto* interval = app.add_subcommand("interval", "Profile-likelihood and AML intervals");
  add_common(interval, o);
  interval->add_option("--target", o.targets, "Parameters (default Q for every --alpha)");
  auto* qq = app.add_subcommand("qq", "Q-Q plot data with pointwise likelihood bands");
  add_common(qq, o);
  auto* rp = app.add_subcommand("return-periods", "Return levels with likelihood bands");
  add_common(rp, o);
  rp->add_option("--period", o.periods, "Return period T > 1 (repeatable)");
  auto* sim = app.add_subcommand("simulate", "Monte Carlo coverage study");
  add_common(sim, o, false);
  sim->add_option("--scenario", o.scenario, "Scenario file")->required();
  sim->add_option("--replicates", o.replicates, "Override the replicate count");
  sim->add_option("--seed", o.seed, "Override the base seed");
  sim->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
  sim->add_option("--records", o.records, "Also write per-replicate outcomes to this file");
  auto* smp = app.add_subcommand("sample", "Draw a random sample from a model");
  add_common(smp, o, false);
  smp->add_option("--family", o.family, "weibull, gumbel, frechet or gev")
      ->required()
      ->check(CLI::IsMember({"weibull", "gumbel", "frechet", "gev"}));
  smp->add_option("--params", o.params, "Parameters, e.g. a,b,c or mu,sigma,beta")->delimiter(',')->required();
  smp->add_option("--n", o.n, "Sample size")->required();
  smp->add_option("--seed", o.seed, "Random seed")->required();
  smp->add_option("--decimals", o.decimals, "Round values to this many decimals");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInputError;
  }

  try {
    check_options(o);
    if (*fit) return cmd_fit(o, out);
    if (*profile) return cmd_profile(o, out);
    if (*interval) return cmd_interval(o, out);
    if (*qq) return cmd_qq(o, out);
    if (*rp) return cmd_return_periods(o, out);
    if (*sim) return cmd_simulate(o, out, err);
    if (*smp) return cmd_sample(o, out);
  } catch (const InputError& e) {
    err << "evd: " << e.what() << '\n';
    return kInputError;
  } catch (const DomainError& e) {
    err << "evd: " << e.what() << '\n';
    return kInputError;
  } catch (const std::exception& e) {
    err << "evd: " << e.what() << '\n';
    return kConvergenceError;
  }
  return kInputError;
}

}  // namespace evd::cli
