#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "seedeval/seedeval.hpp"

namespace seedeval::cli {

using ojson = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

// ---------------------------------------------------------------------------
// Small helpers
// ---------------------------------------------------------------------------

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream o;
  o << std::hex << std::setw(16) << std::setfill('0') << v;
  return o.str();
}

/// JSON has no infinities; non-finite values are written as null.
inline ojson num(double x) { return std::isfinite(x) ? ojson(x) : ojson(nullptr); }

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(csv::trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InputError(what + ": '" + s + "' is not a number");
  }
}

inline std::size_t parse_size(const std::string& s, const std::string& what) {
  const double v = parse_double(s, what);
  if (v < 0 || v != std::floor(v)) throw InputError(what + ": '" + s + "' is not a nonnegative integer");
  return static_cast<std::size_t>(v);
}

// ---------------------------------------------------------------------------
// Shared configuration
// ---------------------------------------------------------------------------

struct Contrast {
  StrategyKind a = StrategyKind::onehop;
  StrategyKind b = StrategyKind::random;
};

inline Contrast parse_contrast(const std::string& text) {
  const auto parts = split(text, ',');
  if (parts.size() != 2) throw InputError("--contrast expects two strategies, e.g. onehop,random");
  return {parse_strategy(parts[0]), parse_strategy(parts[1])};
}

/// Design strings: `mixture[:rho]`, `bernoulli[:rho]`, `single:<strategy>`,
/// `optimized`, or a JSON object {"variant", "rho", "A", "B", "single"}.
inline DesignSpec parse_design(const std::string& text, Contrast contrast) {
  DesignSpec spec;
  spec.a = contrast.a;
  spec.b = contrast.b;
  const std::string t = csv::trim(text);
  if (!t.empty() && t.front() == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(t);
    } catch (const nlohmann::json::exception& e) {
      throw InputError(std::string("--design JSON: ") + e.what());
    }
    const std::string variant = j.value("variant", "mixture");
    if (j.contains("A")) spec.a = parse_strategy(j.at("A").get<std::string>());
    if (j.contains("B")) spec.b = parse_strategy(j.at("B").get<std::string>());
    if (variant == "mixture" || variant == "bernoulli") {
      spec.variant = DesignVariant::mixture;
      spec.rho = j.value("rho", 0.5);
    } else if (variant == "single") {
      spec.variant = DesignVariant::single;
      const std::string arm = j.value("single", "B");
      if (arm != "A" && arm != "B") throw InputError("--design: single must be \"A\" or \"B\"");
      spec.single = arm == "A" ? Arm::A : Arm::B;
    } else if (variant == "optimized") {
      spec.variant = DesignVariant::optimized;
      spec.pool_size = j.value("pool_size", spec.pool_size);
      spec.enumeration_cap = j.value("enumeration_cap", spec.enumeration_cap);
    } else {
      throw InputError("--design: unknown variant '" + variant + "'");
    }
    if (!(spec.rho >= 0.0 && spec.rho <= 1.0)) throw InputError("--design: rho must lie in [0, 1]");
    return spec;
  }
  const auto colon = t.find(':');
  const std::string head = t.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : t.substr(colon + 1);
  if (head == "mixture" || head == "bernoulli") {
    spec.variant = DesignVariant::mixture;
    if (!arg.empty()) spec.rho = parse_double(arg, "--design rho");
    if (!(spec.rho >= 0.0 && spec.rho <= 1.0)) throw InputError("--design: rho must lie in [0, 1]");
  } else if (head == "single") {
    spec.variant = DesignVariant::single;
    const StrategyKind s = arg.empty() ? contrast.b : parse_strategy(arg);
    if (s == contrast.b) spec.single = Arm::B;
    else if (s == contrast.a) spec.single = Arm::A;
    else throw InputError("--design single:" + arg + " is not one of the contrasted strategies");
  } else if (head == "optimized") {
    spec.variant = DesignVariant::optimized;
  } else {
    throw InputError("unknown design '" + t + "' (expected mixture:RHO, single:STRATEGY, optimized or JSON)");
  }
  return spec;
}

inline ojson design_json(const DesignSpec& d) {
  ojson j;
  j["variant"] = std::string(to_string(d.variant));
  if (d.variant == DesignVariant::mixture) j["rho"] = d.rho;
  if (d.variant == DesignVariant::single) j["single"] = std::string(to_string(d.single));
  j["A"] = std::string(to_string(d.a));
  j["B"] = std::string(to_string(d.b));
  return j;
}

struct Common {
  std::string edges;
  std::string seeds;
  std::string outcomes;
  std::string k = "auto";
  std::string design = "mixture:0.5";
  std::string contrast = "onehop,random";
  std::uint64_t seed = 0;
  std::string out;
  unsigned threads = 0;
  std::size_t min_edges = 0;
  bool symmetrize = false;
};

inline VillageCollection load_collection(const Common& c, ojson* notes = nullptr) {
  LoadOptions opts;
  opts.symmetrize = c.symmetrize;
  LoadReport report;
  VillageCollection col = read_collection_file(c.edges, opts, &report);
  if (notes && report.rows > 0) {
    (*notes)["edge_rows"] = report.rows;
    (*notes)["self_loops_dropped"] = report.self_loops_dropped;
    (*notes)["duplicates_collapsed"] = report.duplicates_collapsed;
    (*notes)["cross_village_dropped"] = report.cross_village_dropped;
  }
  if (c.min_edges > 0) {
    std::vector<std::string> dropped;
    col = preprocess(col, c.min_edges, &dropped);
    if (notes) (*notes)["villages_dropped_min_edges"] = dropped;
  }
  if (col.empty()) throw InputError("no villages left after preprocessing");
  return col;
}

/// Reads `village_id,node_label` rows into one seed set per village, in
/// collection order. Rows for villages removed by preprocessing are ignored;
/// a kept village without rows is an error.
inline std::vector<SeedSet> load_seeds(const std::string& path, const VillageCollection& col,
                                       const std::set<std::string>& dropped = {}) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open seeds file: " + path);
  std::vector<std::string> header;
  const auto rows = csv::read(in, header);
  const int cv = csv::column(header, "village_id"), cn = csv::column(header, "node_label");
  if (cv < 0 || cn < 0) throw InputError(path + ": header must contain village_id,node_label");
  std::map<std::string, std::vector<NodeId>> by_village;
  for (const auto& r : rows) {
    if (r.fields.size() != header.size())
      throw InputError(path + " line " + std::to_string(r.line) + ": wrong number of fields");
    const std::string& vid = r.fields[cv];
    const Village* v = col.find(vid);
    if (!v) {
      if (dropped.count(vid)) continue;
      throw InputError(path + " line " + std::to_string(r.line) + ": unknown village '" + vid + "'");
    }
    const auto node = v->graph.find_label(r.fields[cn]);
    if (!node)
      throw InputError(path + " line " + std::to_string(r.line) + ": node '" + r.fields[cn] +
                       "' is not in village '" + vid + "'");
    by_village[vid].push_back(*node);
  }
  std::vector<SeedSet> out;
  for (const auto& v : col.villages) {
    auto it = by_village.find(v.id);
    if (it == by_village.end()) throw InputError(path + ": village '" + v.id + "' has no seed rows");
    try {
      out.push_back(SeedSet::make(it->second, v.graph.node_count()));
    } catch (const InputError& e) {
      throw InputError(path + ": village '" + v.id + "': " + e.what());
    }
  }
  return out;
}

struct Outcome {
  double y = 0.0;
  std::optional<Arm> z;
};

inline std::optional<Arm> parse_arm(const std::string& s, const DesignSpec& d) {
  if (s.empty()) return std::nullopt;
  if (s == "A" || s == "a" || s == "1") return Arm::A;
  if (s == "B" || s == "b" || s == "0") return Arm::B;
  const StrategyKind k = parse_strategy(s);
  if (d.a == d.b) throw InputError("arm label '" + s + "' is ambiguous when A and B are the same strategy");
  if (k == d.a) return Arm::A;
  if (k == d.b) return Arm::B;
  throw InputError("arm label '" + s + "' is not one of the contrasted strategies");
}

/// Reads `village_id,y[,z]`; every village in the collection needs a row.
inline std::vector<Outcome> load_outcomes(const std::string& path, const VillageCollection& col, const DesignSpec& d,
                                          const std::set<std::string>& dropped = {}) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open outcomes file: " + path);
  std::vector<std::string> header;
  const auto rows = csv::read(in, header);
  const int cv = csv::column(header, "village_id"), cy = csv::column(header, "y"), cz = csv::column(header, "z");
  if (cv < 0 || cy < 0) throw InputError(path + ": header must contain village_id,y");
  std::map<std::string, Outcome> by_village;
  for (const auto& r : rows) {
    if (r.fields.size() != header.size())
      throw InputError(path + " line " + std::to_string(r.line) + ": wrong number of fields");
    const std::string& vid = r.fields[cv];
    if (!col.find(vid)) {
      if (dropped.count(vid)) continue;
      throw InputError(path + " line " + std::to_string(r.line) + ": unknown village '" + vid + "'");
    }
    Outcome o;
    o.y = parse_double(r.fields[cy], path + " line " + std::to_string(r.line) + " y");
    if (cz >= 0) o.z = parse_arm(r.fields[cz], d);
    if (!by_village.emplace(vid, o).second)
      throw InputError(path + ": village '" + vid + "' has more than one outcome row");
  }
  std::vector<Outcome> out;
  for (const auto& v : col.villages) {
    auto it = by_village.find(v.id);
    if (it == by_village.end()) throw InputError(path + ": village '" + v.id + "' has no outcome");
    out.push_back(it->second);
  }
  return out;
}

inline std::set<std::string> dropped_ids(const ojson& notes) {
  std::set<std::string> s;
  if (notes.contains("villages_dropped_min_edges"))
    for (const auto& v : notes["villages_dropped_min_edges"]) s.insert(v.get<std::string>());
  return s;
}

/// Per-village k: from the seed sets (`auto`) or a fixed value checked
/// against them.
inline std::vector<std::size_t> resolve_k(const std::string& k_text, const VillageCollection& col,
                                          const std::vector<SeedSet>* seeds) {
  std::vector<std::size_t> ks;
  if (k_text == "auto") {
    if (!seeds) throw InputError("--k auto needs a seeds file; pass --k N instead");
    for (const auto& s : *seeds) ks.push_back(s.size());
    return ks;
  }
  const std::size_t k = parse_size(k_text, "--k");
  if (k < 1) throw InputError("--k must be at least 1");
  for (std::size_t i = 0; i < col.size(); ++i) {
    if (k > col.villages[i].graph.node_count())
      throw InputError("--k " + k_text + " exceeds the size of village '" + col.villages[i].id + "'");
    if (seeds && (*seeds)[i].size() != k)
      throw InputError("village '" + col.villages[i].id + "' has " + std::to_string((*seeds)[i].size()) +
                       " seeds but --k is " + k_text);
  }
  ks.assign(col.size(), k);
  return ks;
}

inline std::vector<VillageDesign> build_designs(const VillageCollection& col, const std::vector<std::size_t>& ks,
                                                const DesignSpec& spec, std::uint64_t seed) {
  std::vector<VillageDesign> designs;
  designs.reserve(col.size());
  for (std::size_t i = 0; i < col.size(); ++i) {
    try {
      designs.emplace_back(col.villages[i].graph, ks[i], spec, stream_key(seed, {0xde5, i}));
    } catch (const Error& e) {
      const std::string msg = "village '" + col.villages[i].id + "': " + e.what();
      if (dynamic_cast<const InputError*>(&e)) throw InputError(msg);
      throw NumericalError(msg);
    }
  }
  return designs;
}

/// Output sink: --out file or the caller's stream.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) throw InputError("cannot write output file: " + path);
      stream_ = file_.get();
    }
  }
  std::ostream& get() { return *stream_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_;
};

inline ojson provenance(const std::string& command, const ojson& config, std::uint64_t seed) {
  ojson p;
  p["schema_version"] = kSchemaVersion;
  p["tool"] = "seedeval";
  p["version"] = kVersion;
  p["command"] = command;
  p["config"] = config;
  p["config_hash"] = hex64(fnv1a(config.dump()));
  p["seed"] = seed;
  return p;
}

inline void csv_provenance(std::ostream& out, const ojson& prov) {
  out << "# seedeval " << kVersion << " schema_version=" << kSchemaVersion << " command=" << prov["command"].get<std::string>()
      << " config_hash=" << prov["config_hash"].get<std::string>() << " seed=" << prov["seed"].get<std::uint64_t>()
      << "\n";
}

inline ojson common_config(const Common& c) {
  ojson j;
  j["edges"] = c.edges;
  if (!c.seeds.empty()) j["seeds"] = c.seeds;
  if (!c.outcomes.empty()) j["outcomes"] = c.outcomes;
  j["k"] = c.k;
  j["design"] = c.design;
  j["contrast"] = c.contrast;
  j["min_edges"] = c.min_edges;
  j["symmetrize"] = c.symmetrize;
  return j;
}

inline ojson report_json(const EstimateReport& r) {
  ojson j;
  j["estimator"] = r.estimator;
  j["tau_hat"] = num(r.tau_hat);
  j["variance"] = num(r.variance);
  j["se"] = num(r.se);
  j["ci_low"] = num(r.ci_low);
  j["ci_high"] = num(r.ci_high);
  j["level"] = r.level;
  j["p_value"] = num(r.p_value);
  j["n"] = r.n;
  if (r.n_eff) j["n_eff"] = num(*r.n_eff);
  if (!r.notes.empty()) j["notes"] = r.notes;
  return j;
}

// ---------------------------------------------------------------------------
// Shared data preparation for probs / estimate / rand-test / ess
// ---------------------------------------------------------------------------

struct Prepared {
  VillageCollection col;
  ojson notes = ojson::object();
  DesignSpec spec;
  std::vector<SeedSet> seeds;
  std::vector<std::size_t> ks;
  std::vector<VillageDesign> designs;
};

inline std::unique_ptr<Prepared> prepare(const Common& c, bool need_seeds) {
  auto p = std::make_unique<Prepared>();
  p->spec = parse_design(c.design, parse_contrast(c.contrast));
  p->col = load_collection(c, &p->notes);
  if (need_seeds || !c.seeds.empty()) {
    if (c.seeds.empty()) throw InputError("--seeds is required");
    p->seeds = load_seeds(c.seeds, p->col, dropped_ids(p->notes));
  }
  p->ks = resolve_k(c.k, p->col, p->seeds.empty() ? nullptr : &p->seeds);
  p->designs = build_designs(p->col, p->ks, p->spec, c.seed);
  return p;
}

inline std::vector<VillageObservation> observations(const Prepared& p, const std::vector<Outcome>* outcomes) {
  std::vector<VillageObservation> obs;
  for (std::size_t i = 0; i < p.col.size(); ++i) {
    const Outcome o = outcomes ? (*outcomes)[i] : Outcome{};
    obs.push_back(make_observation(p.col.villages[i].id, p.designs[i], p.seeds[i], o.y, o.z));
  }
  return obs;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

inline void add_common(CLI::App* sub, Common& c, bool seeds, bool outcomes) {
  sub->add_option("--edges", c.edges, "edge list CSV (village_id,src,dst[,dst_village]) or collection JSON")
      ->required()
      ->check(CLI::ExistingFile);
  if (seeds) sub->add_option("--seeds", c.seeds, "seed CSV (village_id,node_label)")->check(CLI::ExistingFile);
  if (outcomes)
    sub->add_option("--outcomes", c.outcomes, "outcome CSV (village_id,y[,z])")->required()->check(CLI::ExistingFile);
  sub->add_option("--k", c.k, "seed count: auto (from the seeds file) or an integer")->capture_default_str();
  sub->add_option("--design", c.design, "mixture:RHO | single:STRATEGY | optimized | JSON")->capture_default_str();
  sub->add_option("--contrast", c.contrast, "strategies A,B")->capture_default_str();
  sub->add_option("--seed", c.seed, "master RNG seed")->capture_default_str();
  sub->add_option("--out", c.out, "output path (default stdout)");
  sub->add_option("--threads", c.threads, "worker threads (default SEEDEVAL_THREADS or 1)");
  sub->add_option("--min-edges", c.min_edges, "drop villages with fewer edges")->capture_default_str();
  sub->add_flag("--symmetrize", c.symmetrize, "add the reverse of every edge");
}

inline int run_probs(const Common& c, std::ostream& out) {
  auto p = prepare(c, true);
  ojson cfg = common_config(c);
  Sink sink(c.out, out);
  ojson header = provenance("probs", cfg, c.seed);
  header["design"] = design_json(p->spec);
  header["type"] = "header";
  header["notes"] = p->notes;
  sink.get() << header.dump() << "\n";
  for (std::size_t i = 0; i < p->col.size(); ++i) {
    const auto& d = p->designs[i];
    const ProbTriple t = d.log_probs(p->seeds[i]);
    const auto pos = check_positivity(p->col.villages[i].id, t);
    ojson line;
    line["schema_version"] = kSchemaVersion;
    line["type"] = "village";
    line["village_id"] = p->col.villages[i].id;
    line["n"] = p->col.villages[i].graph.node_count();
    line["k"] = p->ks[i];
    line["log_p_a"] = num(t.log_a);
    line["log_p_b"] = num(t.log_b);
    line["log_p_design"] = num(t.log_d);
    const StrategyModel& onehop = d.spec().a == StrategyKind::onehop ? d.strategy_a() : d.strategy_b();
    if (onehop.kind() == StrategyKind::onehop) line["log_pi_onehop"] = num(onehop.log_pi().value);
    line["positivity"] = {{"ok", pos.ok}, {"a_identified", pos.a_identified}, {"b_identified", pos.b_identified}};
    sink.get() << line.dump() << "\n";
  }
  return 0;
}

struct EstimateOptions {
  std::string estimators = "hajek,ht,dm";
  double level = 0.95;
  std::size_t bootstrap = 0;
};

inline int run_estimate(const Common& c, const EstimateOptions& eo, std::ostream& out, std::ostream& err) {
  auto p = prepare(c, true);
  const auto outcomes = load_outcomes(c.outcomes, p->col, p->spec, dropped_ids(p->notes));
  const auto obs = observations(*p, &outcomes);
  std::vector<EstimatorKind> wanted;
  for (const auto& e : split(eo.estimators, ',')) wanted.push_back(parse_estimator(e));

  ojson cfg = common_config(c);
  cfg["estimators"] = eo.estimators;
  cfg["level"] = eo.level;
  cfg["bootstrap"] = eo.bootstrap;
  ojson doc = provenance("estimate", cfg, c.seed);
  doc["design"] = design_json(p->spec);
  doc["villages"] = p->col.size();
  doc["notes"] = p->notes;

  const WeightTable table = compute_weights(obs, false);
  const bool normalizable = table.normalizable();
  ojson estimates = ojson::array(), refused = ojson::array();
  for (EstimatorKind e : wanted) {
    if (e == EstimatorKind::dm && p->spec.variant != DesignVariant::mixture) {
      const std::string why = "difference-in-means estimator is not defined for a " +
                              std::string(to_string(p->spec.variant)) +
                              " design: villages are not assigned to strategies";
      err << "note: " << why << "\n";
      refused.push_back({{"estimator", "dm"}, {"reason", why}});
      continue;
    }
    if (e == EstimatorKind::hajek && !normalizable)
      throw NumericalError("Hajek normalization impossible: no observed seed set has positive probability under " +
                           std::string(WeightTable::sum(table.w_a) > 0.0 ? "B" : "A"));
    EstimateReport r = run_estimator(e, table, eo.level);
    if (e == EstimatorKind::hajek) {
      if (p->spec.variant == DesignVariant::single) {
        // Kish ESS of the off-policy arm's weights
        r.n_eff = ess_offpolicy_mean(p->spec.single == Arm::B ? table.w_a : table.w_b);
      } else {
        const double rho = p->spec.variant == DesignVariant::mixture ? p->spec.rho : 0.5;
        if (rho > 0.0 && rho < 1.0) r.n_eff = ess_ate_sample(table.w_a, table.w_b, rho);
      }
    }
    ojson j = report_json(r);
    if (eo.bootstrap > 0 && e != EstimatorKind::dm) {
      const auto b = bootstrap(table, eo.bootstrap, stream_key(c.seed, {0xb0}),
                               e == EstimatorKind::hajek ? BootstrapEstimator::hajek : BootstrapEstimator::ht,
                               eo.level, c.threads);
      j["bootstrap"] = {{"se", num(b.se)},       {"ci_low", num(b.ci_low)}, {"ci_high", num(b.ci_high)},
                        {"replicates", b.replicates}, {"dropped", b.dropped}};
    }
    estimates.push_back(j);
  }
  if (estimates.empty()) throw InputError("none of the requested estimators is defined for this design");
  doc["estimates"] = estimates;
  if (!refused.empty()) doc["refused"] = refused;
  Sink sink(c.out, out);
  sink.get() << doc.dump(2) << "\n";
  return 0;
}

struct RandTestOptions {
  std::size_t replicates = 10'000;
  std::string statistic = "studentized_hajek";
  std::size_t bins = 20;
};

inline int run_rand_test(const Common& c, const RandTestOptions& ro, std::ostream& out) {
  auto p = prepare(c, true);
  const auto outcomes = load_outcomes(c.outcomes, p->col, p->spec, dropped_ids(p->notes));
  const auto obs = observations(*p, &outcomes);
  FisherOptions fo;
  fo.replicates = ro.replicates;
  fo.seed = stream_key(c.seed, {0xf1});
  fo.statistic = parse_statistic(ro.statistic);
  fo.threads = c.threads;
  if (ro.bins < 1) throw InputError("--bins must be at least 1");
  const auto r = fisher_test(obs, p->designs, fo);

  double lo = kInf, hi = -kInf;
  std::size_t infinite = 0;
  for (double s : r.null_stats) {
    if (!std::isfinite(s)) {
      ++infinite;
      continue;
    }
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  ojson hist;
  std::vector<std::size_t> counts(ro.bins, 0);
  std::vector<double> edges;
  if (lo <= hi) {
    if (lo == hi) hi = lo + 1.0;
    for (std::size_t b = 0; b <= ro.bins; ++b) edges.push_back(lo + (hi - lo) * static_cast<double>(b) / ro.bins);
    for (double s : r.null_stats) {
      if (!std::isfinite(s)) continue;
      auto b = static_cast<std::size_t>((s - lo) / (hi - lo) * static_cast<double>(ro.bins));
      counts[std::min(b, ro.bins - 1)]++;
    }
  }
  hist["edges"] = edges;
  hist["counts"] = counts;
  hist["infinite"] = infinite;

  ojson cfg = common_config(c);
  cfg["replicates"] = ro.replicates;
  cfg["statistic"] = ro.statistic;
  cfg["bins"] = ro.bins;
  ojson doc = provenance("rand-test", cfg, c.seed);
  doc["design"] = design_json(p->spec);
  doc["villages"] = p->col.size();
  doc["statistic"] = r.statistic;
  doc["observed_stat"] = num(r.observed_stat);
  doc["p_value"] = r.p_value;
  doc["replicates"] = ro.replicates;
  doc["failed_replicates"] = r.failed_replicates;
  doc["null_histogram"] = hist;
  Sink sink(c.out, out);
  sink.get() << doc.dump(2) << "\n";
  return 0;
}

struct EssOptions {
  std::string k_range;
  std::size_t draws = 1000;
  double rho = -1.0;  // reference Bernoulli rho; default: design rho or 0.5
};

inline std::pair<std::size_t, std::size_t> parse_range(const std::string& s) {
  const auto parts = split(s, ':');
  if (parts.size() != 2) throw InputError("--k-range expects FROM:TO");
  const std::size_t a = parse_size(parts[0], "--k-range"), b = parse_size(parts[1], "--k-range");
  if (a < 1 || b < a) throw InputError("--k-range needs 1 <= FROM <= TO");
  return {a, b};
}

inline EssReport population_ess(const std::vector<VillageDesign>& designs, const DesignSpec& spec, double rho,
                                std::size_t draws, std::uint64_t seed, unsigned threads) {
  if (spec.variant == DesignVariant::single) return ess_offpolicy_ate_population(designs, rho, draws, seed, threads);
  return ess_population(designs, rho, draws, seed, threads);
}

inline int run_ess(const Common& c, const EssOptions& eo, std::ostream& out) {
  const DesignSpec spec = parse_design(c.design, parse_contrast(c.contrast));
  double rho = eo.rho;
  if (rho < 0.0) rho = spec.variant == DesignVariant::mixture && spec.rho > 0.0 && spec.rho < 1.0 ? spec.rho : 0.5;
  ojson cfg = common_config(c);
  cfg["k_range"] = eo.k_range;
  cfg["draws"] = eo.draws;
  cfg["rho"] = rho;
  ojson prov = provenance("ess", cfg, c.seed);
  Sink sink(c.out, out);

  if (!eo.k_range.empty()) {
    const auto [from, to] = parse_range(eo.k_range);
    ojson notes;
    const VillageCollection col = load_collection(c, &notes);
    csv_provenance(sink.get(), prov);
    sink.get() << "k,design,villages,n_eff,relative_efficiency\n";
    for (std::size_t k = from; k <= to; ++k) {
      const auto designs = build_designs(col, std::vector<std::size_t>(col.size(), k), spec, c.seed);
      const auto r = population_ess(designs, spec, rho, eo.draws, stream_key(c.seed, {0xe5, k}), c.threads);
      sink.get() << k << ',' << to_string(spec.variant) << ',' << r.n << ',' << std::setprecision(10) << r.n_eff
                 << ',' << r.relative_efficiency() << '\n';
    }
    return 0;
  }

  auto p = prepare(c, false);
  ojson doc = prov;
  doc["design"] = design_json(p->spec);
  doc["notes"] = p->notes;
  if (!p->seeds.empty()) {
    const auto obs = observations(*p, nullptr);
    const WeightTable t = compute_weights(obs, false);
    if (p->spec.variant == DesignVariant::single) {
      const auto& w = p->spec.single == Arm::B ? t.w_a : t.w_b;
      doc["kind"] = "offpolicy_ate_sample";
      doc["n_eff"] = num(ess_offpolicy_ate(w, rho));
      doc["n_eff_mean"] = num(ess_offpolicy_mean(w));
    } else {
      doc["kind"] = "ate_sample";
      doc["n_eff"] = num(ess_ate_sample(t.w_a, t.w_b, rho));
    }
    doc["villages"] = t.size();
    doc["rho"] = rho;
    doc["relative_efficiency"] = num(doc["n_eff"].is_null() ? kInf : doc["n_eff"].get<double>() / t.size());
  } else {
    const auto r = population_ess(p->designs, p->spec, rho, eo.draws, stream_key(c.seed, {0xe5}), c.threads);
    doc["kind"] = std::string(to_string(r.kind));
    doc["n_eff"] = num(r.n_eff);
    doc["villages"] = r.n;
    doc["rho"] = rho;
    doc["draws"] = eo.draws;
    doc["relative_efficiency"] = num(r.relative_efficiency());
  }
  sink.get() << doc.dump(2) << "\n";
  return 0;
}

struct DesignOptions {
  std::size_t entropy_draws = 2000;
  std::string assign_out;
};

inline int run_design(const Common& c, const DesignOptions& d, std::ostream& out) {
  auto p = prepare(c, false);
  ojson cfg = common_config(c);
  cfg["entropy_draws"] = d.entropy_draws;
  if (!d.assign_out.empty()) cfg["assign_out"] = d.assign_out;
  const ojson prov = provenance("design", cfg, c.seed);
  Sink sink(c.out, out);
  csv_provenance(sink.get(), prov);
  sink.get() << "village_id,n,k,log10_support_size,entropy,entropy_exact,approximate\n";
  for (std::size_t i = 0; i < p->col.size(); ++i) {
    const auto& v = p->col.villages[i];
    Rng rng = make_stream(c.seed, {0xe7, i});
    bool exact = false;
    const double h = p->designs[i].entropy(rng, d.entropy_draws, &exact);
    sink.get() << csv::quote(v.id) << ',' << v.graph.node_count() << ',' << p->ks[i] << ',' << std::setprecision(10)
               << p->designs[i].log10_support_size() << ',' << h << ',' << (exact ? "true" : "false") << ','
               << (p->designs[i].approximate() ? "true" : "false") << '\n';
  }
  if (!d.assign_out.empty()) {
    const auto draws = assign_and_sample(p->designs, stream_key(c.seed, {0xa5}));
    std::ofstream f(d.assign_out, std::ios::binary);
    if (!f) throw InputError("cannot write " + d.assign_out);
    csv_provenance(f, prov);
    f << "village_id,node_label,arm\n";
    for (std::size_t i = 0; i < draws.size(); ++i) {
      const auto& v = p->col.villages[i];
      const std::string arm =
          draws[i].z ? std::string(to_string(*draws[i].z == Arm::A ? p->spec.a : p->spec.b)) : std::string();
      for (NodeId u : draws[i].seeds.nodes())
        f << csv::quote(v.id) << ',' << csv::quote(v.graph.label(u)) << ',' << arm << '\n';
    }
  }
  return 0;
}

inline int run_summary(const Common& c, std::ostream& out) {
  ojson notes;
  const VillageCollection col = load_collection(c, &notes);
  const auto s = summary_stats(col);
  auto m = [](const Moments& x) { return ojson{{"mean", x.mean}, {"sd", x.sd}, {"min", x.min}, {"max", x.max}}; };
  ojson cfg = common_config(c);
  ojson doc = provenance("summary", cfg, c.seed);
  doc["villages"] = s.villages;
  doc["edges"] = m(s.edges);
  doc["nodes"] = m(s.nodes);
  doc["mean_in_degree"] = m(s.mean_in_degree);
  doc["sd_in_degree"] = m(s.sd_in_degree);
  doc["notes"] = notes;
  Sink sink(c.out, out);
  sink.get() << doc.dump(2) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// simulate: JSON sweep config -> tidy CSV
// ---------------------------------------------------------------------------

template <typename T>
std::vector<T> grid(const nlohmann::json& cfg, const char* key, std::vector<T> fallback) {
  if (!cfg.contains(key)) return fallback;
  const auto& v = cfg.at(key);
  if (v.is_array()) {
    if (v.empty()) throw InputError(std::string("simulate config: '") + key + "' must not be empty");
    return v.get<std::vector<T>>();
  }
  return {v.get<T>()};
}

struct SimulateOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  unsigned threads = 0;
};

inline int run_simulate(const SimulateOptions& so, std::ostream& out) {
  std::ifstream in(so.config);
  if (!in) throw InputError("cannot open sweep config: " + so.config);
  nlohmann::json cfg;
  try {
    in >> cfg;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("cannot parse " + so.config + ": " + e.what());
  }
  if (!cfg.is_object()) throw InputError("sweep config must be a JSON object");

  static const std::set<std::string> known{"model",      "alpha",       "beta",        "gamma",     "T",
                                           "p",          "direction",   "N",           "rho",       "design",
                                           "contrast",   "replicates",  "estimators",  "level",     "k",
                                           "oracle_reps", "with_replacement", "edges", "min_edges", "synthetic",
                                           "seed",       "ignore_seeds"};
  for (const auto& [key, value] : cfg.items())
    if (!known.count(key)) throw InputError("simulate config: unknown key '" + key + "'");

  try {
    const std::uint64_t seed = so.seed ? *so.seed : cfg.value("seed", std::uint64_t{0});
    const ModelKind model = parse_model(cfg.value("model", std::string("probit")));
    const Influence direction = parse_influence(cfg.value("direction", std::string("along")));
    const auto alphas = grid<double>(cfg, "alpha", {-3, -2, -1, 0});
    const auto betas = grid<double>(cfg, "beta", {0, 2, 4, 6, 8, 10});
    const auto gammas = grid<double>(cfg, "gamma", {0.0});
    const auto ps = grid<double>(cfg, "p", {0.1});
    const auto ns = grid<std::size_t>(cfg, "N", {50});
    const auto rhos = grid<double>(cfg, "rho", {0.5});
    const int T = cfg.value("T", 3);
    const std::string design_variant = cfg.value("design", std::string("mixture"));
    const Contrast contrast = parse_contrast(cfg.value("contrast", std::string("onehop,random")));
    const std::size_t replicates = cfg.value("replicates", std::size_t{1000});
    const double level = cfg.value("level", 0.9);
    const std::size_t k = cfg.value("k", std::size_t{2});
    const std::size_t oracle_reps = cfg.value("oracle_reps", std::size_t{1000});
    const bool with_replacement = cfg.value("with_replacement", false);
    const bool ignore_seeds = cfg.value("ignore_seeds", false);
    std::vector<EstimatorKind> estimators;
    for (const auto& e : grid<std::string>(cfg, "estimators", {"dm", "ht", "hajek"}))
      estimators.push_back(parse_estimator(e));

    VillageCollection col;
    if (cfg.contains("edges")) {
      Common c;
      c.edges = cfg.at("edges").get<std::string>();
      c.min_edges = cfg.value("min_edges", std::size_t{0});
      col = load_collection(c);
    } else {
      const auto syn = cfg.value("synthetic", nlohmann::json::object());
      col = generate_collection(syn.value("villages", std::size_t{150}), syn.value("seed", std::uint64_t{1}));
    }

    ojson echo = ojson::parse(cfg.dump());
    const ojson prov = provenance("simulate", echo, seed);
    Sink sink(so.out, out);
    auto& o = sink.get();
    csv_provenance(o, prov);
    o << "model,direction,alpha,beta,gamma,p,design,rho,N,k,replicates,estimator,metric,value\n";
    o << std::setprecision(12);

    std::vector<double> model_a = model == ModelKind::probit ? alphas : std::vector<double>{0.0};
    std::vector<double> model_b = model == ModelKind::probit ? betas : std::vector<double>{0.0};
    std::vector<double> model_g = model == ModelKind::probit ? gammas : std::vector<double>{0.0};
    std::vector<double> model_p = model == ModelKind::cascade ? ps : std::vector<double>{0.0};
    std::uint64_t cell = 0;
    for (double rho : rhos)
      for (std::size_t n : ns)
        for (double a : model_a)
          for (double b : model_b)
            for (double g : model_g)
              for (double p : model_p) {
                StudyConfig sc;
                sc.n_villages = n;
                sc.replicates = replicates;
                sc.k = k;
                sc.design = parse_design(design_variant == "mixture" ? "mixture:" + std::to_string(rho) : design_variant,
                                         contrast);
                sc.model.kind = model;
                sc.model.probit = {a, b, g, T, direction};
                sc.model.cascade = {p, direction};
                sc.model.ignore_seeds = ignore_seeds;
                sc.estimators = estimators;
                sc.level = level;
                sc.with_replacement = with_replacement;
                sc.oracle_reps = oracle_reps;
                sc.seed = stream_key(seed, {0xce11, cell++});
                sc.threads = so.threads;
                const StudyResult r = run_study(col, sc);
                std::ostringstream prefix;
                prefix << std::setprecision(12) << to_string(model) << ',' << to_string(direction) << ',' << a << ','
                       << b << ',' << g << ',' << p << ',' << to_string(sc.design.variant) << ',' << rho << ',' << n
                       << ',' << k << ',' << replicates << ',';
                o << prefix.str() << "truth,true_tau," << r.truth.tau << '\n';
                o << prefix.str() << "truth,true_tau_se," << r.truth.se << '\n';
                o << prefix.str() << "truth,mean_a," << r.truth.mean_a << '\n';
                o << prefix.str() << "truth,mean_b," << r.truth.mean_b << '\n';
                for (const auto& e : r.estimators) {
                  const std::string est = std::string(to_string(e.estimator));
                  const std::size_t ok = replicates - e.failures;
                  o << prefix.str() << est << ",failures," << e.failures << '\n';
                  if (ok == 0) continue;
                  o << prefix.str() << est << ",bias," << e.bias << '\n';
                  o << prefix.str() << est << ",rmse," << e.rmse << '\n';
                  o << prefix.str() << est << ",mean_se," << e.mean_se << '\n';
                  o << prefix.str() << est << ",coverage," << e.coverage << '\n';
                  o << prefix.str() << est << ",power," << e.power << '\n';
                }
              }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("simulate config: ") + e.what());
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

/// Runs one command line. Exit codes: 0 success, 1 invalid input or usage,
/// 2 numerical or degenerate-input failure.
inline int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"seedeval: evaluate and compare stochastic seeding strategies on village networks", "seedeval"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  Common probs_c, est_c, rt_c, ess_c, des_c, sum_c;
  EstimateOptions est_o;
  RandTestOptions rt_o;
  EssOptions ess_o;
  DesignOptions des_o;
  SimulateOptions sim_o;

  auto* probs = app.add_subcommand("probs", "per-village log-probabilities of observed seed sets (JSON lines)");
  add_common(probs, probs_c, true, false);

  auto* estimate = app.add_subcommand("estimate", "HT, Hajek and difference-in-means estimates (JSON)");
  add_common(estimate, est_c, true, true);
  estimate->add_option("--estimators", est_o.estimators, "comma list of hajek,ht,dm")->capture_default_str();
  estimate->add_option("--level", est_o.level, "confidence level")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  estimate->add_option("--bootstrap", est_o.bootstrap, "village bootstrap replicates (0 = off, else >= 200)");

  auto* rand_test = app.add_subcommand("rand-test", "Fisher randomization test of the sharp null (JSON)");
  add_common(rand_test, rt_c, true, true);
  rand_test->add_option("--replicates", rt_o.replicates, "randomization draws")->capture_default_str();
  rand_test->add_option("--statistic", rt_o.statistic, "studentized_hajek | hajek | studentized_ht | ht")
      ->capture_default_str();
  rand_test->add_option("--bins", rt_o.bins, "histogram bins for the null distribution")->capture_default_str();

  auto* ess = app.add_subcommand("ess", "effective sample size diagnostics (JSON, or CSV with --k-range)");
  add_common(ess, ess_c, true, false);
  ess->add_option("--k-range", ess_o.k_range, "FROM:TO sweep of seed counts (CSV output)");
  ess->add_option("--draws", ess_o.draws, "Monte Carlo seed sets per village")->capture_default_str();
  ess->add_option("--rho", ess_o.rho, "reference Bernoulli rho (default: design rho, else 0.5)");

  auto* design = app.add_subcommand("design", "support size and entropy of the design per village (CSV)");
  add_common(design, des_c, true, false);
  design->add_option("--entropy-draws", des_o.entropy_draws, "Monte Carlo draws when the support is too large")
      ->capture_default_str();
  design->add_option("--assign-out", des_o.assign_out, "also draw arms and seed sets and write them here");

  auto* simulate = app.add_subcommand("simulate", "simulation sweep from a JSON config (tidy CSV)");
  simulate->add_option("--config", sim_o.config, "sweep config JSON")->required()->check(CLI::ExistingFile);
  simulate->add_option("--seed", sim_o.seed, "master seed (overrides the config)");
  simulate->add_option("--out", sim_o.out, "output path (default stdout)");
  simulate->add_option("--threads", sim_o.threads, "worker threads");

  auto* summary = app.add_subcommand("summary", "collection summary statistics (JSON)");
  add_common(summary, sum_c, false, false);

  std::vector<std::string> argv_store{"seedeval"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code != 0) {
      const auto subs = app.get_subcommands();
      err << (subs.empty() ? app.help() : subs.front()->help());
      return 1;
    }
    return 0;
  }

  try {
    if (*probs) return run_probs(probs_c, out);
    if (*estimate) {
      if (est_o.bootstrap > 0 && est_o.bootstrap < 200) throw InputError("--bootstrap needs at least 200 replicates");
      return run_estimate(est_c, est_o, out, err);
    }
    if (*rand_test) return run_rand_test(rt_c, rt_o, out);
    if (*ess) return run_ess(ess_c, ess_o, out);
    if (*design) return run_design(des_c, des_o, out);
    if (*simulate) return run_simulate(sim_o, out);
    if (*summary) return run_summary(sum_c, out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

inline int dispatch(int argc, char** argv, std::ostream& out, std::ostream& err) {
  return dispatch(std::vector<std::string>(argv + 1, argv + argc), out, err);
}

}  // namespace seedeval::cli
