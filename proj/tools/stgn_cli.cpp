/*
 * Copyright 2026 The STGN Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// stgn: ingest, train, eval, cache-sim, sweep and report from one binary.
//
// Settings come from built-in defaults, then the INI file given by --config,
// then --set section.key=value flags, then the dedicated flags (--seed,
// --trace, --store, --checkpoint). Later sources win. Unknown keys are errors.

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "stgn/stgn.hpp"

namespace fs = std::filesystem;
using namespace stgn;

namespace {

using Settings = std::map<std::string, std::string>;

Settings defaults() {
  const ModelDims d;
  const TrainConfig t;
  const SimConfig s;
  auto str = [](auto v) {
    std::ostringstream o;
    o << v;
    return o.str();
  };
  return {
      {"run.seed", "0"},
      {"data.trace", ""},
      {"data.embedding", ""},
      {"data.d_v", str(d.d_v)},
      {"data.d_e", str(d.d_e)},
      {"data.min_requests", "4"},
      {"data.min_duration", "180"},
      {"model.variant", "M2-STGN-L+U+SPE"},
      {"model.layers", str(t.layers)},
      {"model.neighbors", str(t.neighbors)},
      {"model.d_m", str(d.d_m)},
      {"model.d_T", str(d.d_T)},
      {"model.d_h", str(d.d_h)},
      {"model.d_emb", str(d.d_emb)},
      {"model.d_f", str(d.d_f)},
      {"model.d_attn", str(d.d_attn)},
      {"model.n_heads", str(d.n_heads)},
      {"model.d_key", str(d.d_key)},
      {"model.d_aoi", str(d.d_aoi)},
      {"model.spe_fourier", str(d.spe_fourier)},
      {"model.spe_in", str(d.spe_in)},
      {"model.spe_mid", str(d.spe_mid)},
      {"model.d_dec", str(d.d_dec)},
      {"model.message_capacity", str(t.message_capacity)},
      {"model.message_time_scale", str(t.message_time_scale)},
      {"model.aoi_capacity", str(t.aoi.capacity)},
      {"model.aoi_max_age", str(t.aoi.max_age)},
      {"train.epochs", str(t.epochs)},
      {"train.batch_size", str(t.batch_size)},
      {"train.learning_rate", str(t.learning_rate)},
      {"train.negatives", str(t.negatives)},
      {"eval.mode", "both"},
      {"eval.scorer", "model"},
      {"eval.range", "test"},
      {"eval.batch_size", "200"},
      {"cache.delta_P", str(s.delta_P)},
      {"cache.delta_p", str(s.delta_p)},
      {"cache.p_thre", str(s.p_thre)},
      {"cache.tiers", "5,7,8"},
      {"cache.window_h", "50"},
      {"cache.hours", str(s.hours)},
      {"cache.start", ""},
      {"cache.batch_size", "200"},
      {"sweep.p_thre", "0.9,0.99,0.995"},
      {"sweep.delta_p", "60,300"},
      {"sweep.window_h", "50"},
  };
}

void set_key(Settings& s, const std::string& key, const std::string& value) {
  STGN_CHECK(s.count(key) == 1, "unknown config key '" + key + "'");
  s[key] = value;
}

void load_ini(Settings& s, const std::string& path) {
  STGN_CHECK(fs::exists(path), "config file not found: " + path);
  boost::property_tree::ptree pt;
  try {
    boost::property_tree::read_ini(path, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error("cannot parse config " + path + ": " + e.what());
  }
  for (const auto& [section, body] : pt) {
    STGN_CHECK(!body.empty(), "config " + path + ": key '" + section + "' outside a section");
    for (const auto& [key, value] : body) {
      set_key(s, section + "." + key, value.get_value<std::string>());
    }
  }
}

void write_resolved(const Settings& s, const fs::path& dir) {
  boost::property_tree::ptree pt;
  for (const auto& [k, v] : s) pt.put(k, v);
  std::ostringstream out;
  boost::property_tree::write_ini(out, pt);
  write_text((dir / "resolved_config.ini").string(), out.str());
}

std::size_t as_size(const Settings& s, const std::string& k) {
  const auto& v = s.at(k);
  std::size_t pos = 0;
  unsigned long long x = 0;
  try {
    x = std::stoull(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  STGN_CHECK(pos == v.size() && !v.empty() && v[0] != '-',
             "config key " + k + " needs a non-negative integer, got '" + v + "'");
  return static_cast<std::size_t>(x);
}

double to_double(const std::string& k, const std::string& v) {
  std::size_t pos = 0;
  double x = 0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  STGN_CHECK(pos == v.size() && !v.empty(), "config key " + k + " needs a number, got '" + v + "'");
  return x;
}

double as_double(const Settings& s, const std::string& k) { return to_double(k, s.at(k)); }

std::vector<double> as_list(const Settings& s, const std::string& k) {
  std::vector<double> out;
  std::stringstream in(s.at(k));
  std::string tok;
  while (std::getline(in, tok, ',')) out.push_back(to_double(k, tok));
  STGN_CHECK(!out.empty(), "config key " + k + " needs at least one value");
  return out;
}

// ------------------------------------------------------------ artifacts

struct StoreDir {
  EventStore store;
  ChronoSplit split;
};

StoreDir load_store(const std::string& dir) {
  STGN_CHECK(!dir.empty(), "--store is required");
  const auto sp = fs::path(dir) / "store.json";
  STGN_CHECK(fs::exists(sp), "no store at " + sp.string());
  StoreDir d;
  d.store = store_from_json(read_json(sp.string()));
  d.split = split_from_json(read_json((fs::path(dir) / "split.json").string()));
  return d;
}

GenreEmbeddingTable semantic_table(const EventStore& store, const std::string& source) {
  if (source.empty() || source == "one-hot") return GenreEmbeddingTable::one_hot(store.catalog());
  return GenreEmbeddingTable::load(source);
}

TrainConfig train_config(const Settings& s, const EventStore& store) {
  TrainConfig c;
  auto& d = c.dims;
  d.d_v = store.catalog().user_raw_features.empty() ? as_size(s, "data.d_v")
                                                    : store.catalog().user_raw_features[0].size();
  d.d_e = store.size() > 0 ? store.event(0).edge_features.size() : as_size(s, "data.d_e");
  d.d_m = as_size(s, "model.d_m");
  d.d_T = as_size(s, "model.d_T");
  d.d_h = as_size(s, "model.d_h");
  d.d_emb = as_size(s, "model.d_emb");
  d.d_f = as_size(s, "model.d_f");
  d.d_attn = as_size(s, "model.d_attn");
  d.n_heads = as_size(s, "model.n_heads");
  d.d_key = as_size(s, "model.d_key");
  d.d_aoi = as_size(s, "model.d_aoi");
  d.spe_fourier = as_size(s, "model.spe_fourier");
  d.spe_in = as_size(s, "model.spe_in");
  d.spe_mid = as_size(s, "model.spe_mid");
  d.d_dec = as_size(s, "model.d_dec");
  c.flags = parse_variant(s.at("model.variant"));
  c.layers = as_size(s, "model.layers");
  c.neighbors = as_size(s, "model.neighbors");
  c.message_capacity = as_size(s, "model.message_capacity");
  c.message_time_scale = as_double(s, "model.message_time_scale");
  c.aoi.capacity = as_size(s, "model.aoi_capacity");
  c.aoi.max_age = as_double(s, "model.aoi_max_age");
  c.epochs = as_size(s, "train.epochs");
  c.batch_size = as_size(s, "train.batch_size");
  c.learning_rate = as_double(s, "train.learning_rate");
  c.negatives = as_size(s, "train.negatives");
  c.seed = as_size(s, "run.seed");
  c.validate();
  return c;
}

SimConfig sim_config(const Settings& s) {
  SimConfig c;
  c.delta_P = as_double(s, "cache.delta_P");
  c.delta_p = as_double(s, "cache.delta_p");
  c.p_thre = as_list(s, "cache.p_thre").front();
  c.tier_capacities.clear();
  for (double x : as_list(s, "cache.tiers")) {
    STGN_CHECK(x >= 1 && x == std::floor(x), "cache.tiers needs positive integers");
    c.tier_capacities.push_back(static_cast<std::size_t>(x));
  }
  c.candidate_window = as_double(s, "cache.window_h") * 3600;
  c.hours = as_size(s, "cache.hours");
  c.validate();
  return c;
}

// A trained model bound to a store, with its semantic inputs.
struct Loaded {
  Checkpoint ck;
  std::unique_ptr<Model> model;
  GenreEmbeddingTable table;
  std::vector<SemanticSet> sets;
  json raw;
};

Loaded load_checkpoint(const std::string& path, const EventStore& store) {
  STGN_CHECK(!path.empty(), "--checkpoint is required");
  STGN_CHECK(fs::exists(path), "checkpoint not found: " + path);
  Loaded l;
  l.raw = read_json(path);
  l.ck = checkpoint_from_json(l.raw);
  const auto& d = l.ck.config.dims;
  STGN_CHECK(!store.catalog().user_raw_features.empty() &&
                 store.catalog().user_raw_features[0].size() == d.d_v &&
                 store.event(0).edge_features.size() == d.d_e,
             "checkpoint " + path + " does not match the store's feature widths");
  if (l.ck.config.flags.uses_semantics()) {
    l.table = semantic_table(store, l.ck.semantic_source);
    STGN_CHECK(l.table.width() == l.ck.semantic_width,
               "checkpoint " + path + " expects genre vectors of width " +
                   std::to_string(l.ck.semantic_width));
    l.sets = encode_genres(store.catalog(), l.table);
  }
  l.model = std::make_unique<Model>(l.ck.config, l.ck.semantic_width);
  load_params(*l.model, l.ck.params);
  return l;
}

// Refuses a checkpoint whose model does not hash like the configured one.
void require_matching_config(const Loaded& l, const Settings& s, const EventStore& store) {
  const auto want = model_config_hash(train_config(s, store));
  STGN_CHECK(l.ck.config_hash == want, "checkpoint config hash " + l.ck.config_hash +
                                           " does not match the configured model (" + want +
                                           "); refusing to run");
}

EventRange pick_range(const ChronoSplit& split, const std::string& which) {
  if (which == "test") return split.test;
  if (which == "val") return split.val;
  if (which == "train") return split.train;
  throw Error("eval.range must be train, val or test, got '" + which + "'");
}

std::vector<EvalMode> eval_modes(const std::string& m) {
  if (m == "both") return {EvalMode::Transductive, EvalMode::Inductive};
  return {parse_eval_mode(m)};
}

Timestamp cache_start(const Settings& s, const StoreDir& d) {
  if (!s.at("cache.start").empty()) return as_double(s, "cache.start");
  STGN_CHECK(d.split.test.size() > 0, "empty test split; set cache.start");
  return d.store.event(d.split.test.begin).timestamp;
}

// ---------------------------------------------------------- CSV helpers

std::string fmt_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string csv_header(std::size_t hours) {
  std::string h =
      "config-hash,p_thre,delta_p,window_h,tier1_hits,tier2_hits,tier3_hits,misses,h_overall";
  for (std::size_t k = 0; k < hours; ++k) h += ",h_per_hour_" + std::to_string(k);
  return h + "\n";
}

std::string csv_row(const std::string& hash, const std::string& p_thre, const SimConfig& c,
                    const HitReport& r) {
  std::string s = hash + "," + p_thre + "," + fmt_real(c.delta_p) + "," +
                  fmt_real(c.candidate_window / 3600);
  for (std::size_t t = 0; t < 3; ++t) {
    s += "," + std::to_string(t < r.tier_hits.size() ? r.tier_hits[t] : 0);
  }
  s += "," + std::to_string(r.misses) + "," + fmt_real(r.h);
  for (Real h : r.h_per_hour) s += "," + fmt_real(h);
  return s + "\n";
}

std::string sim_hash(const std::string& model_hash, const SimConfig& c) {
  return hash_json({{"model", model_hash}, {"sim", to_json(c)}});
}

// ------------------------------------------------------------- commands

struct Globals {
  std::string config;
  std::string out = ".";
  std::vector<std::string> sets;
  std::optional<std::size_t> seed;
  std::string trace, store, checkpoint;
  std::vector<std::string> checkpoints;
  bool lattice = false;
};

Settings resolve(const Globals& g) {
  auto s = defaults();
  if (!g.config.empty()) load_ini(s, g.config);
  for (const auto& kv : g.sets) {
    const auto eq = kv.find('=');
    STGN_CHECK(eq != std::string::npos, "--set expects key=value, got '" + kv + "'");
    set_key(s, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (g.seed) s["run.seed"] = std::to_string(*g.seed);
  if (!g.trace.empty()) s["data.trace"] = g.trace;
  return s;
}

fs::path out_dir(const Globals& g, const Settings& s) {
  fs::path d(g.out);
  fs::create_directories(d);
  write_resolved(s, d);
  return d;
}

int cmd_ingest(const Globals& g) {
  const auto s = resolve(g);
  const auto& path = s.at("data.trace");
  STGN_CHECK(!path.empty(), "no trace given (--trace or data.trace)");
  STGN_CHECK(fs::exists(path), "trace file not found: " + path);
  const auto dir = out_dir(g, s);
  auto raw = read_trace_file(path);
  spdlog::info("read {} records ({} malformed) from {}", raw.records.size(), raw.malformed, path);
  IngestOptions io;
  io.d_v = as_size(s, "data.d_v");
  io.d_e = as_size(s, "data.d_e");
  io.seed = as_size(s, "run.seed");
  io.min_requests = as_size(s, "data.min_requests");
  io.min_duration = as_double(s, "data.min_duration");
  auto res = ingest_trace(raw.records, io, raw.malformed, raw.rejects);
  const auto split = chronological_split(res.store);
  const auto store_json = to_json(res.store);
  write_json((dir / "store.json").string(), store_json);
  write_json((dir / "split.json").string(), to_json(split));
  write_json((dir / "ingest_report.json").string(), to_json(res.report));
  write_json((dir / "manifest.json").string(),
             {{"store_hash", hash_json(store_json)},
              {"events", res.store.size()},
              {"users", res.store.num_users()},
              {"items", res.store.num_items()},
              {"split", to_json(split)}});
  spdlog::info("kept {} events, {} users, {} items", res.report.kept_events, res.report.users,
               res.report.items);
  return 0;
}

int cmd_train(const Globals& g) {
  const auto s = resolve(g);
  auto d = load_store(g.store);
  const auto cfg = train_config(s, d.store);
  const auto source = s.at("data.embedding").empty() ? std::string("one-hot") : s.at("data.embedding");
  GenreEmbeddingTable table;
  std::vector<SemanticSet> sets;
  std::size_t width = 0;
  if (cfg.flags.uses_semantics()) {
    table = semantic_table(d.store, source);
    sets = encode_genres(d.store.catalog(), table);
    width = table.width();
  }
  const auto dir = out_dir(g, s);
  Model m(cfg, width);
  Engine e(m, d.store, cfg.flags.uses_semantics() ? &sets : nullptr);
  spdlog::info("training {} on {} events for {} epochs", variant_label(cfg.flags),
               d.split.train.size(), cfg.epochs);
  const auto t0 = std::chrono::steady_clock::now();
  auto res = train(m, e, d.split.train, [](const EpochRecord& r) {
    spdlog::info("epoch {} mean loss {:.6f} ({:.1f} s)", r.epoch, r.mean_loss, r.seconds);
  });
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json curve = json::array(), times = json::array();
  for (const auto& r : res.curve) {
    curve.push_back({{"epoch", r.epoch}, {"loss", r.loss}, {"mean_loss", r.mean_loss},
                     {"batches", r.batches}});
    times.push_back(r.seconds);
  }
  auto ck = checkpoint_json(m, source);
  ck["metadata"] = {{"training_seconds", secs}, {"aborted", res.aborted}};
  write_json((dir / "checkpoint.json").string(), ck);
  write_json((dir / "curve.json").string(),
             {{"config_hash", model_config_hash(cfg)},
              {"curve", curve},
              {"metadata", {{"epoch_seconds", times}}}});
  write_json((dir / "memory.json").string(), memory_json(e, model_config_hash(cfg)));
  if (res.aborted) {
    spdlog::error("training aborted: {} (last finite parameters saved)", res.message);
    return 1;
  }
  return 0;
}

int cmd_eval(const Globals& g) {
  const auto s = resolve(g);
  auto d = load_store(g.store);
  EvalOptions eo;
  eo.scorer = parse_scorer(s.at("eval.scorer"));
  eo.seed = as_size(s, "run.seed");
  eo.batch_size = as_size(s, "eval.batch_size");
  std::optional<Loaded> l;
  std::unique_ptr<Engine> e;
  std::string hash = "none";
  if (eo.scorer == ScorerKind::Model) {
    l = load_checkpoint(g.checkpoint, d.store);
    require_matching_config(*l, s, d.store);
    hash = l->ck.config_hash;
    e = std::make_unique<Engine>(*l->model, d.store,
                                 l->ck.config.flags.uses_semantics() ? &l->sets : nullptr);
  }
  const auto dir = out_dir(g, s);
  const auto range = pick_range(d.split, s.at("eval.range"));
  std::string lines;
  json all = json::array();
  for (auto mode : eval_modes(s.at("eval.mode"))) {
    auto r = evaluate(e.get(), d.store, d.split, range, mode, eo);
    auto j = to_json(r);
    j["scorer"] = s.at("eval.scorer");
    j["range"] = s.at("eval.range");
    j["config_hash"] = hash;
    spdlog::info("{}: AP {:.4f} AUC {:.4f} over {} events", to_string(mode), r.ap, r.auc,
                 r.n_events);
    lines += j.dump() + "\n";
    all.push_back(j);
  }
  write_text((dir / "metrics.jsonl").string(), lines);
  write_json((dir / "eval.json").string(), {{"reports", all}});
  return 0;
}

struct CacheInputs {
  StoreDir d;
  Loaded l;
  std::unique_ptr<Engine> e;
  Timestamp start = 0;
};

void prepare_cache(CacheInputs& c, const Globals& g, const Settings& s) {
  c.d = load_store(g.store);
  c.l = load_checkpoint(g.checkpoint, c.d.store);
  require_matching_config(c.l, s, c.d.store);
  c.e = std::make_unique<Engine>(*c.l.model, c.d.store,
                                 c.l.ck.config.flags.uses_semantics() ? &c.l.sets : nullptr);
  c.start = cache_start(s, c.d);
}

int cmd_cache_sim(const Globals& g) {
  const auto s = resolve(g);
  CacheInputs c;
  prepare_cache(c, g, s);
  const auto cfg = sim_config(s);
  const auto thresholds = as_list(s, "cache.p_thre");
  const auto dir = out_dir(g, s);
  spdlog::info("cache simulation from t={} over {} periods", c.start, cfg.hours);
  auto run = run_caching(*c.e, c.start, cfg, thresholds, as_size(s, "cache.batch_size"));
  std::string csv = csv_header(cfg.hours);
  json rows = json::array();
  for (std::size_t t = 0; t < thresholds.size(); ++t) {
    auto cc = cfg;
    cc.p_thre = thresholds[t];
    const auto h = sim_hash(c.l.ck.config_hash, cc);
    csv += csv_row(h, fmt_real(thresholds[t]), cc, run.model[t]);
    rows.push_back({{"config_hash", h}, {"policy", "model"}, {"config", to_json(cc)},
                    {"report", to_json(run.model[t])}});
    spdlog::info("p_thre {}: h = {:.4f} (LRU {:.4f})", thresholds[t], run.model[t].h, run.lru.h);
  }
  const auto lh = sim_hash("lru", cfg);
  csv += csv_row(lh, "lru", cfg, run.lru);
  rows.push_back({{"config_hash", lh}, {"policy", "lru"}, {"config", to_json(cfg)},
                  {"report", to_json(run.lru)}});
  write_text((dir / "cache_sim.csv").string(), csv);
  // one row per simulated hour, first threshold against LRU
  std::string hourly = "hour,requests,model_hits,model_h,lru_hits,lru_h\n";
  const auto& m = run.model.front();
  for (std::size_t k = 0; k < cfg.hours; ++k) {
    hourly += std::to_string(k) + "," + std::to_string(m.requests_per_hour[k]) + "," +
              std::to_string(m.hits_per_hour[k]) + "," + fmt_real(m.h_per_hour[k]) + "," +
              std::to_string(run.lru.hits_per_hour[k]) + "," + fmt_real(run.lru.h_per_hour[k]) +
              "\n";
  }
  write_text((dir / "cache_sim_hourly.csv").string(), hourly);
  write_json((dir / "cache_sim.json").string(),
             {{"start", c.start}, {"candidates", run.candidates.size()}, {"rows", rows}});
  return 0;
}

int cmd_sweep(const Globals& g) {
  const auto s = resolve(g);
  CacheInputs c;
  prepare_cache(c, g, s);
  const auto base = sim_config(s);
  SweepGrid grid;
  grid.p_thre = as_list(s, "sweep.p_thre");
  for (double x : as_list(s, "sweep.delta_p")) grid.delta_p.push_back(x);
  for (double x : as_list(s, "sweep.window_h")) grid.candidate_window.push_back(x * 3600);
  const auto dir = out_dir(g, s);
  const auto batch = as_size(s, "cache.batch_size");
  auto rows = sweep(base, grid, [&](const SimConfig& cfg, const std::vector<Real>& ps) {
    spdlog::info("sweep cell delta_p={} window={}h", cfg.delta_p, cfg.candidate_window / 3600);
    return run_caching(*c.e, c.start, cfg, ps, batch).model;
  });
  std::string csv = csv_header(base.hours);
  json out = json::array();
  for (const auto& r : rows) {
    const auto h = sim_hash(c.l.ck.config_hash, r.config);
    csv += csv_row(h, fmt_real(r.config.p_thre), r.config, r.report);
    out.push_back({{"config_hash", h}, {"config", to_json(r.config)}, {"report", to_json(r.report)}});
  }
  write_text((dir / "sweep.csv").string(), csv);
  write_json((dir / "sweep.json").string(), {{"start", c.start}, {"rows", out}});
  return 0;
}

int cmd_report(const Globals& g) {
  const auto s = resolve(g);
  auto d = load_store(g.store);
  STGN_CHECK(!g.checkpoints.empty() || g.lattice, "report needs --checkpoint or --lattice");
  EvalOptions eo;
  eo.seed = as_size(s, "run.seed");
  eo.batch_size = as_size(s, "eval.batch_size");
  const auto range = pick_range(d.split, s.at("eval.range"));
  std::vector<ReportRow> rows;
  std::string source = "one-hot";
  json runs = json::array();
  for (const auto& path : g.checkpoints) {
    auto l = load_checkpoint(path, d.store);
    if (rows.empty() && l.ck.config.flags.uses_semantics()) source = l.ck.semantic_source;
    Engine e(*l.model, d.store, l.ck.config.flags.uses_semantics() ? &l.sets : nullptr);
    ReportRow r;
    r.label = variant_label(l.ck.config.flags);
    r.transductive = evaluate(&e, d.store, d.split, range, EvalMode::Transductive, eo);
    try {
      r.inductive = evaluate(&e, d.store, d.split, range, EvalMode::Inductive, eo);
    } catch (const Error& ex) {
      spdlog::warn("{}: no inductive score ({})", path, ex.what());
    }
    if (l.raw.contains("metadata")) {
      r.training_seconds = l.raw["metadata"].value("training_seconds", std::nan(""));
    }
    spdlog::info("{}: transductive AP {:.4f}", r.label, r.transductive->ap);
    runs.push_back({{"checkpoint", path},
                    {"variant", r.label},
                    {"config_hash", l.ck.config_hash},
                    {"transductive", to_json(*r.transductive)},
                    {"inductive", r.inductive ? to_json(*r.inductive) : json(nullptr)}});
    rows.push_back(std::move(r));
  }
  if (g.lattice) rows = lattice_report(rows);
  const auto dir = out_dir(g, s);
  write_text((dir / "report.md").string(), render_report_table(rows));
  write_json((dir / "report.json").string(), {{"rows", runs}});
  // genre similarity over the vocabulary, in sorted token order
  const auto table = semantic_table(d.store, source);
  std::set<std::string> vocab;
  for (const auto& gs : d.store.catalog().item_genres) vocab.insert(gs.begin(), gs.end());
  auto sim = genre_similarity_matrix(table, {vocab.begin(), vocab.end()});
  for (const auto& w : sim.warnings) spdlog::warn("{}", w);
  write_text((dir / "genre_similarity.csv").string(), similarity_csv(sim));
  return 0;
}

spdlog::level::level_enum log_level() {
  const char* v = std::getenv("STGN_LOG_LEVEL");
  return v ? spdlog::level::from_str(v) : spdlog::level::info;
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("stgn");
  spdlog::set_default_logger(logger);
  spdlog::set_level(log_level());

  CLI::App app{"STGN temporal graph models and cache simulation"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "INI settings file");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--set", g.sets, "override one setting, section.key=value")
      ->allow_extra_args(false);
  app.add_option("--seed", g.seed, "run seed (overrides run.seed)");

  auto* ingest = app.add_subcommand("ingest", "filter a trace into an event store");
  ingest->add_option("--trace", g.trace, "trace file (overrides data.trace)");
  auto* trn = app.add_subcommand("train", "train a variant on the training split");
  auto* ev = app.add_subcommand("eval", "score a split with AP and AUC");
  auto* cs = app.add_subcommand("cache-sim", "24 h three-tier cache simulation");
  auto* sw = app.add_subcommand("sweep", "cache simulation over a parameter grid");
  auto* rep = app.add_subcommand("report", "comparison table and genre similarity");
  for (auto* c : {trn, ev, cs, sw, rep}) c->add_option("--store", g.store, "ingest output directory");
  for (auto* c : {ev, cs, sw}) c->add_option("--checkpoint", g.checkpoint, "checkpoint.json");
  rep->add_option("--checkpoint", g.checkpoints, "checkpoint.json, repeatable")
      ->allow_extra_args(false);
  rep->add_flag("--lattice", g.lattice, "one row per variant of the lattice");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*ingest) return cmd_ingest(g);
    if (*trn) return cmd_train(g);
    if (*ev) return cmd_eval(g);
    if (*cs) return cmd_cache_sim(g);
    if (*sw) return cmd_sweep(g);
    if (*rep) return cmd_report(g);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 1;
}
