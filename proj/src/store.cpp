#include "patcard/store.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "patcard/sql.hpp"

namespace patcard {

//---------------------------------------------------------------------------
// Names and config plumbing
//---------------------------------------------------------------------------

const char* fit_mode_name(FitMode m) {
  return m == FitMode::Local ? "local" : "cached";
}

FitMode fit_mode_from_name(const std::string& s) {
  if (s == "local") return FitMode::Local;
  if (s == "cached") return FitMode::Cached;
  throw ConfigError("unknown fit_mode: " + s);
}

const char* learner_name(LearnerKind k) {
  switch (k) {
    case LearnerKind::Lwlr: return "lwlr";
    case LearnerKind::Rbf: return "rbf";
    case LearnerKind::Gbdt: return "gbdt";
  }
  throw InternalError("bad learner kind");
}

LearnerKind learner_from_name(const std::string& s) {
  if (s == "lwlr") return LearnerKind::Lwlr;
  if (s == "rbf") return LearnerKind::Rbf;
  if (s == "gbdt") return LearnerKind::Gbdt;
  throw ConfigError("unknown learner: " + s);
}

const char* provenance_name(int level) {
  switch (level) {
    case 3: return "level3";
    case 2: return "level2";
    case 1: return "level1";
    case 0: return "heuristic";
  }
  throw InternalError("bad provenance level");
}

StoreConfig StoreConfig::defaults() {
  StoreConfig c;
  const uint32_t betas[3] = {100, 50, 10};
  for (int k = 0; k < 3; ++k) {
    c.levels[k].level_id = k + 1;
    c.levels[k].pattern_feats = default_pattern_feats(k + 1);
    c.levels[k].learn_feats = default_learn_feats(k + 1);
    c.levels[k].beta = betas[k];
  }
  c.bias = {{1, {0.57, 1.57}},
            {2, {0.83, 20.20}},
            {3, {0.93, 1361.38}},
            {4, {0.98, 68655.97}}};
  return c;
}

namespace {

nlohmann::json attr_set_json(const AttrKeySet& s) {
  nlohmann::json out = nlohmann::json::array();
  for (const AttrKey& k : s)
    out.push_back({{"type", node_type_name(k.type)}, {"name", k.name}});
  return out;
}

AttrKeySet attr_set_from_json(const nlohmann::json& j) {
  AttrKeySet out;
  for (const auto& e : j) {
    AttrKey k{node_type_from_name(e.at("type").get<std::string>()),
              e.at("name").get<std::string>()};
    require_registered(k);
    out.push_back(k);
  }
  return out;
}

nlohmann::json spec_set_json(const FeatureSpecSet& s) {
  nlohmann::json out = nlohmann::json::array();
  for (const FeatureExtractorSpec& f : s)
    out.push_back({{"type", node_type_name(f.key.type)},
                   {"name", f.key.name},
                   {"extractor", extractor_name(f.id)}});
  return out;
}

FeatureSpecSet spec_set_from_json(const nlohmann::json& j) {
  FeatureSpecSet out;
  for (const auto& e : j) {
    FeatureExtractorSpec f;
    f.key = {node_type_from_name(e.at("type").get<std::string>()),
             e.at("name").get<std::string>()};
    require_registered(f.key);
    f.id = extractor_from_name(e.at("extractor").get<std::string>());
    out.push_back(f);
  }
  return out;
}

uint16_t hash_fp16(const Digest256& h) {
  return static_cast<uint16_t>((static_cast<uint16_t>(h[0]) << 8) | h[1]);
}

}  // namespace

nlohmann::json StoreConfig::to_json() const {
  nlohmann::json out;
  out["levels"] = nlohmann::json::array();
  for (const LevelConfig& l : levels) {
    out["levels"].push_back({{"level", l.level_id},
                             {"beta", l.beta},
                             {"fit_mode", fit_mode_name(l.fit_mode)},
                             {"learner", learner_name(l.learner)},
                             {"pattern_feats", attr_set_json(l.pattern_feats)},
                             {"learn_feats", spec_set_json(l.learn_feats)}});
  }
  out["refit_interval"] = refit_interval;
  out["l2"] = fmt_double(l2);
  out["gbdt"] = {{"rounds", gbdt.rounds},
                 {"max_depth", gbdt.max_depth},
                 {"learning_rate", fmt_double(gbdt.learning_rate)},
                 {"min_samples_leaf", gbdt.min_samples_leaf}};
  out["sigma_floor"] = fmt_double(kernel_floor.sigma);
  out["bias"] = nlohmann::json::object();
  for (const auto& [n, e] : bias)
    out["bias"][std::to_string(n)] = {{"p", fmt_double(e.p)}, {"m", fmt_double(e.m)}};
  out["bias_online"] = bias_online;
  out["bias_min_pairs"] = bias_min_pairs;
  out["seed"] = seed;
  out["max_bucket_rows"] = max_bucket_rows;
  return out;
}

namespace {

double json_num(const nlohmann::json& j) {
  if (j.is_string()) {
    double v;
    if (!parse_f64(j.get<std::string>(), v)) throw ConfigError("bad number in config");
    return v;
  }
  return j.get<double>();
}

}  // namespace

StoreConfig StoreConfig::from_json(const nlohmann::json& j) {
  StoreConfig c = defaults();
  if (j.is_null()) return c;
  if (!j.is_object()) throw ConfigError("store config must be a JSON object");

  if (j.contains("levels")) {
    for (const auto& jl : j["levels"]) {
      const int id = jl.at("level").get<int>();
      if (id < 1 || id > 3) throw ConfigError("level must be 1, 2 or 3");
      LevelConfig& l = c.levels[id - 1];
      if (jl.contains("beta")) l.beta = jl["beta"].get<uint32_t>();
      if (l.beta == 0) throw ConfigError("beta must be positive");
      if (jl.contains("fit_mode"))
        l.fit_mode = fit_mode_from_name(jl["fit_mode"].get<std::string>());
      if (jl.contains("learner"))
        l.learner = learner_from_name(jl["learner"].get<std::string>());
      if (jl.contains("pattern_feats"))
        l.pattern_feats = attr_set_from_json(jl["pattern_feats"]);
      if (jl.contains("learn_feats"))
        l.learn_feats = spec_set_from_json(jl["learn_feats"]);
    }
  }
  if (j.contains("refit_interval")) c.refit_interval = j["refit_interval"].get<uint32_t>();
  if (c.refit_interval == 0) throw ConfigError("refit_interval must be positive");
  if (j.contains("l2")) c.l2 = json_num(j["l2"]);
  if (j.contains("gbdt")) {
    const auto& g = j["gbdt"];
    if (g.contains("rounds")) c.gbdt.rounds = g["rounds"].get<uint32_t>();
    if (g.contains("max_depth")) c.gbdt.max_depth = g["max_depth"].get<uint32_t>();
    if (g.contains("learning_rate")) c.gbdt.learning_rate = json_num(g["learning_rate"]);
    if (g.contains("min_samples_leaf"))
      c.gbdt.min_samples_leaf = g["min_samples_leaf"].get<uint32_t>();
  }
  if (j.contains("sigma_floor")) c.kernel_floor.sigma = json_num(j["sigma_floor"]);
  if (j.contains("bias")) {
    c.bias.clear();
    for (const auto& [key, je] : j["bias"].items()) {
      int64_t n;
      if (!parse_i64(key, n) || n < 1) throw ConfigError("bias keys are join counts >= 1");
      c.bias[static_cast<uint32_t>(n)] = {json_num(je.at("p")), json_num(je.at("m"))};
    }
  }
  if (j.contains("bias_online")) c.bias_online = j["bias_online"].get<bool>();
  if (j.contains("bias_min_pairs")) c.bias_min_pairs = j["bias_min_pairs"].get<uint32_t>();
  if (j.contains("seed")) c.seed = j["seed"].get<uint64_t>();
  if (j.contains("max_bucket_rows")) c.max_bucket_rows = j["max_bucket_rows"].get<uint64_t>();

  for (const auto& [n, e] : c.bias) {
    if (!(e.p >= 0 && e.p <= 1)) throw ConfigError("bias p must lie in [0,1]");
    if (!(e.m >= 1) || !std::isfinite(e.m)) throw ConfigError("bias m must be >= 1");
  }
  return c;
}

//---------------------------------------------------------------------------
// Bucket model
//---------------------------------------------------------------------------

double BucketModel::predict(const std::vector<double>& raw_x, double l2) const {
  if (raw_x.size() != mean.size()) throw DimMismatch("feature dim changed between rows");
  std::vector<double> xs(raw_x.size());
  for (size_t i = 0; i < raw_x.size(); ++i) xs[i] = (raw_x[i] - mean[i]) * scale[i];

  const KernelParams kp{sigma};
  if (rbf_only || kind == LearnerKind::Rbf) return predict_rbf(rows, xs.data(), kp);
  if (kind == LearnerKind::Gbdt) return gbdt.predict(xs.data());
  // lwlr
  if (fit_mode == FitMode::Cached) return ridge.predict(xs.data());
  try {
    return fit_lwlr(rows, xs.data(), kp, l2).predict(xs.data());
  } catch (const SingularSystem&) {
    return predict_rbf(rows, xs.data(), kp);
  }
}

void EstimatorStore::refit_bucket_locked(PatternBucket& b, const LevelConfig& level) const {
  auto m = std::make_shared<BucketModel>();
  m->kind = level.learner;
  m->fit_mode = level.fit_mode;
  const size_t n = b.history.rows();
  const size_t d = b.history.dim;

  // freeze standardization from the running moments; constant features
  // pass through untouched
  m->mean.assign(d, 0.0);
  m->scale.assign(d, 1.0);
  if (b.seen >= 2) {
    for (size_t i = 0; i < d; ++i) {
      const double var = b.run_m2[i] / static_cast<double>(b.seen - 1);
      if (var > 1e-24) {
        m->mean[i] = b.run_mean[i];
        m->scale[i] = 1.0 / std::sqrt(var);
      }
    }
  }

  m->rows.dim = d;
  m->rows.xs.resize(n * d);
  m->rows.ys = b.history.ys;
  for (size_t r = 0; r < n; ++r) {
    const double* src = b.history.row(r);
    double* dst = m->rows.xs.data() + r * d;
    for (size_t i = 0; i < d; ++i) dst[i] = (src[i] - m->mean[i]) * m->scale[i];
  }

  // kernel width: median pairwise distance over (a stride sample of) the
  // standardized rows
  if (n < 2) {
    m->sigma = 1.0;
  } else {
    std::vector<size_t> pick;
    const size_t cap = 512;
    if (n <= cap) {
      pick.resize(n);
      for (size_t i = 0; i < n; ++i) pick[i] = i;
    } else {
      pick.resize(cap);
      for (size_t i = 0; i < cap; ++i) pick[i] = i * n / cap;
    }
    std::vector<double> dist;
    dist.reserve(pick.size() * (pick.size() - 1) / 2);
    for (size_t a = 0; a < pick.size(); ++a)
      for (size_t c = a + 1; c < pick.size(); ++c) {
        double d2 = 0;
        const double* xa = m->rows.row(pick[a]);
        const double* xc = m->rows.row(pick[c]);
        for (size_t i = 0; i < d; ++i) {
          const double df = xa[i] - xc[i];
          d2 += df * df;
        }
        dist.push_back(std::sqrt(d2));
      }
    std::sort(dist.begin(), dist.end());
    m->sigma = dist[(dist.size() - 1) / 2];  // lower median
    if (m->sigma < cfg_.kernel_floor.sigma) m->sigma = cfg_.kernel_floor.sigma;
  }

  if (n < 2) {
    m->rbf_only = true;
  } else if (level.learner == LearnerKind::Gbdt) {
    try {
      m->gbdt = fit_gbdt(m->rows, cfg_.gbdt);
    } catch (const Error&) {
      m->rbf_only = true;
    }
  } else if (level.learner == LearnerKind::Lwlr && level.fit_mode == FitMode::Cached) {
    try {
      m->ridge = fit_ridge(m->rows, cfg_.l2);
    } catch (const SingularSystem&) {
      m->rbf_only = true;
    }
  }
  // lwlr/local and rbf fit nothing here: they evaluate over m->rows per call

  b.model = std::move(m);
  b.rows_since_refit = 0;
}

//---------------------------------------------------------------------------
// Store
//---------------------------------------------------------------------------

EstimatorStore::EstimatorStore(StoreConfig cfg, Schema schema, StatsSet stats)
    : cfg_(std::move(cfg)),
      schema_(std::move(schema)),
      stats_(std::move(stats)),
      rng_(cfg_.seed) {}

PreparedSubquery EstimatorStore::prepare(const QueryDag& dag) const {
  PreparedSubquery p;
  p.max_card = 1;
  const DagView view = inspect_dag(dag);
  for (uint32_t table_node : view.alias_table) {
    const std::string& t = dag.nodes[table_node].attr(kAttrName);
    const TableStats* ts = stats_.find_table(t);
    if (!ts) throw MissingStats("no statistics for table " + t);
    const uint64_t rows = std::max<uint64_t>(1, ts->rows);
    p.max_card = (p.max_card > UINT64_MAX / rows) ? UINT64_MAX : p.max_card * rows;
  }
  p.n_join = view.aliases.empty() ? 0 : static_cast<uint32_t>(view.aliases.size()) - 1;
  p.heuristic_raw = heuristic_estimate(dag, stats_);

  for (int k = 0; k < 3; ++k) {
    CanonResult cr = canonicalize(dag, cfg_.levels[k].pattern_feats);
    FeatureVector fv =
        extract(dag, cr.order, cfg_.levels[k].learn_feats, &schema_, cr.hash);
    p.levels[k].hash = cr.hash;
    p.levels[k].x = std::move(fv.values);
    p.levels[k].fp = hash_fp16(cr.hash);
  }
  return p;
}

double EstimatorStore::bias_adjust(double raw, uint32_t n_join, double u) const {
  if (n_join == 0) return raw;
  const BiasEntry e = effective_bias(n_join);
  return u < e.p ? raw * e.m : raw;
}

BiasEntry EstimatorStore::effective_bias(uint32_t n_join) const {
  if (n_join == 0) return {0.0, 1.0};
  if (cfg_.bias_online) {
    auto it = bias_stats_.find(n_join);
    if (it != bias_stats_.end() && it->second.pairs >= cfg_.bias_min_pairs) {
      const BiasStats& s = it->second;
      const double p = static_cast<double>(s.under) / static_cast<double>(s.pairs);
      const double m = s.under > 0 ? s.sum_factor / static_cast<double>(s.under) : 1.0;
      return {p, std::max(1.0, m)};
    }
  }
  // configured table, nearest lower join count
  const BiasEntry* best = nullptr;
  for (const auto& [n, e] : cfg_.bias) {
    if (n > n_join) break;
    best = &e;
  }
  return best ? *best : BiasEntry{0.0, 1.0};
}

double EstimatorStore::heuristic_path(const PreparedSubquery& p, EstimateResult& r) {
  double u;
  {
    std::lock_guard<std::mutex> lk(rng_mu_);
    u = rng_.unit();
  }
  r.heuristic_adjusted = bias_adjust(p.heuristic_raw, p.n_join, u);
  return r.heuristic_adjusted;
}

EstimateResult EstimatorStore::estimate(const PreparedSubquery& p) {
  EstimateResult r;
  r.heuristic_raw = p.heuristic_raw;
  r.heuristic_adjusted = p.heuristic_raw;

  std::shared_lock<std::shared_mutex> lk(store_mu_);
  PatternBucket* serving = nullptr;
  int serving_level = 0;
  for (int k = 0; k < 3; ++k) {
    auto it = levels_[k].find(p.levels[k].hash);
    if (it == levels_[k].end()) continue;
    const uint64_t rows = it->second->history.rows();
    r.level_rows[k] = rows;
    if (rows >= cfg_.levels[k].beta) {
      serving = it->second.get();
      serving_level = k + 1;  // finest qualifying level wins (scan order 1..3)
    }
  }

  if (!serving) {
    r.provenance = 0;
    r.bucket_size = r.level_rows[2];
    const double adj = heuristic_path(p, r);
    const double rounded = std::round(adj);
    r.estimate = rounded <= 0 ? 0
                              : (rounded >= static_cast<double>(p.max_card)
                                     ? p.max_card
                                     : static_cast<uint64_t>(rounded));
    if (r.estimate == 0) r.estimate = 1;  // heuristic is >= 1 by contract
    return r;
  }

  const LevelConfig& level = cfg_.levels[serving_level - 1];
  std::shared_ptr<const BucketModel> model;
  {
    std::lock_guard<std::mutex> bl(serving->mu);
    const bool stale = !serving->model ||
                       serving->rows_since_refit >= cfg_.refit_interval ||
                       level.fit_mode == FitMode::Local;
    if (stale) refit_bucket_locked(*serving, level);
    model = serving->model;
    ++serving->serve_count;
  }

  double pred;
  bool fb = model->rbf_only;
  try {
    pred = model->predict(p.levels[serving_level - 1].x, cfg_.l2);
  } catch (const SingularSystem&) {
    const PreparedLevel& pl = p.levels[serving_level - 1];
    std::vector<double> xs(pl.x.size());
    for (size_t i = 0; i < xs.size(); ++i)
      xs[i] = (pl.x[i] - model->mean[i]) * model->scale[i];
    pred = predict_rbf(model->rows, xs.data(), KernelParams{model->sigma});
    fb = true;
  }
  r.provenance = serving_level;
  r.bucket_size = serving->history.rows();
  r.rbf_fallback = fb;
  r.estimate = to_cardinality(pred, p.max_card);
  return r;
}

void EstimatorStore::observe(const PreparedSubquery& p, uint64_t true_card) {
  const double y = std::log1p(static_cast<double>(true_card));

  std::unique_lock<std::shared_mutex> lk(store_mu_);
  for (int k = 0; k < 3; ++k) {
    const PreparedLevel& pl = p.levels[k];
    std::unique_ptr<PatternBucket>& slot = levels_[k][pl.hash];
    if (!slot) slot = std::make_unique<PatternBucket>();
    PatternBucket& b = *slot;

    if (b.history.dim == 0 && b.history.rows() == 0) {
      b.history.dim = pl.x.size();
      b.run_mean.assign(pl.x.size(), 0.0);
      b.run_m2.assign(pl.x.size(), 0.0);
    } else if (b.history.dim != pl.x.size()) {
      throw DimMismatch("pattern bucket expects dim " + std::to_string(b.history.dim) +
                        ", got " + std::to_string(pl.x.size()));
    }
    if (pl.fp != hash_fp16(pl.hash))
      throw InternalError("row fingerprint disagrees with its own hash");

    if (cfg_.max_bucket_rows > 0 && b.history.rows() >= cfg_.max_bucket_rows) {
      // ring buffer: overwrite the oldest row
      const uint64_t at = b.ring_next % cfg_.max_bucket_rows;
      double* dst = b.history.xs.data() + at * b.history.dim;
      std::copy(pl.x.begin(), pl.x.end(), dst);
      b.history.ys[at] = y;
      b.fps[at] = pl.fp;
      ++b.ring_next;
    } else {
      b.history.append(pl.x.data(), y);
      b.fps.push_back(pl.fp);
      b.ring_next = b.history.rows();
    }

    // running moments (Welford), across everything ever appended
    ++b.seen;
    for (size_t i = 0; i < pl.x.size(); ++i) {
      const double delta = pl.x[i] - b.run_mean[i];
      b.run_mean[i] += delta / static_cast<double>(b.seen);
      b.run_m2[i] += delta * (pl.x[i] - b.run_mean[i]);
    }
    ++b.rows_since_refit;
  }

  if (p.n_join >= 1) {
    BiasStats& s = bias_stats_[p.n_join];
    ++s.pairs;
    const double truth = static_cast<double>(true_card);
    if (p.heuristic_raw < truth) {
      ++s.under;
      s.sum_factor += truth / std::max(p.heuristic_raw, 1.0);
    }
  }
}

void EstimatorStore::refit_all() {
  std::unique_lock<std::shared_mutex> lk(store_mu_);
  for (int k = 0; k < 3; ++k)
    for (auto& [h, b] : levels_[k]) {
      std::lock_guard<std::mutex> bl(b->mu);
      if (!b->model || b->rows_since_refit > 0) refit_bucket_locked(*b, cfg_.levels[k]);
    }
}

const PatternBucket* EstimatorStore::find_bucket(int level_id, const PatternHash& h) const {
  std::shared_lock<std::shared_mutex> lk(store_mu_);
  const BucketMap& m = levels_.at(level_id - 1);
  auto it = m.find(h);
  return it == m.end() ? nullptr : it->second.get();
}

uint64_t EstimatorStore::bucket_count(int level_id) const {
  std::shared_lock<std::shared_mutex> lk(store_mu_);
  return levels_.at(level_id - 1).size();
}

//---------------------------------------------------------------------------
// Snapshots and debug dumps
//---------------------------------------------------------------------------

void EstimatorStore::save_snapshot(const std::string& path) {
  refit_all();  // a fresh load refits from history; align our own caches
  std::shared_lock<std::shared_mutex> lk(store_mu_);
  nlohmann::json out;
  out["version"] = 1;
  out["config"] = cfg_.to_json();
  {
    std::lock_guard<std::mutex> rl(rng_mu_);
    std::ostringstream ss;
    ss << rng_.engine();
    out["rng"] = ss.str();
  }
  out["bias_stats"] = nlohmann::json::object();
  for (const auto& [n, s] : bias_stats_)
    out["bias_stats"][std::to_string(n)] = {{"pairs", s.pairs},
                                            {"under", s.under},
                                            {"sum_factor", fmt_double(s.sum_factor)}};
  out["levels"] = nlohmann::json::array();
  for (int k = 0; k < 3; ++k) {
    nlohmann::json jl;
    jl["level"] = k + 1;
    jl["buckets"] = nlohmann::json::array();
    // deterministic file: emit buckets in hash order
    std::vector<const BucketMap::value_type*> entries;
    entries.reserve(levels_[k].size());
    for (const auto& e : levels_[k]) entries.push_back(&e);
    std::sort(entries.begin(), entries.end(),
              [](const auto* a, const auto* b) { return a->first < b->first; });
    for (const auto* e : entries) {
      const PatternBucket& b = *e->second;
      nlohmann::json jb;
      jb["hash"] = hex(e->first);
      jb["dim"] = b.history.dim;
      nlohmann::json xs = nlohmann::json::array(), ys = nlohmann::json::array();
      for (double v : b.history.xs) xs.push_back(fmt_double(v));
      for (double v : b.history.ys) ys.push_back(fmt_double(v));
      jb["xs"] = std::move(xs);
      jb["ys"] = std::move(ys);
      jb["rows_since_refit"] = b.rows_since_refit;
      jb["serve_count"] = b.serve_count;
      jb["ring_next"] = b.ring_next;
      jb["seen"] = b.seen;
      nlohmann::json rm = nlohmann::json::array(), r2 = nlohmann::json::array();
      for (double v : b.run_mean) rm.push_back(fmt_double(v));
      for (double v : b.run_m2) r2.push_back(fmt_double(v));
      jb["run_mean"] = std::move(rm);
      jb["run_m2"] = std::move(r2);
      jl["buckets"].push_back(std::move(jb));
    }
    out["levels"].push_back(std::move(jl));
  }
  write_file(path, out.dump() + "\n");
}

namespace {

std::vector<double> doubles_from_json(const nlohmann::json& j) {
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& e : j) {
    double v;
    if (!parse_f64(e.get<std::string>(), v)) throw ConfigError("bad double in snapshot");
    out.push_back(v);
  }
  return out;
}

Digest256 digest_from_hex(const std::string& s) {
  if (s.size() != 64) throw ConfigError("bad hash in snapshot");
  Digest256 d;
  auto nib = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    throw ConfigError("bad hex digit in snapshot");
  };
  for (size_t i = 0; i < 32; ++i)
    d[i] = static_cast<unsigned char>(nib(s[2 * i]) * 16 + nib(s[2 * i + 1]));
  return d;
}

}  // namespace

std::unique_ptr<EstimatorStore> EstimatorStore::load_snapshot(const std::string& path,
                                                              Schema schema,
                                                              StatsSet stats) {
  nlohmann::json j = nlohmann::json::parse(read_file(path));
  if (j.value("version", 0) != 1) throw ConfigError("unsupported snapshot version");
  auto out = std::make_unique<EstimatorStore>(StoreConfig::from_json(j.at("config")),
                                              std::move(schema), std::move(stats));
  EstimatorStore& store = *out;
  {
    std::istringstream ss(j.at("rng").get<std::string>());
    ss >> store.rng_.engine();
    if (!ss) throw ConfigError("bad rng state in snapshot");
  }
  for (const auto& [key, js] : j.at("bias_stats").items()) {
    int64_t n;
    if (!parse_i64(key, n)) throw ConfigError("bad bias key in snapshot");
    BiasStats s;
    s.pairs = js.at("pairs").get<uint64_t>();
    s.under = js.at("under").get<uint64_t>();
    double f;
    if (!parse_f64(js.at("sum_factor").get<std::string>(), f))
      throw ConfigError("bad bias factor in snapshot");
    s.sum_factor = f;
    store.bias_stats_[static_cast<uint32_t>(n)] = s;
  }
  for (const auto& jl : j.at("levels")) {
    const int k = jl.at("level").get<int>() - 1;
    if (k < 0 || k > 2) throw ConfigError("bad level in snapshot");
    for (const auto& jb : jl.at("buckets")) {
      auto b = std::make_unique<PatternBucket>();
      const Digest256 h = digest_from_hex(jb.at("hash").get<std::string>());
      b->history.dim = jb.at("dim").get<size_t>();
      b->history.xs = doubles_from_json(jb.at("xs"));
      b->history.ys = doubles_from_json(jb.at("ys"));
      if (b->history.dim == 0 ? !b->history.xs.empty()
                              : b->history.xs.size() % b->history.dim != 0)
        throw ConfigError("snapshot rows do not match dim");
      b->rows_since_refit = jb.at("rows_since_refit").get<uint32_t>();
      b->serve_count = jb.at("serve_count").get<uint64_t>();
      b->ring_next = jb.at("ring_next").get<uint64_t>();
      b->seen = jb.at("seen").get<uint64_t>();
      b->run_mean = doubles_from_json(jb.at("run_mean"));
      b->run_m2 = doubles_from_json(jb.at("run_m2"));
      b->fps.assign(b->history.rows(), hash_fp16(h));
      store.levels_[k].emplace(h, std::move(b));
    }
  }
  return out;
}

void EstimatorStore::dump_buckets_csv(const std::string& path) const {
  std::shared_lock<std::shared_mutex> lk(store_mu_);
  CsvWriter w(path);
  w.row({"level", "pattern_hash", "rows", "dim", "rows_since_refit", "serve_count",
         "has_model", "rbf_fallback"});
  for (int k = 0; k < 3; ++k) {
    std::vector<const BucketMap::value_type*> entries;
    for (const auto& e : levels_[k]) entries.push_back(&e);
    std::sort(entries.begin(), entries.end(),
              [](const auto* a, const auto* b) { return a->first < b->first; });
    for (const auto* e : entries) {
      const PatternBucket& b = *e->second;
      w.row({std::to_string(k + 1), hex(e->first), std::to_string(b.history.rows()),
             std::to_string(b.history.dim), std::to_string(b.rows_since_refit),
             std::to_string(b.serve_count), b.model ? "1" : "0",
             b.model && b.model->rbf_only ? "1" : "0"});
    }
  }
  w.flush_close();
}

}  // namespace patcard
