#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "patcard/baseline.hpp"
#include "patcard/featurize.hpp"
#include "patcard/learners.hpp"
#include "patcard/schema.hpp"

#include "json.hpp"

namespace patcard {

//---------------------------------------------------------------------------
// The online store: per-level hash tables from pattern hash to observation
// bucket, with a fallback chain level3 -> level2 -> level1 -> bias-adjusted
// heuristic gated by the per-level thresholds.
//---------------------------------------------------------------------------

enum class FitMode : uint8_t { Local, Cached };
enum class LearnerKind : uint8_t { Lwlr, Rbf, Gbdt };

const char* fit_mode_name(FitMode m);
FitMode fit_mode_from_name(const std::string& s);
const char* learner_name(LearnerKind k);
LearnerKind learner_from_name(const std::string& s);

struct LevelConfig {
  int level_id = 1;            ///< 1 coarsest .. 3 finest
  AttrKeySet pattern_feats;
  FeatureSpecSet learn_feats;
  uint32_t beta = 1;           ///< rows required before this level serves
  FitMode fit_mode = FitMode::Cached;
  LearnerKind learner = LearnerKind::Gbdt;
};

struct BiasEntry {
  double p = 0;  ///< probability the heuristic underestimates at this join count
  double m = 1;  ///< mean underestimation factor when it does
};

struct StoreConfig {
  std::array<LevelConfig, 3> levels;  ///< [0]=level1 .. [2]=level3
  uint32_t refit_interval = 8;
  double l2 = 1e-3;
  GbdtParams gbdt;
  KernelParams kernel_floor{1e-6};    ///< sigma lower bound
  std::map<uint32_t, BiasEntry> bias; ///< configured join-count table
  bool bias_online = true;            ///< switch to empirical stats when warm
  uint32_t bias_min_pairs = 50;
  uint64_t seed = 42;
  uint64_t max_bucket_rows = 0;       ///< 0 = keep everything, else ring buffer

  static StoreConfig defaults();
  nlohmann::json to_json() const;
  /// Parses a (possibly partial) JSON object over the defaults.
  static StoreConfig from_json(const nlohmann::json& j);
};

/// Everything estimate/observe needs, detached from the graph it came from.
struct PreparedLevel {
  PatternHash hash{};
  std::vector<double> x;
  uint16_t fp = 0;  ///< 16-bit fingerprint of the hash, stored per row
};

struct PreparedSubquery {
  std::array<PreparedLevel, 3> levels;  ///< [0]=level1 .. [2]=level3
  uint32_t n_join = 0;
  uint64_t max_card = 0;       ///< product of referenced table sizes, saturating
  double heuristic_raw = 1.0;  ///< unadjusted heuristic estimate
};

struct EstimateResult {
  uint64_t estimate = 0;
  int provenance = 0;   ///< 3|2|1 = learned level, 0 = heuristic
  uint64_t bucket_size = 0;
  std::array<uint64_t, 3> level_rows{};  ///< bucket sizes, [0]=level1
  bool rbf_fallback = false;
  double heuristic_raw = 1.0;
  double heuristic_adjusted = 1.0;
};

const char* provenance_name(int level);

/// Immutable fitted state, swapped atomically under the bucket lock.
struct BucketModel {
  LearnerKind kind = LearnerKind::Gbdt;
  FitMode fit_mode = FitMode::Cached;
  bool rbf_only = false;  ///< single row or failed fit: serve the kernel mean
  std::vector<double> mean, scale;  ///< standardization: xs = (x - mean) * scale
  double sigma = 1.0;
  RidgeModel ridge;
  GbdtModel gbdt;
  TrainingSet rows;  ///< standardized history snapshot

  double predict(const std::vector<double>& raw_x, double l2) const;
};

struct PatternBucket {
  TrainingSet history;  ///< raw feature rows + log1p targets
  std::vector<uint16_t> fps;
  uint32_t rows_since_refit = 0;
  uint64_t serve_count = 0;
  uint64_t ring_next = 0;
  // running moments over every row ever appended
  uint64_t seen = 0;
  std::vector<double> run_mean, run_m2;

  std::shared_ptr<const BucketModel> model;
  mutable std::mutex mu;
};

class EstimatorStore {
 public:
  EstimatorStore(StoreConfig cfg, Schema schema, StatsSet stats);

  /// Canonical hashes, feature vectors and the raw heuristic for one
  /// subquery graph; the graph itself is not retained.
  PreparedSubquery prepare(const QueryDag& dag) const;

  EstimateResult estimate(const PreparedSubquery& p);
  EstimateResult estimate(const QueryDag& dag) { return estimate(prepare(dag)); }

  /// Appends (x, ln(1+true_card)) at every level and updates the online
  /// bias statistics. Throws DimMismatch when a bucket would receive a
  /// vector of a different dimension (canonicalization bug; never coerced).
  void observe(const PreparedSubquery& p, uint64_t true_card);
  void observe(const QueryDag& dag, uint64_t true_card) { observe(prepare(dag), true_card); }

  /// Stochastic correction of a raw heuristic estimate: with probability
  /// p(n_join), multiply by m(n_join). Pure given the bias state.
  double bias_adjust(double raw, uint32_t n_join, double u) const;

  /// The (p, m) pair bias_adjust would use: online empirical stats once
  /// enough pairs exist at this join count, else the configured table via
  /// nearest-lower join count. Join count 0 never adjusts.
  BiasEntry effective_bias(uint32_t n_join) const;

  /// Refit every bucket whose cache is stale.
  void refit_all();

  /// Refits stale buckets first so a loaded engine (which rebuilds models
  /// from history) continues exactly like this one, then writes JSON.
  void save_snapshot(const std::string& path);
  /// Pointer because the store owns mutexes and cannot move.
  static std::unique_ptr<EstimatorStore> load_snapshot(const std::string& path,
                                                       Schema schema, StatsSet stats);

  /// One CSV row per bucket: level, hash, rows, dim, rows_since_refit,
  /// serve_count, has_model, rbf_fallback.
  void dump_buckets_csv(const std::string& path) const;

  const StoreConfig& config() const { return cfg_; }
  const Schema& schema() const { return schema_; }
  const StatsSet& stats() const { return stats_; }

  /// Test introspection; level_id in 1..3.
  const PatternBucket* find_bucket(int level_id, const PatternHash& h) const;
  uint64_t bucket_count(int level_id) const;

 private:
  struct DigestHashFn {
    size_t operator()(const Digest256& d) const {
      uint64_t k;
      std::memcpy(&k, d.data(), sizeof(k));
      return static_cast<size_t>(k);
    }
  };
  using BucketMap =
      std::unordered_map<Digest256, std::unique_ptr<PatternBucket>, DigestHashFn>;

  struct BiasStats {
    uint64_t pairs = 0;
    uint64_t under = 0;
    double sum_factor = 0;  ///< sum of truth/raw over underestimates
  };

  void refit_bucket_locked(PatternBucket& b, const LevelConfig& level) const;
  double heuristic_path(const PreparedSubquery& p, EstimateResult& r);

  StoreConfig cfg_;
  Schema schema_;
  StatsSet stats_;
  std::array<BucketMap, 3> levels_;
  std::map<uint32_t, BiasStats> bias_stats_;
  mutable std::shared_mutex store_mu_;
  mutable std::mutex rng_mu_;
  mutable Rng rng_;
};

}  // namespace patcard
