#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "patcard/util.hpp"

namespace patcard {

//---------------------------------------------------------------------------
// Local regressors over per-pattern observation histories.
//
// All learners train on row-major feature matrices paired with
// log1p-transformed cardinalities, and all predictions stay in that log
// domain until to_cardinality() maps them back.
//---------------------------------------------------------------------------

/// Observation history for one pattern: `n` rows of `dim` features each,
/// stored row-major, with one target per row.
struct TrainingSet {
  size_t dim = 0;
  std::vector<double> xs;  ///< row-major, size n*dim
  std::vector<double> ys;  ///< log1p(cardinality), size n

  size_t rows() const { return dim == 0 ? 0 : xs.size() / dim; }
  const double* row(size_t i) const { return xs.data() + i * dim; }
  void append(const double* x, double y) {
    xs.insert(xs.end(), x, x + dim);
    ys.push_back(y);
  }
};

struct KernelParams {
  double sigma = 1.0;
};

/// exp(-||x - z||^2 / sigma^2), both vectors of length dim.
double gaussian_kernel(const double* x, const double* z, size_t dim, double sigma);

/// Linear model in homogeneous coordinates: predict(x) = w[0..dim) . x + w[dim].
struct RidgeModel {
  std::vector<double> w;  ///< dim+1 coefficients, intercept last

  size_t dim() const { return w.empty() ? 0 : w.size() - 1; }
  double predict(const double* x) const;
};

/// Weighted ridge regression centred on a query point: rows are weighted by
/// the Gaussian kernel to `center` and the normal equations are solved with
/// an L2 penalty on every coefficient, intercept included.
///
/// Throws SingularSystem when the weights underflow to nothing or the
/// normal equations cannot be solved.
RidgeModel fit_lwlr(const TrainingSet& history, const double* center,
                    const KernelParams& kernel, double l2 = 1e-3);

/// Unweighted ridge over the full history; the query-independent variant
/// used when one fitted model serves many estimates.
RidgeModel fit_ridge(const TrainingSet& history, double l2 = 1e-3);

/// Kernel-weighted mean of the targets: sum(K*y)/sum(K). Falls back to the
/// plain mean when every kernel weight underflows. Throws EmptyHistory on
/// an empty training set.
double predict_rbf(const TrainingSet& history, const double* center,
                   const KernelParams& kernel);

//---------------------------------------------------------------------------
// Gradient-boosted regression trees (least-squares boosting).
//---------------------------------------------------------------------------

struct GbdtParams {
  uint32_t rounds = 50;
  uint32_t max_depth = 3;
  double learning_rate = 0.3;
  uint32_t min_samples_leaf = 2;
};

/// One node of a regression tree, stored as a flat array. Leaves have
/// feature == UINT32_MAX and carry `value`; internal nodes route
/// x[feature] <= threshold to `left`, else to `right`.
struct GbdtNode {
  uint32_t feature = UINT32_MAX;
  double threshold = 0;
  uint32_t left = 0;
  uint32_t right = 0;
  double value = 0;
};

struct GbdtTree {
  std::vector<GbdtNode> nodes;
  double predict(const double* x) const;
};

struct GbdtModel {
  double base = 0;          ///< initial prediction (weighted mean target)
  double learning_rate = 0.3;
  std::vector<GbdtTree> trees;

  double predict(const double* x) const;
};

/// Boosted least-squares fit. When `sample_weights` is given it must hold
/// one non-negative weight per row; weighted means drive both the base
/// prediction and every split gain, while the leaf-size floor counts rows.
/// Throws EmptyHistory on an empty training set.
GbdtModel fit_gbdt(const TrainingSet& history, const GbdtParams& params,
                   const std::vector<double>* sample_weights = nullptr);

/// Inverse of the log1p target transform, rounded to a whole row count and
/// clamped to [0, max_card].
uint64_t to_cardinality(double log_pred, uint64_t max_card);

}  // namespace patcard
