#include "patcard/learners.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace patcard {

double gaussian_kernel(const double* x, const double* z, size_t dim, double sigma) {
  double d2 = 0;
  for (size_t i = 0; i < dim; ++i) {
    const double d = x[i] - z[i];
    d2 += d * d;
  }
  return std::exp(-d2 / (sigma * sigma));
}

double RidgeModel::predict(const double* x) const {
  const size_t d = dim();
  double acc = w[d];
  for (size_t i = 0; i < d; ++i) acc += w[i] * x[i];
  return acc;
}

namespace {

/// Solve (A + l2*I) w = b for the homogeneous system assembled from rows
/// weighted by `wt` (or all-ones when wt is null).
RidgeModel solve_ridge(const TrainingSet& history, const std::vector<double>* wt,
                       double l2) {
  const size_t n = history.rows();
  const size_t d = history.dim;
  const size_t m = d + 1;
  if (n == 0) throw EmptyHistory("ridge fit on empty history");

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd xi(m);
  double wsum = 0;
  for (size_t i = 0; i < n; ++i) {
    const double wi = wt ? (*wt)[i] : 1.0;
    if (wi <= 0) continue;
    wsum += wi;
    const double* row = history.row(i);
    for (size_t j = 0; j < d; ++j) xi[j] = row[j];
    xi[d] = 1.0;
    a.noalias() += wi * xi * xi.transpose();
    b.noalias() += (wi * history.ys[i]) * xi;
  }
  if (!(wsum > 0) || !std::isfinite(wsum))
    throw SingularSystem("all sample weights vanished");
  for (size_t j = 0; j < m; ++j) a(j, j) += l2;

  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  if (ldlt.info() != Eigen::Success)
    throw SingularSystem("normal equations not solvable");
  Eigen::VectorXd sol = ldlt.solve(b);
  for (size_t j = 0; j < m; ++j)
    if (!std::isfinite(sol[j])) throw SingularSystem("non-finite solution");

  RidgeModel model;
  model.w.assign(sol.data(), sol.data() + m);
  return model;
}

}  // namespace

RidgeModel fit_lwlr(const TrainingSet& history, const double* center,
                    const KernelParams& kernel, double l2) {
  const size_t n = history.rows();
  if (n == 0) throw EmptyHistory("lwlr fit on empty history");
  std::vector<double> wt(n);
  for (size_t i = 0; i < n; ++i)
    wt[i] = gaussian_kernel(history.row(i), center, history.dim, kernel.sigma);
  return solve_ridge(history, &wt, l2);
}

RidgeModel fit_ridge(const TrainingSet& history, double l2) {
  return solve_ridge(history, nullptr, l2);
}

double predict_rbf(const TrainingSet& history, const double* center,
                   const KernelParams& kernel) {
  const size_t n = history.rows();
  if (n == 0) throw EmptyHistory("rbf predict on empty history");
  double num = 0, den = 0;
  for (size_t i = 0; i < n; ++i) {
    const double k = gaussian_kernel(history.row(i), center, history.dim, kernel.sigma);
    num += k * history.ys[i];
    den += k;
  }
  if (den > 0 && std::isfinite(num / den)) return num / den;
  // every kernel weight underflowed: average the targets instead
  double sum = std::accumulate(history.ys.begin(), history.ys.end(), 0.0);
  return sum / static_cast<double>(n);
}

//---------------------------------------------------------------------------
// GBDT
//---------------------------------------------------------------------------

double GbdtTree::predict(const double* x) const {
  uint32_t at = 0;
  while (nodes[at].feature != UINT32_MAX)
    at = x[nodes[at].feature] <= nodes[at].threshold ? nodes[at].left : nodes[at].right;
  return nodes[at].value;
}

double GbdtModel::predict(const double* x) const {
  double acc = base;
  for (const GbdtTree& t : trees) acc += learning_rate * t.predict(x);
  return acc;
}

namespace {

struct SplitChoice {
  bool found = false;
  uint32_t feature = 0;
  double threshold = 0;
  double gain = 0;
};

/// Greedy exact split search over the rows in `idx`: for every feature,
/// sort rows by value and sweep boundaries between distinct values,
/// maximising the variance-reduction gain SL^2/WL + SR^2/WR - S^2/W.
/// Ties keep the lowest feature, then the lowest threshold.
SplitChoice best_split(const TrainingSet& history, const std::vector<double>& residual,
                       const std::vector<double>& wt, std::vector<uint32_t>& idx,
                       uint32_t min_leaf) {
  SplitChoice best;
  const size_t n = idx.size();
  if (n < 2 * static_cast<size_t>(min_leaf)) return best;

  double s_all = 0, w_all = 0;
  for (uint32_t i : idx) {
    s_all += wt[i] * residual[i];
    w_all += wt[i];
  }
  if (!(w_all > 0)) return best;
  const double base_score = s_all * s_all / w_all;

  std::vector<uint32_t> sorted(idx);
  for (uint32_t f = 0; f < history.dim; ++f) {
    std::sort(sorted.begin(), sorted.end(), [&](uint32_t a, uint32_t b) {
      const double va = history.row(a)[f], vb = history.row(b)[f];
      return va != vb ? va < vb : a < b;
    });
    double s_left = 0, w_left = 0;
    for (size_t cut = 1; cut < n; ++cut) {
      const uint32_t prev = sorted[cut - 1];
      s_left += wt[prev] * residual[prev];
      w_left += wt[prev];
      const double v_prev = history.row(prev)[f];
      const double v_next = history.row(sorted[cut])[f];
      if (v_prev == v_next) continue;  // can't separate equal values
      if (cut < min_leaf || n - cut < min_leaf) continue;
      const double w_right = w_all - w_left;
      if (!(w_left > 0) || !(w_right > 0)) continue;
      const double s_right = s_all - s_left;
      const double gain =
          s_left * s_left / w_left + s_right * s_right / w_right - base_score;
      // Candidates arrive feature-ascending then threshold-ascending, so
      // keeping the incumbent on near-ties resolves ties the same way every
      // run: lowest feature first, then lowest threshold.
      if (!best.found || gain > best.gain + 1e-12) {
        best.found = true;
        best.feature = f;
        best.threshold = v_prev;
        best.gain = gain;
      }
    }
  }
  return best;
}

uint32_t grow(GbdtTree& tree, const TrainingSet& history,
              const std::vector<double>& residual, const std::vector<double>& wt,
              std::vector<uint32_t>& idx, uint32_t depth, const GbdtParams& params) {
  double s = 0, w = 0;
  for (uint32_t i : idx) {
    s += wt[i] * residual[i];
    w += wt[i];
  }
  const uint32_t at = static_cast<uint32_t>(tree.nodes.size());
  tree.nodes.emplace_back();
  tree.nodes[at].value = w > 0 ? s / w : 0;
  if (depth >= params.max_depth) return at;

  SplitChoice split = best_split(history, residual, wt, idx, params.min_samples_leaf);
  if (!split.found || !(split.gain > 1e-12)) return at;

  std::vector<uint32_t> left, right;
  for (uint32_t i : idx)
    (history.row(i)[split.feature] <= split.threshold ? left : right).push_back(i);
  if (left.size() < params.min_samples_leaf || right.size() < params.min_samples_leaf)
    return at;

  const uint32_t li = grow(tree, history, residual, wt, left, depth + 1, params);
  const uint32_t ri = grow(tree, history, residual, wt, right, depth + 1, params);
  tree.nodes[at].feature = split.feature;
  tree.nodes[at].threshold = split.threshold;
  tree.nodes[at].left = li;
  tree.nodes[at].right = ri;
  return at;
}

}  // namespace

GbdtModel fit_gbdt(const TrainingSet& history, const GbdtParams& params,
                   const std::vector<double>* sample_weights) {
  const size_t n = history.rows();
  if (n == 0) throw EmptyHistory("gbdt fit on empty history");

  std::vector<double> wt(n, 1.0);
  if (sample_weights) {
    if (sample_weights->size() != n)
      throw DimMismatch("sample weight count does not match history");
    wt = *sample_weights;
  }

  GbdtModel model;
  model.learning_rate = params.learning_rate;
  double s = 0, w = 0;
  for (size_t i = 0; i < n; ++i) {
    s += wt[i] * history.ys[i];
    w += wt[i];
  }
  model.base = w > 0 ? s / w : 0;

  std::vector<double> pred(n, model.base);
  std::vector<double> residual(n);
  std::vector<uint32_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);

  for (uint32_t round = 0; round < params.rounds; ++round) {
    for (size_t i = 0; i < n; ++i) residual[i] = history.ys[i] - pred[i];
    GbdtTree tree;
    std::vector<uint32_t> root_idx(idx);
    grow(tree, history, residual, wt, root_idx, 0, params);
    if (tree.nodes.size() == 1 && std::abs(tree.nodes[0].value) < 1e-15)
      break;  // residuals exhausted; later rounds would be no-ops
    for (size_t i = 0; i < n; ++i)
      pred[i] += params.learning_rate * tree.predict(history.row(i));
    model.trees.push_back(std::move(tree));
  }
  return model;
}

uint64_t to_cardinality(double log_pred, uint64_t max_card) {
  if (!std::isfinite(log_pred)) return log_pred > 0 ? max_card : 0;
  double v = std::expm1(log_pred);
  if (!(v > 0)) return 0;
  v = std::round(v);
  if (v >= static_cast<double>(max_card)) return max_card;
  return static_cast<uint64_t>(v);
}

}  // namespace patcard
