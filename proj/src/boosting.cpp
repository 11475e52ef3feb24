#include "biasforge/boosting.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>

#include <Eigen/Dense>

#include "biasforge/core_model.hpp"
#include "biasforge/error.hpp"

namespace biasforge {
namespace {

void check_training_data(const FeatureMatrix& x, const std::vector<int>& labels) {
  if (x.rows == 0) throw Error(ErrorKind::Degenerate, "training set is empty");
  if (labels.size() != x.rows)
    throw Error(ErrorKind::Data, "label count does not match the feature rows");
  std::size_t pos = 0;
  for (int y : labels) pos += y != 0;
  if (pos == 0 || pos == labels.size())
    throw Error(ErrorKind::Degenerate, "training labels contain a single class");
}

// Split candidates per feature: x <= cuts[b] falls in bin b or lower.
std::vector<double> feature_cuts(const FeatureMatrix& x, std::size_t j, int max_bins) {
  std::vector<double> v(x.rows);
  for (std::size_t r = 0; r < x.rows; ++r) v[r] = x.row(r)[j];
  std::sort(v.begin(), v.end());
  std::vector<double> uniq = v;
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  std::vector<double> cuts;
  if (uniq.size() <= static_cast<std::size_t>(max_bins)) {
    for (std::size_t i = 0; i + 1 < uniq.size(); ++i) cuts.push_back(0.5 * (uniq[i] + uniq[i + 1]));
    return cuts;
  }
  for (int b = 1; b < max_bins; ++b) {
    const double c = v[static_cast<std::size_t>(b) * v.size() / static_cast<std::size_t>(max_bins)];
    if (c < v.back() && (cuts.empty() || c > cuts.back())) cuts.push_back(c);
  }
  return cuts;
}

struct Split {
  double gain = 0.0;
  int feature = -1;
  int bin = -1;
};

}  // namespace

void BoostingParams::validate() const {
  if (n_rounds < 1) throw Error(ErrorKind::Config, "n_rounds must be >= 1");
  if (max_depth < 1) throw Error(ErrorKind::Config, "max_depth must be >= 1");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0))
    throw Error(ErrorKind::Config, "learning_rate must be in (0, 1]");
  if (min_leaf < 1) throw Error(ErrorKind::Config, "min_leaf must be >= 1");
  if (!(lambda >= 0.0)) throw Error(ErrorKind::Config, "lambda must be >= 0");
  if (max_bins < 2 || max_bins > 256) throw Error(ErrorKind::Config, "max_bins must be in [2, 256]");
}

BoostedTrees BoostedTrees::train(const FeatureMatrix& x, const std::vector<int>& labels,
                                 const BoostingParams& params, std::uint64_t seed) {
  params.validate();
  check_training_data(x, labels);
  const std::size_t n = x.rows, p = x.cols();

  std::vector<std::vector<double>> cuts(p);
  std::vector<std::uint8_t> codes(n * p);
  for (std::size_t j = 0; j < p; ++j) {
    cuts[j] = feature_cuts(x, j, params.max_bins);
    for (std::size_t r = 0; r < n; ++r) {
      const auto it = std::lower_bound(cuts[j].begin(), cuts[j].end(), x.row(r)[j]);
      codes[r * p + j] = static_cast<std::uint8_t>(it - cuts[j].begin());
    }
  }

  BoostedTrees model;
  model.names_ = x.names;
  model.params_ = params;
  model.seed_ = seed;
  double pos = 0.0;
  for (int y : labels) pos += y;
  const double rate = pos / static_cast<double>(n);
  model.base_score_ = std::log(rate / (1.0 - rate));

  std::vector<double> margin(n, model.base_score_), grad(n), hess(n);
  std::vector<std::size_t> rows(n);
  const double lambda = params.lambda;
  auto score = [lambda](double g, double h) { return g * g / (h + lambda); };

  for (int round = 0; round < params.n_rounds; ++round) {
    for (std::size_t r = 0; r < n; ++r) {
      const double pr = logistic(margin[r]);
      grad[r] = pr - labels[r];
      hess[r] = std::max(pr * (1.0 - pr), 1e-16);
    }
    for (std::size_t r = 0; r < n; ++r) rows[r] = r;
    std::vector<TreeNode> tree;

    // Grows the node over rows[begin, end) and returns its index.
    std::function<int(std::size_t, std::size_t, int)> grow = [&](std::size_t begin, std::size_t end,
                                                                 int depth) -> int {
      double g_sum = 0.0, h_sum = 0.0;
      for (std::size_t k = begin; k < end; ++k) {
        g_sum += grad[rows[k]];
        h_sum += hess[rows[k]];
      }
      const int id = static_cast<int>(tree.size());
      tree.emplace_back();
      const std::size_t count = end - begin;
      Split best;
      if (depth < params.max_depth && count >= 2 * static_cast<std::size_t>(params.min_leaf)) {
        const double parent = score(g_sum, h_sum);
        std::vector<double> hg, hh;
        std::vector<std::size_t> hc;
        for (std::size_t j = 0; j < p; ++j) {
          const std::size_t bins = cuts[j].size() + 1;
          if (bins < 2) continue;
          hg.assign(bins, 0.0);
          hh.assign(bins, 0.0);
          hc.assign(bins, 0);
          for (std::size_t k = begin; k < end; ++k) {
            const std::size_t r = rows[k];
            const std::uint8_t b = codes[r * p + j];
            hg[b] += grad[r];
            hh[b] += hess[r];
            ++hc[b];
          }
          double gl = 0.0, hl = 0.0;
          std::size_t cl = 0;
          for (std::size_t b = 0; b + 1 < bins; ++b) {
            gl += hg[b];
            hl += hh[b];
            cl += hc[b];
            const std::size_t cr = count - cl;
            if (cl < static_cast<std::size_t>(params.min_leaf)) continue;
            if (cr < static_cast<std::size_t>(params.min_leaf)) break;
            const double gain = score(gl, hl) + score(g_sum - gl, h_sum - hl) - parent;
            if (gain > best.gain + 1e-12) {
              best.gain = gain;
              best.feature = static_cast<int>(j);
              best.bin = static_cast<int>(b);
            }
          }
        }
      }
      if (best.feature < 0) {
        tree[static_cast<std::size_t>(id)].value = -params.learning_rate * g_sum / (h_sum + lambda);
        return id;
      }
      const std::size_t j = static_cast<std::size_t>(best.feature);
      const auto mid = std::stable_partition(
          rows.begin() + static_cast<std::ptrdiff_t>(begin),
          rows.begin() + static_cast<std::ptrdiff_t>(end),
          [&](std::size_t r) { return codes[r * p + j] <= best.bin; });
      const std::size_t split = static_cast<std::size_t>(mid - rows.begin());
      const int left = grow(begin, split, depth + 1);
      const int right = grow(split, end, depth + 1);
      TreeNode& node = tree[static_cast<std::size_t>(id)];
      node.feature = best.feature;
      node.threshold = cuts[j][static_cast<std::size_t>(best.bin)];
      node.left = left;
      node.right = right;
      return id;
    };
    grow(0, n, 0);
    model.trees_.push_back(std::move(tree));
    const auto& t = model.trees_.back();
    for (std::size_t r = 0; r < n; ++r) {
      int node = 0;
      while (t[static_cast<std::size_t>(node)].feature >= 0) {
        const TreeNode& nd = t[static_cast<std::size_t>(node)];
        node = x.row(r)[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right;
      }
      margin[r] += t[static_cast<std::size_t>(node)].value;
    }
  }
  return model;
}

double BoostedTrees::margin(const double* features) const {
  double m = base_score_;
  for (const auto& t : trees_) {
    int node = 0;
    while (t[static_cast<std::size_t>(node)].feature >= 0) {
      const TreeNode& nd = t[static_cast<std::size_t>(node)];
      node = features[nd.feature] <= nd.threshold ? nd.left : nd.right;
    }
    m += t[static_cast<std::size_t>(node)].value;
  }
  return m;
}

double BoostedTrees::predict(const double* features) const { return logistic(margin(features)); }

Json BoostedTrees::to_json() const {
  Json trees = Json::array();
  for (const auto& t : trees_) {
    std::function<Json(int)> node_json = [&](int id) -> Json {
      const TreeNode& nd = t[static_cast<std::size_t>(id)];
      if (nd.feature < 0) return {{"leaf", nd.value}};
      return {{"feature", names_[static_cast<std::size_t>(nd.feature)]},
              {"threshold", nd.threshold},
              {"left", node_json(nd.left)},
              {"right", node_json(nd.right)}};
    };
    trees.push_back(node_json(0));
  }
  return {{"type", "boosted_trees"},
          {"feature_names", names_},
          {"base_score", base_score_},
          {"params",
           {{"n_rounds", params_.n_rounds},
            {"max_depth", params_.max_depth},
            {"learning_rate", params_.learning_rate},
            {"min_leaf", params_.min_leaf},
            {"lambda", params_.lambda},
            {"max_bins", params_.max_bins}}},
          {"seed", seed_},
          {"trees", trees}};
}

BoostedTrees BoostedTrees::from_json(const Json& j) {
  if (cfg::get<std::string>(j, "type", "") != "boosted_trees")
    throw Error(ErrorKind::Config, "model artifact is not a boosted forest");
  BoostedTrees m;
  m.names_ = cfg::get<std::vector<std::string>>(j, "feature_names", "");
  m.base_score_ = cfg::get<double>(j, "base_score", "");
  m.seed_ = cfg::get_or<std::uint64_t>(j, "seed", "", 0);
  const Json& ps = cfg::require(j, "params", "");
  m.params_.n_rounds = cfg::get<int>(ps, "n_rounds", "/params");
  m.params_.max_depth = cfg::get<int>(ps, "max_depth", "/params");
  m.params_.learning_rate = cfg::get<double>(ps, "learning_rate", "/params");
  m.params_.min_leaf = cfg::get<int>(ps, "min_leaf", "/params");
  m.params_.lambda = cfg::get<double>(ps, "lambda", "/params");
  m.params_.max_bins = cfg::get<int>(ps, "max_bins", "/params");
  for (const Json& tj : cfg::require(j, "trees", "")) {
    std::vector<TreeNode> tree;
    std::function<int(const Json&)> read = [&](const Json& nj) -> int {
      const int id = static_cast<int>(tree.size());
      tree.emplace_back();
      if (nj.contains("leaf")) {
        tree[static_cast<std::size_t>(id)].value = nj["leaf"].get<double>();
        return id;
      }
      const auto name = cfg::get<std::string>(nj, "feature", "/trees");
      const auto it = std::find(m.names_.begin(), m.names_.end(), name);
      if (it == m.names_.end()) throw Error(ErrorKind::Config, "unknown feature '" + name + "'");
      const int left = read(cfg::require(nj, "left", "/trees"));
      const int right = read(cfg::require(nj, "right", "/trees"));
      TreeNode& nd = tree[static_cast<std::size_t>(id)];
      nd.feature = static_cast<int>(it - m.names_.begin());
      nd.threshold = cfg::get<double>(nj, "threshold", "/trees");
      nd.left = left;
      nd.right = right;
      return id;
    };
    read(tj);
    m.trees_.push_back(std::move(tree));
  }
  return m;
}

LogisticModel LogisticModel::train(const FeatureMatrix& x, const std::vector<int>& labels) {
  check_training_data(x, labels);
  const std::size_t n = x.rows, p = x.cols();
  LogisticModel m;
  m.names_ = x.names;
  m.mean_.assign(p, 0.0);
  m.scale_.assign(p, 1.0);
  for (std::size_t j = 0; j < p; ++j) {
    double s = 0.0, ss = 0.0;
    for (std::size_t r = 0; r < n; ++r) s += x.row(r)[j];
    const double mu = s / static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r) ss += (x.row(r)[j] - mu) * (x.row(r)[j] - mu);
    const double sd = std::sqrt(ss / static_cast<double>(n));
    m.mean_[j] = mu;
    m.scale_[j] = sd > 0.0 ? sd : 1.0;
  }
  const auto k = static_cast<Eigen::Index>(p + 1);
  Eigen::MatrixXd z(static_cast<Eigen::Index>(n), k);
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r < n; ++r) {
    const auto rr = static_cast<Eigen::Index>(r);
    z(rr, 0) = 1.0;
    for (std::size_t j = 0; j < p; ++j)
      z(rr, static_cast<Eigen::Index>(j + 1)) = (x.row(r)[j] - m.mean_[j]) / m.scale_[j];
    y[rr] = labels[r];
  }
  Eigen::VectorXd w = Eigen::VectorXd::Zero(k);
  constexpr double kRidge = 1e-4;
  for (int iter = 0; iter < 100; ++iter) {
    const Eigen::VectorXd eta = z * w;
    Eigen::VectorXd pr(eta.size()), wt(eta.size());
    for (Eigen::Index r = 0; r < eta.size(); ++r) {
      pr[r] = logistic(eta[r]);
      wt[r] = std::max(pr[r] * (1.0 - pr[r]), 1e-12);
    }
    Eigen::VectorXd g = z.transpose() * (y - pr) - kRidge * w;
    Eigen::MatrixXd h = z.transpose() * wt.asDiagonal() * z;
    h.diagonal().array() += kRidge;
    const Eigen::VectorXd step = h.ldlt().solve(g);
    w += step;
    if (step.norm() < 1e-10) break;
  }
  m.intercept_ = w[0];
  m.coef_.resize(p);
  for (std::size_t j = 0; j < p; ++j) m.coef_[j] = w[static_cast<Eigen::Index>(j + 1)];
  return m;
}

double LogisticModel::predict(const double* features) const {
  double eta = intercept_;
  for (std::size_t j = 0; j < coef_.size(); ++j)
    eta += coef_[j] * (features[j] - mean_[j]) / scale_[j];
  return logistic(eta);
}

Json LogisticModel::to_json() const {
  Json coefs = Json::array();
  for (std::size_t j = 0; j < coef_.size(); ++j)
    coefs.push_back({{"feature", names_[j]}, {"mean", mean_[j]}, {"scale", scale_[j]},
                     {"coef", coef_[j]}});
  return {{"type", "logistic"}, {"feature_names", names_}, {"intercept", intercept_},
          {"coefficients", coefs}};
}

double log_loss(const Scorer& scorer, const FeatureMatrix& x, const std::vector<int>& labels) {
  if (x.rows == 0) return 0.0;
  double total = 0.0;
  for (std::size_t r = 0; r < x.rows; ++r) {
    const double pr = std::clamp(scorer.predict(x.row(r)), 1e-15, 1.0 - 1e-15);
    total -= labels[r] ? std::log(pr) : std::log1p(-pr);
  }
  return total / static_cast<double>(x.rows);
}

}  // namespace biasforge
