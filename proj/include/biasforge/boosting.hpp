#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "biasforge/json_io.hpp"

namespace biasforge {

// Dense row-major design matrix with named columns.
struct FeatureMatrix {
  std::vector<std::string> names;
  std::vector<double> values;  // rows * names.size()
  std::size_t rows = 0;

  std::size_t cols() const noexcept { return names.size(); }
  const double* row(std::size_t r) const noexcept { return values.data() + r * cols(); }
};

struct BoostingParams {
  int n_rounds = 100;
  int max_depth = 3;
  double learning_rate = 0.1;
  int min_leaf = 20;
  double lambda = 1.0;  // L2 penalty on leaf values
  int max_bins = 256;

  void validate() const;
};

// Maps features to a non-default probability.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual double predict(const double* features) const = 0;
  virtual Json to_json() const = 0;
  virtual const std::vector<std::string>& feature_names() const = 0;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // x <= threshold goes left
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf output on the logit scale
};

class BoostedTrees final : public Scorer {
 public:
  // Gradient boosting on the logistic loss with histogram splits and Newton
  // leaf values. labels are 1 for repaid. Degenerate error on a single class.
  static BoostedTrees train(const FeatureMatrix& x, const std::vector<int>& labels,
                            const BoostingParams& params, std::uint64_t seed);
  static BoostedTrees from_json(const Json& j);

  double margin(const double* features) const;
  double predict(const double* features) const override;
  Json to_json() const override;
  const std::vector<std::string>& feature_names() const override { return names_; }
  std::size_t tree_count() const noexcept { return trees_.size(); }

 private:
  std::vector<std::string> names_;
  double base_score_ = 0.0;
  std::vector<std::vector<TreeNode>> trees_;
  BoostingParams params_;
  std::uint64_t seed_ = 0;
};

class LogisticModel final : public Scorer {
 public:
  // Newton iterations on z-scored features with a small ridge.
  static LogisticModel train(const FeatureMatrix& x, const std::vector<int>& labels);

  double predict(const double* features) const override;
  Json to_json() const override;
  const std::vector<std::string>& feature_names() const override { return names_; }

 private:
  std::vector<std::string> names_;
  std::vector<double> mean_, scale_, coef_;
  double intercept_ = 0.0;
};

double log_loss(const Scorer& scorer, const FeatureMatrix& x, const std::vector<int>& labels);

}  // namespace biasforge
