#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace mlstm::eval {

using FeatureRows = std::vector<std::vector<double>>;

struct LogisticModel {
  std::vector<double> weights;
  double bias = 0.0;
  double l2 = 0.0;

  double decision(const std::vector<double>& x) const;
  int predict(const std::vector<double>& x) const { return decision(x) > 0.0 ? 1 : 0; }
};

struct FitOptions {
  double l2 = 1.0;
  double grad_tol = 1e-6;
  std::size_t max_iters = 20000;
};

struct FitReport {
  LogisticModel model;
  std::size_t iterations = 0;
  double objective = 0.0;
  double grad_norm = 0.0;
  bool converged = false;
  std::vector<double> objective_trace;  // objective after each accepted step
};

/// Objective J(w, b) = mean log-loss + (l2 / 2) ||w||^2; the bias is not
/// penalized.
double logreg_objective(const LogisticModel& model, const FeatureRows& x,
                        const std::vector<int>& y);

/// Gradient of logreg_objective, weights first and the bias last.
std::vector<double> logreg_gradient(const LogisticModel& model, const FeatureRows& x,
                                    const std::vector<int>& y);

/// Full-batch gradient descent. Each iteration proposes a Barzilai-Borwein step
/// and backtracks until the Armijo condition holds, so the objective never
/// increases. Stops when the gradient norm falls below grad_tol or at
/// max_iters. Throws DegenerateFitError unless both labels occur, and
/// NonFiniteError for non-finite features.
FitReport logreg_fit(const FeatureRows& x, const std::vector<int>& y, const FitOptions& options);

double logreg_accuracy(const LogisticModel& model, const FeatureRows& x, const std::vector<int>& y);

/// Fraction of the most common label.
double majority_baseline(const std::vector<int>& y);

/// Per-column mean/standard deviation fitted on training features.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const FeatureRows& x);
  FeatureRows apply(const FeatureRows& x) const;
};

/// 10^-6, 10^-5, ..., 10^3.
std::vector<double> default_l2_grid();

struct GridPoint {
  double l2 = 0.0;
  double val_accuracy = 0.0;
};

struct TransferReport {
  double l2 = 0.0;
  double val_accuracy = 0.0;
  double test_accuracy = 0.0;
  double majority_baseline = 0.0;  // on the test labels
  std::vector<GridPoint> grid;
  FitReport fit;
};

/// Standardizes with training statistics, picks l2 by validation accuracy
/// (ties go to the stronger penalty), and reports test accuracy of the
/// classifier fitted on the training rows at that l2.
TransferReport run_transfer(const FeatureRows& train_x, const std::vector<int>& train_y,
                            const FeatureRows& val_x, const std::vector<int>& val_y,
                            const FeatureRows& test_x, const std::vector<int>& test_y,
                            const std::vector<double>& l2_grid, const FitOptions& base = {});

struct LabeledSet {
  std::vector<std::string> texts;
  std::vector<int> labels;
};

/// Lines of "label<TAB>text" with label 0 or 1. Throws DataError otherwise.
LabeledSet read_labeled_tsv(std::istream& in);
void write_labeled_tsv(std::ostream& out, const LabeledSet& set);

FeatureRows widen(const std::vector<std::vector<float>>& rows);

}  // namespace mlstm::eval
