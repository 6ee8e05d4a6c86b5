#include "mlstm/eval/logreg.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "mlstm/common/error.hpp"

namespace mlstm::eval {

namespace {

// log(1 + exp(z)) without overflow.
double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += a[i] * b[i];
  }
  return s;
}

void check_inputs(const FeatureRows& x, const std::vector<int>& y) {
  if (x.size() != y.size() || x.empty()) {
    throw ShapeError("logistic regression needs one label per non-empty feature row");
  }
  const std::size_t d = x.front().size();
  for (const auto& row : x) {
    if (row.size() != d) {
      throw ShapeError("feature rows differ in length");
    }
    for (double v : row) {
      if (!std::isfinite(v)) {
        throw NonFiniteError("feature matrix holds non-finite values");
      }
    }
  }
  for (int label : y) {
    if (label != 0 && label != 1) {
      throw DataError("labels must be 0 or 1");
    }
  }
}

LogisticModel from_flat(const std::vector<double>& theta, double l2) {
  LogisticModel m;
  m.weights.assign(theta.begin(), theta.end() - 1);
  m.bias = theta.back();
  m.l2 = l2;
  return m;
}

}  // namespace

double LogisticModel::decision(const std::vector<double>& x) const {
  return dot(weights, x) + bias;
}

double logreg_objective(const LogisticModel& model, const FeatureRows& x,
                        const std::vector<int>& y) {
  double loss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double z = model.decision(x[i]);
    loss += y[i] ? softplus(-z) : softplus(z);
  }
  return loss / static_cast<double>(x.size()) + 0.5 * model.l2 * dot(model.weights, model.weights);
}

std::vector<double> logreg_gradient(const LogisticModel& model, const FeatureRows& x,
                                    const std::vector<int>& y) {
  const std::size_t d = model.weights.size();
  std::vector<double> g(d + 1, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = sigmoid(model.decision(x[i])) - y[i];
    for (std::size_t j = 0; j < d; ++j) {
      g[j] += r * x[i][j];
    }
    g[d] += r;
  }
  const double inv_n = 1.0 / static_cast<double>(x.size());
  for (std::size_t j = 0; j < d; ++j) {
    g[j] = g[j] * inv_n + model.l2 * model.weights[j];
  }
  g[d] *= inv_n;
  return g;
}

FitReport logreg_fit(const FeatureRows& x, const std::vector<int>& y, const FitOptions& options) {
  check_inputs(x, y);
  const auto positives = std::count(y.begin(), y.end(), 1);
  if (positives == 0 || positives == static_cast<std::ptrdiff_t>(y.size())) {
    throw DegenerateFitError("logistic regression needs both classes in the training set");
  }
  if (!(options.l2 >= 0.0)) {
    throw ConfigError("l2 must be non-negative");
  }

  const std::size_t d = x.front().size();
  std::vector<double> theta(d + 1, 0.0);
  LogisticModel model = from_flat(theta, options.l2);
  double f = logreg_objective(model, x, y);
  std::vector<double> g = logreg_gradient(model, x, y);

  FitReport report;
  double step = 1.0;
  std::vector<double> prev_theta;
  std::vector<double> prev_g;
  std::size_t iter = 0;
  for (; iter < options.max_iters; ++iter) {
    const double gnorm = std::sqrt(dot(g, g));
    if (gnorm < options.grad_tol) {
      report.converged = true;
      break;
    }
    if (!prev_theta.empty()) {
      double sy = 0.0;
      double yy = 0.0;
      for (std::size_t j = 0; j <= d; ++j) {
        const double s = theta[j] - prev_theta[j];
        const double dg = g[j] - prev_g[j];
        sy += s * dg;
        yy += dg * dg;
      }
      if (sy > 0.0 && yy > 0.0) {
        step = sy / yy;
      }
    }
    // Armijo backtracking on the proposed step. Close to the optimum the
    // sufficient-decrease test drops below the resolution of f; a step that
    // does not raise f and shrinks the gradient is then accepted instead.
    const double g2 = gnorm * gnorm;
    std::vector<double> trial(d + 1);
    std::vector<double> g_trial;
    double f_trial = f;
    bool accepted = false;
    for (int tries = 0; tries < 60 && !accepted; ++tries) {
      for (std::size_t j = 0; j <= d; ++j) {
        trial[j] = theta[j] - step * g[j];
      }
      const LogisticModel candidate = from_flat(trial, options.l2);
      f_trial = logreg_objective(candidate, x, y);
      if (f_trial <= f - 1e-4 * step * g2) {
        g_trial = logreg_gradient(candidate, x, y);
        accepted = true;
      } else if (f_trial <= f) {
        g_trial = logreg_gradient(candidate, x, y);
        accepted = dot(g_trial, g_trial) < g2;
      }
      if (!accepted) {
        step *= 0.5;
      }
    }
    if (!accepted) {
      break;  // no descent possible at double precision
    }
    prev_theta = std::move(theta);
    prev_g = std::move(g);
    theta = trial;
    f = f_trial;
    model = from_flat(theta, options.l2);
    g = std::move(g_trial);
    report.objective_trace.push_back(f);
  }
  report.model = model;
  report.iterations = iter;
  report.objective = f;
  report.grad_norm = std::sqrt(dot(g, g));
  report.converged = report.converged || report.grad_norm < options.grad_tol;
  return report;
}

double logreg_accuracy(const LogisticModel& model, const FeatureRows& x, const std::vector<int>& y) {
  if (x.empty() || x.size() != y.size()) {
    throw ShapeError("accuracy needs one label per non-empty feature row");
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    correct += model.predict(x[i]) == y[i] ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(x.size());
}

double majority_baseline(const std::vector<int>& y) {
  if (y.empty()) {
    return 0.0;
  }
  const auto pos = static_cast<double>(std::count(y.begin(), y.end(), 1));
  const auto n = static_cast<double>(y.size());
  return std::max(pos, n - pos) / n;
}

Standardizer Standardizer::fit(const FeatureRows& x) {
  if (x.empty()) {
    throw ShapeError("cannot standardize an empty feature set");
  }
  const std::size_t d = x.front().size();
  Standardizer s;
  s.mean.assign(d, 0.0);
  s.scale.assign(d, 1.0);
  for (const auto& row : x) {
    for (std::size_t j = 0; j < d; ++j) {
      s.mean[j] += row[j];
    }
  }
  for (double& m : s.mean) {
    m /= static_cast<double>(x.size());
  }
  std::vector<double> var(d, 0.0);
  for (const auto& row : x) {
    for (std::size_t j = 0; j < d; ++j) {
      const double c = row[j] - s.mean[j];
      var[j] += c * c;
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    const double sd = std::sqrt(var[j] / static_cast<double>(x.size()));
    s.scale[j] = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

FeatureRows Standardizer::apply(const FeatureRows& x) const {
  FeatureRows out = x;
  for (auto& row : out) {
    if (row.size() != mean.size()) {
      throw ShapeError("feature width differs from the fitted standardizer");
    }
    for (std::size_t j = 0; j < row.size(); ++j) {
      row[j] = (row[j] - mean[j]) / scale[j];
    }
  }
  return out;
}

std::vector<double> default_l2_grid() {
  std::vector<double> grid;
  for (int e = -6; e <= 3; ++e) {
    grid.push_back(std::pow(10.0, e));
  }
  return grid;
}

TransferReport run_transfer(const FeatureRows& train_x, const std::vector<int>& train_y,
                            const FeatureRows& val_x, const std::vector<int>& val_y,
                            const FeatureRows& test_x, const std::vector<int>& test_y,
                            const std::vector<double>& l2_grid, const FitOptions& base) {
  if (l2_grid.empty()) {
    throw ConfigError("l2 grid is empty");
  }
  const Standardizer st = Standardizer::fit(train_x);
  const FeatureRows tx = st.apply(train_x);
  const FeatureRows vx = st.apply(val_x);
  const FeatureRows sx = st.apply(test_x);

  TransferReport report;
  double best = -1.0;
  for (double l2 : l2_grid) {
    FitOptions opt = base;
    opt.l2 = l2;
    FitReport fit = logreg_fit(tx, train_y, opt);
    const double acc = logreg_accuracy(fit.model, vx, val_y);
    report.grid.push_back({l2, acc});
    if (acc > best || (acc == best && l2 > report.l2)) {
      best = acc;
      report.l2 = l2;
      report.val_accuracy = acc;
      report.fit = std::move(fit);
    }
  }
  report.test_accuracy = logreg_accuracy(report.fit.model, sx, test_y);
  report.majority_baseline = majority_baseline(test_y);
  return report;
}

LabeledSet read_labeled_tsv(std::istream& in) {
  LabeledSet set;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty()) {
      continue;
    }
    const auto tab = line.find('\t');
    if (tab != 1 || (line[0] != '0' && line[0] != '1') || tab + 1 >= line.size()) {
      throw DataError("labeled line " + std::to_string(lineno) + ": expected '0|1<TAB>text'");
    }
    set.labels.push_back(line[0] - '0');
    set.texts.push_back(line.substr(tab + 1));
  }
  return set;
}

void write_labeled_tsv(std::ostream& out, const LabeledSet& set) {
  for (std::size_t i = 0; i < set.texts.size(); ++i) {
    out << set.labels[i] << '\t' << set.texts[i] << '\n';
  }
}

FeatureRows widen(const std::vector<std::vector<float>>& rows) {
  FeatureRows out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    out.emplace_back(r.begin(), r.end());
  }
  return out;
}

}  // namespace mlstm::eval
