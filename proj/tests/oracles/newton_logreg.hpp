#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace oracle {

struct NewtonResult {
  std::vector<double> weights;
  double bias = 0.0;
  std::size_t iterations = 0;
};

// Damped Newton's method on mean log-loss + (l2 / 2) ||w||^2 (bias free).
// Dense Hessian, Gaussian elimination with partial pivoting.
inline NewtonResult newton_logreg(const std::vector<std::vector<double>>& x,
                                  const std::vector<int>& y, double l2) {
  const std::size_t n = x.size();
  const std::size_t d = x.front().size();
  const std::size_t p = d + 1;
  std::vector<double> theta(p, 0.0);

  auto objective = [&](const std::vector<double>& th) {
    double j = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double s = th[d];
      for (std::size_t k = 0; k < d; ++k) {
        s += th[k] * x[i][k];
      }
      // log(1 + e^s) - y s, evaluated stably.
      j += (s > 0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s))) - y[i] * s;
    }
    double reg = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      reg += th[k] * th[k];
    }
    return j / static_cast<double>(n) + 0.5 * l2 * reg;
  };

  NewtonResult out;
  for (std::size_t it = 0; it < 100; ++it) {
    std::vector<double> g(p, 0.0);
    std::vector<double> hess(p * p, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double s = theta[d];
      for (std::size_t k = 0; k < d; ++k) {
        s += theta[k] * x[i][k];
      }
      const double pr = 1.0 / (1.0 + std::exp(-s));
      const double r = pr - y[i];
      const double wgt = pr * (1.0 - pr);
      for (std::size_t a = 0; a < p; ++a) {
        const double xa = a < d ? x[i][a] : 1.0;
        g[a] += r * xa;
        for (std::size_t b = 0; b < p; ++b) {
          const double xb = b < d ? x[i][b] : 1.0;
          hess[a * p + b] += wgt * xa * xb;
        }
      }
    }
    double gnorm = 0.0;
    for (std::size_t a = 0; a < p; ++a) {
      g[a] /= static_cast<double>(n);
      for (std::size_t b = 0; b < p; ++b) {
        hess[a * p + b] /= static_cast<double>(n);
      }
      if (a < d) {
        g[a] += l2 * theta[a];
        hess[a * p + a] += l2;
      }
      gnorm += g[a] * g[a];
    }
    out.iterations = it;
    if (std::sqrt(gnorm) < 1e-12) {
      break;
    }
    // Solve hess * step = g.
    std::vector<double> step = g;
    for (std::size_t col = 0; col < p; ++col) {
      std::size_t piv = col;
      for (std::size_t r = col + 1; r < p; ++r) {
        if (std::fabs(hess[r * p + col]) > std::fabs(hess[piv * p + col])) {
          piv = r;
        }
      }
      if (hess[piv * p + col] == 0.0) {
        throw std::runtime_error("singular Hessian");
      }
      if (piv != col) {
        for (std::size_t c = 0; c < p; ++c) {
          std::swap(hess[col * p + c], hess[piv * p + c]);
        }
        std::swap(step[col], step[piv]);
      }
      for (std::size_t r = col + 1; r < p; ++r) {
        const double f = hess[r * p + col] / hess[col * p + col];
        for (std::size_t c = col; c < p; ++c) {
          hess[r * p + c] -= f * hess[col * p + c];
        }
        step[r] -= f * step[col];
      }
    }
    for (std::size_t r = p; r-- > 0;) {
      for (std::size_t c = r + 1; c < p; ++c) {
        step[r] -= hess[r * p + c] * step[c];
      }
      step[r] /= hess[r * p + r];
    }
    const double j0 = objective(theta);
    double t = 1.0;
    std::vector<double> trial(p);
    for (int halvings = 0; halvings < 60; ++halvings) {
      for (std::size_t a = 0; a < p; ++a) {
        trial[a] = theta[a] - t * step[a];
      }
      if (objective(trial) <= j0) {
        break;
      }
      t *= 0.5;
    }
    theta = trial;
  }
  out.weights.assign(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(d));
  out.bias = theta[d];
  return out;
}

}  // namespace oracle
