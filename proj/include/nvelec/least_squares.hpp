#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "nvelec/errors.hpp"

namespace nvelec {

struct LmOptions {
  int max_iter = 60;
  double fd_step = 5e-3;       // absolute step in the optimizer's coordinates
  bool central_differences = true;
  double ftol = 1e-10;         // relative objective decrease that counts as converged
  double xtol = 1e-9;          // step norm that counts as converged
  double lambda0 = 1e-3;
};

struct LmResult {
  Eigen::VectorXd x;
  Eigen::VectorXd residuals;
  Eigen::MatrixXd jacobian;    // at x
  double objective = 0.0;      // sum of squared residuals
  std::vector<double> history; // objective after every accepted step, starting at x0
  int iterations = 0;
  bool converged = false;
};

// Finite-difference Jacobian of r(x).
template <class Residuals>
Eigen::MatrixXd fd_jacobian(Residuals&& r, const Eigen::VectorXd& x, const Eigen::VectorXd& r0, double h, bool central) {
  Eigen::MatrixXd j(r0.size(), x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    Eigen::VectorXd xp = x, xm = x;
    xp[k] += h;
    if (central) {
      xm[k] -= h;
      j.col(k) = (r(xp) - r(xm)) / (2.0 * h);
    } else {
      j.col(k) = (r(xp) - r0) / h;
    }
  }
  return j;
}

// Levenberg-Marquardt on sum r_i(x)^2 with Marquardt diagonal scaling. Only
// steps that lower the objective are accepted, so `history` is non-increasing.
template <class Residuals>
LmResult levenberg_marquardt(Residuals&& r, Eigen::VectorXd x0, const LmOptions& opt = {}) {
  LmResult out;
  out.x = std::move(x0);
  out.residuals = r(out.x);
  out.objective = out.residuals.squaredNorm();
  if (!std::isfinite(out.objective)) throw NumericalError("levenberg_marquardt: non-finite objective at start");
  out.history.push_back(out.objective);
  double lambda = opt.lambda0;
  out.jacobian = fd_jacobian(r, out.x, out.residuals, opt.fd_step, opt.central_differences);
  for (int it = 0; it < opt.max_iter; ++it) {
    out.iterations = it + 1;
    const Eigen::MatrixXd jtj = out.jacobian.transpose() * out.jacobian;
    const Eigen::VectorXd g = out.jacobian.transpose() * out.residuals;
    bool accepted = false;
    Eigen::VectorXd step;
    for (int tries = 0; tries < 30; ++tries) {
      Eigen::MatrixXd a = jtj;
      for (Eigen::Index k = 0; k < a.rows(); ++k) a(k, k) += lambda * std::max(jtj(k, k), 1e-12);
      step = a.ldlt().solve(-g);
      const Eigen::VectorXd xn = out.x + step;
      const Eigen::VectorXd rn = r(xn);
      const double fn = rn.squaredNorm();
      if (std::isfinite(fn) && fn < out.objective) {
        const double prev = out.objective;
        out.x = xn;
        out.residuals = rn;
        out.objective = fn;
        out.history.push_back(fn);
        lambda = std::max(lambda / 5.0, 1e-12);
        accepted = true;
        if ((prev - fn) <= opt.ftol * std::max(prev, 1e-300) || step.norm() < opt.xtol) out.converged = true;
        break;
      }
      lambda *= 4.0;
      if (step.norm() < opt.xtol) break;
    }
    if (!accepted) {
      // No downhill step at any damping: a (local) minimum to FD accuracy.
      out.converged = true;
      break;
    }
    out.jacobian = fd_jacobian(r, out.x, out.residuals, opt.fd_step, opt.central_differences);
    if (out.converged) break;
  }
  return out;
}

}  // namespace nvelec
