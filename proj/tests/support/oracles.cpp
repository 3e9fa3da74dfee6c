#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "softrestrict/stats.hpp"

namespace oracles {

using softrestrict::Dataset;
using softrestrict::RestrictionExpr;
using softrestrict::RestrictionSystem;
using softrestrict::Rng;

Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double step) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    Eigen::VectorXd hi = x, lo = x;
    hi[k] += step;
    lo[k] -= step;
    g[k] = (f(hi) - f(lo)) / (2.0 * step);
  }
  return g;
}

Eigen::MatrixXd fd_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double step) {
  const Eigen::VectorXd f0 = f(x);
  Eigen::MatrixXd jac(f0.size(), x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    Eigen::VectorXd hi = x, lo = x;
    hi[k] += step;
    lo[k] -= step;
    jac.col(k) = (f(hi) - f(lo)) / (2.0 * step);
  }
  return jac;
}

Eigen::MatrixXd fd_hessian(const std::function<double(const Eigen::VectorXd&)>& f,
                           const Eigen::VectorXd& x, double step) {
  const Eigen::Index p = x.size();
  Eigen::MatrixXd hess(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = i; j < p; ++j) {
      Eigen::VectorXd pp = x, pm = x, mp = x, mm = x;
      pp[i] += step; pp[j] += step;
      pm[i] += step; pm[j] -= step;
      mp[i] -= step; mp[j] += step;
      mm[i] -= step; mm[j] -= step;
      hess(i, j) = (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * step * step);
      hess(j, i) = hess(i, j);
    }
  }
  return hess;
}

RidgeOracle ridge_solution(const Dataset& data, const std::vector<int>& slopes, double c) {
  const int p = data.p();
  const double n = static_cast<double>(data.n());
  const Eigen::MatrixXd H = data.X.transpose() * data.X / n;
  const Eigen::VectorXd b = data.X.transpose() * data.y / n;
  Eigen::MatrixXd proj = Eigen::MatrixXd::Zero(p, p);
  for (int j : slopes) proj(j, j) = 1.0;

  const auto theta_of = [&](double lambda) -> Eigen::VectorXd {
    return (H + 2.0 * lambda * proj).inverse() * b;
  };
  const auto hval = [&](double lambda) { return (proj * theta_of(lambda)).squaredNorm(); };

  RidgeOracle out;
  if (hval(0.0) <= c) {
    out.theta = theta_of(0.0);
    out.lambda = 0.0;
    out.active = false;
    return out;
  }
  double lo = 0.0, hi = 1.0;
  while (hval(hi) > c) {
    hi *= 2.0;
    if (hi > 1e12) throw std::runtime_error("ridge oracle: bracket failed");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (hval(mid) > c ? lo : hi) = mid;
    if (hi - lo < 1e-16 * (1.0 + hi)) break;
  }
  out.lambda = 0.5 * (lo + hi);
  out.theta = theta_of(out.lambda);
  out.active = true;
  return out;
}

Eigen::Vector2d grid_search_2d(const Dataset& data, const RestrictionSystem& system, double c,
                               const Eigen::Vector2d& center, double radius, double step) {
  const double n = static_cast<double>(data.n());
  const Eigen::Matrix2d H = data.X.transpose() * data.X / n;
  const Eigen::Vector2d b = data.X.transpose() * data.y / n;
  const double y2 = data.y.squaredNorm() / (2.0 * n);
  // phi(theta) = y'y/2n - b'theta + theta'H theta/2

  const auto count = static_cast<long>(std::floor(2.0 * radius / step)) + 1;
  double best = std::numeric_limits<double>::infinity();
  Eigen::Vector2d argbest = center;
  Eigen::VectorXd theta(2);
  for (long i = 0; i < count; ++i) {
    theta[0] = center[0] - radius + step * static_cast<double>(i);
    for (long j = 0; j < count; ++j) {
      theta[1] = center[1] - radius + step * static_cast<double>(j);
      if (system.eval_h(theta) > c) continue;
      const double value = y2 - b.dot(theta) + 0.5 * theta.dot(H * theta);
      if (value < best) {
        best = value;
        argbest = theta;
      }
    }
  }
  if (!std::isfinite(best)) throw std::runtime_error("grid oracle: no feasible point in box");
  return argbest;
}

Eigen::VectorXd restricted_ols_formula(const Dataset& data, const Eigen::VectorXd& R,
                                       double r) {
  const Eigen::MatrixXd xtx_inv = (data.X.transpose() * data.X).inverse();
  const Eigen::VectorXd theta_tilde = xtx_inv * data.X.transpose() * data.y;
  const double denom = R.dot(xtx_inv * R);
  return theta_tilde - xtx_inv * R * ((R.dot(theta_tilde) - r) / denom);
}

double ks_distance_to_normal(std::vector<double> sample) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double dist = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double cdf = softrestrict::norm_cdf(sample[i]);
    const double hi = (static_cast<double>(i) + 1.0) / n - cdf;
    const double lo = cdf - static_cast<double>(i) / n;
    dist = std::max({dist, hi, lo});
  }
  return dist;
}

Dataset random_dataset(Rng& rng, int n, int p) {
  Dataset data;
  data.X.resize(n, p);
  data.has_intercept = false;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) data.X(i, j) = rng.normal();
  Eigen::VectorXd theta(p);
  for (int j = 0; j < p; ++j) theta[j] = 2.0 * rng.uniform() - 1.0;
  data.y.resize(n);
  for (int i = 0; i < n; ++i) data.y[i] = data.X.row(i).dot(theta) + rng.normal();
  for (int j = 0; j < p; ++j) data.column_names.push_back("x" + std::to_string(j));
  return data;
}

RestrictionExpr random_polynomial_expr(Rng& rng, int p, int max_degree) {
  // Sum of up to four random monomials c * theta[a] (* theta[b]) (^k).
  std::string text;
  const int terms = 1 + static_cast<int>(rng.uniform() * 3.0);
  for (int t = 0; t < terms; ++t) {
    const double coef = std::round((4.0 * rng.uniform() - 2.0) * 100.0) / 100.0;
    const int var = static_cast<int>(rng.uniform() * p);
    const int degree = 1 + static_cast<int>(rng.uniform() * max_degree);
    if (t > 0) text += rng.uniform() < 0.5 ? "+" : "-";
    text += std::to_string(std::fabs(coef) + 0.05);
    text += "*theta[" + std::to_string(var) + "]";
    if (degree > 1) text += "^" + std::to_string(std::min(degree, max_degree));
    if (rng.uniform() < 0.3) {
      const int var2 = static_cast<int>(rng.uniform() * p);
      text += "*theta[" + std::to_string(var2) + "]";
    }
  }
  if (rng.uniform() < 0.5) text += rng.uniform() < 0.5 ? "+0.25" : "-0.25";
  return RestrictionExpr::parse(text, p);
}

RestrictionSystem random_system(Rng& rng, int p, int q, int max_degree, bool diagonal_sigma) {
  std::vector<RestrictionExpr> exprs;
  exprs.reserve(static_cast<std::size_t>(q));
  for (int j = 0; j < q; ++j) exprs.push_back(random_polynomial_expr(rng, p, max_degree));
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(q, q);
  if (diagonal_sigma) {
    for (int j = 0; j < q; ++j) sigma(j, j) = 0.5 + rng.uniform();
  } else {
    Eigen::MatrixXd root(q, q);
    for (int i = 0; i < q; ++i)
      for (int j = 0; j < q; ++j) root(i, j) = rng.normal();
    sigma = root * root.transpose() + static_cast<double>(q) * Eigen::MatrixXd::Identity(q, q);
  }
  return RestrictionSystem(std::move(exprs), std::move(sigma));
}

} // namespace oracles
