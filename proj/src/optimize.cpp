#include "affine_cdo/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

#include "affine_cdo/errors.hpp"
#include "affine_cdo/parallel.hpp"

namespace affine_cdo {

namespace {

double safe(double v) { return std::isfinite(v) ? v : std::numeric_limits<double>::infinity(); }

struct Simplex {
  std::vector<std::vector<double>> x;
  std::vector<double> f;
};

}  // namespace

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x0,
                             const NelderMeadOptions& options) {
  const std::size_t n = x0.size();
  if (n == 0) throw ShapeError("Nelder-Mead needs at least one coordinate");
  const double dn = static_cast<double>(n);
  const double alpha = 1.0;
  const double beta = 1.0 + 2.0 / dn;
  const double gamma = 0.75 - 0.5 / dn;
  const double delta = 1.0 - 1.0 / dn;

  NelderMeadResult result;
  auto eval = [&](const std::vector<double>& x) {
    ++result.evaluations;
    return safe(f(x));
  };

  std::vector<double> best = std::move(x0);
  double best_f = eval(best);
  for (std::size_t round = 0; round <= options.restarts; ++round) {
    Simplex s;
    s.x.push_back(best);
    s.f.push_back(best_f);
    for (std::size_t i = 0; i < n; ++i) {
      auto v = best;
      v[i] += options.initial_step * std::max(1.0, std::abs(v[i])) / (1.0 + round);
      s.f.push_back(eval(v));
      s.x.push_back(std::move(v));
    }
    std::vector<std::size_t> order(n + 1);
    bool converged = false;
    while (result.evaluations < options.max_evaluations) {
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s.f[a] < s.f[b]; });
      Simplex sorted;
      for (std::size_t i : order) {
        sorted.x.push_back(std::move(s.x[i]));
        sorted.f.push_back(s.f[i]);
      }
      s = std::move(sorted);

      double diameter = 0.0;
      for (std::size_t i = 1; i <= n; ++i)
        for (std::size_t k = 0; k < n; ++k) diameter = std::max(diameter, std::abs(s.x[i][k] - s.x[0][k]));
      const double spread = s.f[n] - s.f[0];
      if (std::isfinite(spread) && spread <= options.f_tolerance * std::max(1.0, std::abs(s.f[0])) &&
          diameter <= options.x_tolerance) {
        converged = true;
        break;
      }

      std::vector<double> centroid(n, 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k) centroid[k] += s.x[i][k] / dn;
      auto along = [&](double coef) {
        std::vector<double> v(n);
        for (std::size_t k = 0; k < n; ++k) v[k] = centroid[k] + coef * (centroid[k] - s.x[n][k]);
        return v;
      };
      auto xr = along(alpha);
      const double fr = eval(xr);
      if (fr < s.f[0]) {
        auto xe = along(alpha * beta);
        const double fe = eval(xe);
        if (fe < fr) {
          s.x[n] = std::move(xe);
          s.f[n] = fe;
        } else {
          s.x[n] = std::move(xr);
          s.f[n] = fr;
        }
        continue;
      }
      if (fr < s.f[n - 1]) {
        s.x[n] = std::move(xr);
        s.f[n] = fr;
        continue;
      }
      const bool outside = fr < s.f[n];
      auto xc = along(outside ? alpha * gamma : -gamma);
      const double fc = eval(xc);
      if (fc < (outside ? fr : s.f[n])) {
        s.x[n] = std::move(xc);
        s.f[n] = fc;
        continue;
      }
      for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t k = 0; k < n; ++k) s.x[i][k] = s.x[0][k] + delta * (s.x[i][k] - s.x[0][k]);
        s.f[i] = eval(s.x[i]);
      }
    }
    const auto it = std::min_element(s.f.begin(), s.f.end());
    const std::size_t ib = static_cast<std::size_t>(it - s.f.begin());
    const double improvement = best_f - *it;
    if (*it <= best_f) {
      best = s.x[ib];
      best_f = *it;
    }
    result.converged = converged;
    if (result.evaluations >= options.max_evaluations) break;
    if (round > 0 && !(improvement > options.f_tolerance * std::max(1.0, std::abs(best_f)))) break;
  }
  result.x = std::move(best);
  result.value = best_f;
  return result;
}

std::vector<std::vector<double>> finite_difference_hessian(const std::function<double(const std::vector<double>&)>& f,
                                                           const std::vector<double>& x, double relative_step,
                                                           std::size_t workers) {
  return finite_difference_hessian(f, x, relative_step, workers, nullptr);
}

std::vector<std::vector<double>> finite_difference_hessian(const std::function<double(const std::vector<double>&)>& f,
                                                           const std::vector<double>& x, double relative_step,
                                                           std::size_t workers, std::vector<double>* grad) {
  const std::size_t n = x.size();
  std::vector<double> h(n);
  for (std::size_t i = 0; i < n; ++i) h[i] = relative_step * std::max(1.0, std::abs(x[i]));

  // Diagonal needs f(x +- h_i e_i); off-diagonal needs the four corners for i < j.
  struct Job {
    std::size_t i, j;
    int si, sj;
  };
  std::vector<Job> jobs;
  jobs.push_back({0, 0, 0, 0});
  for (std::size_t i = 0; i < n; ++i) {
    jobs.push_back({i, i, 1, 0});
    jobs.push_back({i, i, -1, 0});
    for (std::size_t j = i + 1; j < n; ++j)
      for (int si : {1, -1})
        for (int sj : {1, -1}) jobs.push_back({i, j, si, sj});
  }
  std::vector<double> values(jobs.size());
  parallel_for(
      jobs.size(),
      [&](std::size_t k) {
        auto v = x;
        const Job& job = jobs[k];
        if (job.si != 0) v[job.i] += job.si * h[job.i];
        if (job.sj != 0) v[job.j] += job.sj * h[job.j];
        values[k] = f(v);
      },
      workers);

  std::vector<std::vector<double>> hess(n, std::vector<double>(n, 0.0));
  const double f0 = values[0];
  if (grad) grad->assign(n, 0.0);
  std::size_t k = 1;
  for (std::size_t i = 0; i < n; ++i) {
    hess[i][i] = (values[k] - 2.0 * f0 + values[k + 1]) / (h[i] * h[i]);
    if (grad) (*grad)[i] = (values[k] - values[k + 1]) / (2.0 * h[i]);
    k += 2;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double pp = values[k], pm = values[k + 1], mp = values[k + 2], mm = values[k + 3];
      hess[i][j] = hess[j][i] = (pp - pm - mp + mm) / (4.0 * h[i] * h[j]);
      k += 4;
    }
  }
  return hess;
}

NewtonResult newton_polish(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x0,
                           const NewtonOptions& options) {
  const std::size_t n = x0.size();
  if (n == 0) throw ShapeError("Newton iterations need at least one coordinate");
  const auto stencil = 1 + 2 * n * n;
  NewtonResult result;
  result.x = std::move(x0);
  result.value = safe(f(result.x));
  ++result.evaluations;
  if (!std::isfinite(result.value)) return result;
  double mu = 1e-3;
  for (; result.iterations < options.max_iterations; ++result.iterations) {
    std::vector<double> g;
    const auto hess = finite_difference_hessian(f, result.x, options.relative_step, options.workers, &g);
    result.evaluations += stencil;
    const auto m = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd H(m, m);
    Eigen::VectorXd G(m);
    bool finite = true;
    for (std::size_t i = 0; i < n; ++i) {
      G(i) = g[i];
      finite = finite && std::isfinite(g[i]);
      for (std::size_t j = 0; j < n; ++j) {
        H(i, j) = hess[i][j];
        finite = finite && std::isfinite(hess[i][j]);
      }
    }
    if (!finite) break;
    Eigen::LLT<Eigen::MatrixXd> plain(H);
    if (plain.info() == Eigen::Success) {
      const double decrement = G.dot(plain.solve(G));
      if (decrement < options.gradient_tolerance) {
        result.converged = true;
        break;
      }
    }
    bool accepted = false;
    for (int attempt = 0; attempt < 12 && !accepted; ++attempt) {
      Eigen::MatrixXd D = H;
      for (std::size_t i = 0; i < n; ++i) D(i, i) += mu * std::max(std::abs(H(i, i)), 1e-8);
      Eigen::LLT<Eigen::MatrixXd> llt(D);
      if (llt.info() != Eigen::Success) {
        mu *= 10.0;
        continue;
      }
      const Eigen::VectorXd step = -llt.solve(G);
      auto trial = result.x;
      for (std::size_t i = 0; i < n; ++i) trial[i] += step(i);
      const double v = safe(f(trial));
      ++result.evaluations;
      if (v < result.value) {
        result.x = std::move(trial);
        result.value = v;
        mu = std::max(mu / 10.0, 1e-12);
        accepted = true;
      } else {
        mu *= 10.0;
      }
    }
    if (!accepted) break;
  }
  return result;
}

}  // namespace affine_cdo
