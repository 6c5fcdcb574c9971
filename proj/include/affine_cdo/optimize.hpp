#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace affine_cdo {

struct NelderMeadOptions {
  std::size_t max_evaluations = 20000;
  double f_tolerance = 1e-8;   // spread of simplex values
  double x_tolerance = 1e-6;   // simplex diameter (max coordinate distance)
  double initial_step = 0.1;   // per coordinate
  std::size_t restarts = 3;    // fresh simplices around the best point after convergence
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  std::size_t evaluations = 0;
  bool converged = false;
};

/// Minimizes f with the adaptive Nelder-Mead method (dimension-dependent coefficients).
/// Non-finite objective values are treated as +infinity.
NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x0,
                             const NelderMeadOptions& options = {});

struct NewtonOptions {
  std::size_t max_iterations = 30;
  double relative_step = 1e-4;
  double gradient_tolerance = 1e-6;  // on the Newton decrement g^T H^-1 g
  std::size_t workers = 0;
};

struct NewtonResult {
  std::vector<double> x;
  double value = 0.0;
  std::size_t evaluations = 0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Levenberg-damped Newton iterations from x0 with finite-difference gradient and Hessian;
/// accepts only steps that decrease f.
NewtonResult newton_polish(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x0,
                           const NewtonOptions& options = {});

/// Central finite-difference gradient and Hessian from one stencil; gradient written to grad when non-null.
std::vector<std::vector<double>> finite_difference_hessian(const std::function<double(const std::vector<double>&)>& f,
                                                           const std::vector<double>& x, double relative_step,
                                                           std::size_t workers, std::vector<double>* grad);

/// Central finite-difference Hessian with relative steps; evaluations run through parallel_for.
std::vector<std::vector<double>> finite_difference_hessian(const std::function<double(const std::vector<double>&)>& f,
                                                           const std::vector<double>& x, double relative_step = 1e-4,
                                                           std::size_t workers = 0);

}  // namespace affine_cdo
