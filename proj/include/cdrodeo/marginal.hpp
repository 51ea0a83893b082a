#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cdrodeo/dataset.hpp"
#include "cdrodeo/errors.hpp"
#include "cdrodeo/kernels.hpp"
#include "cdrodeo/quadrature.hpp"

namespace cdrodeo {

/// How the covariate-density plug-in is built when it has to be estimated.
struct MarginalConfig {
  double c_exponent = 2.0;             // aux sample size is n^c, c > 1
  std::string kernel_family = "gaussian";  // "gaussian" or "biweight"
  std::optional<double> fixed_floor;   // nullopt = (log n)^(-1/4) rule
};

/// The f~_X abstraction: an analytic covariate density, or a truncated KDE
/// fitted on an auxiliary sample. Values at the main-sample points are cached
/// once (attach_cache) and consumed as 1/f~_X(X_i) weights by the estimator.
/// Immutable after fitting + caching; marginal_at is pure.
struct MarginalModel {
  enum class Kind { known, fitted_kde };
  Kind kind = Kind::known;

  std::function<double(std::span<const double>)> density;  // known case

  // fitted_kde case
  std::vector<double> aux;  // n_x rows of d1 coordinates, row-major
  int n_x = 0;
  int d1 = 0;
  double h_x = 0.0;
  double floor = 0.0;
  KernelProfile kernel_x;

  std::vector<double> cached_values;  // f~_X(X_i) for the main sample
};

inline double marginal_at(const MarginalModel& model, std::span<const double> u) {
  if (model.kind == MarginalModel::Kind::known) return model.density(u);

  const KernelProfile& k = model.kernel_x;
  const double inv_h = 1.0 / model.h_x;
  double cell_scale = 1.0;
  for (int j = 0; j < model.d1; ++j) cell_scale *= inv_h;

  thread_local std::vector<double> terms;
  terms.clear();
  for (int i = 0; i < model.n_x; ++i) {
    const double* row = model.aux.data() + static_cast<std::size_t>(i) * model.d1;
    if (k.support_radius) {
      bool outside = false;
      for (int j = 0; j < model.d1; ++j)
        if (std::abs(u[j] - row[j]) > *k.support_radius * model.h_x) {
          outside = true;
          break;
        }
      if (outside) continue;
    }
    double term = 1.0;
    for (int j = 0; j < model.d1; ++j) term *= k.eval((u[j] - row[j]) * inv_h);
    terms.push_back(term);
  }
  const double kde = pairwise_sum(terms) * cell_scale / model.n_x;
  return std::max(kde, model.floor);
}

inline void attach_cache(MarginalModel& model, const Dataset& data) {
  model.cached_values.resize(data.n);
  for (int i = 0; i < data.n; ++i)
    model.cached_values[i] = marginal_at(model, data.x_part(i));
}

/// Known covariate density; rejected if it is not strictly positive at every
/// sample point: the estimator weights are its reciprocals.
inline MarginalModel marginal_known(std::function<double(std::span<const double>)> density,
                                    const Dataset& data) {
  MarginalModel model;
  model.kind = MarginalModel::Kind::known;
  model.density = std::move(density);
  model.cached_values.resize(data.n);
  for (int i = 0; i < data.n; ++i) {
    const double v = model.density(data.x_part(i));
    if (!(v > 0.0))
      throw input_error("known marginal density is not positive at sample point " +
                        std::to_string(i));
    model.cached_values[i] = v;
  }
  return model;
}

/// The constant-1 marginal for the unconditional convention (d1 = 0).
inline MarginalModel marginal_unit(const Dataset& data) {
  return marginal_known([](std::span<const double>) { return 1.0; }, data);
}

namespace detail {

inline int required_marginal_order(int d1, double c) {
  const double needed = d1 / (2.0 * (c - 1.0));
  return std::max(2, static_cast<int>(std::ceil(needed - 1e-12)));
}

inline KernelProfile marginal_kernel(const std::string& family, int order) {
  if (order <= 2) return kernel_by_name(family);
  if (order <= 4) return kernel_by_name(family + "4");
  throw input_error("marginal KDE needs a kernel of order " + std::to_string(order) +
                    "; only orders 2 and 4 are available (increase c_exponent)");
}

}  // namespace detail

/// Fit the truncated kernel density estimator of the covariate marginal on an
/// independent auxiliary sample: bandwidth h_X = n_X^{-(c-1)/(c d1)}, values
/// floored at (log n_main)^{-1/4}. The floor applies at evaluation time; the
/// KDE itself is never mutated.
inline MarginalModel fit_marginal_kde(std::vector<double> aux, int n_x, int d1,
                                      int n_main, const MarginalConfig& cfg) {
  if (n_x < 1 || d1 < 1) throw input_error("marginal KDE needs a nonempty aux sample with d1 >= 1");
  if (aux.size() != static_cast<std::size_t>(n_x) * d1)
    throw input_error("aux sample storage size does not match n_x*d1");
  if (n_main < 3)
    throw input_error("marginal KDE needs a main sample of size >= 3 (the "
                      "(log n)^(-1/4) floor rule degenerates below that)");
  if (!(cfg.c_exponent > 1.0)) throw input_error("c_exponent must exceed 1");

  MarginalModel model;
  model.kind = MarginalModel::Kind::fitted_kde;
  model.aux = std::move(aux);
  model.n_x = n_x;
  model.d1 = d1;
  const double c = cfg.c_exponent;
  model.h_x = std::pow(static_cast<double>(n_x), -(c - 1.0) / (c * d1));
  model.floor = cfg.fixed_floor ? *cfg.fixed_floor
                                : std::pow(std::log(static_cast<double>(n_main)), -0.25);
  if (!(model.floor > 0.0)) throw input_error("marginal floor must be positive");
  model.kernel_x =
      detail::marginal_kernel(cfg.kernel_family, detail::required_marginal_order(d1, c));
  return model;
}

}  // namespace cdrodeo
