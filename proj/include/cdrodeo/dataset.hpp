#pragma once

#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cdrodeo/errors.hpp"

namespace cdrodeo {

/// n joint observations W_i = (X_i, Y_i), stored row-major. The first d1
/// coordinates of a row are the conditioning variables, the remaining d2 the
/// response. d1 = 0 is the unconditional-density convention.
struct Dataset {
  std::vector<double> values;  // n * d, row-major
  int n = 0;
  int d = 0;
  int d1 = 0;
  int d2 = 0;

  double at(int i, int k) const { return values[static_cast<std::size_t>(i) * d + k]; }
  std::span<const double> row(int i) const {
    return {values.data() + static_cast<std::size_t>(i) * d, static_cast<std::size_t>(d)};
  }
  std::span<const double> x_part(int i) const {
    return {values.data() + static_cast<std::size_t>(i) * d, static_cast<std::size_t>(d1)};
  }
};

inline Dataset make_dataset(std::vector<double> values, int n, int d1, int d2) {
  const int d = d1 + d2;
  if (n < 1) throw input_error("dataset needs at least one observation");
  if (d < 1 || d2 < 1 || d1 < 0) throw input_error("invalid dimensions d1=" +
        std::to_string(d1) + " d2=" + std::to_string(d2));
  if (values.size() != static_cast<std::size_t>(n) * d)
    throw input_error("dataset storage size does not match n*d");
  for (std::size_t idx = 0; idx < values.size(); ++idx)
    if (!std::isfinite(values[idx]))
      throw input_error("non-finite dataset entry at row " +
                        std::to_string(idx / d) + ", column " + std::to_string(idx % d));
  Dataset ds;
  ds.values = std::move(values);
  ds.n = n;
  ds.d = d;
  ds.d1 = d1;
  ds.d2 = d2;
  return ds;
}

/// The point of interest w = (x, y).
struct QueryPoint {
  std::vector<double> w;

  std::span<const double> x_part(int d1) const {
    return {w.data(), static_cast<std::size_t>(d1)};
  }
};

inline QueryPoint make_query_point(std::vector<double> w) {
  for (double v : w)
    if (!std::isfinite(v)) throw input_error("query point has a non-finite coordinate");
  return QueryPoint{std::move(w)};
}

/// Per-coordinate bandwidth vector, all components strictly positive.
struct Bandwidth {
  std::vector<double> h;

  double product() const {
    double p = 1.0;
    for (double v : h) p *= v;
    return p;
  }
};

inline Bandwidth make_bandwidth(std::vector<double> h) {
  if (h.empty()) throw input_error("bandwidth vector is empty");
  for (double v : h)
    if (!(v > 0.0)) throw input_error("bandwidth components must be positive");
  return Bandwidth{std::move(h)};
}

}  // namespace cdrodeo
