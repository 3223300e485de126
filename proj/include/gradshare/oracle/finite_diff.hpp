#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace gradshare::oracle {

class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Objective = std::function<double(std::span<const double>)>;

/// (f(x + h e_i) - f(x - h e_i)) / 2h with h = max(|x_i|, 1) * rel_eps.
std::vector<double> central_difference(const Objective& f, std::span<const double> x, double rel_eps = 1e-5);

/// Same with a fixed absolute step h.
std::vector<double> central_difference_abs(const Objective& f, std::span<const double> x, double h);

// A point in meta-parameter space: (theta, alpha, m, lambda). alpha may be empty.
struct MetaPoint {
  std::vector<double> theta;
  std::vector<double> inner_lr;
  std::vector<double> momentum;
  std::vector<double> gate;

  std::vector<double> flatten() const;
  static MetaPoint unflatten(std::span<const double> flat, const MetaPoint& shape);
};

/// Central-difference gradient of a scalar meta-objective, coordinate by coordinate.
MetaPoint finite_diff_meta_gradient(const std::function<double(const MetaPoint&)>& objective, const MetaPoint& point,
                                    double rel_eps = 1e-5);

/// max_i |a_i - b_i| / max(max_i |b_i|, floor). b is the reference.
double relative_error(std::span<const double> a, std::span<const double> b, double floor = 1e-12);

}  // namespace gradshare::oracle
