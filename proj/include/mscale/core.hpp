#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mscale {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Neumaier compensated sum. Adding exact zeros leaves the state untouched,
// so sums over a superset padded with zero terms agree with the sparse sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(double x) {
    add(x);
    return *this;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double dist2(const double* a, const double* b, int d) {
  double s = 0.0;
  for (int j = 0; j < d; ++j) {
    const double t = a[j] - b[j];
    s += t * t;
  }
  return s;
}

inline double dist(const double* a, const double* b, int d) {
  return std::sqrt(dist2(a, b, d));
}

inline bool is_integer(double s) { return std::fabs(s - std::round(s)) < 1e-12; }

// Runs body(i) for i in [0, n) on up to `threads` workers. Results must be
// written to per-index slots so reductions can happen afterwards in order.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  int threads = 0);

void set_default_threads(int threads);
int default_threads();

}  // namespace mscale
