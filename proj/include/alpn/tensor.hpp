#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "alpn/errors.hpp"
#include "alpn/rng.hpp"

namespace alpn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// A named parameter matrix with its accumulated gradient. Gradients are
// zeroed by the optimizer after every applied step.
struct ParamTensor {
  std::string name;
  Matrix value;
  Matrix grad;

  ParamTensor() = default;
  ParamTensor(std::string n, Eigen::Index rows, Eigen::Index cols)
      : name(std::move(n)),
        value(Matrix::Zero(rows, cols)),
        grad(Matrix::Zero(rows, cols)) {}

  Eigen::Index rows() const { return value.rows(); }
  Eigen::Index cols() const { return value.cols(); }
  Eigen::Index size() const { return value.size(); }

  void zero_grad() { grad.setZero(); }

  bool value_finite() const { return value.allFinite(); }
  bool grad_finite() const { return grad.allFinite(); }

  // Uniform init in +-sqrt(6 / (fan_in + fan_out)).
  void xavier_init(RngStream& rng) {
    const double bound =
        std::sqrt(6.0 / static_cast<double>(value.rows() + value.cols()));
    for (Eigen::Index c = 0; c < value.cols(); ++c) {
      for (Eigen::Index r = 0; r < value.rows(); ++r) {
        value(r, c) = rng.uniform(-bound, bound);
      }
    }
  }
};

inline void zero_grads(const std::vector<ParamTensor*>& params) {
  for (ParamTensor* p : params) p->zero_grad();
}

}  // namespace alpn
