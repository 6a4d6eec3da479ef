#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "alpn/errors.hpp"
#include "alpn/tensor.hpp"

namespace alpn {

struct AdamHyper {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam over a fixed set of parameter tensors. step() consumes
// the accumulated gradients (descending them) and zeroes them afterwards.
class AdamOptimizer {
 public:
  AdamOptimizer(std::vector<ParamTensor*> params, AdamHyper hyper)
      : params_(std::move(params)), hyper_(hyper) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const ParamTensor* p : params_) {
      m_.push_back(Matrix::Zero(p->rows(), p->cols()));
      v_.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
  }

  void step() {
    // Validate every gradient before touching any parameter, so a blown-up
    // update leaves the model in its pre-step state.
    for (const ParamTensor* p : params_) {
      if (!p->grad_finite()) {
        throw NumericsError("adam: non-finite gradient in tensor '" + p->name +
                            "' at step " + std::to_string(step_count_ + 1));
      }
    }
    ++step_count_;
    const double bc1 = 1.0 - std::pow(hyper_.beta1, step_count_);
    const double bc2 = 1.0 - std::pow(hyper_.beta2, step_count_);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      ParamTensor& p = *params_[i];
      m_[i] = hyper_.beta1 * m_[i] + (1.0 - hyper_.beta1) * p.grad;
      v_[i] = hyper_.beta2 * v_[i] +
              (1.0 - hyper_.beta2) * p.grad.cwiseProduct(p.grad);
      const Matrix mhat = m_[i] / bc1;
      const Matrix vhat = v_[i] / bc2;
      p.value.array() -=
          hyper_.lr * mhat.array() / (vhat.array().sqrt() + hyper_.eps);
      p.zero_grad();
    }
  }

  std::int64_t step_count() const { return step_count_; }
  const AdamHyper& hyper() const { return hyper_; }
  double learning_rate() const { return hyper_.lr; }

  // Moment access for checkpoint/resume.
  std::size_t slot_count() const { return params_.size(); }
  const Matrix& first_moment(std::size_t i) const { return m_[i]; }
  const Matrix& second_moment(std::size_t i) const { return v_[i]; }
  void restore(std::size_t i, Matrix m, Matrix v) {
    m_[i] = std::move(m);
    v_[i] = std::move(v);
  }
  void restore_step_count(std::int64_t n) { step_count_ = n; }

 private:
  std::vector<ParamTensor*> params_;
  std::vector<Matrix> m_, v_;
  AdamHyper hyper_;
  std::int64_t step_count_ = 0;
};

}  // namespace alpn
