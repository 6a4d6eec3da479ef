#pragma once

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "alpn/errors.hpp"
#include "alpn/tensor.hpp"

namespace alpn {

enum class Activation { kIdentity, kTanh, kRelu };

// ---------------------------------------------------------------------------
// Dense layer
// ---------------------------------------------------------------------------

// Caller-owned cache so that models stay const during inference and
// thread-safe to share; one cache per forward call that will be
// differentiated.
struct DenseCache {
  Matrix input;  // N x in
  Matrix pre;    // N x out, pre-activation
  Matrix out;    // N x out
};

// Row-wise affine map plus activation: Y = act(X * W^T + 1 * b^T).
// W is (out x in), b is (out x 1), X holds one sample per row.
inline Matrix dense_forward(const Matrix& X, const ParamTensor& W,
                            const ParamTensor& b, Activation act,
                            DenseCache* cache = nullptr) {
  if (X.cols() != W.cols()) {
    throw ConfigError("dense_forward: input width " + std::to_string(X.cols()) +
                      " does not match weight fan-in " +
                      std::to_string(W.cols()) + " of '" + W.name + "'");
  }
  if (b.rows() != W.rows() || b.cols() != 1) {
    throw ConfigError("dense_forward: bias shape does not match '" + W.name +
                      "'");
  }
  Matrix pre = X * W.value.transpose();
  pre.rowwise() += b.value.col(0).transpose();
  Matrix out;
  switch (act) {
    case Activation::kIdentity:
      out = pre;
      break;
    case Activation::kTanh:
      out = pre.array().tanh().matrix();
      break;
    case Activation::kRelu:
      out = pre.cwiseMax(0.0);
      break;
  }
  if (cache != nullptr) {
    cache->input = X;
    cache->pre = pre;
    cache->out = out;
  }
  return out;
}

// Backward pass for dense_forward. Accumulates into W.grad / b.grad and
// returns dL/dX.
inline Matrix dense_backward(const Matrix& dY, const DenseCache& cache,
                             ParamTensor& W, ParamTensor& b, Activation act) {
  Matrix dpre;
  switch (act) {
    case Activation::kIdentity:
      dpre = dY;
      break;
    case Activation::kTanh:
      dpre = dY.cwiseProduct(
          (1.0 - cache.out.array().square()).matrix());
      break;
    case Activation::kRelu:
      dpre = dY.cwiseProduct(
          (cache.pre.array() > 0.0).cast<double>().matrix());
      break;
  }
  W.grad.noalias() += dpre.transpose() * cache.input;
  b.grad.col(0).noalias() += dpre.colwise().sum().transpose();
  return dpre * W.value;
}

// Vector convenience wrappers (single sample).
inline Vector dense_forward(const Vector& x, const ParamTensor& W,
                            const ParamTensor& b, Activation act,
                            DenseCache* cache = nullptr) {
  return dense_forward(Matrix(x.transpose()), W, b, act, cache)
      .row(0)
      .transpose();
}

inline Vector dense_backward(const Vector& dy, const DenseCache& cache,
                             ParamTensor& W, ParamTensor& b, Activation act) {
  return dense_backward(Matrix(dy.transpose()), cache, W, b, act)
      .row(0)
      .transpose();
}

// ---------------------------------------------------------------------------
// Softmax
// ---------------------------------------------------------------------------

// Max-subtracted softmax. Entries are floored at a denormal-safe minimum so
// finite logits never map to exact zeros.
inline Vector softmax(const Vector& logits) {
  if (!logits.allFinite()) {
    throw NumericsError("softmax: non-finite logits");
  }
  const double m = logits.maxCoeff();
  Vector p = (logits.array() - m).exp().matrix();
  p /= p.sum();
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] < 1e-300) p[i] = 1e-300;
  }
  return p;
}

// dL/dlogits given probabilities p = softmax(logits) and dL/dp.
inline Vector softmax_backward(const Vector& p, const Vector& dp) {
  const double dot = p.dot(dp);
  return p.cwiseProduct(dp.array().matrix() -
                        Vector::Constant(p.size(), dot));
}

// Entropy of a probability vector, -sum p ln p.
inline double entropy(const Vector& p) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) h -= p[i] * std::log(p[i]);
  }
  return h < 0.0 ? 0.0 : h;
}

// dH/dlogits for H = entropy(softmax(logits)).
inline Vector entropy_backward_logits(const Vector& p, double h) {
  Vector d(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    d[i] = -p[i] * (std::log(p[i]) + h);
  }
  return d;
}

// ---------------------------------------------------------------------------
// Scaled dot-product attention
// ---------------------------------------------------------------------------

struct AttentionCache {
  Matrix Q, K, V;
  Matrix S;  // row-normalized attention weights, masked entries exactly 0
  double scale = 1.0;
  bool causal = false;
};

// Out = softmax_rows(scale * Q K^T) * V. With causal = true, output row t
// attends only to key/value rows <= t.
inline Matrix attention(const Matrix& Q, const Matrix& K, const Matrix& V,
                        double scale, bool causal,
                        AttentionCache* cache = nullptr) {
  if (Q.cols() != K.cols()) {
    throw ConfigError("attention: query/key width mismatch");
  }
  if (K.rows() != V.rows()) {
    throw ConfigError("attention: key/value row mismatch");
  }
  const Eigen::Index n = Q.rows();
  const Eigen::Index m = K.rows();
  Matrix scores = scale * (Q * K.transpose());
  Matrix S = Matrix::Zero(n, m);
  for (Eigen::Index t = 0; t < n; ++t) {
    const Eigen::Index visible = causal ? std::min<Eigen::Index>(t + 1, m) : m;
    const double mx = scores.row(t).head(visible).maxCoeff();
    double sum = 0.0;
    for (Eigen::Index c = 0; c < visible; ++c) {
      S(t, c) = std::exp(scores(t, c) - mx);
      sum += S(t, c);
    }
    S.row(t).head(visible) /= sum;
  }
  Matrix out = S * V;
  if (cache != nullptr) {
    cache->Q = Q;
    cache->K = K;
    cache->V = V;
    cache->S = S;
    cache->scale = scale;
    cache->causal = causal;
  }
  return out;
}

// Gradients of attention w.r.t. Q, K, V.
inline void attention_backward(const Matrix& dOut, const AttentionCache& c,
                               Matrix& dQ, Matrix& dK, Matrix& dV) {
  dV.noalias() = c.S.transpose() * dOut;
  Matrix dS = dOut * c.V.transpose();
  // Row-wise softmax backward; masked entries have S == 0 and drop out.
  Matrix dA(c.S.rows(), c.S.cols());
  for (Eigen::Index t = 0; t < c.S.rows(); ++t) {
    const double dot = c.S.row(t).dot(dS.row(t));
    dA.row(t) = c.S.row(t).cwiseProduct(
        dS.row(t) - Eigen::RowVectorXd::Constant(c.S.cols(), dot));
  }
  dQ.noalias() = c.scale * (dA * c.K);
  dK.noalias() = c.scale * (dA.transpose() * c.Q);
}

// ---------------------------------------------------------------------------
// Scalar losses
// ---------------------------------------------------------------------------

inline double sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Numerically stable binary cross-entropy on a logit.
inline double bce_with_logit(double logit, double target) {
  const double mx = logit > 0.0 ? logit : 0.0;
  return mx - logit * target + std::log1p(std::exp(-std::abs(logit)));
}

inline double bce_with_logit_grad(double logit, double target) {
  return sigmoid(logit) - target;
}

}  // namespace alpn
