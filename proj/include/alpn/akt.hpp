#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "alpn/adam.hpp"
#include "alpn/catalog.hpp"
#include "alpn/errors.hpp"
#include "alpn/nn.hpp"
#include "alpn/rng.hpp"
#include "alpn/tensor.hpp"

namespace alpn {

struct AktHyper {
  double lr = 5e-3;
  int epochs = 150;
  int batch = 16;
};

// Attentive knowledge tracer. A causal self-attention encoder contextualizes
// the (exercise, response) history behind a learnable start token; a
// cross-attention retriever then pulls the history rows relevant to a queried
// exercise, and a dense head turns [retrieved, query] into a correctness
// logit. Histories are truncated to the most recent `window` entries.
class AktLiteModel {
 public:
  AktLiteModel() = default;

  AktLiteModel(int exercise_count, int embed_dim, RngStream& rng,
               int window = 128)
      : window_(window), embed_dim_(embed_dim) {
    auto make = [&rng](ParamTensor& t, const char* name, Eigen::Index r,
                       Eigen::Index c, bool init) {
      t = ParamTensor(name, r, c);
      if (init) t.xavier_init(rng);
    };
    const int d = embed_dim;
    make(ex_emb_, "akt.ex_emb", exercise_count, d, true);
    make(resp_emb_, "akt.resp_emb", 2, d, true);
    make(start_, "akt.start", 1, d, true);
    make(enc_q_w_, "akt.enc_q.w", d, d, true);
    make(enc_q_b_, "akt.enc_q.b", d, 1, false);
    make(enc_k_w_, "akt.enc_k.w", d, d, true);
    make(enc_k_b_, "akt.enc_k.b", d, 1, false);
    make(enc_v_w_, "akt.enc_v.w", d, d, true);
    make(enc_v_b_, "akt.enc_v.b", d, 1, false);
    make(ff1_w_, "akt.ff1.w", d, d, true);
    make(ff1_b_, "akt.ff1.b", d, 1, false);
    make(ff2_w_, "akt.ff2.w", d, d, true);
    make(ff2_b_, "akt.ff2.b", d, 1, false);
    make(ret_q_w_, "akt.ret_q.w", d, d, true);
    make(ret_q_b_, "akt.ret_q.b", d, 1, false);
    make(ret_k_w_, "akt.ret_k.w", d, d, true);
    make(ret_k_b_, "akt.ret_k.b", d, 1, false);
    make(ret_v_w_, "akt.ret_v.w", d, d, true);
    make(ret_v_b_, "akt.ret_v.b", d, 1, false);
    make(head_w_, "akt.head.w", 1, 2 * d, true);
    make(head_b_, "akt.head.b", 1, 1, false);
  }

  int exercise_count() const { return static_cast<int>(ex_emb_.rows()); }
  int embed_dim() const { return embed_dim_; }
  int window() const { return window_; }

  std::vector<ParamTensor*> params() {
    return {&ex_emb_,  &resp_emb_, &start_,   &enc_q_w_, &enc_q_b_, &enc_k_w_,
            &enc_k_b_, &enc_v_w_,  &enc_v_b_, &ff1_w_,   &ff1_b_,   &ff2_w_,
            &ff2_b_,   &ret_q_w_,  &ret_q_b_, &ret_k_w_, &ret_k_b_, &ret_v_w_,
            &ret_v_b_, &head_w_,   &head_b_};
  }
  std::vector<const ParamTensor*> params() const {
    auto mut = const_cast<AktLiteModel*>(this)->params();
    return std::vector<const ParamTensor*>(mut.begin(), mut.end());
  }

  // Forward workspace; one per call so the model itself stays immutable
  // during inference and can be shared across threads.
  struct Forward {
    std::vector<int> history_exercises;  // after window truncation
    std::vector<int> history_responses;
    Matrix X;  // (n+1) x d input rows: start token then history embeddings
    DenseCache enc_q, enc_k, enc_v;
    AttentionCache enc_attn;
    Matrix H1;  // X + self-attention
    DenseCache ff1, ff2;
    Matrix Z;  // H1 + feed-forward
    Matrix queries;  // q x d raw query embeddings
    std::vector<int> query_exercises;
    DenseCache ret_q, ret_k, ret_v;
    AttentionCache ret_attn;
    Matrix retrieved;  // q x d
    Matrix head_in;    // q x 2d
    DenseCache head;
    Vector logits;  // q
  };

  // Predicted correctness probability for every exercise in the catalog,
  // given the full (windowed) history. Pure function of (model, log).
  KnowledgeState predict_state(const InteractionLog& log) const {
    Forward fw;
    encode(log, fw);
    Matrix queries = ex_emb_.value;
    std::vector<int> ids(exercise_count());
    for (int j = 0; j < exercise_count(); ++j) ids[j] = j;
    retrieve(std::move(queries), std::move(ids), /*causal=*/false, fw);
    Vector s(fw.logits.size());
    for (Eigen::Index j = 0; j < s.size(); ++j) s[j] = sigmoid(fw.logits[j]);
    return KnowledgeState(std::move(s));
  }

  // Next-response logits: position t is the logit for entry t's exercise
  // computed from entries strictly before t (plus the start token).
  Vector next_response_logits(const InteractionLog& log) const {
    Forward fw;
    return next_response_logits(log, fw);
  }

  Vector next_response_logits(const InteractionLog& log, Forward& fw) const {
    if (log.empty()) {
      throw ConfigError("akt: next-response prediction needs a non-empty log");
    }
    encode(log, fw);
    const int n = static_cast<int>(fw.history_exercises.size());
    Matrix queries(n, embed_dim_);
    std::vector<int> ids(n);
    for (int t = 0; t < n; ++t) {
      ids[t] = fw.history_exercises[t];
      queries.row(t) = ex_emb_.value.row(ids[t]);
    }
    // Causal retrieval: query t sees encoded rows 0..t, i.e. the start token
    // and entries before t.
    retrieve(std::move(queries), std::move(ids), /*causal=*/true, fw);
    return fw.logits;
  }

  // Mean binary cross-entropy of next-response prediction over `logs`,
  // accumulating parameter gradients scaled by `grad_scale / predictions`.
  double loss_and_grad(const std::vector<InteractionLog>& logs,
                       double grad_scale = 1.0) {
    if (logs.empty()) throw ConfigError("akt: empty log collection");
    double total = 0.0;
    std::int64_t count = 0;
    for (const InteractionLog& log : logs) {
      count += static_cast<std::int64_t>(
          std::min<std::size_t>(log.size(), window_));
    }
    const double scale = grad_scale / static_cast<double>(count);
    for (const InteractionLog& log : logs) {
      Forward fw;
      const Vector logits = next_response_logits(log, fw);
      Vector dlogits(logits.size());
      for (Eigen::Index t = 0; t < logits.size(); ++t) {
        const double target = fw.history_responses[t];
        total += bce_with_logit(logits[t], target);
        dlogits[t] = scale * bce_with_logit_grad(logits[t], target);
      }
      backward(fw, dlogits);
    }
    return total / static_cast<double>(count);
  }

  double loss(const std::vector<InteractionLog>& logs) const {
    if (logs.empty()) throw ConfigError("akt: empty log collection");
    double total = 0.0;
    std::int64_t count = 0;
    for (const InteractionLog& log : logs) {
      const Vector logits = next_response_logits(log);
      const auto& entries = windowed(log);
      for (Eigen::Index t = 0; t < logits.size(); ++t) {
        total += bce_with_logit(logits[t], entries[t].correctness);
      }
      count += logits.size();
    }
    return total / static_cast<double>(count);
  }

  // Backpropagates dL/dlogits through the whole model.
  void backward(const Forward& fw, const Vector& dlogits) {
    const int d = embed_dim_;
    Matrix dhead_in = dense_backward(Matrix(dlogits), fw.head,
                                     head_w_, head_b_, Activation::kIdentity);
    Matrix dretrieved = dhead_in.leftCols(d);
    Matrix dqueries_direct = dhead_in.rightCols(d);

    Matrix dRq, dRk, dRv;
    attention_backward(dretrieved, fw.ret_attn, dRq, dRk, dRv);
    Matrix dqueries = dense_backward(dRq, fw.ret_q, ret_q_w_, ret_q_b_,
                                     Activation::kIdentity);
    dqueries += dqueries_direct;
    Matrix dZ = dense_backward(dRk, fw.ret_k, ret_k_w_, ret_k_b_,
                               Activation::kIdentity);
    dZ += dense_backward(dRv, fw.ret_v, ret_v_w_, ret_v_b_,
                         Activation::kIdentity);

    // Z = H1 + ff2(ff1(H1))
    Matrix dH1 = dZ;
    Matrix dff1 = dense_backward(dZ, fw.ff2, ff2_w_, ff2_b_,
                                 Activation::kIdentity);
    dH1 += dense_backward(dff1, fw.ff1, ff1_w_, ff1_b_, Activation::kTanh);

    // H1 = X + attention(enc_q(X), enc_k(X), enc_v(X))
    Matrix dQ, dK, dV;
    attention_backward(dH1, fw.enc_attn, dQ, dK, dV);
    Matrix dX = dH1;
    dX += dense_backward(dQ, fw.enc_q, enc_q_w_, enc_q_b_,
                         Activation::kIdentity);
    dX += dense_backward(dK, fw.enc_k, enc_k_w_, enc_k_b_,
                         Activation::kIdentity);
    dX += dense_backward(dV, fw.enc_v, enc_v_w_, enc_v_b_,
                         Activation::kIdentity);

    // Scatter into the embedding tables.
    start_.grad.row(0) += dX.row(0);
    for (std::size_t i = 0; i < fw.history_exercises.size(); ++i) {
      ex_emb_.grad.row(fw.history_exercises[i]) += dX.row(i + 1);
      resp_emb_.grad.row(fw.history_responses[i]) += dX.row(i + 1);
    }
    for (std::size_t t = 0; t < fw.query_exercises.size(); ++t) {
      ex_emb_.grad.row(fw.query_exercises[t]) += dqueries.row(t);
    }
  }

 private:
  std::vector<InteractionLog::Entry> windowed(const InteractionLog& log) const {
    const std::size_t n = log.size();
    const std::size_t keep = std::min<std::size_t>(n, window_);
    return {log.entries.end() - keep, log.entries.end()};
  }

  void encode(const InteractionLog& log, Forward& fw) const {
    const auto entries = windowed(log);
    const int n = static_cast<int>(entries.size());
    const int d = embed_dim_;
    fw.history_exercises.resize(n);
    fw.history_responses.resize(n);
    fw.X.resize(n + 1, d);
    fw.X.row(0) = start_.value.row(0);
    for (int i = 0; i < n; ++i) {
      const auto& e = entries[i];
      if (e.exercise_id < 0 || e.exercise_id >= exercise_count()) {
        throw DataError("akt: log references exercise " +
                        std::to_string(e.exercise_id) +
                        " outside the catalog");
      }
      fw.history_exercises[i] = e.exercise_id;
      fw.history_responses[i] = e.correctness;
      fw.X.row(i + 1) =
          ex_emb_.value.row(e.exercise_id) + resp_emb_.value.row(e.correctness);
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    Matrix Q = dense_forward(fw.X, enc_q_w_, enc_q_b_, Activation::kIdentity,
                             &fw.enc_q);
    Matrix K = dense_forward(fw.X, enc_k_w_, enc_k_b_, Activation::kIdentity,
                             &fw.enc_k);
    Matrix V = dense_forward(fw.X, enc_v_w_, enc_v_b_, Activation::kIdentity,
                             &fw.enc_v);
    fw.H1 = fw.X + attention(Q, K, V, scale, /*causal=*/true, &fw.enc_attn);
    Matrix f = dense_forward(fw.H1, ff1_w_, ff1_b_, Activation::kTanh, &fw.ff1);
    fw.Z = fw.H1 +
           dense_forward(f, ff2_w_, ff2_b_, Activation::kIdentity, &fw.ff2);
  }

  void retrieve(Matrix queries, std::vector<int> query_ids, bool causal,
                Forward& fw) const {
    const int d = embed_dim_;
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    fw.queries = std::move(queries);
    fw.query_exercises = std::move(query_ids);
    Matrix Rq = dense_forward(fw.queries, ret_q_w_, ret_q_b_,
                              Activation::kIdentity, &fw.ret_q);
    Matrix Rk = dense_forward(fw.Z, ret_k_w_, ret_k_b_, Activation::kIdentity,
                              &fw.ret_k);
    Matrix Rv = dense_forward(fw.Z, ret_v_w_, ret_v_b_, Activation::kIdentity,
                              &fw.ret_v);
    fw.retrieved = attention(Rq, Rk, Rv, scale, causal, &fw.ret_attn);
    fw.head_in.resize(fw.retrieved.rows(), 2 * d);
    fw.head_in << fw.retrieved, fw.queries;
    fw.logits = dense_forward(fw.head_in, head_w_, head_b_,
                              Activation::kIdentity, &fw.head)
                    .col(0);
  }

  int window_ = 128;
  int embed_dim_ = 0;
  ParamTensor ex_emb_, resp_emb_, start_;
  ParamTensor enc_q_w_, enc_q_b_, enc_k_w_, enc_k_b_, enc_v_w_, enc_v_b_;
  ParamTensor ff1_w_, ff1_b_, ff2_w_, ff2_b_;
  ParamTensor ret_q_w_, ret_q_b_, ret_k_w_, ret_k_b_, ret_v_w_, ret_v_b_;
  ParamTensor head_w_, head_b_;
};

// Trains by minimizing mean next-response binary cross-entropy. Returns the
// loss curve: entry 0 is the pre-training loss, entry k the loss after epoch
// k, so `epochs == 0` still reports one value.
inline std::vector<double> train_akt(AktLiteModel& model,
                                     const std::vector<InteractionLog>& logs,
                                     const AktHyper& hyper,
                                     std::uint64_t seed) {
  if (logs.empty()) throw ConfigError("train_akt: empty log collection");
  for (const InteractionLog& log : logs) {
    if (log.empty()) {
      throw ConfigError("train_akt: every log must have length >= 1");
    }
  }
  AdamOptimizer adam(model.params(), AdamHyper{hyper.lr});
  std::vector<double> curve;
  curve.push_back(model.loss(logs));
  std::vector<std::size_t> order(logs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const int batch = std::max(1, hyper.batch);
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    RngStream rng(seed, streams::kAktTrain + static_cast<std::uint64_t>(epoch));
    rng.shuffle(order);
    for (std::size_t begin = 0; begin < order.size();
         begin += static_cast<std::size_t>(batch)) {
      const std::size_t end =
          std::min(order.size(), begin + static_cast<std::size_t>(batch));
      std::vector<InteractionLog> chunk;
      chunk.reserve(end - begin);
      for (std::size_t i = begin; i < end; ++i) chunk.push_back(logs[order[i]]);
      model.loss_and_grad(chunk);
      adam.step();
    }
    const double epoch_loss = model.loss(logs);
    if (!std::isfinite(epoch_loss)) {
      throw NumericsError("train_akt: non-finite loss at epoch " +
                          std::to_string(epoch + 1));
    }
    curve.push_back(epoch_loss);
  }
  return curve;
}

}  // namespace alpn
