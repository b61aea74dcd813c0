#pragma once

#include <cstdint>
#include <vector>

#include "hitskt/tensor.hpp"

namespace hitskt::ops {

// Boolean attention mask, broadcastable over query rows (rows == 1 means the
// same key mask applies to every query). A false entry removes that key from
// the softmax entirely; every query row must keep at least one key.
struct Mask {
    long rows = 0;
    long cols = 0;
    std::vector<uint8_t> keep;

    static Mask all(long rows, long cols);
    // One row shared by all queries, from a per-key validity vector.
    static Mask key_padding(const std::vector<uint8_t>& keys);
    // Square causal mask keeping keys j <= i for query i.
    static Mask causal(long n);

    bool kept(long r, long c) const {
        return keep[(rows == 1 ? 0 : r) * cols + c] != 0;
    }
};

// y = x W + b with x [m,in], W [in,out], b [out] (optional). Rank-1 x is
// treated as a single row.
Tensor linear(const Tensor& x, const Tensor& W, const Tensor* b);
// Accumulates into x.grad, W.grad, b->grad from y.grad.
void linear_bwd(Tensor& x, Tensor& W, Tensor* b, const Tensor& y);

// Row-wise softmax over kept entries; masked entries come out exactly zero.
Tensor masked_softmax(const Tensor& scores, const Mask& mask);
void masked_softmax_bwd(Tensor& scores, const Mask& mask, const Tensor& weights);

// Scaled dot-product attention: q [m,dk], K [t,dk], V [t,dv].
// scores = q K^T / sqrt(dk), weights = masked softmax, and when post_scale is
// given each key's weight is multiplied by post_scale[t] AFTER the softmax.
// The scaled weights are not renormalized unless `renormalize` is set.
struct SdpaTrace {
    Tensor scores;           // [m, t]
    Tensor weights;          // [m, t] post-softmax
    Tensor scaled;           // [m, t] weights after post_scale (and renorm)
    std::vector<double> z;   // per-row renormalization sums when renormalize
};

Tensor sdpa(const Tensor& q, const Tensor& K, const Tensor& V, const Mask& mask,
            const std::vector<double>* post_scale, bool renormalize,
            SdpaTrace& tr);
void sdpa_bwd(Tensor& q, Tensor& K, Tensor& V, const Mask& mask,
              const std::vector<double>* post_scale, bool renormalize,
              SdpaTrace& tr, const Tensor& out);

// Multi-head attention. qsrc [m,d] and kvsrc [t,d] are projected by
// Wq/Wk/Wv [d,dm], split into `heads` slices, attended per head with
// per-head 1/sqrt(dm/heads) scaling, concatenated and projected by Wo
// [dm,dm]. With uniform_weights the score path is skipped and every kept key
// gets weight 1/(#kept) (the average-pooling ablation); post_scale still
// applies. h = 1 reduces to plain attention followed by the Wo projection.
struct MhTrace {
    Tensor q, k, v;                    // projected, [m,dm] / [t,dm] / [t,dm]
    std::vector<Tensor> qh, kh, vh;    // per-head contiguous slices
    std::vector<SdpaTrace> head_tr;
    Tensor context;                    // [m, dm] concatenated heads
    Tensor uniform_scaled;             // [1, t] weights in uniform mode
};

Tensor multi_head(const Tensor& qsrc, const Tensor& kvsrc, const Tensor& Wq,
                  const Tensor& Wk, const Tensor& Wv, const Tensor& Wo,
                  int heads, const Mask& mask,
                  const std::vector<double>* post_scale, bool renormalize,
                  bool uniform_weights, MhTrace& tr);
void multi_head_bwd(Tensor& qsrc, Tensor& kvsrc, Tensor& Wq, Tensor& Wk,
                    Tensor& Wv, Tensor& Wo, int heads, const Mask& mask,
                    const std::vector<double>* post_scale, bool renormalize,
                    bool uniform_weights, MhTrace& tr, const Tensor& out);

// Position-wise feed-forward: y = relu(x P1 + b1) P2 + b2.
struct FfnTrace {
    Tensor pre;  // [m, hidden] pre-activation
    Tensor act;  // [m, hidden] after relu
};

Tensor ffn(const Tensor& x, const Tensor& P1, const Tensor& b1,
           const Tensor& P2, const Tensor& b2, FfnTrace& tr);
void ffn_bwd(Tensor& x, Tensor& P1, Tensor& b1, Tensor& P2, Tensor& b2,
             FfnTrace& tr, const Tensor& y);

// Row-wise layer normalization with learned gain/bias, epsilon 1e-5,
// population variance over the feature dimension.
inline constexpr double kLayerNormEps = 1e-5;

struct LnTrace {
    Tensor xhat;                  // normalized input
    std::vector<double> inv_std;  // per row
};

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  LnTrace& tr);
void layer_norm_bwd(Tensor& x, Tensor& gain, Tensor& bias, const LnTrace& tr,
                    const Tensor& y);

double sigmoid(double z);

// Inverted dropout applied in place; mask entries are kept (1) with
// probability 1-rate and kept values are scaled by 1/(1-rate).
struct DropTrace {
    std::vector<uint8_t> kept;
    double inv_keep = 1.0;
};

}  // namespace hitskt::ops

namespace hitskt {
class Rng;
}

namespace hitskt::ops {
void dropout(Tensor& x, double rate, hitskt::Rng& rng, DropTrace& tr);
void dropout_bwd(Tensor& x_with_grad, const DropTrace& tr);
}  // namespace hitskt::ops
