#include "hitskt/kernel.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "hitskt/rng.hpp"

namespace hitskt::ops {

Mask Mask::all(long rows, long cols) {
    Mask m;
    m.rows = rows;
    m.cols = cols;
    m.keep.assign(static_cast<size_t>(rows * cols), 1);
    return m;
}

Mask Mask::key_padding(const std::vector<uint8_t>& keys) {
    Mask m;
    m.rows = 1;
    m.cols = static_cast<long>(keys.size());
    m.keep = keys;
    return m;
}

Mask Mask::causal(long n) {
    Mask m;
    m.rows = n;
    m.cols = n;
    m.keep.assign(static_cast<size_t>(n * n), 0);
    for (long i = 0; i < n; ++i)
        for (long j = 0; j <= i; ++j) m.keep[i * n + j] = 1;
    return m;
}

static long rows_of(const Tensor& x) { return x.rank() == 1 ? 1 : x.dim(0); }
static long cols_of(const Tensor& x) {
    return x.rank() == 1 ? x.dim(0) : x.dim(1);
}

Tensor linear(const Tensor& x, const Tensor& W, const Tensor* b) {
    long m = rows_of(x), in = cols_of(x);
    if (W.rank() != 2 || W.dim(0) != in)
        throw std::invalid_argument("linear: W shape mismatch");
    long out = W.dim(1);
    if (b && b->size() != out)
        throw std::invalid_argument("linear: bias shape mismatch");

    Tensor y(m, out);
    const double* xv = x.data();
    for (long i = 0; i < m; ++i) {
        double* yr = y.data() + i * out;
        if (b)
            for (long j = 0; j < out; ++j) yr[j] = b->at(j);
        for (long k = 0; k < in; ++k) {
            double xik = xv[i * in + k];
            if (xik == 0.0) continue;
            const double* wr = W.data() + k * out;
            for (long j = 0; j < out; ++j) yr[j] += xik * wr[j];
        }
    }
    debug_check_finite(y, "linear");
    return y;
}

void linear_bwd(Tensor& x, Tensor& W, Tensor* b, const Tensor& y) {
    long m = rows_of(x), in = cols_of(x), out = W.dim(1);
    const double* gy = y.grad();
    for (long i = 0; i < m; ++i) {
        const double* gyr = gy + i * out;
        if (b)
            for (long j = 0; j < out; ++j) b->gat(j) += gyr[j];
        for (long k = 0; k < in; ++k) {
            const double* wr = W.data() + k * out;
            double* gwr = W.grad() + k * out;
            double xik = x.data()[i * in + k];
            double acc = 0.0;
            for (long j = 0; j < out; ++j) {
                acc += gyr[j] * wr[j];
                gwr[j] += xik * gyr[j];
            }
            x.grad()[i * in + k] += acc;
        }
    }
}

Tensor masked_softmax(const Tensor& scores, const Mask& mask) {
    long m = rows_of(scores), t = cols_of(scores);
    if (mask.cols != t || (mask.rows != 1 && mask.rows != m))
        throw std::invalid_argument("masked_softmax: mask shape mismatch");

    Tensor w(m, t);
    for (long i = 0; i < m; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        long kept = 0;
        for (long j = 0; j < t; ++j)
            if (mask.kept(i, j)) {
                mx = std::max(mx, scores.at(i, j));
                ++kept;
            }
        if (kept == 0)
            throw std::invalid_argument("masked_softmax: fully masked row");
        // Exploded scores mean the surrounding computation diverged; NaN
        // scores are left to flow into the loss finiteness check instead.
        if (mx == std::numeric_limits<double>::infinity())
            throw std::runtime_error("masked_softmax: non-finite scores");
        double sum = 0.0;
        for (long j = 0; j < t; ++j) {
            if (mask.kept(i, j)) {
                double e = std::exp(scores.at(i, j) - mx);
                w.at(i, j) = e;
                sum += e;
            }
        }
        for (long j = 0; j < t; ++j)
            if (mask.kept(i, j)) w.at(i, j) /= sum;
    }
    debug_check_finite(w, "masked_softmax");
    return w;
}

void masked_softmax_bwd(Tensor& scores, const Mask& mask, const Tensor& weights) {
    long m = rows_of(scores), t = cols_of(scores);
    for (long i = 0; i < m; ++i) {
        double dot = 0.0;
        for (long j = 0; j < t; ++j)
            if (mask.kept(i, j)) dot += weights.gat(i, j) * weights.at(i, j);
        for (long j = 0; j < t; ++j)
            if (mask.kept(i, j))
                scores.gat(i, j) +=
                    weights.at(i, j) * (weights.gat(i, j) - dot);
    }
}

Tensor sdpa(const Tensor& q, const Tensor& K, const Tensor& V, const Mask& mask,
            const std::vector<double>* post_scale, bool renormalize,
            SdpaTrace& tr) {
    long m = rows_of(q), dk = cols_of(q);
    long t = K.dim(0), dv = V.dim(1);
    if (K.dim(1) != dk) throw std::invalid_argument("sdpa: K dim mismatch");
    if (V.dim(0) != t) throw std::invalid_argument("sdpa: V rows mismatch");
    if (post_scale && static_cast<long>(post_scale->size()) != t)
        throw std::invalid_argument("sdpa: post_scale length mismatch");

    double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dk));
    tr.scores = Tensor(m, t);
    for (long i = 0; i < m; ++i)
        for (long j = 0; j < t; ++j) {
            double s = 0.0;
            for (long k = 0; k < dk; ++k) s += q.at(i, k) * K.at(j, k);
            tr.scores.at(i, j) = s * inv_sqrt;
        }

    tr.weights = masked_softmax(tr.scores, mask);

    tr.scaled = tr.weights;
    if (post_scale) {
        for (long i = 0; i < m; ++i)
            for (long j = 0; j < t; ++j) tr.scaled.at(i, j) *= (*post_scale)[j];
    }
    tr.z.clear();
    if (renormalize) {
        tr.z.resize(m);
        for (long i = 0; i < m; ++i) {
            double z = 0.0;
            for (long j = 0; j < t; ++j) z += tr.scaled.at(i, j);
            if (z <= 0.0)
                throw std::invalid_argument("sdpa: renormalization sum <= 0");
            tr.z[i] = z;
            for (long j = 0; j < t; ++j) tr.scaled.at(i, j) /= z;
        }
    }

    Tensor out(m, dv);
    for (long i = 0; i < m; ++i)
        for (long j = 0; j < t; ++j) {
            double w = tr.scaled.at(i, j);
            if (w == 0.0) continue;
            for (long k = 0; k < dv; ++k) out.at(i, k) += w * V.at(j, k);
        }
    debug_check_finite(out, "sdpa");
    return out;
}

void sdpa_bwd(Tensor& q, Tensor& K, Tensor& V, const Mask& mask,
              const std::vector<double>* post_scale, bool renormalize,
              SdpaTrace& tr, const Tensor& out) {
    long m = rows_of(q), dk = cols_of(q);
    long t = K.dim(0), dv = V.dim(1);
    double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dk));

    // d(scaled weights) and dV.
    Tensor dsc(m, t);
    for (long i = 0; i < m; ++i)
        for (long j = 0; j < t; ++j) {
            double w = tr.scaled.at(i, j);
            double d = 0.0;
            for (long k = 0; k < dv; ++k) {
                double g = out.gat(i, k);
                d += g * V.at(j, k);
                if (w != 0.0) V.gat(j, k) += w * g;
            }
            dsc.at(i, j) = d;
        }

    // Undo renormalization, then the post-softmax scale, into weight grads.
    for (long i = 0; i < m; ++i) {
        if (renormalize) {
            double dot = 0.0;
            for (long j = 0; j < t; ++j) dot += dsc.at(i, j) * tr.scaled.at(i, j);
            for (long j = 0; j < t; ++j)
                dsc.at(i, j) = (dsc.at(i, j) - dot) / tr.z[i];
        }
        for (long j = 0; j < t; ++j) {
            double dw = dsc.at(i, j);
            if (post_scale) dw *= (*post_scale)[j];
            tr.weights.gat(i, j) = dw;
        }
    }

    masked_softmax_bwd(tr.scores, mask, tr.weights);

    for (long i = 0; i < m; ++i)
        for (long j = 0; j < t; ++j) {
            double ds = tr.scores.gat(i, j) * inv_sqrt;
            if (ds == 0.0) continue;
            for (long k = 0; k < dk; ++k) {
                q.gat(i, k) += ds * K.at(j, k);
                K.gat(j, k) += ds * q.at(i, k);
            }
        }
}

Tensor multi_head(const Tensor& qsrc, const Tensor& kvsrc, const Tensor& Wq,
                  const Tensor& Wk, const Tensor& Wv, const Tensor& Wo,
                  int heads, const Mask& mask,
                  const std::vector<double>* post_scale, bool renormalize,
                  bool uniform_weights, MhTrace& tr) {
    long m = rows_of(qsrc);
    long t = rows_of(kvsrc);
    long dm = Wv.dim(1);
    if (heads < 1 || dm % heads != 0)
        throw std::invalid_argument("multi_head: heads must divide model dim");

    tr.v = linear(kvsrc, Wv, nullptr);

    if (uniform_weights) {
        // Average-pooling mode: every kept key gets weight 1/(#kept); the
        // post-softmax scale still applies and is not renormalized.
        if (mask.rows != 1)
            throw std::invalid_argument("multi_head: pooling needs a key mask");
        long kept = 0;
        for (long j = 0; j < t; ++j)
            if (mask.kept(0, j)) ++kept;
        if (kept == 0)
            throw std::invalid_argument("multi_head: pooling over empty set");
        tr.uniform_scaled = Tensor(1, t);
        for (long j = 0; j < t; ++j)
            if (mask.kept(0, j))
                tr.uniform_scaled.at(0, j) =
                    (post_scale ? (*post_scale)[j] : 1.0) / kept;
        tr.context = Tensor(m, dm);
        for (long i = 0; i < m; ++i)
            for (long j = 0; j < t; ++j) {
                double w = tr.uniform_scaled.at(0, j);
                if (w == 0.0) continue;
                for (long k = 0; k < dm; ++k)
                    tr.context.at(i, k) += w * tr.v.at(j, k);
            }
        return linear(tr.context, Wo, nullptr);
    }

    tr.q = linear(qsrc, Wq, nullptr);
    tr.k = linear(kvsrc, Wk, nullptr);

    long dh = dm / heads;
    tr.qh.assign(heads, Tensor());
    tr.kh.assign(heads, Tensor());
    tr.vh.assign(heads, Tensor());
    tr.head_tr.assign(heads, SdpaTrace());
    tr.context = Tensor(m, dm);

    for (int h = 0; h < heads; ++h) {
        Tensor& qh = tr.qh[h];
        Tensor& kh = tr.kh[h];
        Tensor& vh = tr.vh[h];
        qh = Tensor(m, dh);
        kh = Tensor(t, dh);
        vh = Tensor(t, dh);
        for (long i = 0; i < m; ++i)
            for (long k = 0; k < dh; ++k) qh.at(i, k) = tr.q.at(i, h * dh + k);
        for (long j = 0; j < t; ++j)
            for (long k = 0; k < dh; ++k) {
                kh.at(j, k) = tr.k.at(j, h * dh + k);
                vh.at(j, k) = tr.v.at(j, h * dh + k);
            }
        Tensor ctx = sdpa(qh, kh, vh, mask, post_scale, renormalize,
                          tr.head_tr[h]);
        for (long i = 0; i < m; ++i)
            for (long k = 0; k < dh; ++k)
                tr.context.at(i, h * dh + k) = ctx.at(i, k);
    }
    return linear(tr.context, Wo, nullptr);
}

void multi_head_bwd(Tensor& qsrc, Tensor& kvsrc, Tensor& Wq, Tensor& Wk,
                    Tensor& Wv, Tensor& Wo, int heads, const Mask& mask,
                    const std::vector<double>* post_scale, bool renormalize,
                    bool uniform_weights, MhTrace& tr, const Tensor& out) {
    long m = rows_of(qsrc);
    long t = rows_of(kvsrc);
    long dm = Wv.dim(1);

    linear_bwd(tr.context, Wo, nullptr, out);

    if (uniform_weights) {
        for (long i = 0; i < m; ++i)
            for (long j = 0; j < t; ++j) {
                double w = tr.uniform_scaled.at(0, j);
                if (w == 0.0) continue;
                for (long k = 0; k < dm; ++k)
                    tr.v.gat(j, k) += w * tr.context.gat(i, k);
            }
        linear_bwd(kvsrc, Wv, nullptr, tr.v);
        return;
    }

    long dh = dm / heads;
    for (int h = 0; h < heads; ++h) {
        // Per-head context grad comes from the concatenated context slice.
        Tensor ctx(m, dh);
        for (long i = 0; i < m; ++i)
            for (long k = 0; k < dh; ++k)
                ctx.gat(i, k) = tr.context.gat(i, h * dh + k);
        sdpa_bwd(tr.qh[h], tr.kh[h], tr.vh[h], mask, post_scale, renormalize,
                 tr.head_tr[h], ctx);
        for (long i = 0; i < m; ++i)
            for (long k = 0; k < dh; ++k)
                tr.q.gat(i, h * dh + k) += tr.qh[h].gat(i, k);
        for (long j = 0; j < t; ++j)
            for (long k = 0; k < dh; ++k) {
                tr.k.gat(j, h * dh + k) += tr.kh[h].gat(j, k);
                tr.v.gat(j, h * dh + k) += tr.vh[h].gat(j, k);
            }
    }
    linear_bwd(qsrc, Wq, nullptr, tr.q);
    linear_bwd(kvsrc, Wk, nullptr, tr.k);
    linear_bwd(kvsrc, Wv, nullptr, tr.v);
}

Tensor ffn(const Tensor& x, const Tensor& P1, const Tensor& b1,
           const Tensor& P2, const Tensor& b2, FfnTrace& tr) {
    tr.pre = linear(x, P1, &b1);
    tr.act = tr.pre;
    long n = tr.act.size();
    for (long i = 0; i < n; ++i)
        if (tr.act.data()[i] < 0.0) tr.act.data()[i] = 0.0;
    return linear(tr.act, P2, &b2);
}

void ffn_bwd(Tensor& x, Tensor& P1, Tensor& b1, Tensor& P2, Tensor& b2,
             FfnTrace& tr, const Tensor& y) {
    linear_bwd(tr.act, P2, &b2, y);
    long n = tr.pre.size();
    for (long i = 0; i < n; ++i)
        tr.pre.grad()[i] = tr.pre.data()[i] > 0.0 ? tr.act.grad()[i] : 0.0;
    linear_bwd(x, P1, &b1, tr.pre);
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  LnTrace& tr) {
    long m = rows_of(x), n = cols_of(x);
    if (gain.size() != n || bias.size() != n)
        throw std::invalid_argument("layer_norm: param shape mismatch");

    tr.xhat = Tensor(m, n);
    tr.inv_std.resize(m);
    Tensor y(m, n);
    for (long i = 0; i < m; ++i) {
        double mean = 0.0;
        for (long j = 0; j < n; ++j) mean += x.at(i, j);
        mean /= n;
        double var = 0.0;
        for (long j = 0; j < n; ++j) {
            double c = x.at(i, j) - mean;
            var += c * c;
        }
        var /= n;
        double inv = 1.0 / std::sqrt(var + kLayerNormEps);
        tr.inv_std[i] = inv;
        for (long j = 0; j < n; ++j) {
            double xh = (x.at(i, j) - mean) * inv;
            tr.xhat.at(i, j) = xh;
            y.at(i, j) = gain.at(j) * xh + bias.at(j);
        }
    }
    debug_check_finite(y, "layer_norm");
    return y;
}

void layer_norm_bwd(Tensor& x, Tensor& gain, Tensor& bias, const LnTrace& tr,
                    const Tensor& y) {
    long m = rows_of(x), n = cols_of(x);
    for (long i = 0; i < m; ++i) {
        double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
        for (long j = 0; j < n; ++j) {
            double gy = y.gat(i, j);
            double xh = tr.xhat.at(i, j);
            gain.gat(j) += gy * xh;
            bias.gat(j) += gy;
            double dxh = gy * gain.at(j);
            sum_dxhat += dxh;
            sum_dxhat_xhat += dxh * xh;
        }
        double inv = tr.inv_std[i];
        for (long j = 0; j < n; ++j) {
            double dxh = y.gat(i, j) * gain.at(j);
            x.gat(i, j) += inv * (dxh - (sum_dxhat +
                                         tr.xhat.at(i, j) * sum_dxhat_xhat) / n);
        }
    }
}

double sigmoid(double z) {
    if (z >= 0.0) {
        double e = std::exp(-z);
        return 1.0 / (1.0 + e);
    }
    double e = std::exp(z);
    return e / (1.0 + e);
}

void dropout(Tensor& x, double rate, hitskt::Rng& rng, DropTrace& tr) {
    if (rate < 0.0 || rate >= 1.0)
        throw std::invalid_argument("dropout: rate must be in [0,1)");
    long n = x.size();
    tr.kept.assign(n, 1);
    tr.inv_keep = 1.0 / (1.0 - rate);
    if (rate == 0.0) return;
    for (long i = 0; i < n; ++i) {
        if (rng.uniform() < rate) {
            tr.kept[i] = 0;
            x.data()[i] = 0.0;
        } else {
            x.data()[i] *= tr.inv_keep;
        }
    }
}

void dropout_bwd(Tensor& x_with_grad, const DropTrace& tr) {
    long n = x_with_grad.size();
    if (tr.kept.empty()) return;
    for (long i = 0; i < n; ++i)
        x_with_grad.grad()[i] =
            tr.kept[i] ? x_with_grad.grad()[i] * tr.inv_keep : 0.0;
}

}  // namespace hitskt::ops
