#include "hitskt/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hitskt {

double decay_factor(double gap_seconds, double s) {
    if (s <= 0.0)
        throw std::invalid_argument("decay_factor: stability must be positive");
    if (gap_seconds < 0.0)
        throw std::invalid_argument("decay_factor: negative gap");
    return 1.0 / ((gap_seconds / 3600.0) * s + 1.0);
}

AttentionBlockParams::AttentionBlockParams(int64_t d, int64_t ffn_dim)
    : wq(d, d),
      wk(d, d),
      wv(d, d),
      wo(d, d),
      p1(d, ffn_dim),
      b1(ffn_dim),
      p2(ffn_dim, d),
      b2(d),
      ln_q_g(d),
      ln_q_b(d),
      ln_kv_g(d),
      ln_kv_b(d),
      ln_f_g(d),
      ln_f_b(d) {}

void AttentionBlockParams::named(
    const std::string& prefix,
    std::vector<std::pair<std::string, Tensor*>>& out) {
    out.emplace_back(prefix + ".wq", &wq);
    out.emplace_back(prefix + ".wk", &wk);
    out.emplace_back(prefix + ".wv", &wv);
    out.emplace_back(prefix + ".wo", &wo);
    out.emplace_back(prefix + ".p1", &p1);
    out.emplace_back(prefix + ".b1", &b1);
    out.emplace_back(prefix + ".p2", &p2);
    out.emplace_back(prefix + ".b2", &b2);
    out.emplace_back(prefix + ".ln_q_g", &ln_q_g);
    out.emplace_back(prefix + ".ln_q_b", &ln_q_b);
    out.emplace_back(prefix + ".ln_kv_g", &ln_kv_g);
    out.emplace_back(prefix + ".ln_kv_b", &ln_kv_b);
    out.emplace_back(prefix + ".ln_f_g", &ln_f_g);
    out.emplace_back(prefix + ".ln_f_b", &ln_f_b);
}

ModelParameters::ModelParameters(const ModelConfig& cfg)
    : emb(cfg.skill_count, cfg.question_count, cfg.f_max, cfg.d),
      head_p1(cfg.d, cfg.head_hidden()),
      head_b1(cfg.head_hidden()),
      head_p2(cfg.head_hidden(), 1),
      head_b2(1) {
    for (int64_t l = 0; l < cfg.layers; ++l) {
        intra.emplace_back(cfg.d, cfg.ffn_dim());
        inter.emplace_back(cfg.d, cfg.ffn_dim());
        ksr.emplace_back(cfg.d, cfg.ffn_dim());
        dec.emplace_back(cfg.d, cfg.ffn_dim());
    }
}

void ModelParameters::init(Rng& rng, int64_t d) {
    double scale = 1.0 / std::sqrt(static_cast<double>(d));
    emb.init(rng);
    auto uniform_fill = [&](Tensor& t) {
        for (long i = 0; i < t.size(); ++i)
            t.data()[i] = rng.uniform(-scale, scale);
    };
    auto init_block = [&](AttentionBlockParams& b) {
        uniform_fill(b.wq);
        uniform_fill(b.wk);
        uniform_fill(b.wv);
        uniform_fill(b.wo);
        uniform_fill(b.p1);
        uniform_fill(b.p2);
        b.b1.fill(0.0);
        b.b2.fill(0.0);
        b.ln_q_g.fill(1.0);
        b.ln_q_b.fill(0.0);
        b.ln_kv_g.fill(1.0);
        b.ln_kv_b.fill(0.0);
        b.ln_f_g.fill(1.0);
        b.ln_f_b.fill(0.0);
    };
    for (auto& b : intra) init_block(b);
    for (auto& b : inter) init_block(b);
    for (auto& b : ksr) init_block(b);
    for (auto& b : dec) init_block(b);
    uniform_fill(head_p1);
    uniform_fill(head_p2);
    head_b1.fill(0.0);
    head_b2.fill(0.0);
}

std::vector<std::pair<std::string, Tensor*>> ModelParameters::named() {
    std::vector<std::pair<std::string, Tensor*>> out;
    out.emplace_back("emb.skill", &emb.skill);
    out.emplace_back("emb.difficulty", &emb.difficulty);
    out.emplace_back("emb.occurrence", &emb.occurrence);
    out.emplace_back("emb.answer", &emb.answer);
    out.emplace_back("emb.akss", &emb.akss);
    out.emplace_back("emb.rkss", &emb.rkss);
    out.emplace_back("emb.rt", &emb.rt);
    auto add_stack = [&](const char* name,
                         std::vector<AttentionBlockParams>& stack) {
        for (size_t l = 0; l < stack.size(); ++l)
            stack[l].named(name + std::to_string(l), out);
    };
    add_stack("intra", intra);
    add_stack("inter", inter);
    add_stack("ksr", ksr);
    add_stack("dec", dec);
    out.emplace_back("head.p1", &head_p1);
    out.emplace_back("head.b1", &head_b1);
    out.emplace_back("head.p2", &head_p2);
    out.emplace_back("head.b2", &head_b2);
    return out;
}

void ModelParameters::zero_grad() {
    for (auto& [name, t] : named()) t->zero_grad();
}

Model::Model(const ModelConfig& c) : cfg(c), params(c) {
    if (cfg.d % 2 != 0) throw std::invalid_argument("model: d must be even");
    if (cfg.heads < 1 || cfg.d % cfg.heads != 0)
        throw std::invalid_argument("model: heads must divide d");
    if (cfg.question_count < 1 || cfg.skill_count < 1)
        throw std::invalid_argument("model: empty vocab");
    if (cfg.l_ses < 1 || cfg.l_int < 1)
        throw std::invalid_argument("model: sequence lengths must be >= 1");
    pos_table = PositionalTable(cfg.l_int + 1, cfg.d);
}

void Model::run_block(AttentionBlockParams& p, Tensor& q_in, Tensor& kv_in,
                      bool self_mode, const ops::Mask& mask,
                      const std::vector<double>* post_scale, bool uniform,
                      bool train_mode, Rng* drop_rng, BlockTrace& tr) {
    bool rn = cfg.residual_norm;
    bool renorm = cfg.renormalize_decay && post_scale != nullptr;
    Tensor* qsrc = &q_in;
    Tensor* kvsrc = &kv_in;
    if (rn) {
        if (self_mode) {
            tr.kvn = ops::layer_norm(kv_in, p.ln_q_g, p.ln_q_b, tr.ln_kv_tr);
            qsrc = &tr.kvn;
            kvsrc = &tr.kvn;
        } else {
            if (!uniform) {
                tr.qn = ops::layer_norm(q_in, p.ln_q_g, p.ln_q_b, tr.ln_q_tr);
                qsrc = &tr.qn;
            }
            tr.kvn = ops::layer_norm(kv_in, p.ln_kv_g, p.ln_kv_b, tr.ln_kv_tr);
            kvsrc = &tr.kvn;
        }
    }

    tr.attn = ops::multi_head(*qsrc, *kvsrc, p.wq, p.wk, p.wv, p.wo,
                              static_cast<int>(cfg.heads), mask, post_scale,
                              renorm, uniform, tr.mh);
    if (train_mode && cfg.dropout > 0.0)
        ops::dropout(tr.attn, cfg.dropout, *drop_rng, tr.drop_attn);
    maybe_quantize(tr.attn);

    // First residual: the query stream carries it; pooling has no query
    // stream and the raw (no residual/norm) layout has no residual at all.
    if (rn && !uniform) {
        Tensor& base = self_mode ? kv_in : q_in;
        tr.r1 = tr.attn;
        for (long i = 0; i < tr.r1.size(); ++i)
            tr.r1.data()[i] += base.data()[i];
    } else {
        tr.r1 = tr.attn;
    }
    maybe_quantize(tr.r1);

    if (rn) {
        tr.fn = ops::layer_norm(tr.r1, p.ln_f_g, p.ln_f_b, tr.ln_f_tr);
        tr.f = ops::ffn(tr.fn, p.p1, p.b1, p.p2, p.b2, tr.ffn_tr);
        if (train_mode && cfg.dropout > 0.0)
            ops::dropout(tr.f, cfg.dropout, *drop_rng, tr.drop_ffn);
        tr.out = tr.f;
        for (long i = 0; i < tr.out.size(); ++i)
            tr.out.data()[i] += tr.r1.data()[i];
    } else {
        tr.f = ops::ffn(tr.r1, p.p1, p.b1, p.p2, p.b2, tr.ffn_tr);
        if (train_mode && cfg.dropout > 0.0)
            ops::dropout(tr.f, cfg.dropout, *drop_rng, tr.drop_ffn);
        tr.out = tr.f;
    }
    maybe_quantize(tr.out);
    debug_check_finite(tr.out, "block output");
}

void Model::run_block_bwd(AttentionBlockParams& p, Tensor& q_in, Tensor& kv_in,
                          bool self_mode, const ops::Mask& mask,
                          const std::vector<double>* post_scale, bool uniform,
                          BlockTrace& tr) {
    bool rn = cfg.residual_norm;
    bool renorm = cfg.renormalize_decay && post_scale != nullptr;

    if (rn) {
        for (long i = 0; i < tr.out.size(); ++i) {
            tr.r1.grad()[i] += tr.out.grad()[i];
            tr.f.grad()[i] += tr.out.grad()[i];
        }
        ops::dropout_bwd(tr.f, tr.drop_ffn);
        ops::ffn_bwd(tr.fn, p.p1, p.b1, p.p2, p.b2, tr.ffn_tr, tr.f);
        ops::layer_norm_bwd(tr.r1, p.ln_f_g, p.ln_f_b, tr.ln_f_tr, tr.fn);
    } else {
        for (long i = 0; i < tr.out.size(); ++i)
            tr.f.grad()[i] += tr.out.grad()[i];
        ops::dropout_bwd(tr.f, tr.drop_ffn);
        ops::ffn_bwd(tr.r1, p.p1, p.b1, p.p2, p.b2, tr.ffn_tr, tr.f);
    }

    for (long i = 0; i < tr.attn.size(); ++i)
        tr.attn.grad()[i] += tr.r1.grad()[i];
    if (rn && !uniform) {
        Tensor& base = self_mode ? kv_in : q_in;
        for (long i = 0; i < tr.r1.size(); ++i)
            base.grad()[i] += tr.r1.grad()[i];
    }
    ops::dropout_bwd(tr.attn, tr.drop_attn);

    Tensor* qsrc = &q_in;
    Tensor* kvsrc = &kv_in;
    if (rn) {
        qsrc = uniform ? &q_in : (self_mode ? &tr.kvn : &tr.qn);
        kvsrc = &tr.kvn;
    }
    ops::multi_head_bwd(*qsrc, *kvsrc, p.wq, p.wk, p.wv, p.wo,
                        static_cast<int>(cfg.heads), mask, post_scale, renorm,
                        uniform, tr.mh, tr.attn);
    if (rn) {
        if (self_mode) {
            ops::layer_norm_bwd(kv_in, p.ln_q_g, p.ln_q_b, tr.ln_kv_tr,
                                tr.kvn);
        } else {
            if (!uniform)
                ops::layer_norm_bwd(q_in, p.ln_q_g, p.ln_q_b, tr.ln_q_tr,
                                    tr.qn);
            ops::layer_norm_bwd(kv_in, p.ln_kv_g, p.ln_kv_b, tr.ln_kv_tr,
                                tr.kvn);
        }
    }
}

void Model::interaction_encode(const StudentTensors& st, long slot,
                               bool train_mode, Rng* drop_rng, IntraTrace& tr) {
    long l_int = st.l_int;
    int64_t d = cfg.d;
    bool use_pos = cfg.use_positional();
    const EmbeddingTables& emb = params.emb;

    tr.slot = slot;
    tr.inputs = Tensor(l_int, d);
    for (long p = 0; p < l_int; ++p) {
        long i = st.idx(slot, p);
        if (st.int_mask[i]) {
            long q = st.question[i];
            long k = st.skill[i];
            long occ = emb.occurrence_row(st.occurrence[i]);
            long ans = emb.answer_row(st.answer[i]);
            for (long j = 0; j < d; ++j)
                tr.inputs.at(p, j) = emb.skill.at(k, j) +
                                     emb.difficulty.at(q, j) +
                                     emb.occurrence.at(occ, j) +
                                     emb.answer.at(ans, j);
        }
        if (use_pos) {
            const double* pe = pos_table.row(p);
            for (long j = 0; j < d; ++j) tr.inputs.at(p, j) += pe[j];
        }
    }
    maybe_quantize(tr.inputs);

    // Summary token appended after the interaction slots, at the next
    // positional index.
    tr.akss = Tensor(1, d);
    for (long j = 0; j < d; ++j) tr.akss.at(0, j) = emb.akss.at(j);
    if (use_pos) {
        const double* pe = pos_table.row(l_int);
        for (long j = 0; j < d; ++j) tr.akss.at(0, j) += pe[j];
    }
    maybe_quantize(tr.akss);

    std::vector<uint8_t> keys(st.int_mask.begin() + slot * l_int,
                              st.int_mask.begin() + (slot + 1) * l_int);
    tr.mask = ops::Mask::key_padding(keys);

    bool uniform = cfg.ablation == Ablation::avg_pool;
    tr.blocks.resize(cfg.layers);
    Tensor* q_stream = &tr.akss;
    for (int64_t l = 0; l < cfg.layers; ++l) {
        run_block(params.intra[l], *q_stream, tr.inputs, false, tr.mask,
                  nullptr, uniform, train_mode, drop_rng, tr.blocks[l]);
        q_stream = &tr.blocks[l].out;
    }
}

void Model::session_encode(const StudentTensors& st, long pred_slot,
                           const std::vector<IntraTrace*>& past,
                           bool train_mode, Rng* drop_rng, PredTrace& tr) {
    int64_t d = cfg.d;
    long n = static_cast<long>(past.size());
    tr.h_inter = Tensor(1, d);
    if (n == 0) {
        tr.has_past = false;
        return;
    }
    tr.has_past = true;

    tr.H = Tensor(n, d);
    tr.past_slots.resize(n);
    tr.xi.resize(n);
    for (long i = 0; i < n; ++i) {
        IntraTrace* enc = past[i];
        tr.past_slots[i] = enc->slot;
        Tensor& h = enc->h_inner();
        for (long j = 0; j < d; ++j) tr.H.at(i, j) = h.at(0, j);
        if (cfg.ablation == Ablation::no_decay) {
            tr.xi[i] = 1.0;
        } else {
            double gap = static_cast<double>(st.session_start[pred_slot] -
                                             st.session_start[enc->slot]);
            tr.xi[i] = decay_factor(gap, cfg.decay_s);
        }
    }
    maybe_quantize(tr.H);

    // The inter-session token queries the session states; no positional
    // encoding here, recency lives in the decay factors.
    tr.rkss = Tensor(1, d);
    for (long j = 0; j < d; ++j) tr.rkss.at(0, j) = params.emb.rkss.at(j);

    ops::Mask mask = ops::Mask::all(1, n);
    bool uniform = cfg.ablation == Ablation::avg_pool;
    tr.sess_blocks.resize(cfg.layers);
    Tensor* q_stream = &tr.rkss;
    for (int64_t l = 0; l < cfg.layers; ++l) {
        run_block(params.inter[l], *q_stream, tr.H, false, mask, &tr.xi,
                  uniform, train_mode, drop_rng, tr.sess_blocks[l]);
        q_stream = &tr.sess_blocks[l].out;
    }
    for (long j = 0; j < d; ++j)
        tr.h_inter.at(0, j) = tr.sess_blocks.back().out.at(0, j);
}

void Model::rr_forward(const StudentTensors& st, bool train_mode,
                       Rng* drop_rng, PredTrace& tr) {
    int64_t d = cfg.d;
    const EmbeddingTables& emb = params.emb;
    bool use_pos = cfg.use_positional();
    long slot = tr.slot;

    tr.positions.clear();
    for (long p = 0; p < st.l_int; ++p)
        if (st.int_mask[st.idx(slot, p)]) tr.positions.push_back(p);
    tr.r = static_cast<long>(tr.positions.size());
    long r = tr.r;

    // State sequence: the retrieval token leads, then one refined position
    // per already-answered interaction. Position j >= 1 carries the answer
    // given at interaction j-1, so queries may attend keys up to their own
    // index and still never see their own or later answers.
    tr.ksr_in = Tensor(r, d);
    for (long j = 0; j < r; ++j) {
        const double* extra;
        if (j == 0) {
            extra = emb.rt.data();
        } else {
            long i = st.idx(slot, tr.positions[j - 1]);
            extra = emb.answer.data() +
                    emb.answer_row(st.answer[i]) * emb.answer.row_stride();
        }
        for (long k = 0; k < d; ++k)
            tr.ksr_in.at(j, k) = tr.h_inter.at(0, k) + extra[k];
        if (use_pos) {
            const double* pe = pos_table.row(j);
            for (long k = 0; k < d; ++k) tr.ksr_in.at(j, k) += pe[k];
        }
    }
    maybe_quantize(tr.ksr_in);

    ops::Mask causal = ops::Mask::causal(r);
    Tensor* kv = &tr.ksr_in;
    if (cfg.ablation != Ablation::no_ksr) {
        tr.ksr_blocks.resize(cfg.layers);
        for (int64_t l = 0; l < cfg.layers; ++l) {
            run_block(params.ksr[l], *kv, *kv, true, causal, nullptr, false,
                      train_mode, drop_rng, tr.ksr_blocks[l]);
            kv = &tr.ksr_blocks[l].out;
        }
    }

    tr.queries = Tensor(r, d);
    for (long i = 0; i < r; ++i) {
        long idx = st.idx(slot, tr.positions[i]);
        long q = st.question[idx];
        long k = st.skill[idx];
        for (long j = 0; j < d; ++j)
            tr.queries.at(i, j) = emb.skill.at(k, j) + emb.difficulty.at(q, j);
    }
    maybe_quantize(tr.queries);

    tr.dec_blocks.resize(cfg.layers);
    Tensor* q_stream = &tr.queries;
    for (int64_t l = 0; l < cfg.layers; ++l) {
        run_block(params.dec[l], *q_stream, *kv, false, causal, nullptr, false,
                  train_mode, drop_rng, tr.dec_blocks[l]);
        q_stream = &tr.dec_blocks[l].out;
    }

    tr.logits = ops::ffn(tr.dec_blocks.back().out, params.head_p1,
                         params.head_b1, params.head_p2, params.head_b2,
                         tr.head_tr);
    maybe_quantize(tr.logits);
}

std::vector<Prediction> Model::forward(const StudentTensors& st,
                                       const SessionFilter& predict,
                                       StudentTrace& trace, bool train_mode,
                                       Rng* drop_rng) {
    if (st.l_ses != cfg.l_ses || st.l_int != cfg.l_int)
        throw std::invalid_argument("forward: tensor lengths do not match "
                                    "model config");

    std::vector<long> pred_slots;
    for (long s = 0; s < st.l_ses; ++s) {
        if (!st.ses_mask[s]) continue;
        if (predict(st.original_session(s))) pred_slots.push_back(s);
    }

    trace.intra.clear();
    trace.intra.resize(st.l_ses);
    trace.preds.clear();
    std::vector<Prediction> out;
    if (pred_slots.empty()) return out;

    // Session states are computed once per slot and shared by every later
    // predicted session.
    long max_pred = pred_slots.back();
    for (long s = 0; s < max_pred; ++s) {
        if (!st.ses_mask[s]) continue;
        trace.intra[s] = std::make_unique<IntraTrace>();
        interaction_encode(st, s, train_mode, drop_rng, *trace.intra[s]);
    }

    trace.preds.resize(pred_slots.size());
    for (size_t pi = 0; pi < pred_slots.size(); ++pi) {
        long slot = pred_slots[pi];
        PredTrace& tr = trace.preds[pi];
        tr.slot = slot;
        tr.original_index = st.original_session(slot);

        std::vector<IntraTrace*> past;
        for (long s = 0; s < slot; ++s)
            if (trace.intra[s]) past.push_back(trace.intra[s].get());
        session_encode(st, slot, past, train_mode, drop_rng, tr);
        rr_forward(st, train_mode, drop_rng, tr);

        for (long i = 0; i < tr.r; ++i) {
            long idx = st.idx(slot, tr.positions[i]);
            Prediction p;
            p.session_original = tr.original_index;
            p.position = i;
            p.question = st.question[idx];
            p.skill = st.skill[idx];
            p.occurrence = st.occurrence[idx];
            p.label = st.answer[idx];
            p.z = tr.logits.at(i, 0);
            p.p = ops::sigmoid(p.z);
            out.push_back(p);
        }
    }
    return out;
}

void Model::backward(const StudentTensors& st, StudentTrace& trace,
                     const std::vector<double>& dz) {
    EmbeddingTables& emb = params.emb;
    int64_t d = cfg.d;
    bool uniform = cfg.ablation == Ablation::avg_pool;

    std::vector<size_t> offsets(trace.preds.size());
    size_t total = 0;
    for (size_t i = 0; i < trace.preds.size(); ++i) {
        offsets[i] = total;
        total += static_cast<size_t>(trace.preds[i].r);
    }
    if (dz.size() != total)
        throw std::invalid_argument("backward: dz length mismatch");

    for (size_t pi = trace.preds.size(); pi-- > 0;) {
        PredTrace& tr = trace.preds[pi];
        long slot = tr.slot;

        for (long i = 0; i < tr.r; ++i)
            tr.logits.gat(i, 0) = dz[offsets[pi] + i];
        ops::ffn_bwd(tr.dec_blocks.back().out, params.head_p1, params.head_b1,
                     params.head_p2, params.head_b2, tr.head_tr, tr.logits);

        ops::Mask causal = ops::Mask::causal(tr.r);
        Tensor* kv = cfg.ablation != Ablation::no_ksr
                         ? &tr.ksr_blocks.back().out
                         : &tr.ksr_in;
        for (int64_t l = cfg.layers; l-- > 0;) {
            Tensor* q_stream = l == 0 ? &tr.queries : &tr.dec_blocks[l - 1].out;
            run_block_bwd(params.dec[l], *q_stream, *kv, false, causal,
                          nullptr, false, tr.dec_blocks[l]);
        }

        if (cfg.ablation != Ablation::no_ksr) {
            for (int64_t l = cfg.layers; l-- > 0;) {
                Tensor* x = l == 0 ? &tr.ksr_in : &tr.ksr_blocks[l - 1].out;
                run_block_bwd(params.ksr[l], *x, *x, true, causal, nullptr,
                              false, tr.ksr_blocks[l]);
            }
        }

        // Query embeddings feed the skill and difficulty rows.
        for (long i = 0; i < tr.r; ++i) {
            long idx = st.idx(slot, tr.positions[i]);
            long q = st.question[idx];
            long k = st.skill[idx];
            for (long j = 0; j < d; ++j) {
                double g = tr.queries.gat(i, j);
                emb.skill.gat(k, j) += g;
                emb.difficulty.gat(q, j) += g;
            }
        }

        // State-sequence inputs fan out to the inter-session state, the
        // retrieval token and the answer rows.
        for (long j = 0; j < tr.r; ++j) {
            if (j == 0) {
                for (long k = 0; k < d; ++k) {
                    double g = tr.ksr_in.gat(0, k);
                    tr.h_inter.gat(0, k) += g;
                    emb.rt.gat(k) += g;
                }
            } else {
                long i = st.idx(slot, tr.positions[j - 1]);
                long row = emb.answer_row(st.answer[i]);
                for (long k = 0; k < d; ++k) {
                    double g = tr.ksr_in.gat(j, k);
                    tr.h_inter.gat(0, k) += g;
                    emb.answer.gat(row, k) += g;
                }
            }
        }

        if (tr.has_past) {
            for (long k = 0; k < d; ++k)
                tr.sess_blocks.back().out.gat(0, k) += tr.h_inter.gat(0, k);
            ops::Mask mask = ops::Mask::all(1, tr.H.dim(0));
            for (int64_t l = cfg.layers; l-- > 0;) {
                Tensor* q_stream =
                    l == 0 ? &tr.rkss : &tr.sess_blocks[l - 1].out;
                run_block_bwd(params.inter[l], *q_stream, tr.H, false, mask,
                              &tr.xi, uniform, tr.sess_blocks[l]);
            }
            for (long k = 0; k < d; ++k)
                emb.rkss.gat(k) += tr.rkss.gat(0, k);
            for (size_t i = 0; i < tr.past_slots.size(); ++i) {
                Tensor& h = trace.intra[tr.past_slots[i]]->h_inner();
                for (long j = 0; j < d; ++j) h.gat(0, j) += tr.H.gat(i, j);
            }
        }
    }

    for (long s = 0; s < st.l_ses; ++s) {
        if (!trace.intra[s]) continue;
        IntraTrace& tr = *trace.intra[s];
        for (int64_t l = cfg.layers; l-- > 0;) {
            Tensor* q_stream = l == 0 ? &tr.akss : &tr.blocks[l - 1].out;
            run_block_bwd(params.intra[l], *q_stream, tr.inputs, false,
                          tr.mask, nullptr, uniform, tr.blocks[l]);
        }
        for (long j = 0; j < d; ++j) emb.akss.gat(j) += tr.akss.gat(0, j);
        for (long p = 0; p < st.l_int; ++p) {
            long i = st.idx(s, p);
            if (!st.int_mask[i]) continue;
            long q = st.question[i];
            long k = st.skill[i];
            long occ = emb.occurrence_row(st.occurrence[i]);
            long ans = emb.answer_row(st.answer[i]);
            for (long j = 0; j < d; ++j) {
                double g = tr.inputs.gat(p, j);
                emb.skill.gat(k, j) += g;
                emb.difficulty.gat(q, j) += g;
                emb.occurrence.gat(occ, j) += g;
                emb.answer.gat(ans, j) += g;
            }
        }
    }
}

}  // namespace hitskt
