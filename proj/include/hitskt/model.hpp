#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "hitskt/config.hpp"
#include "hitskt/embedding.hpp"
#include "hitskt/kernel.hpp"
#include "hitskt/rng.hpp"
#include "hitskt/segmentation.hpp"
#include "hitskt/tensor.hpp"

namespace hitskt {

// Memory decay between sessions: 1 / (gap_in_hours * s + 1). Applied to
// session-attention weights after the softmax, deliberately breaking the
// weights' normalization so older sessions contribute less overall.
double decay_factor(double gap_seconds, double s);

// One attention + feed-forward block. Residual connections and pre-norm
// layer normalization wrap both sublayers when the config asks for them.
// ln_q normalizes the query stream (and the whole sequence in self
// attention); ln_kv normalizes the key/value stream in cross attention.
struct AttentionBlockParams {
    Tensor wq, wk, wv, wo;
    Tensor p1, b1, p2, b2;
    Tensor ln_q_g, ln_q_b;
    Tensor ln_kv_g, ln_kv_b;
    Tensor ln_f_g, ln_f_b;

    AttentionBlockParams() = default;
    AttentionBlockParams(int64_t d, int64_t ffn_dim);
    void named(const std::string& prefix,
               std::vector<std::pair<std::string, Tensor*>>& out);
};

struct ModelParameters {
    EmbeddingTables emb;
    std::vector<AttentionBlockParams> intra;  // interaction encoder
    std::vector<AttentionBlockParams> inter;  // session encoder
    std::vector<AttentionBlockParams> ksr;    // knowledge state retrieval
    std::vector<AttentionBlockParams> dec;    // answering decoder
    Tensor head_p1, head_b1, head_p2, head_b2;

    ModelParameters() = default;
    explicit ModelParameters(const ModelConfig& cfg);
    void init(Rng& rng, int64_t d);
    // Stable name -> tensor registry; ordering defines optimizer state and
    // checkpoint layout.
    std::vector<std::pair<std::string, Tensor*>> named();
    void zero_grad();
};

// Saved activations of one block application, consumed by the backward pass.
struct BlockTrace {
    ops::LnTrace ln_q_tr, ln_kv_tr, ln_f_tr;
    Tensor qn, kvn;  // normalized streams (owned copies)
    ops::MhTrace mh;
    Tensor attn;     // attention sublayer output
    ops::DropTrace drop_attn, drop_ffn;
    Tensor r1;       // after first residual
    Tensor fn;       // normalized FFN input
    ops::FfnTrace ffn_tr;
    Tensor f;        // FFN output
    Tensor out;
};

// Interaction encoder applied to one session slot.
struct IntraTrace {
    long slot = -1;
    Tensor inputs;  // [l_int, d] rehearsal + positional
    Tensor akss;    // [1, d] summary token + positional
    ops::Mask mask;
    std::vector<BlockTrace> blocks;
    Tensor& h_inner() { return blocks.back().out; }
};

// Everything computed to predict one session.
struct PredTrace {
    long slot = -1;
    int64_t original_index = 0;

    bool has_past = false;
    std::vector<long> past_slots;
    Tensor H;                // [n_past, d] stacked intra-session states
    std::vector<double> xi;  // decay factor per past session
    Tensor rkss;             // [1, d]
    std::vector<BlockTrace> sess_blocks;
    Tensor h_inter;          // [1, d]; stays zero without past sessions

    long r = 0;                   // real interactions in this session
    std::vector<long> positions;  // their slot-local positions
    Tensor ksr_in;                // [r, d]
    std::vector<BlockTrace> ksr_blocks;  // empty under no-ksr
    std::vector<BlockTrace> dec_blocks;
    Tensor queries;  // [r, d]
    ops::FfnTrace head_tr;
    Tensor logits;  // [r, 1]
};

struct StudentTrace {
    std::vector<std::unique_ptr<IntraTrace>> intra;  // indexed by slot
    std::vector<PredTrace> preds;
};

struct Prediction {
    int64_t session_original = 0;  // 0-based session index
    long position = 0;             // 0-based within the session's real part
    int64_t question = 0;
    int64_t skill = 0;
    int64_t occurrence = 0;
    int label = 0;
    double z = 0.0;  // logit
    double p = 0.0;  // sigmoid(z)
};

// Selects which sessions of a student produce predictions, by original
// session index.
using SessionFilter = std::function<bool(int64_t)>;

class Model {
public:
    explicit Model(const ModelConfig& cfg);

    ModelConfig cfg;
    ModelParameters params;
    PositionalTable pos_table;
    // Inference-only reduced precision: round activations through float
    // after each block. Never used while training.
    bool quantize_f32 = false;

    // Runs the full hierarchy for one student. The trace holds everything
    // backward needs; drop_rng is only touched when training with dropout.
    std::vector<Prediction> forward(const StudentTensors& st,
                                    const SessionFilter& predict,
                                    StudentTrace& trace, bool train_mode,
                                    Rng* drop_rng);

    // dz[i] = dLoss/dlogit for the i-th prediction returned by forward.
    void backward(const StudentTensors& st, StudentTrace& trace,
                  const std::vector<double>& dz);

    // Exposed stages (the forward pass above composes these).
    void interaction_encode(const StudentTensors& st, long slot,
                            bool train_mode, Rng* drop_rng, IntraTrace& tr);
    void session_encode(const StudentTensors& st, long pred_slot,
                        const std::vector<IntraTrace*>& past, bool train_mode,
                        Rng* drop_rng, PredTrace& tr);

private:
    void run_block(AttentionBlockParams& p, Tensor& q_in, Tensor& kv_in,
                   bool self_mode, const ops::Mask& mask,
                   const std::vector<double>* post_scale, bool uniform,
                   bool train_mode, Rng* drop_rng, BlockTrace& tr);
    void run_block_bwd(AttentionBlockParams& p, Tensor& q_in, Tensor& kv_in,
                       bool self_mode, const ops::Mask& mask,
                       const std::vector<double>* post_scale, bool uniform,
                       BlockTrace& tr);
    void rr_forward(const StudentTensors& st, bool train_mode, Rng* drop_rng,
                    PredTrace& tr);
    void maybe_quantize(Tensor& t) const {
        if (quantize_f32) t.quantize_f32();
    }
};

}  // namespace hitskt
