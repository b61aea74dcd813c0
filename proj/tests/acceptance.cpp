// Acceptance gate: runs every release criterion and prints one verdict line
// each (PASS/FAIL/SKIP + details). Exit status is nonzero when anything
// fails. Everything runs single threaded so reruns are bit-identical.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include "hitskt/container.hpp"
#include "hitskt/export.hpp"
#include "hitskt/gradcheck.hpp"
#include "hitskt/ingest.hpp"
#include "hitskt/kernel.hpp"
#include "hitskt/model.hpp"
#include "hitskt/segmentation.hpp"
#include "hitskt/synthetic.hpp"
#include "hitskt/training.hpp"
#include "oracles.hpp"

using namespace hitskt;
using ops::Mask;

namespace {

int g_failures = 0;

void report(const char* name, bool ok, const std::string& detail) {
    std::printf("%s %s %s\n", ok ? "PASS" : "FAIL", name, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

void skip(const char* name, const std::string& detail) {
    std::printf("SKIP %s %s\n", name, detail.c_str());
    std::fflush(stdout);
}

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double secs() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                             t0)
            .count();
    }
};

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

void fill(Tensor& t, Rng& rng, double scale = 0.8) {
    for (long i = 0; i < t.size(); ++i)
        t.data()[i] = rng.uniform(-scale, scale);
}

std::vector<double> rand_weights(Rng& rng, long n) {
    std::vector<double> w(n);
    for (long i = 0; i < n; ++i) w[i] = rng.uniform(-1.0, 1.0);
    return w;
}

double weighted_sum(const Tensor& y, const std::vector<double>& w) {
    double s = 0.0;
    for (long i = 0; i < y.size(); ++i) s += w[i] * y.data()[i];
    return s;
}

void seed_grad(Tensor& y, const std::vector<double>& w) {
    for (long i = 0; i < y.size(); ++i) y.grad()[i] = w[i];
}

// ---------------------------------------------------------------- criterion 1

struct BlockResult {
    double worst_rel = 0.0;
    std::string worst_block;
    bool ok = true;
};

void note(BlockResult& acc, const char* what, const GradCheckResult& res,
          double tol) {
    if (res.max_rel_err > acc.worst_rel) {
        acc.worst_rel = res.max_rel_err;
        acc.worst_block = what;
    }
    if (!res.ok(tol, 1e-6) || res.checked == 0) {
        acc.ok = false;
        if (acc.worst_block.empty()) acc.worst_block = what;
    }
}

void check_gradients() {
    Timer timer;
    BlockResult acc;
    const double tol = 1e-5;
    Rng rng(91);

    {  // plain linear map
        Tensor x(3, 4), W(4, 5), b(5);
        fill(x, rng);
        fill(W, rng);
        fill(b, rng);
        auto w = rand_weights(rng, 15);
        Tensor y = ops::linear(x, W, &b);
        seed_grad(y, w);
        ops::linear_bwd(x, W, &b, y);
        auto loss = [&]() { return weighted_sum(ops::linear(x, W, &b), w); };
        note(acc, "linear", grad_check(loss, {{"x", &x}, {"W", &W}, {"b", &b}}),
             tol);
    }

    {  // masked softmax over a ragged mask
        Tensor s(3, 4);
        fill(s, rng, 1.5);
        Mask mask;
        mask.rows = 3;
        mask.cols = 4;
        mask.keep = {1, 0, 1, 0, 1, 1, 1, 0, 1, 1, 1, 1};
        auto w = rand_weights(rng, 12);
        Tensor y = ops::masked_softmax(s, mask);
        seed_grad(y, w);
        ops::masked_softmax_bwd(s, mask, y);
        auto loss = [&]() {
            return weighted_sum(ops::masked_softmax(s, mask), w);
        };
        note(acc, "masked_softmax", grad_check(loss, {{"s", &s}}), tol);
    }

    for (bool decay : {false, true}) {  // attention with/without decay scaling
        Tensor q(2, 4), K(5, 4), V(5, 3);
        fill(q, rng);
        fill(K, rng);
        fill(V, rng);
        Mask mask = Mask::all(2, 5);
        std::vector<double> xi = {1.0, 0.55, 0.31, 0.9, 0.12};
        const std::vector<double>* ps = decay ? &xi : nullptr;
        auto w = rand_weights(rng, 6);
        ops::SdpaTrace tr;
        Tensor y = ops::sdpa(q, K, V, mask, ps, false, tr);
        seed_grad(y, w);
        ops::sdpa_bwd(q, K, V, mask, ps, false, tr, y);
        auto loss = [&]() {
            ops::SdpaTrace t2;
            return weighted_sum(ops::sdpa(q, K, V, mask, ps, false, t2), w);
        };
        note(acc, decay ? "attention_decay" : "attention",
             grad_check(loss, {{"q", &q}, {"K", &K}, {"V", &V}}), tol);
    }

    {  // multi-head projection stack with decay scaling
        Tensor qs(2, 6), kv(4, 6), Wq(6, 6), Wk(6, 6), Wv(6, 6), Wo(6, 6);
        fill(qs, rng);
        fill(kv, rng);
        fill(Wq, rng, 0.5);
        fill(Wk, rng, 0.5);
        fill(Wv, rng, 0.5);
        fill(Wo, rng, 0.5);
        Mask mask = Mask::all(2, 4);
        std::vector<double> xi = {1.0, 0.7, 0.4, 0.2};
        auto w = rand_weights(rng, 12);
        ops::MhTrace tr;
        Tensor y = ops::multi_head(qs, kv, Wq, Wk, Wv, Wo, 2, mask, &xi,
                                   false, false, tr);
        seed_grad(y, w);
        ops::multi_head_bwd(qs, kv, Wq, Wk, Wv, Wo, 2, mask, &xi, false,
                            false, tr, y);
        auto loss = [&]() {
            ops::MhTrace t2;
            return weighted_sum(ops::multi_head(qs, kv, Wq, Wk, Wv, Wo, 2,
                                                mask, &xi, false, false, t2),
                                w);
        };
        note(acc, "multi_head",
             grad_check(loss, {{"qs", &qs},
                               {"kv", &kv},
                               {"Wq", &Wq},
                               {"Wk", &Wk},
                               {"Wv", &Wv},
                               {"Wo", &Wo}}),
             tol);
    }

    {  // feed-forward with relu
        Tensor x(3, 4), P1(4, 6), b1(6), P2(6, 4), b2(4);
        fill(x, rng);
        fill(P1, rng, 0.6);
        fill(b1, rng, 0.3);
        fill(P2, rng, 0.6);
        fill(b2, rng, 0.3);
        auto w = rand_weights(rng, 12);
        double min_pre = 1.0;
        auto loss = [&]() {
            ops::FfnTrace t2;
            Tensor y = ops::ffn(x, P1, b1, P2, b2, t2);
            min_pre = 1.0;
            for (long i = 0; i < t2.pre.size(); ++i)
                min_pre = std::min(min_pre, std::fabs(t2.pre.data()[i]));
            return weighted_sum(y, w);
        };
        ops::FfnTrace tr;
        Tensor y = ops::ffn(x, P1, b1, P2, b2, tr);
        seed_grad(y, w);
        ops::ffn_bwd(x, P1, b1, P2, b2, tr, y);
        note(acc, "ffn",
             grad_check(loss,
                        {{"x", &x},
                         {"P1", &P1},
                         {"b1", &b1},
                         {"P2", &P2},
                         {"b2", &b2}},
                        1e-6, 1e-6, [&]() { return min_pre < 1e-4; }),
             tol);
    }

    {  // prediction head shape: d -> d/2 -> 1
        Tensor x(2, 6), P1(6, 3), b1(3), P2(3, 1), b2(1);
        fill(x, rng);
        fill(P1, rng, 0.6);
        fill(b1, rng, 0.3);
        fill(P2, rng, 0.6);
        fill(b2, rng, 0.3);
        auto w = rand_weights(rng, 2);
        double min_pre = 1.0;
        auto loss = [&]() {
            ops::FfnTrace t2;
            Tensor y = ops::ffn(x, P1, b1, P2, b2, t2);
            min_pre = 1.0;
            for (long i = 0; i < t2.pre.size(); ++i)
                min_pre = std::min(min_pre, std::fabs(t2.pre.data()[i]));
            return weighted_sum(y, w);
        };
        ops::FfnTrace tr;
        Tensor y = ops::ffn(x, P1, b1, P2, b2, tr);
        seed_grad(y, w);
        ops::ffn_bwd(x, P1, b1, P2, b2, tr, y);
        note(acc, "prediction_head",
             grad_check(loss,
                        {{"x", &x},
                         {"P1", &P1},
                         {"b1", &b1},
                         {"P2", &P2},
                         {"b2", &b2}},
                        1e-6, 1e-6, [&]() { return min_pre < 1e-4; }),
             tol);
    }

    {  // layer normalization
        Tensor x(3, 6), g(6), b(6);
        fill(x, rng);
        fill(g, rng, 0.7);
        fill(b, rng, 0.4);
        for (long j = 0; j < 6; ++j) g.at(j) += 1.0;
        auto w = rand_weights(rng, 18);
        ops::LnTrace tr;
        Tensor y = ops::layer_norm(x, g, b, tr);
        seed_grad(y, w);
        ops::layer_norm_bwd(x, g, b, tr, y);
        auto loss = [&]() {
            ops::LnTrace t2;
            return weighted_sum(ops::layer_norm(x, g, b, t2), w);
        };
        note(acc, "layer_norm",
             grad_check(loss, {{"x", &x}, {"g", &g}, {"b", &b}}), tol);
    }

    {  // loss derivative in both parameterizations
        double eps = 1e-6;
        double worst = 0.0;
        for (double p : {0.15, 0.5, 0.87})
            for (int a : {0, 1}) {
                double fd =
                    (bce_loss(p + eps, a) - bce_loss(p - eps, a)) / (2 * eps);
                double an = bce_item_grad(p, a);
                worst = std::max(worst, std::fabs(fd - an) /
                                            std::max(std::fabs(an), 1e-6));
            }
        for (double z : {-2.0, 0.3, 1.7})
            for (int a : {0, 1}) {
                double fd = (bce_from_logit(z + eps, a) -
                             bce_from_logit(z - eps, a)) /
                            (2 * eps);
                double an = ops::sigmoid(z) - a;
                worst = std::max(worst, std::fabs(fd - an) /
                                            std::max(std::fabs(an), 1e-6));
            }
        GradCheckResult r;
        r.max_rel_err = worst;
        r.checked = 12;
        note(acc, "bce_loss", r, tol);
    }

    // Whole model on a 2-student micro-batch at 1e-3.
    ModelConfig cfg;
    cfg.d = 4;
    cfg.heads = 2;
    cfg.layers = 1;
    cfg.f_max = 4;
    cfg.question_count = 6;
    cfg.skill_count = 3;
    cfg.l_ses = 3;
    cfg.l_int = 4;
    Model model(cfg);
    Rng mrng(214);
    model.params.init(mrng, cfg.d);
    std::vector<StudentTensors> batch;
    for (int i = 0; i < 2; ++i)
        batch.push_back(synth_random_tensors(mrng, cfg.l_ses, cfg.l_int,
                                             cfg.question_count,
                                             cfg.skill_count));

    double min_pre = 1.0;
    auto scan_pre = [&](const ops::FfnTrace& t) {
        for (long i = 0; i < t.pre.size(); ++i)
            min_pre = std::min(min_pre, std::fabs(t.pre.data()[i]));
    };
    auto full_loss = [&]() {
        double total = 0.0;
        min_pre = 1.0;
        for (const StudentTensors& st : batch) {
            StudentTrace trace;
            auto preds = model.forward(st, [](int64_t) { return true; },
                                       trace, false, nullptr);
            for (const Prediction& p : preds)
                total += bce_from_logit(p.z, p.label);
            for (long s = 0; s < st.l_ses; ++s)
                if (trace.intra[s])
                    for (const BlockTrace& b : trace.intra[s]->blocks)
                        scan_pre(b.ffn_tr);
            for (const PredTrace& pt : trace.preds) {
                for (const BlockTrace& b : pt.sess_blocks) scan_pre(b.ffn_tr);
                for (const BlockTrace& b : pt.ksr_blocks) scan_pre(b.ffn_tr);
                for (const BlockTrace& b : pt.dec_blocks) scan_pre(b.ffn_tr);
                scan_pre(pt.head_tr);
            }
        }
        return total;
    };
    model.params.zero_grad();
    for (const StudentTensors& st : batch) {
        StudentTrace trace;
        auto preds = model.forward(st, [](int64_t) { return true; }, trace,
                                   false, nullptr);
        std::vector<double> dz(preds.size());
        for (size_t k = 0; k < preds.size(); ++k)
            dz[k] = preds[k].p - (preds[k].label == 1 ? 1.0 : 0.0);
        model.backward(st, trace, dz);
    }
    GradCheckResult full =
        grad_check(full_loss, model.params.named(), 1e-5, 1e-5,
                   [&]() { return min_pre < 1e-4; });
    bool full_ok = full.checked > 0 && full.ok(1e-3, 1e-5);

    double secs = timer.secs();
    bool ok = acc.ok && full_ok && secs < 60.0;
    report("gradient_correctness", ok,
           fmt("blocks_max_rel=%.3g(tol=1e-5,worst=%s) full_max_rel=%.3g"
               "(tol=1e-3,worst=%s) kinks=%ld time=%.1fs(limit=60)",
               acc.worst_rel, acc.worst_block.c_str(), full.max_rel_err,
               full.worst_entry.c_str(), full.flagged_kinks, secs));
}

// ---------------------------------------------------------------- criterion 2

void check_segmentation() {
    Timer timer;
    Rng rng(555);
    long students = 1000;
    long mismatches = 0;
    long total_sessions = 0;
    for (long i = 0; i < students; ++i) {
        std::vector<InteractionRecord> recs = synth_random_records(rng, i);
        auto got = split_sessions(recs, 10.0);
        auto want = oracles::linear_scan_sessions(recs, 36000);
        total_sessions += static_cast<long>(got.size());
        if (got.size() != want.size()) {
            ++mismatches;
            continue;
        }
        for (size_t s = 0; s < got.size(); ++s) {
            if (got[s].interactions.size() != want[s].size() ||
                !std::equal(want[s].begin(), want[s].end(),
                            got[s].interactions.begin())) {
                ++mismatches;
                break;
            }
        }
    }
    double secs = timer.secs();
    report("segmentation_oracle", mismatches == 0 && secs < 10.0,
           fmt("students=%ld sessions=%ld mismatches=%ld time=%.2fs(limit=10)",
               students, total_sessions, mismatches, secs));
}

// ---------------------------------------------------------------- criterion 3

void check_auc() {
    Timer timer;
    bool ok = true;
    std::string why;

    // Worked example: scores separate one pair wrongly out of four.
    auto worked = auc_rank_sum({0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1});
    if (!worked || *worked != 0.75) {
        ok = false;
        why = "worked_example";
    }

    Rng rng(808);
    long exact = 0, total = 0;
    for (int trial = 0; trial < 100; ++trial) {
        size_t n = trial < 90 ? 2 + rng.below(499) : 2000 + rng.below(8001);
        std::vector<double> scores(n);
        std::vector<int> labels(n);
        bool discrete = trial % 3 == 0;  // force heavy ties regularly
        for (size_t i = 0; i < n; ++i) {
            scores[i] = discrete
                            ? static_cast<double>(rng.below(16)) / 16.0
                            : rng.uniform();
            labels[i] = rng.below(2) ? 1 : 0;
        }
        auto got = auc_rank_sum(scores, labels);
        auto want = oracles::pairwise_auc(scores, labels);
        ++total;
        bool same = got.has_value() == want.has_value() &&
                    (!got || *got == *want);
        if (same)
            ++exact;
        else if (ok) {
            ok = false;
            why = fmt("trial=%d n=%zu", trial, n);
        }
    }
    double secs = timer.secs();
    ok = ok && exact == total && secs < 30.0;
    report("auc_oracle", ok,
           fmt("instances=%ld exact=%ld worked=0.75 %s time=%.2fs(limit=30)",
               total, exact, why.empty() ? "" : why.c_str(), secs));
}

// ---------------------------------------------------------------- criterion 4

void check_causality() {
    ModelConfig cfg;
    cfg.d = 8;
    cfg.heads = 2;
    cfg.layers = 1;
    cfg.f_max = 5;
    cfg.question_count = 12;
    cfg.skill_count = 5;
    cfg.l_ses = 4;
    cfg.l_int = 6;
    Model model(cfg);
    Rng rng(1212);
    model.params.init(rng, cfg.d);

    auto run = [&](const StudentTensors& st) {
        StudentTrace tr;
        return model.forward(st, [](int64_t) { return true; }, tr, false,
                             nullptr);
    };

    long violations = 0;
    for (int trial = 0; trial < 50; ++trial) {
        StudentTensors st = synth_random_tensors(rng, cfg.l_ses, cfg.l_int,
                                                 cfg.question_count,
                                                 cfg.skill_count);
        // Pick a real interaction to perturb.
        std::vector<std::pair<long, long>> real;
        for (long s = 0; s < st.l_ses; ++s)
            for (long t = 0; t < st.l_int; ++t)
                if (st.int_mask[st.idx(s, t)]) real.emplace_back(s, t);
        auto [slot, t] = real[rng.below(real.size())];
        long rank = 0;  // position within the session's real interactions
        for (long u = 0; u < t; ++u)
            if (st.int_mask[st.idx(slot, u)]) ++rank;

        StudentTensors mod = st;
        long i = mod.idx(slot, t);
        bool whole = trial % 2 == 1;
        mod.answer[i] = 1 - mod.answer[i];
        if (whole) {
            mod.question[i] = static_cast<int32_t>(
                1 + rng.below(static_cast<uint64_t>(cfg.question_count)));
            mod.skill[i] = static_cast<int32_t>(
                1 + rng.below(static_cast<uint64_t>(cfg.skill_count)));
        }

        auto base = run(st);
        auto alt = run(mod);
        if (base.size() != alt.size()) {
            ++violations;
            continue;
        }
        int64_t orig = st.original_session(slot);
        for (size_t k = 0; k < base.size(); ++k) {
            // Earlier prediction: any earlier session; for the answer-only
            // perturbation also everything in the same session up to and
            // including the perturbed position (its answer feeds only the
            // following positions).
            bool earlier =
                base[k].session_original < orig ||
                (!whole && base[k].session_original == orig &&
                 base[k].position <= rank);
            if (earlier && base[k].z != alt[k].z) ++violations;
        }
    }
    report("causality", violations == 0,
           fmt("trials=50 violations=%ld (exact bitwise comparison)",
               violations));
}

// ---------------------------------------------------------------- criterion 5

void check_decay_invariants() {
    bool unit = decay_factor(0.0, 0.05) == 1.0 &&
                decay_factor(0.0, 5.0) == 1.0;

    bool monotone_gap = true, monotone_s = true;
    double prev = 2.0;
    for (double gap : {600.0, 3600.0, 7200.0, 86400.0, 1728000.0}) {
        double xi = decay_factor(gap, 0.1);
        if (xi >= prev) monotone_gap = false;
        prev = xi;
    }
    prev = 2.0;
    for (double s : {0.01, 0.1, 0.5, 2.0, 10.0}) {
        double xi = decay_factor(36000.0, s);
        if (xi >= prev) monotone_s = false;
        prev = xi;
    }

    ModelConfig cfg;
    cfg.d = 8;
    cfg.heads = 2;
    cfg.layers = 1;
    cfg.f_max = 5;
    cfg.question_count = 10;
    cfg.skill_count = 4;
    cfg.l_ses = 4;
    cfg.l_int = 5;
    Model model(cfg);
    Rng rng(333);
    model.params.init(rng, cfg.d);

    auto run = [](Model& m, const StudentTensors& st, StudentTrace& tr) {
        return m.forward(st, [](int64_t) { return true; }, tr, false,
                         nullptr);
    };

    // Shifting every timestamp by whole seconds must not move a single bit:
    // only gaps enter the model.
    bool translation = true;
    for (int trial = 0; trial < 10; ++trial) {
        StudentTensors st = synth_random_tensors(rng, cfg.l_ses, cfg.l_int,
                                                 cfg.question_count,
                                                 cfg.skill_count);
        StudentTensors shifted = st;
        for (long s = 0; s < st.l_ses; ++s)
            shifted.session_start[s] += 31 * 86400 + 7;
        StudentTrace ta, tb;
        auto a = run(model, st, ta);
        auto b = run(model, shifted, tb);
        if (a.size() != b.size()) translation = false;
        for (size_t k = 0; k < a.size() && translation; ++k)
            if (a[k].z != b[k].z) translation = false;
        for (size_t k = 0; k < ta.preds.size() && translation; ++k) {
            const Tensor& ha = ta.preds[k].h_inter;
            const Tensor& hb = tb.preds[k].h_inter;
            for (long j = 0; j < ha.size(); ++j)
                if (ha.data()[j] != hb.data()[j]) translation = false;
        }
    }

    // Disabling decay must equal literally zero gaps, bit for bit.
    ModelConfig cfg_nd = cfg;
    cfg_nd.ablation = Ablation::no_decay;
    Model base(cfg), nodecay(cfg_nd);
    Rng ra(77), rb(77);
    base.params.init(ra, cfg.d);
    nodecay.params.init(rb, cfg.d);
    bool equivalence = true;
    for (int trial = 0; trial < 10; ++trial) {
        StudentTensors gaps = synth_random_tensors(rng, cfg.l_ses, cfg.l_int,
                                                   cfg.question_count,
                                                   cfg.skill_count);
        StudentTensors zeroed = gaps;
        for (long s = 0; s < zeroed.l_ses; ++s)
            zeroed.session_start[s] = gaps.session_start[0];
        StudentTrace ta, tb;
        auto want = run(base, zeroed, ta);
        auto got = run(nodecay, gaps, tb);
        if (want.size() != got.size()) equivalence = false;
        for (size_t k = 0; k < want.size() && equivalence; ++k)
            if (want[k].z != got[k].z) equivalence = false;
    }

    report("decay_invariants",
           unit && monotone_gap && monotone_s && translation && equivalence,
           fmt("xi(0)=1:%s decreasing_gap:%s decreasing_s:%s "
               "time_translation:%s no_decay_equals_zero_gaps:%s",
               unit ? "yes" : "NO", monotone_gap ? "yes" : "NO",
               monotone_s ? "yes" : "NO", translation ? "yes" : "NO",
               equivalence ? "yes" : "NO"));
}

// ------------------------------------------------------------ criteria 6 & 9

struct OverfitRun {
    std::vector<std::string> lines;
    bool hit_target = false;
    size_t epochs = 0;
    double eval_train_auc = 0.0;
    std::vector<double> params;
    double secs = 0.0;
};

std::vector<double> flatten_params(ModelParameters& p) {
    std::vector<double> out;
    for (auto& [name, t] : p.named()) {
        (void)name;
        out.insert(out.end(), t->data(), t->data() + t->size());
    }
    return out;
}

OverfitRun run_overfit() {
    OverfitRun run;
    Timer timer;

    Dataset ds = synth_overfit(200, 5, 20, 10, 50, 8080);
    SegmentedDataset seg = segment_dataset(ds, 10.0);

    TrainConfig tc;
    tc.model.d = 64;
    tc.model.heads = 4;
    tc.model.layers = 1;
    tc.model.f_max = 20;
    tc.lr = 3e-3;
    tc.batch_size = 16;
    tc.epochs = 200;
    tc.patience = 200;
    tc.seed = 1;
    tc.train_auc_stop = 0.975;
    tc = bind_config(tc, seg);

    std::vector<TrainItem> items = prepare_items(seg);
    Model model(tc.model);
    Rng rng(tc.seed);
    model.params.init(rng, tc.model.d);

    TrainResult res = train(model, items, tc, rng, [&](const std::string& s) {
        run.lines.push_back(s);
    });
    run.hit_target = res.hit_train_target;
    run.epochs = res.epochs.size();

    EvalResult ev = evaluate(model, items, Split::train);
    run.eval_train_auc = ev.auc ? *ev.auc : 0.0;
    run.params = flatten_params(model.params);
    run.secs = timer.secs();
    return run;
}

struct ForgettingRun {
    std::string table;
    double mean_none = 0.0;
    double mean_nodecay = 0.0;
    bool complete = false;
};

ForgettingRun run_forgetting() {
    ForgettingRun run;
    std::string table =
        "ablation      seed1    seed2    seed3    seed4    seed5    mean\n";
    for (Ablation ab : {Ablation::none, Ablation::no_decay}) {
        std::vector<double> aucs;
        for (uint64_t seed = 1; seed <= 5; ++seed) {
            Dataset ds = synth_forgetting(100, 6, 8, 6, 24, 0.1, seed);
            SegmentedDataset seg = segment_dataset(ds, 10.0);
            TrainConfig tc;
            tc.model.d = 32;
            tc.model.heads = 4;
            tc.model.layers = 1;
            tc.model.f_max = 10;
            tc.model.ablation = ab;
            tc.lr = 2e-3;
            tc.batch_size = 25;
            tc.epochs = 15;
            tc.patience = 15;
            tc.seed = seed;
            tc = bind_config(tc, seg);
            std::vector<TrainItem> items = prepare_items(seg);
            Model model(tc.model);
            Rng rng(seed);
            model.params.init(rng, tc.model.d);
            TrainResult res = train(model, items, tc, rng, nullptr);
            aucs.push_back(res.best_epoch > 0 ? res.best_val_auc : 0.0);
        }
        double mean = 0.0;
        for (double a : aucs) mean += a;
        mean /= static_cast<double>(aucs.size());
        table += fmt("%-12s %.5f  %.5f  %.5f  %.5f  %.5f  %.5f\n",
                     ablation_name(ab), aucs[0], aucs[1], aucs[2], aucs[3],
                     aucs[4], mean);
        (ab == Ablation::none ? run.mean_none : run.mean_nodecay) = mean;
    }
    run.table = std::move(table);
    run.complete = true;
    return run;
}

std::string strip_wall(const std::string& line) {
    size_t pos = line.find(" wall_time=");
    return pos == std::string::npos ? line : line.substr(0, pos);
}

bool same_logs(const std::vector<std::string>& a,
               const std::vector<std::string>& b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (strip_wall(a[i]) != strip_wall(b[i])) return false;
    return true;
}

// ---------------------------------------------------------------- criterion 8

void check_dataset_stats() {
    const char* path = std::getenv("HITSKT_ASSISTMENTS17");
    if (!path || !*path) {
        skip("dataset_stats",
             "set HITSKT_ASSISTMENTS17 to the 2017 log CSV to enable");
        return;
    }
    Schema schema;
    schema.student = "studentId";
    schema.question = "problemId";
    schema.skill = "skill";
    schema.start_time = "startTime";
    schema.end_time = "endTime";
    schema.answer = "correct";

    Dataset ds = ingest_file(path, schema);
    SegmentedDataset seg = segment_dataset(ds, 10.0);
    StatsReport s = dataset_stats(seg.histories, seg.vocab, seg.ingest_counts);

    bool ok = s.interactions == 942807 && s.students == 1709 &&
              s.questions == 3162 && s.skills == 102 &&
              std::fabs(s.median_interactions_per_session() - 54.0) <= 1.0 &&
              std::fabs(s.avg_sessions_per_student() - 8.0) <= 1.0;
    report("dataset_stats", ok,
           fmt("interactions=%lld(want 942807) students=%lld(want 1709) "
               "questions=%lld(want 3162) skills=%lld(want 102) "
               "median_int_per_session=%.1f(want 54±1) "
               "avg_sessions=%.4f(want 8±1)",
               static_cast<long long>(s.interactions),
               static_cast<long long>(s.students),
               static_cast<long long>(s.questions),
               static_cast<long long>(s.skills),
               s.median_interactions_per_session(),
               s.avg_sessions_per_student()));
}

}  // namespace

int main() {
    setenv("HITSKT_THREADS", "1", 1);

    check_gradients();
    check_segmentation();
    check_auc();
    check_causality();
    check_decay_invariants();

    OverfitRun overfit = run_overfit();
    report("synthetic_overfit",
           overfit.hit_target && overfit.eval_train_auc >= 0.97 &&
               overfit.epochs <= 200 && overfit.secs < 600.0,
           fmt("train_auc=%.4f(target 0.97) epochs=%zu(limit 200) "
               "time=%.1fs(limit 600)",
               overfit.eval_train_auc, overfit.epochs, overfit.secs));

    ForgettingRun study = run_forgetting();
    std::printf("%s", study.table.c_str());
    report("forgetting_study", study.complete,
           fmt("mean_val_auc none=%.5f no-decay=%.5f (direction reported, "
               "decay %s)",
               study.mean_none, study.mean_nodecay,
               study.mean_none >= study.mean_nodecay ? "helps or matches"
                                                     : "did not help"));

    check_dataset_stats();

    OverfitRun overfit2 = run_overfit();
    ForgettingRun study2 = run_forgetting();
    bool logs_same = same_logs(overfit.lines, overfit2.lines);
    bool params_same = overfit.params == overfit2.params;
    bool table_same = study.table == study2.table;
    report("determinism", logs_same && params_same && table_same,
           fmt("overfit_logs=%s overfit_params=%s forgetting_table=%s "
               "(two full reruns, wall_time excluded)",
               logs_same ? "identical" : "DIFFER",
               params_same ? "identical" : "DIFFER",
               table_same ? "identical" : "DIFFER"));

    if (g_failures) {
        std::printf("%d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
