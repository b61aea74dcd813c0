#include "hitskt/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "hitskt/container.hpp"
#include "hitskt/kernel.hpp"

namespace hitskt {

double bce_loss(double p, int label) {
    if (!(p > 0.0 && p < 1.0))
        throw std::domain_error("bce_loss: probability must be in (0,1)");
    return label == 1 ? -std::log(p) : -std::log(1.0 - p);
}

double bce_from_logit(double z, int label) {
    double a = label == 1 ? 1.0 : 0.0;
    return std::max(z, 0.0) - a * z + std::log1p(std::exp(-std::fabs(z)));
}

double bce_item_grad(double p, int label) {
    double a = label == 1 ? 1.0 : 0.0;
    return (p - a) / (p * (1.0 - p));
}

SplitSpec split_sessions_60_20_20(int64_t n_sessions) {
    if (n_sessions < 0)
        throw std::invalid_argument("split: negative session count");
    SplitSpec s;
    s.n = n_sessions;
    s.train_end = 6 * n_sessions / 10;
    s.val_end = 8 * n_sessions / 10;
    return s;
}

bool in_split(const SplitSpec& spec, Split split, int64_t original_index) {
    if (original_index < 0 || original_index >= spec.n) return false;
    switch (split) {
    case Split::train: return original_index < spec.train_end;
    case Split::val:
        return original_index >= spec.train_end &&
               original_index < spec.val_end;
    case Split::test: return original_index >= spec.val_end;
    }
    return false;
}

bool predictable(const SplitSpec& spec, Split split, int64_t original_index) {
    return original_index > 0 && in_split(spec, split, original_index);
}

std::optional<double> auc_rank_sum(const std::vector<double>& scores,
                                   const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw std::invalid_argument("auc: size mismatch");
    size_t n = scores.size();
    long long np = 0, nn = 0;
    for (int l : labels) (l == 1 ? np : nn)++;
    if (np == 0 || nn == 0) return std::nullopt;

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] < scores[b]; });

    // Average rank over exact-tie groups; the rank sum of the positive class
    // stays an exact multiple of 1/2, well inside the integer range doubles
    // represent exactly.
    double rank_sum_pos = 0.0;
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (size_t k = i; k < j; ++k)
            if (labels[order[k]] == 1) rank_sum_pos += avg_rank;
        i = j;
    }
    double u = rank_sum_pos -
               static_cast<double>(np) * static_cast<double>(np + 1) / 2.0;
    return u / (static_cast<double>(np) * static_cast<double>(nn));
}

Adam::Adam(ModelParameters& params, double lr, double beta1, double beta2,
           double eps)
    : params_(params), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (auto& [name, t] : params_.named()) tensors_.push_back(t);
    m_.resize(tensors_.size());
    v_.resize(tensors_.size());
    for (size_t i = 0; i < tensors_.size(); ++i) {
        m_[i].assign(static_cast<size_t>(tensors_[i]->size()), 0.0);
        v_[i].assign(static_cast<size_t>(tensors_[i]->size()), 0.0);
    }
}

void Adam::step() {
    ++t_;
    beta1_pow_ *= beta1_;
    beta2_pow_ *= beta2_;
    double bc1 = 1.0 - beta1_pow_;
    double bc2 = 1.0 - beta2_pow_;
    for (size_t i = 0; i < tensors_.size(); ++i) {
        Tensor& t = *tensors_[i];
        double* val = t.data();
        const double* grad = t.grad();
        double* m = m_[i].data();
        double* v = v_[i].data();
        long sz = t.size();
        for (long j = 0; j < sz; ++j) {
            double g = grad[j];
            m[j] = beta1_ * m[j] + (1.0 - beta1_) * g;
            v[j] = beta2_ * v[j] + (1.0 - beta2_) * g * g;
            val[j] -= lr_ * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + eps_);
        }
    }
    // Index 0 of every lookup table stays the zero padding row.
    params_.emb.zero_padding_rows();
}

std::vector<TrainItem> prepare_items(const SegmentedDataset& ds) {
    std::vector<TrainItem> items;
    items.reserve(ds.histories.size());
    for (const StudentHistory& h : ds.histories) {
        TrainItem it;
        it.tensors = trim_pad(h, ds.lengths.l_ses, ds.lengths.l_int);
        it.split = split_sessions_60_20_20(
            static_cast<int64_t>(h.sessions.size()));
        items.push_back(std::move(it));
    }
    return items;
}

TrainConfig bind_config(const TrainConfig& base, const SegmentedDataset& ds) {
    TrainConfig tc = base;
    tc.model.question_count = ds.vocab.question_count();
    tc.model.skill_count = ds.vocab.skill_count();
    tc.model.l_ses = ds.lengths.l_ses;
    tc.model.l_int = ds.lengths.l_int;
    return tc;
}

std::string format_epoch(const EpochMetrics& m) {
    char buf[256];
    double ta = m.train_auc ? *m.train_auc
                            : std::numeric_limits<double>::quiet_NaN();
    double va = m.val_auc ? *m.val_auc
                          : std::numeric_limits<double>::quiet_NaN();
    std::snprintf(buf, sizeof(buf),
                  "epoch=%lld train_loss=%.17g train_auc=%.17g val_auc=%.17g "
                  "wall_time=%.3f",
                  static_cast<long long>(m.epoch), m.train_loss, ta, va,
                  m.wall_time);
    return buf;
}

int thread_count() {
    unsigned hw = std::thread::hardware_concurrency();
    int n = hw == 0 ? 1 : static_cast<int>(hw);
    if (const char* env = std::getenv("HITSKT_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 1)
            n = std::min<long>(v, 256);
    }
    return std::max(n, 1);
}

EvalResult evaluate(Model& model, const std::vector<TrainItem>& items,
                    Split split) {
    size_t n = items.size();
    std::vector<std::vector<Prediction>> per_item(n);
    int threads = std::min<size_t>(thread_count(), n == 0 ? 1 : n);

    auto work = [&](size_t start, size_t stride) {
        StudentTrace trace;
        for (size_t i = start; i < n; i += stride) {
            const TrainItem& it = items[i];
            SessionFilter filter = [&](int64_t orig) {
                return predictable(it.split, split, orig);
            };
            per_item[i] =
                model.forward(it.tensors, filter, trace, false, nullptr);
        }
    };

    if (threads <= 1) {
        work(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (int k = 0; k < threads; ++k)
            pool.emplace_back(work, static_cast<size_t>(k),
                              static_cast<size_t>(threads));
        for (auto& th : pool) th.join();
    }

    EvalResult res;
    double loss_sum = 0.0;
    std::vector<double> scores;
    std::vector<int> labels;
    for (size_t i = 0; i < n; ++i) {
        for (const Prediction& p : per_item[i]) {
            loss_sum += bce_from_logit(p.z, p.label);
            scores.push_back(p.p);
            labels.push_back(p.label);
            res.preds.push_back(p);
        }
    }
    if (!res.preds.empty())
        res.loss = loss_sum / static_cast<double>(res.preds.size());
    res.auc = auc_rank_sum(scores, labels);
    return res;
}

// Number of predictions forward will emit for this item and split; counted
// straight off the masks so batch normalization is known before any pass.
static size_t count_predictions(const TrainItem& it, Split split) {
    const StudentTensors& st = it.tensors;
    size_t total = 0;
    for (long s = 0; s < st.l_ses; ++s) {
        if (!st.ses_mask[s]) continue;
        if (!predictable(it.split, split, st.original_session(s))) continue;
        for (long t = 0; t < st.l_int; ++t)
            if (st.int_mask[st.idx(s, t)]) ++total;
    }
    return total;
}

static std::vector<std::vector<double>> snapshot_values(ModelParameters& p) {
    std::vector<std::vector<double>> snap;
    for (auto& [name, t] : p.named())
        snap.emplace_back(t->data(), t->data() + t->size());
    return snap;
}

static void restore_values(ModelParameters& p,
                           const std::vector<std::vector<double>>& snap) {
    auto reg = p.named();
    for (size_t i = 0; i < reg.size(); ++i)
        std::copy(snap[i].begin(), snap[i].end(), reg[i].second->data());
}

TrainResult train(Model& model, const std::vector<TrainItem>& items,
                  const TrainConfig& tc, Rng& rng, const LogFn& log) {
    TrainResult result;
    Adam adam(model.params, tc.lr);

    std::vector<size_t> order(items.size());
    std::iota(order.begin(), order.end(), size_t{0});

    std::vector<std::vector<double>> best_params;
    double best_val = -1.0;
    int64_t since_best = 0;

    for (int64_t epoch = 1; epoch <= tc.epochs; ++epoch) {
        auto t0 = std::chrono::steady_clock::now();
        rng.shuffle(order);

        double loss_sum = 0.0;
        size_t pred_count = 0;
        std::vector<double> train_scores;
        std::vector<int> train_labels;

        for (size_t b = 0; b < order.size();
             b += static_cast<size_t>(tc.batch_size)) {
            size_t e = std::min(order.size(),
                                b + static_cast<size_t>(tc.batch_size));
            size_t batch_preds = 0;
            for (size_t i = b; i < e; ++i)
                batch_preds += count_predictions(items[order[i]], Split::train);
            if (batch_preds == 0) continue;

            model.params.zero_grad();
            double batch_loss = 0.0;
            for (size_t i = b; i < e; ++i) {
                const TrainItem& it = items[order[i]];
                SessionFilter filter = [&](int64_t orig) {
                    return predictable(it.split, Split::train, orig);
                };
                StudentTrace trace;
                std::vector<Prediction> preds =
                    model.forward(it.tensors, filter, trace, true, &rng);
                if (preds.empty()) continue;
                std::vector<double> dz(preds.size());
                for (size_t k = 0; k < preds.size(); ++k) {
                    const Prediction& p = preds[k];
                    batch_loss += bce_from_logit(p.z, p.label);
                    dz[k] = (p.p - (p.label == 1 ? 1.0 : 0.0)) /
                            static_cast<double>(batch_preds);
                    train_scores.push_back(p.p);
                    train_labels.push_back(p.label);
                }
                model.backward(it.tensors, trace, dz);
            }
            if (!std::isfinite(batch_loss))
                throw std::runtime_error(
                    "training aborted: non-finite loss at epoch " +
                    std::to_string(epoch));
            loss_sum += batch_loss;
            pred_count += batch_preds;
            adam.step();
        }

        EpochMetrics em;
        em.epoch = epoch;
        em.train_loss =
            pred_count ? loss_sum / static_cast<double>(pred_count) : 0.0;
        em.train_auc = auc_rank_sum(train_scores, train_labels);

        EvalResult val = evaluate(model, items, Split::val);
        em.val_auc = val.auc;

        auto t1 = std::chrono::steady_clock::now();
        em.wall_time = std::chrono::duration<double>(t1 - t0).count();
        result.epochs.push_back(em);
        if (log) log(format_epoch(em));

        if (tc.train_auc_stop > 0.0 && em.train_auc &&
            *em.train_auc >= tc.train_auc_stop) {
            result.hit_train_target = true;
            return result;
        }

        if (em.val_auc) {
            if (*em.val_auc > best_val) {
                best_val = *em.val_auc;
                best_params = snapshot_values(model.params);
                result.best_epoch = epoch;
                result.best_val_auc = best_val;
                since_best = 0;
            } else if (++since_best >= tc.patience) {
                result.stopped_early = true;
                break;
            }
        }
    }

    if (!best_params.empty()) restore_values(model.params, best_params);
    return result;
}

void save_checkpoint(const std::string& path, const std::string& config_text,
                     int64_t epoch, const std::string& rng_state,
                     ModelParameters& params) {
    std::ostringstream os;
    os.write(kCheckpointMagic, 8);
    io::put_u16(os, kCheckpointVersion);
    io::put_str(os, config_text);
    io::put_i64(os, epoch);
    io::put_str(os, rng_state);
    auto reg = params.named();
    io::put_u32(os, static_cast<uint32_t>(reg.size()));
    for (auto& [name, t] : reg) {
        io::put_str(os, name);
        io::put_u8(os, static_cast<uint8_t>(t->rank()));
        for (int d = 0; d < t->rank(); ++d)
            io::put_u32(os, static_cast<uint32_t>(t->dim(d)));
        for (long j = 0; j < t->size(); ++j) io::put_f64(os, t->data()[j]);
    }
    io::atomic_write(path, os.str());
}

CheckpointData read_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::string(magic, 8) != std::string(kCheckpointMagic, 8))
        throw std::runtime_error("not a checkpoint file: " + path);
    uint16_t version = io::get_u16(is);
    if (version != kCheckpointVersion)
        throw std::runtime_error("unsupported checkpoint version " +
                                 std::to_string(version));
    CheckpointData ck;
    ck.config_text = io::get_str(is);
    ck.epoch = io::get_i64(is);
    ck.rng_state = io::get_str(is);
    uint32_t count = io::get_u32(is);
    for (uint32_t i = 0; i < count; ++i) {
        std::string name = io::get_str(is);
        uint8_t rank = io::get_u8(is);
        std::vector<long> shape;
        for (uint8_t d = 0; d < rank; ++d)
            shape.push_back(static_cast<long>(io::get_u32(is)));
        Tensor t(shape);
        for (long j = 0; j < t.size(); ++j) t.data()[j] = io::get_f64(is);
        if (!is) throw std::runtime_error("checkpoint truncated: " + path);
        ck.tensors.emplace_back(std::move(name), std::move(t));
    }
    return ck;
}

void apply_checkpoint(const CheckpointData& ck, ModelParameters& params) {
    auto reg = params.named();
    if (ck.tensors.size() != reg.size())
        throw std::runtime_error("checkpoint does not match model: " +
                                 std::to_string(ck.tensors.size()) + " vs " +
                                 std::to_string(reg.size()) + " tensors");
    for (size_t i = 0; i < reg.size(); ++i) {
        const auto& [name, stored] = ck.tensors[i];
        auto& [want_name, live] = reg[i];
        if (name != want_name)
            throw std::runtime_error("checkpoint tensor order mismatch: " +
                                     name + " vs " + want_name);
        if (!stored.same_shape(*live))
            throw std::runtime_error("checkpoint shape mismatch for " + name);
        std::copy(stored.data(), stored.data() + stored.size(), live->data());
    }
}

}  // namespace hitskt
