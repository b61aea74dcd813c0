#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hitskt/config.hpp"
#include "hitskt/model.hpp"
#include "hitskt/rng.hpp"
#include "hitskt/segmentation.hpp"

namespace hitskt {

// Binary cross-entropy of one prediction. The probability form requires
// p strictly inside (0,1); the logit form is the numerically safe variant
// used everywhere hot.
double bce_loss(double p, int label);
double bce_from_logit(double z, int label);
// dLoss/dp for the probability form, (p - a) / (p (1 - p)).
double bce_item_grad(double p, int label);

// Chronological 60/20/20 split of one student's sessions by original index.
// Boundaries are floor(0.6 n) and floor(0.8 n), computed in integer
// arithmetic (6n/10, 8n/10) so no float rounding can shift them.
struct SplitSpec {
    int64_t n = 0;
    int64_t train_end = 0;  // sessions [0, train_end) train
    int64_t val_end = 0;    // sessions [train_end, val_end) validate
};

enum class Split { train, val, test };

SplitSpec split_sessions_60_20_20(int64_t n_sessions);
bool in_split(const SplitSpec& spec, Split split, int64_t original_index);

// A student's first session is never predicted: there is no history to
// retrieve from. It still serves as history for later sessions.
bool predictable(const SplitSpec& spec, Split split, int64_t original_index);

// Area under the ROC curve via the rank-sum statistic, with average ranks
// over score ties. Empty when only one class is present.
std::optional<double> auc_rank_sum(const std::vector<double>& scores,
                                   const std::vector<int>& labels);

// Adam with bias correction. Element update order is fixed (registry order,
// row-major within a tensor) and the beta powers are kept as running
// products, so a step is reproducible bit for bit.
class Adam {
public:
    Adam(ModelParameters& params, double lr, double beta1 = 0.9,
         double beta2 = 0.999, double eps = 1e-8);
    void step();
    int64_t steps() const { return t_; }

private:
    ModelParameters& params_;
    double lr_, beta1_, beta2_, eps_;
    double beta1_pow_ = 1.0, beta2_pow_ = 1.0;
    int64_t t_ = 0;
    std::vector<Tensor*> tensors_;
    std::vector<std::vector<double>> m_, v_;
};

// One student as the trainer consumes it.
struct TrainItem {
    StudentTensors tensors;
    SplitSpec split;
};

std::vector<TrainItem> prepare_items(const SegmentedDataset& ds);

// Model configuration bound to a segmented corpus.
TrainConfig bind_config(const TrainConfig& base, const SegmentedDataset& ds);

struct EpochMetrics {
    int64_t epoch = 0;
    double train_loss = 0.0;
    std::optional<double> train_auc;
    std::optional<double> val_auc;
    double wall_time = 0.0;  // seconds
};

// "epoch=N train_loss=... train_auc=... val_auc=... wall_time=..."
// Absent AUCs print as nan. Everything except wall_time is deterministic.
std::string format_epoch(const EpochMetrics& m);

struct EvalResult {
    std::vector<Prediction> preds;
    double loss = 0.0;
    std::optional<double> auc;
};

// Forward-only pass over every prediction of `split`. Work is sharded over
// threads (HITSKT_THREADS caps the count); results are assembled in item
// order so the outcome does not depend on scheduling.
EvalResult evaluate(Model& model, const std::vector<TrainItem>& items,
                    Split split);

int thread_count();

using LogFn = std::function<void(const std::string&)>;

struct TrainResult {
    std::vector<EpochMetrics> epochs;
    int64_t best_epoch = -1;      // 1-based; -1 when no validation signal
    double best_val_auc = 0.0;
    bool stopped_early = false;
    bool hit_train_target = false;
};

// Teacher-forced mini-batch training with early stopping on validation AUC.
// Throws on a non-finite loss. The model is left holding the best
// parameters seen (by validation AUC) when validation data exists,
// otherwise the last state.
TrainResult train(Model& model, const std::vector<TrainItem>& items,
                  const TrainConfig& tc, Rng& rng, const LogFn& log);

// Checkpoint container: magic, version, canonical config text, epoch, RNG
// state, then every named parameter tensor.
inline constexpr char kCheckpointMagic[9] = "HTSKCKPT";
inline constexpr uint16_t kCheckpointVersion = 1;

struct CheckpointData {
    std::string config_text;
    int64_t epoch = 0;
    std::string rng_state;
    std::vector<std::pair<std::string, Tensor>> tensors;
};

void save_checkpoint(const std::string& path, const std::string& config_text,
                     int64_t epoch, const std::string& rng_state,
                     ModelParameters& params);
CheckpointData read_checkpoint(const std::string& path);
// Copies tensor values into the registry; refuses name or shape mismatches.
void apply_checkpoint(const CheckpointData& ck, ModelParameters& params);

}  // namespace hitskt
