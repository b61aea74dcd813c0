#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace hitskt {

// Line-oriented `key = value` file. Blank lines and lines starting with '#'
// are ignored. Consumers take the keys they know and then call
// reject_unknown, making unrecognized keys hard errors instead of silent
// typos.
class KeyValues {
public:
    static KeyValues from_file(const std::string& path);
    static KeyValues from_string(const std::string& text);

    bool has(const std::string& key) const;
    std::string take(const std::string& key);
    std::string take_or(const std::string& key, const std::string& fallback);
    int64_t take_int_or(const std::string& key, int64_t fallback);
    double take_double_or(const std::string& key, double fallback);
    bool take_bool_or(const std::string& key, bool fallback);
    void reject_unknown(const std::string& what) const;

    void set(const std::string& key, const std::string& value);
    // Canonical serialization: keys in insertion order, `key = value` lines.
    std::string to_string() const;

private:
    std::vector<std::string> order_;
    std::map<std::string, std::string> values_;
    std::map<std::string, bool> taken_;
};

enum class Ablation { none, no_decay, avg_pool, no_ksr, no_pos };

Ablation ablation_from_string(const std::string& s);
const char* ablation_name(Ablation a);

// Model geometry and behavior. Everything that changes the parameter shapes
// or the forward math lives here; it is embedded in checkpoints and compared
// on load.
struct ModelConfig {
    int64_t d = 64;           // embedding and attention width
    int64_t ffn_hidden = 0;   // 0 means same as d
    int64_t heads = 4;
    int64_t layers = 1;
    int64_t f_max = 100;      // occurrence embedding cap
    double decay_s = 0.1;     // memory decay stability
    bool residual_norm = true;
    bool renormalize_decay = false;
    double dropout = 0.0;
    Ablation ablation = Ablation::none;

    // Bound to the data at build time.
    int64_t question_count = 0;
    int64_t skill_count = 0;
    int64_t l_ses = 0;
    int64_t l_int = 0;

    int64_t ffn_dim() const { return ffn_hidden > 0 ? ffn_hidden : d; }
    int64_t head_hidden() const { return d / 2; }
    bool use_positional() const { return ablation != Ablation::no_pos; }
};

struct TrainConfig {
    ModelConfig model;
    double lr = 1e-3;
    int64_t batch_size = 64;
    int64_t epochs = 50;
    int64_t patience = 10;  // early stopping on validation AUC
    uint64_t seed = 0;
    double train_auc_stop = 0.0;  // stop when running train AUC reaches this

    static TrainConfig from_file(const std::string& path);
    static TrainConfig from_keyvalues(KeyValues kv);
    // Serialization embedded in checkpoints; includes the data-bound fields.
    std::string canonical() const;
};

}  // namespace hitskt
