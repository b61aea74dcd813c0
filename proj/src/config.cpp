#include "hitskt/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace hitskt {

static std::string strip(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

KeyValues KeyValues::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_string(ss.str());
}

KeyValues KeyValues::from_string(const std::string& text) {
    KeyValues kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = strip(line);
        if (t.empty() || t[0] == '#') continue;
        size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config line " + std::to_string(lineno) +
                                     ": expected key = value");
        std::string key = strip(t.substr(0, eq));
        std::string value = strip(t.substr(eq + 1));
        if (key.empty())
            throw std::runtime_error("config line " + std::to_string(lineno) +
                                     ": empty key");
        if (kv.values_.count(key))
            throw std::runtime_error("config: duplicate key '" + key + "'");
        kv.set(key, value);
    }
    return kv;
}

bool KeyValues::has(const std::string& key) const {
    return values_.count(key) != 0;
}

std::string KeyValues::take(const std::string& key) {
    auto it = values_.find(key);
    if (it == values_.end())
        throw std::runtime_error("config: missing required key '" + key + "'");
    taken_[key] = true;
    return it->second;
}

std::string KeyValues::take_or(const std::string& key,
                               const std::string& fallback) {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    taken_[key] = true;
    return it->second;
}

int64_t KeyValues::take_int_or(const std::string& key, int64_t fallback) {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    taken_[key] = true;
    char* end = nullptr;
    long long v = std::strtoll(it->second.c_str(), &end, 10);
    if (end != it->second.c_str() + it->second.size())
        throw std::runtime_error("config: key '" + key +
                                 "' is not an integer: " + it->second);
    return v;
}

double KeyValues::take_double_or(const std::string& key, double fallback) {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    taken_[key] = true;
    char* end = nullptr;
    double v = std::strtod(it->second.c_str(), &end);
    if (end != it->second.c_str() + it->second.size())
        throw std::runtime_error("config: key '" + key +
                                 "' is not a number: " + it->second);
    return v;
}

bool KeyValues::take_bool_or(const std::string& key, bool fallback) {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    taken_[key] = true;
    const std::string& v = it->second;
    if (v == "true" || v == "on" || v == "1") return true;
    if (v == "false" || v == "off" || v == "0") return false;
    throw std::runtime_error("config: key '" + key +
                             "' is not a boolean: " + v);
}

void KeyValues::reject_unknown(const std::string& what) const {
    for (const auto& key : order_)
        if (!taken_.count(key))
            throw std::runtime_error(what + ": unknown key '" + key + "'");
}

void KeyValues::set(const std::string& key, const std::string& value) {
    if (!values_.count(key)) order_.push_back(key);
    values_[key] = value;
}

std::string KeyValues::to_string() const {
    std::ostringstream os;
    for (const auto& key : order_)
        os << key << " = " << values_.at(key) << "\n";
    return os.str();
}

Ablation ablation_from_string(const std::string& s) {
    if (s == "none") return Ablation::none;
    if (s == "no-decay") return Ablation::no_decay;
    if (s == "avg-pool") return Ablation::avg_pool;
    if (s == "no-ksr") return Ablation::no_ksr;
    if (s == "no-pos") return Ablation::no_pos;
    throw std::runtime_error("unknown ablation '" + s + "'");
}

const char* ablation_name(Ablation a) {
    switch (a) {
        case Ablation::none: return "none";
        case Ablation::no_decay: return "no-decay";
        case Ablation::avg_pool: return "avg-pool";
        case Ablation::no_ksr: return "no-ksr";
        case Ablation::no_pos: return "no-pos";
    }
    return "none";
}

TrainConfig TrainConfig::from_file(const std::string& path) {
    return from_keyvalues(KeyValues::from_file(path));
}

TrainConfig TrainConfig::from_keyvalues(KeyValues kv) {
    TrainConfig c;
    c.model.d = kv.take_int_or("d", c.model.d);
    c.model.ffn_hidden = kv.take_int_or("ffn_hidden", c.model.ffn_hidden);
    c.model.heads = kv.take_int_or("heads", c.model.heads);
    c.model.layers = kv.take_int_or("layers", c.model.layers);
    c.model.f_max = kv.take_int_or("f_max", c.model.f_max);
    c.model.decay_s = kv.take_double_or("decay_s", c.model.decay_s);
    c.model.residual_norm =
        kv.take_bool_or("residual_norm", c.model.residual_norm);
    c.model.renormalize_decay =
        kv.take_bool_or("renormalize_decay", c.model.renormalize_decay);
    c.model.dropout = kv.take_double_or("dropout", c.model.dropout);
    c.model.ablation =
        ablation_from_string(kv.take_or("ablation", "none"));
    c.model.question_count =
        kv.take_int_or("question_count", c.model.question_count);
    c.model.skill_count = kv.take_int_or("skill_count", c.model.skill_count);
    c.model.l_ses = kv.take_int_or("l_ses", c.model.l_ses);
    c.model.l_int = kv.take_int_or("l_int", c.model.l_int);

    c.lr = kv.take_double_or("lr", c.lr);
    c.batch_size = kv.take_int_or("batch_size", c.batch_size);
    c.epochs = kv.take_int_or("epochs", c.epochs);
    c.patience = kv.take_int_or("patience", c.patience);
    c.seed = static_cast<uint64_t>(
        kv.take_int_or("seed", static_cast<int64_t>(c.seed)));
    c.train_auc_stop = kv.take_double_or("train_auc_stop", c.train_auc_stop);
    kv.reject_unknown("train config");

    if (c.model.d < 2) throw std::runtime_error("config: d must be >= 2");
    if (c.model.heads < 1 || c.model.d % c.model.heads != 0)
        throw std::runtime_error("config: heads must divide d");
    if (c.model.layers < 1)
        throw std::runtime_error("config: layers must be >= 1");
    if (c.model.f_max < 1)
        throw std::runtime_error("config: f_max must be >= 1");
    if (c.model.decay_s <= 0.0)
        throw std::runtime_error("config: decay_s must be positive");
    if (c.model.dropout < 0.0 || c.model.dropout >= 1.0)
        throw std::runtime_error("config: dropout must be in [0,1)");
    if (c.lr <= 0.0) throw std::runtime_error("config: lr must be positive");
    if (c.batch_size < 1)
        throw std::runtime_error("config: batch_size must be >= 1");
    if (c.epochs < 1) throw std::runtime_error("config: epochs must be >= 1");
    if (c.patience < 1)
        throw std::runtime_error("config: patience must be >= 1");
    return c;
}

std::string TrainConfig::canonical() const {
    KeyValues kv;
    auto put_int = [&](const char* k, int64_t v) {
        kv.set(k, std::to_string(v));
    };
    auto put_double = [&](const char* k, double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        kv.set(k, buf);
    };
    put_int("d", model.d);
    put_int("ffn_hidden", model.ffn_hidden);
    put_int("heads", model.heads);
    put_int("layers", model.layers);
    put_int("f_max", model.f_max);
    put_double("decay_s", model.decay_s);
    kv.set("residual_norm", model.residual_norm ? "true" : "false");
    kv.set("renormalize_decay", model.renormalize_decay ? "true" : "false");
    put_double("dropout", model.dropout);
    kv.set("ablation", ablation_name(model.ablation));
    put_int("question_count", model.question_count);
    put_int("skill_count", model.skill_count);
    put_int("l_ses", model.l_ses);
    put_int("l_int", model.l_int);
    put_double("lr", lr);
    put_int("batch_size", batch_size);
    put_int("epochs", epochs);
    put_int("patience", patience);
    put_int("seed", static_cast<int64_t>(seed));
    put_double("train_auc_stop", train_auc_stop);
    return kv.to_string();
}

}  // namespace hitskt
