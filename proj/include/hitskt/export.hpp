#pragma once

#include <string>
#include <vector>

#include "hitskt/model.hpp"
#include "hitskt/segmentation.hpp"

namespace hitskt {

// Tab-delimited dump of one embedding table, one row per real id:
// id, label, then the vector components. Table names: skill, difficulty,
// occurrence, answer. Row 0 (padding) is never emitted.
std::string format_embedding_table(const ModelParameters& params,
                                   const Vocab& vocab,
                                   const std::string& table);

enum class StateWeights { uniform, count };
StateWeights state_weights_from_string(const std::string& s);

struct StateRow {
    int64_t session = 0;  // original session index, 0-based
    int64_t skill = 0;
    std::string skill_label;
    double probability = 0.0;  // weighted mean predicted P(correct)
    int64_t n_correct = 0;
    int64_t n_incorrect = 0;
};

// Predicted knowledge state of one student: one row per (session, skill)
// pair over every real session in the kept window. The first session is
// included; its retrieval starts from the zero state. `count` weights each
// prediction by the interaction's attempt number, `uniform` weighs equally.
std::vector<StateRow> export_state(Model& model, const SegmentedDataset& ds,
                                   const std::string& student_id,
                                   StateWeights weights);

std::string format_state_rows(const std::string& student_id,
                              const std::vector<StateRow>& rows);

}  // namespace hitskt
