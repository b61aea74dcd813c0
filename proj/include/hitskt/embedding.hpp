#pragma once

#include <cstdint>
#include <vector>

#include "hitskt/rng.hpp"
#include "hitskt/tensor.hpp"

namespace hitskt {

// Learned lookup tables. Row 0 of each table is the padding row and is held
// at zero: it starts zero and the optimizer re-zeroes it after every step.
// Answers map to rows 1 (wrong) and 2 (right). Occurrence numbers are capped
// at f_max at lookup time; the raw attempt numbers stay in the data.
struct EmbeddingTables {
    Tensor skill;       // [K+1, d]
    Tensor difficulty;  // [Q+1, d]
    Tensor occurrence;  // [f_max+1, d]
    Tensor answer;      // [3, d]
    Tensor akss;        // [d] intra-session summary token
    Tensor rkss;        // [d] inter-session summary token
    Tensor rt;          // [d] retrieval token heading the state sequence

    EmbeddingTables() = default;
    EmbeddingTables(int64_t skill_count, int64_t question_count,
                    int64_t f_max, int64_t d);

    int64_t dim() const { return skill.rank() == 2 ? skill.dim(1) : 0; }
    int64_t f_max() const { return occurrence.dim(0) - 1; }

    // Uniform zero-mean init with scale 1/sqrt(d); padding rows stay zero.
    void init(Rng& rng);
    void zero_padding_rows();

    long answer_row(int answer) const { return answer == 0 ? 1 : 2; }
    long occurrence_row(int64_t occ) const {
        return occ < f_max() ? occ : f_max();
    }
};

// Element-wise sum of the four embedding rows for one interaction:
// skill + per-question difficulty + occurrence count + answer.
Tensor rehearsal_embed(const EmbeddingTables& t, int64_t question,
                       int64_t skill, int64_t occurrence, int answer);

// Decoder query for a question about to be answered: skill + difficulty.
Tensor query_embed(const EmbeddingTables& t, int64_t question, int64_t skill);

// Sinusoidal positional encoding: pe[2i] = sin(pos / 10000^(2i/d)),
// pe[2i+1] = cos(pos / 10000^(2i/d)). Requires even d.
std::vector<double> positional_encoding(int64_t pos, int64_t d);

// Rows 0..max_pos, precomputed once per model.
class PositionalTable {
public:
    PositionalTable() = default;
    PositionalTable(int64_t max_pos, int64_t d);
    const double* row(int64_t pos) const { return table_.data() + pos * d_; }
    int64_t max_pos() const { return max_pos_; }

private:
    int64_t max_pos_ = -1;
    int64_t d_ = 0;
    std::vector<double> table_;
};

}  // namespace hitskt
