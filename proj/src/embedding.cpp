#include "hitskt/embedding.hpp"

#include <cmath>
#include <stdexcept>

namespace hitskt {

EmbeddingTables::EmbeddingTables(int64_t skill_count, int64_t question_count,
                                 int64_t f_max, int64_t d)
    : skill(skill_count + 1, d),
      difficulty(question_count + 1, d),
      occurrence(f_max + 1, d),
      answer(3, d),
      akss(d),
      rkss(d),
      rt(d) {
    if (d % 2 != 0)
        throw std::invalid_argument("embedding dim must be even");
}

void EmbeddingTables::init(Rng& rng) {
    double scale = 1.0 / std::sqrt(static_cast<double>(dim()));
    for (Tensor* t : {&skill, &difficulty, &occurrence, &answer, &akss,
                      &rkss, &rt}) {
        for (long i = 0; i < t->size(); ++i)
            t->data()[i] = rng.uniform(-scale, scale);
    }
    zero_padding_rows();
}

void EmbeddingTables::zero_padding_rows() {
    for (Tensor* t : {&skill, &difficulty, &occurrence, &answer}) {
        long d = t->dim(1);
        for (long j = 0; j < d; ++j) {
            t->at(0, j) = 0.0;
            t->gat(0, j) = 0.0;
        }
    }
}

Tensor rehearsal_embed(const EmbeddingTables& t, int64_t question,
                       int64_t skill, int64_t occurrence, int answer) {
    if (question < 0 || question >= t.difficulty.dim(0))
        throw std::invalid_argument("rehearsal_embed: question out of range");
    if (skill < 0 || skill >= t.skill.dim(0))
        throw std::invalid_argument("rehearsal_embed: skill out of range");
    if (occurrence < 0)
        throw std::invalid_argument("rehearsal_embed: negative occurrence");

    int64_t d = t.dim();
    Tensor x(d);
    long occ_row = t.occurrence_row(occurrence);
    long ans_row = t.answer_row(answer);
    for (long j = 0; j < d; ++j)
        x.at(j) = t.skill.at(skill, j) + t.difficulty.at(question, j) +
                  t.occurrence.at(occ_row, j) + t.answer.at(ans_row, j);
    return x;
}

Tensor query_embed(const EmbeddingTables& t, int64_t question, int64_t skill) {
    if (question < 0 || question >= t.difficulty.dim(0))
        throw std::invalid_argument("query_embed: question out of range");
    if (skill < 0 || skill >= t.skill.dim(0))
        throw std::invalid_argument("query_embed: skill out of range");

    int64_t d = t.dim();
    Tensor x(d);
    for (long j = 0; j < d; ++j)
        x.at(j) = t.skill.at(skill, j) + t.difficulty.at(question, j);
    return x;
}

std::vector<double> positional_encoding(int64_t pos, int64_t d) {
    if (d % 2 != 0)
        throw std::invalid_argument("positional_encoding: d must be even");
    std::vector<double> pe(d);
    for (int64_t i = 0; 2 * i < d; ++i) {
        double freq = std::pow(10000.0, -2.0 * static_cast<double>(i) /
                                            static_cast<double>(d));
        double angle = static_cast<double>(pos) * freq;
        pe[2 * i] = std::sin(angle);
        pe[2 * i + 1] = std::cos(angle);
    }
    return pe;
}

PositionalTable::PositionalTable(int64_t max_pos, int64_t d)
    : max_pos_(max_pos), d_(d) {
    table_.resize((max_pos + 1) * d);
    for (int64_t p = 0; p <= max_pos; ++p) {
        std::vector<double> pe = positional_encoding(p, d);
        for (int64_t j = 0; j < d; ++j) table_[p * d + j] = pe[j];
    }
}

}  // namespace hitskt
