#include "hitskt/export.hpp"

#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>

namespace hitskt {

static void append_row(std::string& out, int64_t id, const std::string& label,
                       const Tensor& table, long row) {
    char buf[32];
    out += std::to_string(id);
    out += '\t';
    out += label;
    for (long j = 0; j < table.dim(1); ++j) {
        std::snprintf(buf, sizeof(buf), "%.17g", table.at(row, j));
        out += '\t';
        out += buf;
    }
    out += '\n';
}

std::string format_embedding_table(const ModelParameters& params,
                                   const Vocab& vocab,
                                   const std::string& table) {
    std::string out;
    const EmbeddingTables& emb = params.emb;
    if (table == "skill") {
        for (long i = 1; i < emb.skill.dim(0); ++i)
            append_row(out, i, vocab.skill_label[i], emb.skill, i);
    } else if (table == "difficulty") {
        for (long i = 1; i < emb.difficulty.dim(0); ++i)
            append_row(out, i, vocab.question_label[i], emb.difficulty, i);
    } else if (table == "occurrence") {
        for (long i = 1; i < emb.occurrence.dim(0); ++i)
            append_row(out, i, std::to_string(i), emb.occurrence, i);
    } else if (table == "answer") {
        append_row(out, 1, "incorrect", emb.answer, 1);
        append_row(out, 2, "correct", emb.answer, 2);
    } else {
        throw std::invalid_argument("unknown embedding table: " + table);
    }
    return out;
}

StateWeights state_weights_from_string(const std::string& s) {
    if (s == "uniform") return StateWeights::uniform;
    if (s == "count") return StateWeights::count;
    throw std::invalid_argument("unknown weights mode: " + s);
}

std::vector<StateRow> export_state(Model& model, const SegmentedDataset& ds,
                                   const std::string& student_id,
                                   StateWeights weights) {
    const StudentHistory* hist = nullptr;
    for (const StudentHistory& h : ds.histories)
        if (h.student_id == student_id) {
            hist = &h;
            break;
        }
    if (!hist) throw std::runtime_error("unknown student id: " + student_id);

    StudentTensors st = trim_pad(*hist, ds.lengths.l_ses, ds.lengths.l_int);
    StudentTrace trace;
    std::vector<Prediction> preds = model.forward(
        st, [](int64_t) { return true; }, trace, false, nullptr);

    struct Acc {
        double wp = 0.0, w = 0.0;
        int64_t correct = 0, incorrect = 0;
    };
    std::map<std::pair<int64_t, int64_t>, Acc> cells;
    for (const Prediction& p : preds) {
        Acc& a = cells[{p.session_original, p.skill}];
        double w = weights == StateWeights::count
                       ? static_cast<double>(p.occurrence)
                       : 1.0;
        a.wp += w * p.p;
        a.w += w;
        (p.label == 1 ? a.correct : a.incorrect)++;
    }

    std::vector<StateRow> rows;
    rows.reserve(cells.size());
    for (const auto& [key, acc] : cells) {
        StateRow r;
        r.session = key.first;
        r.skill = key.second;
        r.skill_label = ds.vocab.skill_label[static_cast<size_t>(key.second)];
        r.probability = acc.wp / acc.w;
        r.n_correct = acc.correct;
        r.n_incorrect = acc.incorrect;
        rows.push_back(std::move(r));
    }
    return rows;
}

std::string format_state_rows(const std::string& student_id,
                              const std::vector<StateRow>& rows) {
    std::string out = "student\tsession\tskill\tprobability\tcorrect\tincorrect\n";
    char buf[32];
    for (const StateRow& r : rows) {
        std::snprintf(buf, sizeof(buf), "%.6f", r.probability);
        out += student_id;
        out += '\t';
        out += std::to_string(r.session);
        out += '\t';
        out += r.skill_label;
        out += '\t';
        out += buf;
        out += '\t';
        out += std::to_string(r.n_correct);
        out += '\t';
        out += std::to_string(r.n_incorrect);
        out += '\n';
    }
    return out;
}

}  // namespace hitskt
