#include "hitskt/synthetic.hpp"

#include <cstdio>

#include "hitskt/model.hpp"

namespace hitskt {

static std::string label(const char* prefix, int64_t i) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%s%04lld", prefix,
                  static_cast<long long>(i));
    return buf;
}

// Zero-padded labels sort the same way their numbers do, so the dense id of
// label(p, i) is exactly i + 1.
static Vocab make_vocab(int64_t questions, int64_t skills) {
    Vocab v;
    v.question_label.push_back("");
    v.skill_label.push_back("");
    for (int64_t q = 0; q < questions; ++q) {
        v.question_label.push_back(label("q", q));
        v.question_index[v.question_label.back()] = q + 1;
    }
    for (int64_t k = 0; k < skills; ++k) {
        v.skill_label.push_back(label("k", k));
        v.skill_index[v.skill_label.back()] = k + 1;
    }
    return v;
}

static Dataset assemble(int64_t students, int64_t questions, int64_t skills,
                        std::vector<std::vector<InteractionRecord>> records) {
    Dataset ds;
    ds.vocab = make_vocab(questions, skills);
    ds.records = std::move(records);
    int64_t f_max = 0;
    for (int64_t i = 0; i < students; ++i) {
        ds.student_label.push_back(label("s", i));
        annotate_occurrences(ds.records[i]);
        for (const InteractionRecord& r : ds.records[i])
            f_max = std::max(f_max, r.occurrence);
        ds.counts.parsed_rows += static_cast<int64_t>(ds.records[i].size());
    }
    ds.vocab.f_max_observed = f_max;
    return ds;
}

Dataset synth_overfit(int64_t students, int64_t sessions, int64_t per_session,
                      int64_t skills, int64_t questions, uint64_t seed) {
    Rng rng(seed);
    std::vector<std::vector<InteractionRecord>> records(students);
    const int64_t base = 1600000000;
    for (int64_t i = 0; i < students; ++i) {
        for (int64_t j = 0; j < sessions; ++j) {
            int64_t t = base + j * 86400;
            for (int64_t p = 0; p < per_session; ++p) {
                InteractionRecord r;
                r.student_idx = i;
                r.question_id = 1 + static_cast<int64_t>(rng.below(
                                        static_cast<uint64_t>(questions)));
                r.skill_id = (r.question_id - 1) % skills + 1;
                r.start_time = t;
                r.end_time = t + 30;
                r.answer = static_cast<int>(r.question_id % 2);
                t += 60;
                records[i].push_back(r);
            }
        }
    }
    return assemble(students, questions, skills, std::move(records));
}

Dataset synth_forgetting(int64_t students, int64_t sessions,
                         int64_t per_session, int64_t skills,
                         int64_t questions, double s, uint64_t seed) {
    Rng rng(seed);
    std::vector<std::vector<InteractionRecord>> records(students);
    const int64_t base = 1600000000;
    const int64_t short_gap = 43200;    // 12 h
    const int64_t long_gap = 1728000;   // 20 days
    for (int64_t i = 0; i < students; ++i) {
        int64_t start = base;
        for (int64_t j = 0; j < sessions; ++j) {
            double p_recall = 0.8;
            if (j > 0) {
                int64_t gap = rng.below(2) == 0 ? short_gap : long_gap;
                start += gap;
                p_recall = 0.2 + 0.6 * decay_factor(
                                          static_cast<double>(gap), s);
            }
            int64_t t = start;
            for (int64_t p = 0; p < per_session; ++p) {
                InteractionRecord r;
                r.student_idx = i;
                r.question_id = 1 + static_cast<int64_t>(rng.below(
                                        static_cast<uint64_t>(questions)));
                r.skill_id = (r.question_id - 1) % skills + 1;
                r.start_time = t;
                r.end_time = t + 45;
                r.answer = rng.uniform() < p_recall ? 1 : 0;
                t += 90;
                records[i].push_back(r);
            }
            start = t;
        }
    }
    return assemble(students, questions, skills, std::move(records));
}

std::vector<InteractionRecord> synth_random_records(Rng& rng,
                                                    int64_t student_idx) {
    int64_t n = 1 + static_cast<int64_t>(rng.below(40));
    std::vector<InteractionRecord> out;
    int64_t t = 1500000000 + static_cast<int64_t>(rng.below(1000000));
    for (int64_t i = 0; i < n; ++i) {
        if (i > 0) {
            // Idle gap between the previous end and this start, clustered
            // around the 10 h threshold (36000 s, strict >).
            switch (rng.below(6)) {
            case 0: break;
            case 1: t += static_cast<int64_t>(rng.below(36000)); break;
            case 2: t += 36000; break;
            case 3: t += 36001; break;
            case 4: t += 72000 + static_cast<int64_t>(rng.below(1000000)); break;
            default: t += static_cast<int64_t>(rng.below(200000)); break;
            }
        }
        InteractionRecord r;
        r.student_idx = student_idx;
        r.question_id = 1 + static_cast<int64_t>(rng.below(50));
        r.skill_id = 1 + static_cast<int64_t>(rng.below(10));
        r.start_time = t;
        r.end_time = t + static_cast<int64_t>(rng.below(10000));
        r.answer = static_cast<int>(rng.below(2));
        r.occurrence = 1;
        out.push_back(r);
        t = r.end_time;
    }
    return out;
}

StudentTensors synth_random_tensors(Rng& rng, int64_t l_ses, int64_t l_int,
                                    int64_t questions, int64_t skills) {
    StudentTensors st;
    st.l_ses = l_ses;
    st.l_int = l_int;
    int64_t real = 1 + static_cast<int64_t>(rng.below(
                           static_cast<uint64_t>(l_ses)));
    st.total_sessions = real;
    st.first_kept_session = 0;
    int64_t pad = l_ses - real;
    st.question.assign(l_ses * l_int, 0);
    st.skill.assign(l_ses * l_int, 0);
    st.occurrence.assign(l_ses * l_int, 0);
    st.answer.assign(l_ses * l_int, 0);
    st.int_mask.assign(l_ses * l_int, 0);
    st.ses_mask.assign(l_ses, 0);
    st.session_start.assign(l_ses, 0);

    int64_t start = 1600000000;
    for (int64_t s = 0; s < l_ses; ++s) {
        st.session_start[s] = start;
        if (s < pad) continue;
        st.ses_mask[s] = 1;
        start += 36001 + static_cast<int64_t>(rng.below(400000));
        int64_t m = 1 + static_cast<int64_t>(rng.below(
                            static_cast<uint64_t>(l_int)));
        for (int64_t p = l_int - m; p < l_int; ++p) {
            long i = st.idx(s, p);
            st.int_mask[i] = 1;
            st.question[i] = static_cast<int32_t>(
                1 + rng.below(static_cast<uint64_t>(questions)));
            st.skill[i] = static_cast<int32_t>(
                1 + rng.below(static_cast<uint64_t>(skills)));
            st.occurrence[i] = static_cast<int32_t>(1 + rng.below(5));
            st.answer[i] = static_cast<int32_t>(rng.below(2));
        }
    }
    return st;
}

}  // namespace hitskt
