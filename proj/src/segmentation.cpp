#include "hitskt/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hitskt {

std::vector<Session> split_sessions(const std::vector<InteractionRecord>& recs,
                                    double gap_hours) {
    if (gap_hours <= 0.0)
        throw std::invalid_argument("split_sessions: gap must be positive");
    std::vector<Session> out;
    if (recs.empty()) return out;

    double gap_seconds = gap_hours * 3600.0;
    Session cur;
    for (size_t i = 0; i < recs.size(); ++i) {
        const InteractionRecord& r = recs[i];
        if (i > 0) {
            if (r.start_time < recs[i - 1].start_time)
                throw std::invalid_argument(
                    "split_sessions: records not time-sorted");
            double idle = static_cast<double>(r.start_time -
                                              recs[i - 1].end_time);
            if (idle > gap_seconds) {
                out.push_back(std::move(cur));
                cur = Session{};
            }
        }
        cur.interactions.push_back(r);
    }
    out.push_back(std::move(cur));

    for (Session& s : out) {
        s.start_time = s.interactions.front().start_time;
        s.end_time = s.interactions.back().end_time;
    }
    return out;
}

double quantile(std::vector<double> values, double q) {
    if (values.empty())
        throw std::invalid_argument("quantile: empty sample");
    if (q < 0.0 || q > 1.0)
        throw std::invalid_argument("quantile: q out of range");
    std::sort(values.begin(), values.end());
    double h = q * static_cast<double>(values.size() - 1);
    size_t lo = static_cast<size_t>(std::floor(h));
    size_t hi = static_cast<size_t>(std::ceil(h));
    if (lo == hi) return values[lo];
    return values[lo] + (h - lo) * (values[hi] - values[lo]);
}

int64_t closest_power_of_two(double v) {
    if (v <= 1.0) return 1;
    double lg = std::log2(v);
    int64_t below = int64_t{1} << static_cast<int>(std::floor(lg));
    int64_t above = int64_t{1} << static_cast<int>(std::ceil(lg));
    if (below == above) return below;
    double d_below = v - static_cast<double>(below);
    double d_above = static_cast<double>(above) - v;
    return d_below < d_above ? below : above;  // ties go upward
}

SequenceLengths compute_seq_lengths(
    const std::vector<StudentHistory>& histories) {
    std::vector<double> session_counts;
    std::vector<double> interaction_counts;
    for (const auto& h : histories) {
        if (h.sessions.empty()) continue;
        session_counts.push_back(static_cast<double>(h.sessions.size()));
        for (const auto& s : h.sessions)
            interaction_counts.push_back(
                static_cast<double>(s.interactions.size()));
    }
    if (session_counts.empty())
        throw std::invalid_argument("compute_seq_lengths: empty corpus");

    SequenceLengths out;
    out.q3_sessions = quantile(session_counts, 0.75);
    out.q3_interactions = quantile(interaction_counts, 0.75);
    out.l_ses = closest_power_of_two(out.q3_sessions);
    out.l_int = closest_power_of_two(out.q3_interactions);
    return out;
}

StudentTensors trim_pad(const StudentHistory& h, int64_t l_ses, int64_t l_int) {
    if (l_ses < 1 || l_int < 1)
        throw std::invalid_argument("trim_pad: lengths must be >= 1");

    StudentTensors t;
    t.student_idx = h.student_idx;
    t.l_ses = l_ses;
    t.l_int = l_int;
    t.total_sessions = static_cast<int64_t>(h.sessions.size());
    t.question.assign(l_ses * l_int, 0);
    t.skill.assign(l_ses * l_int, 0);
    t.occurrence.assign(l_ses * l_int, 0);
    t.answer.assign(l_ses * l_int, 0);
    t.session_start.assign(l_ses, 0);
    t.int_mask.assign(l_ses * l_int, 0);
    t.ses_mask.assign(l_ses, 0);

    int64_t keep = std::min<int64_t>(t.total_sessions, l_ses);
    t.first_kept_session = t.total_sessions - keep;

    for (int64_t k = 0; k < keep; ++k) {
        const Session& src = h.sessions[t.first_kept_session + k];
        long slot = l_ses - keep + k;  // right-aligned
        t.ses_mask[slot] = 1;
        t.session_start[slot] = src.start_time;

        int64_t n = static_cast<int64_t>(src.interactions.size());
        int64_t kept_int = std::min<int64_t>(n, l_int);
        int64_t first_int = n - kept_int;  // keep the most recent
        for (int64_t j = 0; j < kept_int; ++j) {
            const InteractionRecord& r = src.interactions[first_int + j];
            long pos = l_int - kept_int + j;
            long i = t.idx(slot, pos);
            t.question[i] = static_cast<int32_t>(r.question_id);
            t.skill[i] = static_cast<int32_t>(r.skill_id);
            t.occurrence[i] = static_cast<int32_t>(
                std::min<int64_t>(r.occurrence, INT32_MAX));
            t.answer[i] = r.answer;
            t.int_mask[i] = 1;
        }
    }
    return t;
}

SegmentedDataset segment_dataset(const Dataset& ds, double gap_hours) {
    SegmentedDataset out;
    out.vocab = ds.vocab;
    out.ingest_counts = ds.counts;
    out.gap_hours = gap_hours;
    out.histories.reserve(ds.records.size());
    for (size_t i = 0; i < ds.records.size(); ++i) {
        StudentHistory h;
        h.student_id = ds.student_label[i];
        h.student_idx = static_cast<int64_t>(i);
        h.sessions = split_sessions(ds.records[i], gap_hours);
        out.histories.push_back(std::move(h));
    }
    out.lengths = compute_seq_lengths(out.histories);
    return out;
}

}  // namespace hitskt
