#pragma once

#include <cstdint>
#include <vector>

#include "hitskt/datamodel.hpp"
#include "hitskt/ingest.hpp"

namespace hitskt {

inline constexpr double kDefaultSessionGapHours = 10.0;

// Cuts one student's time-sorted records into sessions: a new session starts
// whenever the idle gap (next start minus previous end) is strictly greater
// than gap_hours. Throws when the records are not time-sorted.
std::vector<Session> split_sessions(const std::vector<InteractionRecord>& recs,
                                    double gap_hours);

// Model sequence lengths: third quartiles of per-student session counts and
// per-session interaction counts, each rounded to the closest power of two
// (ties resolved upward).
struct SequenceLengths {
    int64_t l_ses = 0;
    int64_t l_int = 0;
    double q3_sessions = 0.0;
    double q3_interactions = 0.0;
};

// Linear-interpolation quantile (the numpy/pandas default) of a sample.
double quantile(std::vector<double> values, double q);
int64_t closest_power_of_two(double v);

SequenceLengths compute_seq_lengths(
    const std::vector<StudentHistory>& histories);

// One student's fixed-shape model input. Sessions and interactions are
// left-padded: real data is right-aligned so the most recent history sits at
// the end. Padding slots carry id 0 and a zero mask bit. first_kept_session
// maps slot positions back to the student's original session indices:
// slot j holds original session first_kept_session + (j - pad_sessions).
struct StudentTensors {
    int64_t student_idx = 0;
    int64_t l_ses = 0;
    int64_t l_int = 0;
    int64_t total_sessions = 0;     // before trimming
    int64_t first_kept_session = 0; // original index of first kept session
    std::vector<int32_t> question;    // [l_ses * l_int]
    std::vector<int32_t> skill;       // [l_ses * l_int]
    std::vector<int32_t> occurrence;  // [l_ses * l_int], raw attempt numbers
    std::vector<int32_t> answer;      // [l_ses * l_int], 0/1
    std::vector<int64_t> session_start;  // [l_ses], seconds
    std::vector<uint8_t> int_mask;    // [l_ses * l_int], 1 = real
    std::vector<uint8_t> ses_mask;    // [l_ses], 1 = real

    long idx(long s, long t) const { return s * l_int + t; }
    // Original session index of slot s (only meaningful on real slots).
    int64_t original_session(long s) const {
        long pad = l_ses - std::min<int64_t>(total_sessions, l_ses);
        return first_kept_session + (s - pad);
    }
    long real_sessions() const {
        long n = 0;
        for (uint8_t m : ses_mask) n += m;
        return n;
    }
};

StudentTensors trim_pad(const StudentHistory& h, int64_t l_ses, int64_t l_int);

// Session-segmented corpus, the unit the training stage consumes. Histories
// keep every session untrimmed; trim_pad shapes them per student at batch
// build time using the stored lengths.
struct SegmentedDataset {
    std::vector<StudentHistory> histories;
    Vocab vocab;
    StatsReport ingest_counts;
    double gap_hours = kDefaultSessionGapHours;
    SequenceLengths lengths;
};

SegmentedDataset segment_dataset(const Dataset& ds, double gap_hours);

}  // namespace hitskt
