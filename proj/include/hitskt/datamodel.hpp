#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace hitskt {

// One graded attempt. Ids are dense indices assigned by vocab build; index 0
// is reserved for padding everywhere. Before filtering, skill_id may be the
// sentinel -1 marking a row whose skill field was null in the source log.
struct InteractionRecord {
    int64_t student_idx = 0;   // dense student index
    int64_t question_id = 0;   // dense, 1-based
    int64_t skill_id = 0;      // dense, 1-based; -1 = null before filtering
    int64_t start_time = 0;    // seconds since epoch
    int64_t end_time = 0;      // seconds since epoch
    int answer = 0;            // 0 wrong, 1 right
    int64_t occurrence = 0;    // 1-based attempt number of this question by
                               // this student; 0 until annotated

    bool operator==(const InteractionRecord&) const = default;
};

// Why a finalized record is unacceptable. `ok` means all invariants hold:
// ids >= 1, end >= start, answer in {0,1}, occurrence >= 1.
enum class RecordFault {
    ok,
    bad_question,
    bad_skill,
    negative_duration,
    bad_answer,
    bad_occurrence,
};

RecordFault validate_record(const InteractionRecord& r);
const char* fault_name(RecordFault f);

struct Session {
    std::vector<InteractionRecord> interactions;  // time-ordered
    int64_t start_time = 0;  // first interaction's start
    int64_t end_time = 0;    // last interaction's end
};

struct StudentHistory {
    std::string student_id;  // opaque source id
    int64_t student_idx = 0;
    std::vector<Session> sessions;  // chronological
};

// Dense-id vocabulary built from the kept records. Index 0 never maps to a
// real question or skill. f_max_observed is the largest occurrence number in
// the data (the embedding cap is a model-config choice applied at lookup).
struct Vocab {
    std::vector<std::string> question_label;  // [Q+1], [0] = ""
    std::vector<std::string> skill_label;     // [K+1], [0] = ""
    std::map<std::string, int64_t> question_index;
    std::map<std::string, int64_t> skill_index;
    int64_t f_max_observed = 0;

    int64_t question_count() const {
        return static_cast<int64_t>(question_label.size()) - 1;
    }
    int64_t skill_count() const {
        return static_cast<int64_t>(skill_label.size()) - 1;
    }
};

// Corpus statistics. Raw counts are kept so consumers can form exact ratios;
// display rounding happens only when the report is printed.
struct StatsReport {
    int64_t interactions = 0;
    int64_t students = 0;
    int64_t questions = 0;
    int64_t skills = 0;
    int64_t sessions = 0;
    std::vector<int64_t> session_sizes;  // interactions per session

    // Ingest drop accounting.
    int64_t parsed_rows = 0;
    int64_t dropped_null_skill = 0;
    int64_t dropped_long_duration = 0;
    int64_t dropped_malformed = 0;
    int64_t dropped_invalid = 0;
    int64_t multi_skill_rows = 0;

    double avg_sessions_per_student() const;
    double avg_interactions_per_session() const;
    double median_interactions_per_session() const;
};

}  // namespace hitskt
