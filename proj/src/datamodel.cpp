#include "hitskt/datamodel.hpp"

#include <algorithm>

namespace hitskt {

RecordFault validate_record(const InteractionRecord& r) {
    if (r.question_id < 1) return RecordFault::bad_question;
    if (r.skill_id < 1) return RecordFault::bad_skill;
    if (r.end_time < r.start_time) return RecordFault::negative_duration;
    if (r.answer != 0 && r.answer != 1) return RecordFault::bad_answer;
    if (r.occurrence < 1) return RecordFault::bad_occurrence;
    return RecordFault::ok;
}

const char* fault_name(RecordFault f) {
    switch (f) {
        case RecordFault::ok: return "ok";
        case RecordFault::bad_question: return "bad_question";
        case RecordFault::bad_skill: return "bad_skill";
        case RecordFault::negative_duration: return "negative_duration";
        case RecordFault::bad_answer: return "bad_answer";
        case RecordFault::bad_occurrence: return "bad_occurrence";
    }
    return "unknown";
}

double StatsReport::avg_sessions_per_student() const {
    if (students == 0) return 0.0;
    return static_cast<double>(sessions) / static_cast<double>(students);
}

double StatsReport::avg_interactions_per_session() const {
    if (sessions == 0) return 0.0;
    return static_cast<double>(interactions) / static_cast<double>(sessions);
}

double StatsReport::median_interactions_per_session() const {
    if (session_sizes.empty()) return 0.0;
    std::vector<int64_t> s = session_sizes;
    std::sort(s.begin(), s.end());
    size_t n = s.size();
    if (n % 2 == 1) return static_cast<double>(s[n / 2]);
    return (static_cast<double>(s[n / 2 - 1]) + static_cast<double>(s[n / 2])) /
           2.0;
}

}  // namespace hitskt
