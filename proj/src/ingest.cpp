#include "hitskt/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "hitskt/config.hpp"

namespace hitskt {

Schema Schema::from_file(const std::string& path) {
    KeyValues kv = KeyValues::from_file(path);
    Schema s;
    s.student = kv.take("student");
    s.question = kv.take("question");
    s.skill = kv.take("skill");
    s.start_time = kv.take("start_time");
    s.end_time = kv.take_or("end_time", "");
    s.elapsed_time = kv.take_or("elapsed_time", "");
    s.answer = kv.take("answer");
    std::string delim = kv.take_or("delimiter", ",");
    if (delim == "tab" || delim == "\\t")
        s.delimiter = '\t';
    else if (delim.size() == 1)
        s.delimiter = delim[0];
    else
        throw std::runtime_error("schema: bad delimiter '" + delim + "'");
    s.multi_skill_delimiter = kv.take_or("multi_skill_delimiter", "");
    kv.reject_unknown("schema");
    if (s.end_time.empty() && s.elapsed_time.empty())
        throw std::runtime_error("schema: need end_time or elapsed_time");
    return s;
}

// One CSV line split into fields, honoring double quotes. Embedded newlines
// inside quotes are not supported; none of the target logs use them.
static std::vector<std::string> split_csv(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == delim) {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

static bool parse_number(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size() && std::isfinite(out);
}

static bool is_null_label(const std::string& s) {
    return s.empty() || s == "NA" || s == "na" || s == "null" || s == "NULL" ||
           s == "nan" || s == "NaN";
}

std::vector<RawRow> parse_log(std::istream& in, const Schema& schema,
                              ParseCounts& counts) {
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("parse_log: empty input, no header row");
    std::vector<std::string> header = split_csv(line, schema.delimiter);

    auto column = [&](const std::string& name, bool required) -> int {
        if (name.empty()) return -1;
        for (size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        if (required)
            throw std::runtime_error("parse_log: column '" + name +
                                     "' not in header");
        return -1;
    };

    int c_student = column(schema.student, true);
    int c_question = column(schema.question, true);
    int c_skill = column(schema.skill, true);
    int c_start = column(schema.start_time, true);
    int c_end = column(schema.end_time, !schema.end_time.empty());
    int c_elapsed = column(schema.elapsed_time, !schema.elapsed_time.empty());
    int c_answer = column(schema.answer, true);

    std::vector<RawRow> rows;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        ++counts.parsed;
        std::vector<std::string> f = split_csv(line, schema.delimiter);
        int needed = std::max({c_student, c_question, c_skill, c_start,
                               std::max(c_end, c_elapsed), c_answer});
        if (static_cast<int>(f.size()) <= needed) {
            ++counts.malformed;
            continue;
        }

        RawRow r;
        r.student = f[c_student];
        r.question = f[c_question];
        r.skill = f[c_skill];
        if (is_null_label(r.skill)) r.skill.clear();
        if (!r.skill.empty() && !schema.multi_skill_delimiter.empty()) {
            size_t pos = r.skill.find(schema.multi_skill_delimiter);
            if (pos != std::string::npos) {
                r.skill.resize(pos);
                ++counts.multi_skill;
                if (is_null_label(r.skill)) r.skill.clear();
            }
        }

        double start, finish, ans;
        if (r.student.empty() || r.question.empty() ||
            !parse_number(f[c_start], start) ||
            !parse_number(f[c_answer], ans)) {
            ++counts.malformed;
            continue;
        }
        if (c_end >= 0) {
            if (!parse_number(f[c_end], finish)) {
                ++counts.malformed;
                continue;
            }
        } else {
            double elapsed;
            if (!parse_number(f[c_elapsed], elapsed)) {
                ++counts.malformed;
                continue;
            }
            finish = start + elapsed;
        }
        r.start = std::llround(start);
        r.end = std::llround(finish);
        r.answer = ans;
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<RawRow> filter_records(std::vector<RawRow> rows,
                                   FilterCounts& counts) {
    std::vector<RawRow> kept;
    kept.reserve(rows.size());
    for (auto& r : rows) {
        if (r.skill.empty()) {
            ++counts.null_skill;
        } else if (r.end < r.start || (r.answer != 0.0 && r.answer != 1.0)) {
            ++counts.invalid;
        } else if (r.end - r.start > kMaxDurationSeconds) {
            ++counts.long_duration;
        } else {
            kept.push_back(std::move(r));
        }
    }
    return kept;
}

Vocab build_vocab(const std::vector<RawRow>& kept) {
    Vocab v;
    for (const auto& r : kept) {
        v.question_index.emplace(r.question, 0);
        v.skill_index.emplace(r.skill, 0);
    }
    // std::map iterates in label order, so ids are row-order independent.
    v.question_label.push_back("");
    for (auto& [label, id] : v.question_index) {
        id = static_cast<int64_t>(v.question_label.size());
        v.question_label.push_back(label);
    }
    v.skill_label.push_back("");
    for (auto& [label, id] : v.skill_index) {
        id = static_cast<int64_t>(v.skill_label.size());
        v.skill_label.push_back(label);
    }
    return v;
}

void annotate_occurrences(std::vector<InteractionRecord>& records) {
    std::unordered_map<int64_t, int64_t> seen;  // question -> attempts so far
    int64_t cur_student = -1;
    const InteractionRecord* prev = nullptr;
    for (auto& r : records) {
        if (r.student_idx != cur_student) {
            if (prev && r.student_idx < prev->student_idx)
                throw std::invalid_argument(
                    "annotate_occurrences: records not grouped by student");
            cur_student = r.student_idx;
            seen.clear();
        } else if (prev && r.start_time < prev->start_time) {
            throw std::invalid_argument(
                "annotate_occurrences: records not time-sorted");
        }
        r.occurrence = ++seen[r.question_id];
        prev = &r;
    }
}

int64_t Dataset::total_records() const {
    int64_t n = 0;
    for (const auto& v : records) n += static_cast<int64_t>(v.size());
    return n;
}

Dataset build_dataset(std::vector<RawRow> kept, const ParseCounts& pc,
                      const FilterCounts& fc) {
    Dataset ds;
    ds.vocab = build_vocab(kept);

    // Students keep their order of first appearance in the log.
    std::unordered_map<std::string, size_t> student_of;
    for (const auto& r : kept) {
        auto [it, fresh] =
            student_of.emplace(r.student, ds.student_label.size());
        if (fresh) ds.student_label.push_back(r.student);
        (void)it;
    }
    ds.records.resize(ds.student_label.size());

    for (const auto& r : kept) {
        InteractionRecord rec;
        rec.student_idx =
            static_cast<int64_t>(student_of.find(r.student)->second);
        rec.question_id = ds.vocab.question_index.at(r.question);
        rec.skill_id = ds.vocab.skill_index.at(r.skill);
        rec.start_time = r.start;
        rec.end_time = r.end;
        rec.answer = r.answer == 1.0 ? 1 : 0;
        ds.records[rec.student_idx].push_back(rec);
    }

    for (auto& recs : ds.records) {
        std::stable_sort(recs.begin(), recs.end(),
                         [](const InteractionRecord& a,
                            const InteractionRecord& b) {
                             return a.start_time < b.start_time;
                         });
        annotate_occurrences(recs);
        for (const auto& r : recs)
            ds.vocab.f_max_observed =
                std::max(ds.vocab.f_max_observed, r.occurrence);
    }

    ds.counts.parsed_rows = pc.parsed;
    ds.counts.dropped_malformed = pc.malformed;
    ds.counts.multi_skill_rows = pc.multi_skill;
    ds.counts.dropped_null_skill = fc.null_skill;
    ds.counts.dropped_long_duration = fc.long_duration;
    ds.counts.dropped_invalid = fc.invalid;
    return ds;
}

Dataset ingest_file(const std::string& csv_path, const Schema& schema) {
    std::ifstream in(csv_path);
    if (!in) throw std::runtime_error("cannot open input: " + csv_path);
    ParseCounts pc;
    std::vector<RawRow> rows = parse_log(in, schema, pc);
    FilterCounts fc;
    std::vector<RawRow> kept = filter_records(std::move(rows), fc);
    return build_dataset(std::move(kept), pc, fc);
}

StatsReport dataset_stats(const std::vector<StudentHistory>& histories,
                          const Vocab& vocab, const StatsReport& ingest_counts) {
    StatsReport s = ingest_counts;
    s.students = static_cast<int64_t>(histories.size());
    s.questions = vocab.question_count();
    s.skills = vocab.skill_count();
    s.interactions = 0;
    s.sessions = 0;
    s.session_sizes.clear();
    for (const auto& h : histories) {
        s.sessions += static_cast<int64_t>(h.sessions.size());
        for (const auto& sess : h.sessions) {
            s.interactions += static_cast<int64_t>(sess.interactions.size());
            s.session_sizes.push_back(
                static_cast<int64_t>(sess.interactions.size()));
        }
    }
    return s;
}

std::string format_stats(const StatsReport& s) {
    char buf[64];
    std::ostringstream os;
    os << "interactions: " << s.interactions << "\n";
    os << "students: " << s.students << "\n";
    os << "questions: " << s.questions << "\n";
    os << "skills: " << s.skills << "\n";
    os << "sessions: " << s.sessions << "\n";
    os << "avg_sessions_per_student: "
       << std::llround(s.avg_sessions_per_student()) << "\n";
    os << "avg_interactions_per_session: "
       << std::llround(s.avg_interactions_per_session()) << "\n";
    // Medians of integer counts are integers or half-integers; one decimal
    // keeps them exact.
    std::snprintf(buf, sizeof buf, "%.1f", s.median_interactions_per_session());
    os << "median_interactions_per_session: " << buf << "\n";
    std::snprintf(buf, sizeof buf, "%.4f", s.avg_sessions_per_student());
    os << "avg_sessions_per_student_exact: " << buf << "\n";
    std::snprintf(buf, sizeof buf, "%.4f", s.avg_interactions_per_session());
    os << "avg_interactions_per_session_exact: " << buf << "\n";
    os << "parsed_rows: " << s.parsed_rows << "\n";
    os << "dropped_null_skill: " << s.dropped_null_skill << "\n";
    os << "dropped_long_duration: " << s.dropped_long_duration << "\n";
    os << "dropped_malformed: " << s.dropped_malformed << "\n";
    os << "dropped_invalid: " << s.dropped_invalid << "\n";
    os << "multi_skill_rows: " << s.multi_skill_rows << "\n";
    return os.str();
}

}  // namespace hitskt
