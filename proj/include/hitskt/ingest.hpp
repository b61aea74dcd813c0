#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "hitskt/datamodel.hpp"

namespace hitskt {

// Maps source-log column names onto the fields the pipeline needs. Loaded
// from a key = value file. Either end_time or elapsed_time must be mapped;
// with elapsed_time, end = start + elapsed. multi_skill_delimiter, when set,
// keeps only the first listed skill of a multi-skill cell.
struct Schema {
    std::string student;
    std::string question;
    std::string skill;
    std::string start_time;
    std::string end_time;      // optional if elapsed_time given
    std::string elapsed_time;  // optional
    std::string answer;
    char delimiter = ',';
    std::string multi_skill_delimiter;

    static Schema from_file(const std::string& path);
};

// A parsed row before filtering and vocab assignment. An empty skill string
// marks a null skill cell; answer keeps the raw numeric value so the filter
// can reject partial credit.
struct RawRow {
    std::string student;
    std::string question;
    std::string skill;
    int64_t start = 0;
    int64_t end = 0;
    double answer = 0.0;
};

struct ParseCounts {
    int64_t parsed = 0;      // data rows seen (header excluded)
    int64_t malformed = 0;   // unparseable rows, dropped here
    int64_t multi_skill = 0; // rows whose extra skills were discarded
};

std::vector<RawRow> parse_log(std::istream& in, const Schema& schema,
                              ParseCounts& counts);

// Hard duration cap: interactions strictly longer than this are dropped.
inline constexpr int64_t kMaxDurationSeconds = 9999;

struct FilterCounts {
    int64_t null_skill = 0;
    int64_t long_duration = 0;
    int64_t invalid = 0;  // negative duration or answer not in {0,1}
};

std::vector<RawRow> filter_records(std::vector<RawRow> rows,
                                   FilterCounts& counts);

// Dense ids from the kept rows' labels, sorted lexicographically so the
// mapping is independent of row order. Index 0 stays reserved for padding.
Vocab build_vocab(const std::vector<RawRow>& kept);

// Fills per-(student, question) attempt numbers, starting at 1. Records must
// arrive grouped by student and time-sorted within each student.
void annotate_occurrences(std::vector<InteractionRecord>& records);

// Ingested corpus: per-student time-sorted records with dense ids and
// occurrence numbers, plus the vocab and drop accounting.
struct Dataset {
    std::vector<std::string> student_label;  // dense student_idx = position
    std::vector<std::vector<InteractionRecord>> records;  // per student
    Vocab vocab;
    StatsReport counts;  // parse/drop fields only

    int64_t total_records() const;
};

Dataset build_dataset(std::vector<RawRow> kept, const ParseCounts& pc,
                      const FilterCounts& fc);

Dataset ingest_file(const std::string& csv_path, const Schema& schema);

// Corpus statistics over segmented histories (session-level numbers need
// session boundaries, so this lives downstream of segmentation).
StatsReport dataset_stats(const std::vector<StudentHistory>& histories,
                          const Vocab& vocab, const StatsReport& ingest_counts);

// The one key: value per line report format consumed by the stats command
// and the golden-file test.
std::string format_stats(const StatsReport& s);

}  // namespace hitskt
