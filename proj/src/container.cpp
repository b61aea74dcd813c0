#include "hitskt/container.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace hitskt {
namespace io {

void put_u8(std::ostream& os, uint8_t v) {
    os.put(static_cast<char>(v));
}

static void put_le(std::ostream& os, uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i)
        os.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u16(std::ostream& os, uint16_t v) { put_le(os, v, 2); }
void put_u32(std::ostream& os, uint32_t v) { put_le(os, v, 4); }
void put_u64(std::ostream& os, uint64_t v) { put_le(os, v, 8); }
void put_i64(std::ostream& os, int64_t v) {
    put_le(os, static_cast<uint64_t>(v), 8);
}

void put_f64(std::ostream& os, double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    put_le(os, bits, 8);
}

void put_str(std::ostream& os, const std::string& s) {
    put_u32(os, static_cast<uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

static uint64_t get_le(std::istream& is, int bytes) {
    uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) {
        int c = is.get();
        if (c < 0) throw std::runtime_error("container: truncated file");
        v |= static_cast<uint64_t>(c & 0xff) << (8 * i);
    }
    return v;
}

uint8_t get_u8(std::istream& is) { return static_cast<uint8_t>(get_le(is, 1)); }
uint16_t get_u16(std::istream& is) {
    return static_cast<uint16_t>(get_le(is, 2));
}
uint32_t get_u32(std::istream& is) {
    return static_cast<uint32_t>(get_le(is, 4));
}
uint64_t get_u64(std::istream& is) { return get_le(is, 8); }
int64_t get_i64(std::istream& is) {
    return static_cast<int64_t>(get_le(is, 8));
}

double get_f64(std::istream& is) {
    uint64_t bits = get_le(is, 8);
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
}

std::string get_str(std::istream& is) {
    uint32_t n = get_u32(is);
    std::string s(n, '\0');
    if (n) {
        is.read(s.data(), n);
        if (is.gcount() != static_cast<std::streamsize>(n))
            throw std::runtime_error("container: truncated string");
    }
    return s;
}

void atomic_write(const std::string& path, const std::string& bytes) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot write: " + tmp);
        os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!os) throw std::runtime_error("write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace io

using namespace io;

static void write_record(std::ostream& os, const InteractionRecord& r) {
    put_u32(os, static_cast<uint32_t>(r.student_idx));
    put_u32(os, static_cast<uint32_t>(r.question_id));
    put_u32(os, static_cast<uint32_t>(r.skill_id));
    put_i64(os, r.start_time);
    put_i64(os, r.end_time);
    put_u8(os, static_cast<uint8_t>(r.answer));
    put_u32(os, static_cast<uint32_t>(r.occurrence));
}

static InteractionRecord read_record(std::istream& is) {
    InteractionRecord r;
    r.student_idx = get_u32(is);
    r.question_id = get_u32(is);
    r.skill_id = get_u32(is);
    r.start_time = get_i64(is);
    r.end_time = get_i64(is);
    r.answer = get_u8(is);
    r.occurrence = get_u32(is);
    return r;
}

static void write_labels(std::ostream& os,
                         const std::vector<std::string>& labels_with_pad) {
    // Slot 0 is the padding label and is implicit.
    put_u64(os, labels_with_pad.size() - 1);
    for (size_t i = 1; i < labels_with_pad.size(); ++i)
        put_str(os, labels_with_pad[i]);
}

static std::vector<std::string> read_labels(std::istream& is) {
    uint64_t n = get_u64(is);
    std::vector<std::string> labels;
    labels.reserve(n + 1);
    labels.push_back("");
    for (uint64_t i = 0; i < n; ++i) labels.push_back(get_str(is));
    return labels;
}

static void write_footer(std::ostream& os,
                         const std::vector<std::string>& students,
                         const Vocab& vocab, const StatsReport& counts) {
    put_u64(os, students.size());
    for (const auto& s : students) put_str(os, s);
    write_labels(os, vocab.question_label);
    write_labels(os, vocab.skill_label);
    put_u64(os, static_cast<uint64_t>(vocab.f_max_observed));
    put_u64(os, static_cast<uint64_t>(counts.parsed_rows));
    put_u64(os, static_cast<uint64_t>(counts.dropped_null_skill));
    put_u64(os, static_cast<uint64_t>(counts.dropped_long_duration));
    put_u64(os, static_cast<uint64_t>(counts.dropped_malformed));
    put_u64(os, static_cast<uint64_t>(counts.dropped_invalid));
    put_u64(os, static_cast<uint64_t>(counts.multi_skill_rows));
}

static void read_footer(std::istream& is, std::vector<std::string>& students,
                        Vocab& vocab, StatsReport& counts) {
    uint64_t n = get_u64(is);
    students.clear();
    students.reserve(n);
    for (uint64_t i = 0; i < n; ++i) students.push_back(get_str(is));
    vocab.question_label = read_labels(is);
    vocab.skill_label = read_labels(is);
    vocab.question_index.clear();
    vocab.skill_index.clear();
    for (size_t i = 1; i < vocab.question_label.size(); ++i)
        vocab.question_index[vocab.question_label[i]] =
            static_cast<int64_t>(i);
    for (size_t i = 1; i < vocab.skill_label.size(); ++i)
        vocab.skill_index[vocab.skill_label[i]] = static_cast<int64_t>(i);
    vocab.f_max_observed = static_cast<int64_t>(get_u64(is));
    counts.parsed_rows = static_cast<int64_t>(get_u64(is));
    counts.dropped_null_skill = static_cast<int64_t>(get_u64(is));
    counts.dropped_long_duration = static_cast<int64_t>(get_u64(is));
    counts.dropped_malformed = static_cast<int64_t>(get_u64(is));
    counts.dropped_invalid = static_cast<int64_t>(get_u64(is));
    counts.multi_skill_rows = static_cast<int64_t>(get_u64(is));
}

static void check_magic(std::istream& is, uint16_t expect_version,
                        const std::string& path) {
    char magic[4];
    is.read(magic, 4);
    if (is.gcount() != 4 || std::memcmp(magic, kContainerMagic, 4) != 0)
        throw std::runtime_error(path + ": not a HTSK container");
    uint16_t version = get_u16(is);
    if (version != expect_version)
        throw std::runtime_error(
            path + ": container version " + std::to_string(version) +
            ", expected " + std::to_string(expect_version));
}

void write_dataset(const Dataset& ds, const std::string& path) {
    std::ostringstream os(std::ios::binary);
    os.write(kContainerMagic, 4);
    put_u16(os, kIngestVersion);
    put_u64(os, static_cast<uint64_t>(ds.total_records()));
    for (const auto& recs : ds.records)
        for (const auto& r : recs) write_record(os, r);
    write_footer(os, ds.student_label, ds.vocab, ds.counts);
    atomic_write(path, os.str());
}

Dataset read_dataset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    check_magic(is, kIngestVersion, path);

    uint64_t n = get_u64(is);
    std::vector<InteractionRecord> flat;
    flat.reserve(n);
    for (uint64_t i = 0; i < n; ++i) flat.push_back(read_record(is));

    Dataset ds;
    read_footer(is, ds.student_label, ds.vocab, ds.counts);
    ds.records.resize(ds.student_label.size());
    for (auto& r : flat) {
        if (r.student_idx < 0 ||
            r.student_idx >= static_cast<int64_t>(ds.records.size()))
            throw std::runtime_error(path + ": record student out of range");
        ds.records[r.student_idx].push_back(r);
    }
    return ds;
}

void write_segmented(const SegmentedDataset& sd, const std::string& path) {
    std::ostringstream os(std::ios::binary);
    os.write(kContainerMagic, 4);
    put_u16(os, kSegmentedVersion);
    put_f64(os, sd.gap_hours);
    put_u32(os, static_cast<uint32_t>(sd.lengths.l_ses));
    put_u32(os, static_cast<uint32_t>(sd.lengths.l_int));
    put_f64(os, sd.lengths.q3_sessions);
    put_f64(os, sd.lengths.q3_interactions);

    put_u64(os, sd.histories.size());
    for (const auto& h : sd.histories) {
        put_u32(os, static_cast<uint32_t>(h.sessions.size()));
        for (const auto& s : h.sessions) {
            put_u32(os, static_cast<uint32_t>(s.interactions.size()));
            for (const auto& r : s.interactions) write_record(os, r);
        }
    }

    std::vector<std::string> students;
    students.reserve(sd.histories.size());
    for (const auto& h : sd.histories) students.push_back(h.student_id);
    write_footer(os, students, sd.vocab, sd.ingest_counts);
    atomic_write(path, os.str());
}

SegmentedDataset read_segmented(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    check_magic(is, kSegmentedVersion, path);

    SegmentedDataset sd;
    sd.gap_hours = get_f64(is);
    sd.lengths.l_ses = get_u32(is);
    sd.lengths.l_int = get_u32(is);
    sd.lengths.q3_sessions = get_f64(is);
    sd.lengths.q3_interactions = get_f64(is);

    uint64_t n_students = get_u64(is);
    sd.histories.resize(n_students);
    for (uint64_t i = 0; i < n_students; ++i) {
        StudentHistory& h = sd.histories[i];
        h.student_idx = static_cast<int64_t>(i);
        uint32_t n_sessions = get_u32(is);
        h.sessions.resize(n_sessions);
        for (uint32_t s = 0; s < n_sessions; ++s) {
            uint32_t n_int = get_u32(is);
            Session& sess = h.sessions[s];
            sess.interactions.reserve(n_int);
            for (uint32_t j = 0; j < n_int; ++j)
                sess.interactions.push_back(read_record(is));
            if (sess.interactions.empty())
                throw std::runtime_error(path + ": empty session");
            sess.start_time = sess.interactions.front().start_time;
            sess.end_time = sess.interactions.back().end_time;
        }
    }

    std::vector<std::string> students;
    read_footer(is, students, sd.vocab, sd.ingest_counts);
    if (students.size() != sd.histories.size())
        throw std::runtime_error(path + ": student table size mismatch");
    for (size_t i = 0; i < students.size(); ++i)
        sd.histories[i].student_id = students[i];
    return sd;
}

}  // namespace hitskt
