#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "hitskt/ingest.hpp"
#include "hitskt/segmentation.hpp"

using namespace hitskt;

namespace {

Schema basic_schema() {
    Schema s;
    s.student = "user";
    s.question = "item";
    s.skill = "kc";
    s.start_time = "start";
    s.end_time = "end";
    s.answer = "correct";
    return s;
}

std::vector<RawRow> parse(const std::string& csv, const Schema& s,
                          ParseCounts& pc) {
    std::istringstream in(csv);
    return parse_log(in, s, pc);
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
    REQUIRE(out.good());
}

}  // namespace

TEST_CASE("schema file loads and validates") {
    write_file("schema_ok.cfg",
               "student = user\n"
               "question = item\n"
               "# comment\n"
               "skill = kc\n"
               "start_time = start\n"
               "elapsed_time = ms\n"
               "answer = correct\n"
               "delimiter = tab\n"
               "multi_skill_delimiter = ;\n");
    Schema s = Schema::from_file("schema_ok.cfg");
    CHECK(s.student == "user");
    CHECK(s.end_time.empty());
    CHECK(s.elapsed_time == "ms");
    CHECK(s.delimiter == '\t');
    CHECK(s.multi_skill_delimiter == ";");

    write_file("schema_no_end.cfg",
               "student = a\nquestion = b\nskill = c\nstart_time = d\n"
               "answer = e\n");
    CHECK_THROWS(Schema::from_file("schema_no_end.cfg"));

    write_file("schema_bad_key.cfg",
               "student = a\nquestion = b\nskill = c\nstart_time = d\n"
               "end_time = e\nanswer = f\nbogus = g\n");
    CHECK_THROWS(Schema::from_file("schema_bad_key.cfg"));

    write_file("schema_bad_delim.cfg",
               "student = a\nquestion = b\nskill = c\nstart_time = d\n"
               "end_time = e\nanswer = f\ndelimiter = ,,\n");
    CHECK_THROWS(Schema::from_file("schema_bad_delim.cfg"));
    std::remove("schema_ok.cfg");
    std::remove("schema_no_end.cfg");
    std::remove("schema_bad_key.cfg");
    std::remove("schema_bad_delim.cfg");
}

TEST_CASE("csv rows parse with quoting and blank-line handling") {
    ParseCounts pc;
    auto rows = parse(
        "user,item,kc,start,end,correct\n"
        "s1,q1,\"add, subtract\",100,160,1\n"
        "\n"
        "s1,q2,\"say \"\"hi\"\"\",200,230,0\r\n"
        "s2,q1,mul,300,340,1\n",
        basic_schema(), pc);
    REQUIRE(rows.size() == 3);
    CHECK(pc.parsed == 3);
    CHECK(pc.malformed == 0);
    CHECK(rows[0].skill == "add, subtract");
    CHECK(rows[1].skill == "say \"hi\"");
    CHECK(rows[1].end == 230);
    CHECK(rows[2].student == "s2");
    CHECK(rows[0].answer == 1.0);
}

TEST_CASE("missing required column fails loudly") {
    ParseCounts pc;
    std::istringstream in("user,item,start,end,correct\ns1,q1,1,2,1\n");
    CHECK_THROWS(parse_log(in, basic_schema(), pc));

    std::istringstream empty("");
    ParseCounts pc2;
    CHECK_THROWS(parse_log(empty, basic_schema(), pc2));
}

TEST_CASE("malformed rows are counted and skipped") {
    ParseCounts pc;
    auto rows = parse(
        "user,item,kc,start,end,correct\n"
        "s1,q1,add,100,160,1\n"
        "s1,q2,add,not_a_number,160,1\n"
        "s1,q3,add,100\n"
        ",q4,add,100,160,1\n"
        "s1,,add,100,160,1\n"
        "s1,q5,add,100,160,maybe\n",
        basic_schema(), pc);
    CHECK(rows.size() == 1);
    CHECK(pc.parsed == 6);
    CHECK(pc.malformed == 5);
}

TEST_CASE("null skill spellings all mean missing") {
    ParseCounts pc;
    auto rows = parse(
        "user,item,kc,start,end,correct\n"
        "s1,q1,,100,160,1\n"
        "s1,q2,NA,100,160,1\n"
        "s1,q3,na,100,160,1\n"
        "s1,q4,null,100,160,1\n"
        "s1,q5,NULL,100,160,1\n"
        "s1,q6,nan,100,160,1\n"
        "s1,q7,NaN,100,160,1\n"
        "s1,q8,real,100,160,1\n",
        basic_schema(), pc);
    REQUIRE(rows.size() == 8);
    for (int i = 0; i < 7; ++i) CHECK(rows[i].skill.empty());
    CHECK(rows[7].skill == "real");

    FilterCounts fc;
    auto kept = filter_records(rows, fc);
    CHECK(kept.size() == 1);
    CHECK(fc.null_skill == 7);
}

TEST_CASE("multi-skill cells keep the first skill only") {
    Schema s = basic_schema();
    s.multi_skill_delimiter = ";";
    ParseCounts pc;
    auto rows = parse(
        "user,item,kc,start,end,correct\n"
        "s1,q1,add;subtract;carry,100,160,1\n"
        "s1,q2,multiply,200,260,0\n"
        "s1,q3,na;divide,300,360,1\n",
        s, pc);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].skill == "add");
    CHECK(rows[1].skill == "multiply");
    CHECK(rows[2].skill.empty());  // first token is a null spelling
    CHECK(pc.multi_skill == 2);
}

TEST_CASE("elapsed time yields end = start + elapsed") {
    Schema s = basic_schema();
    s.end_time.clear();
    s.elapsed_time = "spent";
    ParseCounts pc;
    auto rows = parse(
        "user,item,kc,start,spent,correct\n"
        "s1,q1,add,1000,45,1\n",
        s, pc);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].start == 1000);
    CHECK(rows[0].end == 1045);
}

TEST_CASE("the duration cap is strict: 9999 stays, 10000 goes") {
    ParseCounts pc;
    auto rows = parse(
        "user,item,kc,start,end,correct\n"
        "s1,q1,add,0,9999,1\n"
        "s1,q2,add,0,10000,1\n"
        "s1,q3,add,100,50,1\n"
        "s1,q4,add,0,60,0.5\n",
        basic_schema(), pc);
    REQUIRE(rows.size() == 4);
    FilterCounts fc;
    auto kept = filter_records(rows, fc);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].end == 9999);
    CHECK(fc.long_duration == 1);
    CHECK(fc.invalid == 2);  // negative duration, fractional answer
}

TEST_CASE("vocab ids are lexicographic and order independent") {
    std::vector<RawRow> a(3), b(3);
    a[0].question = "q9";  a[0].skill = "zeta";
    a[1].question = "q10"; a[1].skill = "alpha";
    a[2].question = "q2";  a[2].skill = "mid";
    b[0] = a[2]; b[1] = a[0]; b[2] = a[1];

    Vocab va = build_vocab(a), vb = build_vocab(b);
    CHECK(va.question_label == vb.question_label);
    CHECK(va.skill_label == vb.skill_label);
    // Lexicographic: "q10" < "q2" < "q9".
    CHECK(va.question_label ==
          std::vector<std::string>{"", "q10", "q2", "q9"});
    CHECK(va.skill_label ==
          std::vector<std::string>{"", "alpha", "mid", "zeta"});
    CHECK(va.question_index.at("q10") == 1);
    CHECK(va.skill_index.at("zeta") == 3);
}

TEST_CASE("occurrence numbers count attempts per student and question") {
    std::vector<InteractionRecord> recs(5);
    recs[0] = {0, 7, 1, 100, 110, 1, 0};
    recs[1] = {0, 7, 1, 200, 210, 0, 0};
    recs[2] = {0, 3, 1, 300, 310, 1, 0};
    recs[3] = {1, 7, 1, 100, 110, 1, 0};
    recs[4] = {1, 7, 1, 150, 160, 1, 0};
    annotate_occurrences(recs);
    CHECK(recs[0].occurrence == 1);
    CHECK(recs[1].occurrence == 2);
    CHECK(recs[2].occurrence == 1);
    CHECK(recs[3].occurrence == 1);  // fresh student restarts the count
    CHECK(recs[4].occurrence == 2);

    std::vector<InteractionRecord> unsorted(2);
    unsorted[0] = {0, 1, 1, 200, 210, 1, 0};
    unsorted[1] = {0, 1, 1, 100, 110, 1, 0};
    CHECK_THROWS(annotate_occurrences(unsorted));

    std::vector<InteractionRecord> interleaved(3);
    interleaved[0] = {0, 1, 1, 100, 110, 1, 0};
    interleaved[1] = {1, 1, 1, 100, 110, 1, 0};
    interleaved[2] = {0, 1, 1, 200, 210, 1, 0};
    CHECK_THROWS(annotate_occurrences(interleaved));
}

TEST_CASE("dataset assembly sorts, numbers, and counts") {
    write_file("tiny.csv",
               "user,item,kc,start,end,correct\n"
               "bob,q1,add,200,260,1\n"
               "amy,q1,add,100,160,0\n"
               "bob,q1,add,100,130,0\n"
               "bob,q2,sub,50000,50030,1\n"
               "amy,q9,NA,100,160,1\n");
    Dataset ds = ingest_file("tiny.csv", basic_schema());
    std::remove("tiny.csv");

    // First-appearance order of students.
    REQUIRE(ds.student_label.size() == 2);
    CHECK(ds.student_label[0] == "bob");
    CHECK(ds.student_label[1] == "amy");
    CHECK(ds.total_records() == 4);

    const auto& bob = ds.records[0];
    REQUIRE(bob.size() == 3);
    CHECK(bob[0].start_time == 100);  // sorted by start
    CHECK(bob[0].occurrence == 1);
    CHECK(bob[1].start_time == 200);
    CHECK(bob[1].occurrence == 2);    // same question again
    CHECK(bob[2].occurrence == 1);
    CHECK(bob[0].answer == 0);
    CHECK(bob[1].answer == 1);

    CHECK(ds.vocab.question_count() == 2);
    CHECK(ds.vocab.skill_count() == 2);
    CHECK(ds.vocab.f_max_observed == 2);
    CHECK(ds.counts.parsed_rows == 5);
    CHECK(ds.counts.dropped_null_skill == 1);
}

TEST_CASE("stats report prints the frozen key: value layout") {
    StatsReport s;
    s.interactions = 10;
    s.students = 2;
    s.questions = 4;
    s.skills = 3;
    s.sessions = 4;
    s.session_sizes = {1, 2, 3, 4};
    s.parsed_rows = 12;
    s.dropped_null_skill = 1;
    s.dropped_invalid = 1;
    std::string want =
        "interactions: 10\n"
        "students: 2\n"
        "questions: 4\n"
        "skills: 3\n"
        "sessions: 4\n"
        "avg_sessions_per_student: 2\n"
        "avg_interactions_per_session: 3\n"
        "median_interactions_per_session: 2.5\n"
        "avg_sessions_per_student_exact: 2.0000\n"
        "avg_interactions_per_session_exact: 2.5000\n"
        "parsed_rows: 12\n"
        "dropped_null_skill: 1\n"
        "dropped_long_duration: 0\n"
        "dropped_malformed: 0\n"
        "dropped_invalid: 1\n"
        "multi_skill_rows: 0\n";
    CHECK(format_stats(s) == want);
}

TEST_CASE("corpus stats aggregate over session boundaries") {
    write_file("tiny2.csv",
               "user,item,kc,start,end,correct\n"
               "amy,q1,add,0,60,1\n"
               "amy,q2,add,100,160,0\n"
               "amy,q1,add,100000,100060,1\n"
               "bob,q1,add,0,60,1\n");
    Dataset ds = ingest_file("tiny2.csv", basic_schema());
    std::remove("tiny2.csv");
    SegmentedDataset seg = segment_dataset(ds, 10.0);
    StatsReport s =
        dataset_stats(seg.histories, seg.vocab, seg.ingest_counts);
    CHECK(s.interactions == 4);
    CHECK(s.students == 2);
    CHECK(s.questions == 2);
    CHECK(s.skills == 1);
    CHECK(s.sessions == 3);  // amy splits at the 100000 s jump
    CHECK(s.session_sizes.size() == 3);
    CHECK(s.median_interactions_per_session() == 1.0);
}
