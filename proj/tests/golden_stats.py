#!/usr/bin/env python3
"""Independent reference for the stats report.

Recomputes the corpus statistics straight from a raw log and its schema file,
sharing no code with the pipeline, and prints the same report layout. The CLI
test diffs this against the `stats` command output.
"""
import csv
import math
import sys

NULL_SKILLS = {"", "NA", "na", "null", "NULL", "nan", "NaN"}
MAX_DURATION = 9999
GAP_SECONDS = 36000  # 10 hours


def read_schema(path):
    out = {}
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            out[key.strip()] = value.strip()
    return out


def to_number(s):
    try:
        v = float(s)
    except ValueError:
        return None
    return v if math.isfinite(v) else None


def llround(x):
    return int(math.floor(x + 0.5))


def main():
    csv_path, schema_path = sys.argv[1], sys.argv[2]
    schema = read_schema(schema_path)
    delim = schema.get("delimiter", ",")
    if delim in ("tab", "\\t"):
        delim = "\t"
    multi = schema.get("multi_skill_delimiter", "")

    parsed = malformed = multi_skill = 0
    null_skill = long_dur = invalid = 0
    kept = []  # (student, question, skill, start, end)

    with open(csv_path, newline="") as f:
        reader = csv.reader(f, delimiter=delim)
        header = next(reader)
        col = {name: i for i, name in enumerate(header)}
        c_student = col[schema["student"]]
        c_question = col[schema["question"]]
        c_skill = col[schema["skill"]]
        c_start = col[schema["start_time"]]
        c_end = col[schema["end_time"]] if schema.get("end_time") else None
        c_elapsed = (col[schema["elapsed_time"]]
                     if schema.get("elapsed_time") else None)
        c_answer = col[schema["answer"]]
        needed = max(x for x in (c_student, c_question, c_skill, c_start,
                                 c_end, c_elapsed, c_answer) if x is not None)

        for row in reader:
            if not row:
                continue
            parsed += 1
            if len(row) <= needed:
                malformed += 1
                continue
            student, question = row[c_student], row[c_question]
            skill = row[c_skill]
            if skill in NULL_SKILLS:
                skill = ""
            if skill and multi and multi in skill:
                skill = skill.split(multi, 1)[0]
                multi_skill += 1
                if skill in NULL_SKILLS:
                    skill = ""
            start = to_number(row[c_start])
            answer = to_number(row[c_answer])
            if not student or not question or start is None or answer is None:
                malformed += 1
                continue
            if c_end is not None:
                end = to_number(row[c_end])
            else:
                elapsed = to_number(row[c_elapsed])
                end = None if elapsed is None else start + elapsed
            if end is None:
                malformed += 1
                continue
            start, end = llround(start), llround(end)

            if not skill:
                null_skill += 1
            elif end < start or answer not in (0.0, 1.0):
                invalid += 1
            elif end - start > MAX_DURATION:
                long_dur += 1
            else:
                kept.append((student, question, skill, start, end))

    students = {}
    for i, rec in enumerate(kept):
        # keep input order as the tie-break so the sort below is stable
        students.setdefault(rec[0], []).append((rec[3], i, rec[4]))

    session_sizes = []
    for recs in students.values():
        recs.sort()
        prev_end = None
        for start, _, end in recs:
            if prev_end is None or start - prev_end > GAP_SECONDS:
                session_sizes.append(0)
            session_sizes[-1] += 1
            prev_end = end

    interactions = len(kept)
    n_students = len(students)
    questions = len({r[1] for r in kept})
    skills = len({r[2] for r in kept})
    sessions = len(session_sizes)

    avg_ses = sessions / n_students if n_students else 0.0
    avg_int = interactions / sessions if sessions else 0.0
    sizes = sorted(session_sizes)
    if not sizes:
        median = 0.0
    elif len(sizes) % 2:
        median = float(sizes[len(sizes) // 2])
    else:
        median = (sizes[len(sizes) // 2 - 1] + sizes[len(sizes) // 2]) / 2.0

    print(f"interactions: {interactions}")
    print(f"students: {n_students}")
    print(f"questions: {questions}")
    print(f"skills: {skills}")
    print(f"sessions: {sessions}")
    print(f"avg_sessions_per_student: {llround(avg_ses)}")
    print(f"avg_interactions_per_session: {llround(avg_int)}")
    print(f"median_interactions_per_session: {median:.1f}")
    print(f"avg_sessions_per_student_exact: {avg_ses:.4f}")
    print(f"avg_interactions_per_session_exact: {avg_int:.4f}")
    print(f"parsed_rows: {parsed}")
    print(f"dropped_null_skill: {null_skill}")
    print(f"dropped_long_duration: {long_dur}")
    print(f"dropped_malformed: {malformed}")
    print(f"dropped_invalid: {invalid}")
    print(f"multi_skill_rows: {multi_skill}")


if __name__ == "__main__":
    main()
