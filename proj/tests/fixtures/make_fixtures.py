#!/usr/bin/env python3
"""Builds the mock provider responses for the pandas fixture domain.

    make_fixtures.py base   OUT          use cases, programs, annotations
    make_fixtures.py answer OUT RECORDED changeable areas and cluster names
                                         for prompts captured by a recording run

Responses live at OUT/<prompt kind>/<key>.txt where key is the FNV-1a 64
hash of the prompt's placeholder values (sorted by name).
"""

import collections
import os
import re
import shutil
import sys

LIBRARY = "pandas"


def fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


def fixture_key(values: dict) -> str:
    material = b""
    for name in sorted(values, key=lambda n: n.encode()):
        material += name.encode() + b"\x1f" + values[name].encode() + b"\x1e"
    return "%016x" % fnv1a64(material)


def write(out, kind, values, body):
    folder = os.path.join(out, kind)
    os.makedirs(folder, exist_ok=True)
    with open(os.path.join(folder, fixture_key(values) + ".txt"), "w", encoding="utf-8", newline="") as f:
        f.write(body)


DATASETS = [
    dict(noun="sales", file="sales.csv", other="stores.csv", key="store_id", cat="region", num="revenue",
         num2="units", date="order_date", text="product"),
    dict(noun="student", file="students.csv", other="classes.csv", key="class_id", cat="major", num="score",
         num2="age", date="enrolled_on", text="name"),
    dict(noun="weather", file="weather.csv", other="stations.csv", key="station_id", cat="city",
         num="temperature", num2="rainfall", date="measured_at", text="conditions"),
    dict(noun="employee", file="employees.csv", other="departments.csv", key="department_id",
         cat="department", num="salary", num2="years", date="hire_date", text="title"),
    dict(noun="movie", file="movies.csv", other="studios.csv", key="studio_id", cat="genre", num="rating",
         num2="runtime", date="released", text="title"),
]

# (use case, [(subgoal, code), ...]); the result of the last chunk is printed.
TASKS = [
    ("read a CSV file of {noun} data into a DataFrame and show the first rows",
     [("Show the first five rows", "result = df.head()\n")]),
    ("filter {noun} records where {num} is above a threshold",
     [("Keep only rows where {num} is greater than the threshold",
       "threshold = 50\nresult = df[df[\"{num}\"] > threshold]\n")]),
    ("compute the average {num} for each {cat}",
     [("Group the rows by {cat} and average {num}", "result = df.groupby(\"{cat}\")[\"{num}\"].mean()\n")]),
    ("sort {noun} records by {num} from highest to lowest",
     [("Sort the rows by {num} in descending order", "result = df.sort_values(by=\"{num}\", ascending=False)\n")]),
    ("fill missing {num} values with the column mean",
     [("Replace missing {num} values with the mean of the column",
       "mean_value = df[\"{num}\"].mean()\ndf[\"{num}\"] = df[\"{num}\"].fillna(mean_value)\nresult = df\n")]),
    ("remove duplicate rows from a {noun} table",
     [("Drop rows that appear more than once", "result = df.drop_duplicates()\n")]),
    ("add a column computed from {num} and {num2}",
     [("Create a new column from two existing columns",
       "df[\"ratio\"] = df[\"{num}\"] / df[\"{num2}\"]\nresult = df[[\"{num}\", \"{num2}\", \"ratio\"]]\n")]),
    ("merge {noun} data with a second table on {key}",
     [("Load the second table", "other = pd.read_csv(\"{other}\")\n"),
      ("Join the two tables on {key}", "result = pd.merge(df, other, on=\"{key}\", how=\"inner\")\n")]),
    ("build a pivot table of {num} by {cat}",
     [("Summarize {num} per {cat} in a pivot table",
       "result = pd.pivot_table(df, values=\"{num}\", index=\"{cat}\", aggfunc=\"sum\")\n")]),
    ("extract the year and month from {date}",
     [("Convert {date} to datetime", "df[\"{date}\"] = pd.to_datetime(df[\"{date}\"])\n"),
      ("Pull out the year and month", "df[\"year\"] = df[\"{date}\"].dt.year\ndf[\"month\"] = df[\"{date}\"].dt.month\n"
       "result = df[[\"{date}\", \"year\", \"month\"]]\n")]),
    ("count how often each {cat} appears",
     [("Count the occurrences of each {cat}", "result = df[\"{cat}\"].value_counts()\n")]),
    ("rename columns of a {noun} table",
     [("Give the columns clearer names",
       "result = df.rename(columns={{\"{num}\": \"{num}_value\", \"{cat}\": \"{cat}_name\"}})\n")]),
    ("select some columns of {noun} data and save them to a new CSV file",
     [("Keep only the columns of interest", "subset = df[[\"{text}\", \"{num}\"]]\n"),
      ("Write the subset to a new CSV file", "subset.to_csv(\"{noun}_subset.csv\", index=False)\nresult = subset\n")]),
    ("apply a function to every value in the {num} column",
     [("Define the transformation", "def scale(value):\n    return value * 1.1\n"),
      ("Apply it to {num}", "df[\"{num}_scaled\"] = df[\"{num}\"].apply(scale)\nresult = df[\"{num}_scaled\"]\n")]),
    ("compute descriptive statistics of {noun} data",
     [("Describe the numeric columns", "result = df.describe()\n")]),
    ("concatenate two {noun} tables",
     [("Load the second file", "more = pd.read_csv(\"more_{file}\")\n"),
      ("Stack the two tables vertically", "result = pd.concat([df, more], ignore_index=True)\n")]),
    ("group {num} values into bins",
     [("Cut {num} into labelled bins",
       "bins = [0, 25, 50, 75, 100]\nlabels = [\"low\", \"medium\", \"high\", \"very high\"]\n"
       "df[\"{num}_band\"] = pd.cut(df[\"{num}\"], bins=bins, labels=labels)\nresult = df[\"{num}_band\"]\n")]),
    ("compute a rolling average of {num}",
     [("Sort by {date}", "df = df.sort_values(\"{date}\")\n"),
      ("Average {num} over a moving window", "result = df[\"{num}\"].rolling(window=7).mean()\n")]),
    ("drop rows with missing values from {noun} data",
     [("Remove every row that has a missing value", "result = df.dropna()\n")]),
    ("convert the {num2} column to integers",
     [("Change the type of {num2}", "df[\"{num2}\"] = df[\"{num2}\"].astype(int)\nresult = df.dtypes\n")]),
]

BROKEN_INDEX = 56  # exactly one program with a syntax error


def cases():
    out = []
    for d in DATASETS:
        for use_case, chunks in TASKS:
            out.append((use_case.format(**d).capitalize(), d, chunks))
    return out


def program(d, chunks, annotated):
    parts = ["import pandas as pd\n", "\n"]
    if annotated:
        parts.append("# Load the {noun} data from a CSV file\n".format(**d))
    parts.append("df = pd.read_csv(\"{file}\")\n".format(**d))
    for goal, code in chunks:
        parts.append("\n")
        if annotated:
            parts.append("# " + goal.format(**d) + "\n")
        parts.append(code.format(**d))
    parts.append("\n")
    if annotated:
        parts.append("# Display the result\n")
    parts.append("print(result)\n")
    return "".join(parts)


def fenced(code):
    return "```python\n" + code + "```"


def base(out):
    if os.path.isdir(out):
        shutil.rmtree(out)
    items = cases()
    listing = "".join("%d. %s\n" % (i + 1, uc) for i, (uc, _, _) in enumerate(items))
    write(out, "use_cases", {"DOMAIN_NAME": LIBRARY}, listing)
    for i, (uc, d, chunks) in enumerate(items):
        raw = program(d, chunks, annotated=False)
        if i == BROKEN_INDEX:
            raw = raw.replace("print(result)\n", "print(result\n")
        write(out, "code_for_use_case", {"DOMAIN_NAME": LIBRARY, "USE_CASE": uc}, fenced(raw))
        if i == BROKEN_INDEX:
            continue
        # The provider strips the fence and its final newline.
        write(out, "subgoal_annotate", {"FULL_PROGRAM": raw[:-1]}, fenced(program(d, chunks, annotated=True)))
    for kind, body in (("changeable_areas", ""), ("cluster_name", "Name: Unnamed plan\n")):
        os.makedirs(os.path.join(out, kind), exist_ok=True)
        with open(os.path.join(out, kind, "_default.txt"), "w") as f:
            f.write(body)


LITERAL = re.compile(r"\"[^\"\n]*\"|\b\d+(?:\.\d+)?\b")


def changeable_answer(code):
    seen = []
    for m in LITERAL.finditer(code):
        if m.group(0) not in seen:
            seen.append(m.group(0))
    return "".join("```\n%s\n```\n" % s for s in seen)


def cluster_answer(members):
    goals = [line[2:].strip() for line in members.split("\n") if line.startswith("# ")]
    if not goals:
        return "Name: Unnamed plan\n"
    return "Name: %s\n" % collections.Counter(goals).most_common(1)[0][0]


CHANGEABLE_TAIL = "\n\nHere is the code: {CODE_SNIPPET}"
CLUSTER_TAIL = "\n\nHere is the cluster: {PROGRAMS_IN_CLUSTER}"


def answer(out, recorded):
    for kind, tail, placeholder, respond in (
            ("changeable_areas", CHANGEABLE_TAIL, "CODE_SNIPPET", changeable_answer),
            ("cluster_name", CLUSTER_TAIL, "PROGRAMS_IN_CLUSTER", cluster_answer)):
        folder = os.path.join(recorded, kind)
        if not os.path.isdir(folder):
            continue
        for name in sorted(os.listdir(folder)):
            if not name.endswith(".prompt.txt"):
                continue
            with open(os.path.join(folder, name), encoding="utf-8", newline="") as f:
                prompt = f.read()
            marker = tail.split("{")[0]
            value = prompt[prompt.index(marker) + len(marker):]
            key = fixture_key({placeholder: value})
            assert key + ".prompt.txt" == name, name
            write(out, kind, {placeholder: value}, respond(value))
        default = os.path.join(out, kind, "_default.txt")
        if os.path.exists(default):
            os.remove(default)


if __name__ == "__main__":
    if len(sys.argv) == 3 and sys.argv[1] == "base":
        base(sys.argv[2])
    elif len(sys.argv) == 4 and sys.argv[1] == "answer":
        answer(sys.argv[2], sys.argv[3])
    else:
        sys.exit(__doc__)
