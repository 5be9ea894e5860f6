#!/usr/bin/env python3
"""Reference sentence scores and summaries for the summarizer tests.

Reads the word lists from the C++ lexicon header and re-implements the
scoring with Python's re and collections modules.  Prints values that are
pasted into tests/test_text.cpp.
"""
import collections
import pathlib
import re
import string

ROOT = pathlib.Path(__file__).resolve().parents[2]
header = (ROOT / "include/flexdoc/content/lexicon.hpp").read_text()


def word_list(name):
    body = re.search(name + r"\[\] = \{(.*?)\};", header, re.S).group(1)
    return set(re.findall(r'"([^"]*)"', body))


STOP = word_list("kStopWords")
ABBR = word_list("kAbbreviations")


def tokens(s):
    out = []
    for raw in s.split():
        t = raw.strip(string.punctuation).lower()
        if t and t not in STOP:
            out.append(t)
    return out


def sentences(text):
    out, start = [], 0
    for m in re.finditer(r"[.!?][\"')\]]*(?=\s|$)", text):
        if m.group(0)[0] == ".":
            word = re.search(r"(\S*)$", text[start:m.start()]).group(1).lstrip('("').lower()
            if word in ABBR:
                continue
        out.append(text[start:m.end()].strip())
        start = m.end()
    if text[start:].strip():
        out.append(text[start:].strip())
    return out


def scores(text):
    sents = sentences(text)
    toks = [tokens(s) for s in sents]
    freq = collections.Counter(t for ts in toks for t in ts)
    top = max(freq.values())
    return sents, [sum(freq[t] / top for t in ts) / len(ts) if ts else 0.0 for ts in toks]


def summary(text, ratio):
    sents, sc = scores(text)
    order = sorted(range(len(sents)), key=lambda i: -sc[i])  # stable
    budget, used, kept = ratio * len(text), 0, []
    for i in order:
        add = len(sents[i]) + (1 if kept else 0)
        if used + add > budget:
            break
        kept.append(i)
        used += add
    kept = sorted(kept or [order[0]])
    return kept


def f1(a, b):
    ta, tb = collections.Counter(tokens(a)), collections.Counter(tokens(b))
    overlap = sum((ta & tb).values())
    if overlap == 0:
        return 0.0
    p, r = overlap / sum(ta.values()), overlap / sum(tb.values())
    return 2 * p * r / (p + r)


FIXTURE = (
    "The council met on Tuesday. "
    "Dr. Alvarez presented a flood plan. "
    "Lunch was served at noon. "
    "The river council backed the river plan for the river valley. "
    "Everyone went home to the river."
)

if __name__ == "__main__":
    sents, sc = scores(FIXTURE)
    for s, v in zip(sents, sc):
        print(f"{v:.17g}  {s}")
    for ratio in (0.6, 0.3):
        kept = summary(FIXTURE, ratio)
        text = " ".join(sents[i] for i in kept)
        print(ratio, kept, f"{f1(text, FIXTURE):.17g}")
