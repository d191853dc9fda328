#!/usr/bin/env python3
"""Regenerate the 20-essay demo corpus and its scripted mock backend.

Deterministic by construction (no RNG): rerunning rewrites
tests/fixtures/asap_sample.tsv and tests/fixtures/mock_script.json with
identical bytes. Each essay opens with a unique sentence that the mock rules
key on, carries planted syntax errors that the scripted feedback quotes, and
most contain anonymization placeholders for the scrub stage to replace.
"""

from __future__ import annotations

import csv
import json
import re
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from syntaxforge.corpus import detect_placeholders, word_count
from syntaxforge.feedback import FeedbackItem, SyntaxCategory, serialize_feedback

FIXTURES = Path(__file__).resolve().parents[1] / "tests" / "fixtures"

# Phrases the mock keys on to tell the two prompt kinds apart; tests assert
# the bundled templates still contain them.
SCRUB_MARKER = "replacing every placeholder token"
FEEDBACK_MARKER = "seven categories of issues"

REPLACEMENTS = {
    "@PERSON1": "Jordan",
    "@PERSON2": "Maya",
    "@LOCATION1": "Riverton",
    "@LOCATION2": "Lakeside",
    "@ORGANIZATION1": "the science club",
    "@DATE1": "Tuesday",
    "@TIME1": "noon",
    "@MONEY1": "ten dollars",
    "@PERCENT1": "forty percent",
    "@CAPS1": "Hawthorn",
    "@NUM1": "twelve",
}

OPENINGS = [
    "The first time I visited the river valley, I understood what patience meant.",
    "Our school garden project began with nothing but a bag of seeds.",
    "Learning to repair bicycles changed how I think about broken things.",
    "The town library smells like dust and quiet ambition.",
    "Nobody expected the chess club to fill the cafeteria on Fridays.",
    "My grandmother keeps every letter she has ever received in a cedar box.",
    "The storm that closed the highway taught our street to cooperate.",
    "Volunteering at the animal shelter is louder work than people imagine.",
    "A broken telescope started my fascination with careful measurement.",
    "The mural on the gym wall took three classes two months to finish.",
    "Hiking the ridge trail in October feels like walking through a painting.",
    "Our debate team lost every round the year I learned the most.",
    "The corner bakery opens before sunrise, and so does its owner.",
    "Building the model bridge for physics class tested more than glue.",
    "The community pool stays open late during the hottest weeks.",
    "My first attempt at baking bread produced something closer to a brick.",
    "The history fair rewarded the quietest student in our grade.",
    "Planting trees along the creek bank became an annual tradition.",
    "The radio in my uncle's workshop only plays one station clearly.",
    "Rehearsals for the spring play start in the coldest week of January.",
]

# (sentence containing the error, feedback item it supports)
ERROR_BANK = [
    (
        "I beleive the plan will work if we stay organized.",
        FeedbackItem(SyntaxCategory.MISSPELLED_WORDS, "beleive", "believe", "common misspelling"),
    ),
    (
        "We recieved the letter a full week later.",
        FeedbackItem(SyntaxCategory.MISSPELLED_WORDS, "recieved", "received", "i before e except after c"),
    ),
    (
        "We packed our bags and also checked the map twice.",
        FeedbackItem(
            SyntaxCategory.CONJUNCTIONS_AND_LINKING_PHRASES,
            "and also",
            "and",
            "redundant linking phrase",
        ),
    ),
    (
        "He ran quick across the yard to catch the bus.",
        FeedbackItem(SyntaxCategory.MODIFIERS, "ran quick", "ran quickly", "adverb needed after the verb"),
    ),
    (
        "She arrived to the station before the morning train.",
        FeedbackItem(SyntaxCategory.PREPOSITIONS, "arrived to", "arrived at", "arrive takes the preposition at"),
    ),
    (
        "He might could finish the work tonight if nothing breaks.",
        FeedbackItem(SyntaxCategory.MODAL_VERBS, "might could", "might", "double modal; keep one"),
    ),
    (
        "We dont know the answer yet, and that is fine.",
        FeedbackItem(SyntaxCategory.PUNCTUATION, "dont", "don't", "missing apostrophe in the contraction"),
    ),
    (
        "It was a honest answer to a hard question.",
        FeedbackItem(SyntaxCategory.ARTICLES, "a honest", "an honest", "use an before a vowel sound"),
    ),
]

PLACEHOLDER_SENTENCES = [
    "My friend @PERSON1 moved to @LOCATION1 in the spring.",
    "The trip was organized by @ORGANIZATION1 on @DATE1.",
    "We met @PERSON2 near @LOCATION2 just before @TIME1.",
    "The bake sale raised @MONEY1, which was @PERCENT1 more than last year.",
    "Coach @CAPS1 asked for @NUM1 volunteers by @DATE1.",
]

FILLERS = [
    "The afternoon light settled over the field while we worked in pairs.",
    "Every student carried a notebook filled with half finished ideas.",
    "Small routines, repeated daily, turned strangers into a team.",
    "We measured our progress in buckets, lists, and borrowed tools.",
    "Someone always brought extra sandwiches, and someone always forgot water.",
    "The work was slow at first, then suddenly it was almost done.",
    "Teachers stopped by to watch, offering advice and occasional applause.",
    "Mistakes were common, but most of them taught us something useful.",
    "By the end of the month, the routine felt as natural as breathing.",
    "Our notes from those weeks still read like a map of the effort.",
    "Neighbors donated supplies whenever our own ran low.",
    "Each meeting ended with a list of tasks for the following day.",
    "The weather rarely cooperated, which made the successes sweeter.",
    "We learned to ask better questions before reaching for answers.",
    "Looking back, the smallest decisions mattered more than the grand plans.",
]


def scrub(text: str) -> str:
    return re.sub(
        r"@[A-Z]+[0-9]*", lambda m: REPLACEMENTS.get(m.group(0), m.group(0)), text
    )


def build_essay(i: int) -> tuple[str, str, list[FeedbackItem]]:
    """Returns (raw text, scrubbed text, feedback items) for essay i."""
    sentences = [OPENINGS[i]]
    if i not in (3, 14):  # two essays exercise the no-placeholder pass-through
        sentences.append(PLACEHOLDER_SENTENCES[i % len(PLACEHOLDER_SENTENCES)])
        if i % 3 == 0:
            sentences.append(PLACEHOLDER_SENTENCES[(i + 2) % len(PLACEHOLDER_SENTENCES)])
    errors = [ERROR_BANK[(i + k) % len(ERROR_BANK)] for k in range(2 + (i % 3))]
    # Avoid duplicate quoted originals within one essay.
    seen: set[str] = set()
    items: list[FeedbackItem] = []
    for sentence, item in errors:
        if item.original in seen:
            continue
        seen.add(item.original)
        sentences.append(sentence)
        items.append(item)

    if i == 4:
        target = 78  # stays under the 100-word floor
    elif i == 11:
        target = 705  # lands over the 700-word ceiling
    else:
        target = 110 + (i * 31) % 380
    j = 0
    while word_count(scrub(" ".join(sentences))) < target:
        sentences.append(FILLERS[(i * 7 + j) % len(FILLERS)])
        j += 1
    raw = " ".join(sentences)
    return raw, scrub(raw), items


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    rows = []
    rules = []
    for i in range(20):
        raw, cleaned, items = build_essay(i)
        count = word_count(cleaned)
        if i == 4:
            assert count < 100, f"essay {i}: {count} words, expected < 100"
        elif i == 11:
            assert count > 700, f"essay {i}: {count} words, expected > 700"
        else:
            assert 100 <= count <= 700, f"essay {i}: {count} words out of band"
        assert not detect_placeholders(cleaned), f"essay {i}: scrub left placeholders"
        assert "\t" not in raw and "\n" not in raw
        rows.append((f"fx{i:03d}", (i % 8) + 1, raw, (i % 4) + 7))
        if raw != cleaned:
            rules.append(
                {
                    "match": {"contains_all": [SCRUB_MARKER, OPENINGS[i]]},
                    "responses": [{"content": cleaned}],
                }
            )
        rules.append(
            {
                "match": {"contains_all": [FEEDBACK_MARKER, OPENINGS[i]]},
                "responses": [{"content": serialize_feedback(items)}],
            }
        )

    tsv_path = FIXTURES / "asap_sample.tsv"
    with tsv_path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
        writer.writerow(["essay_id", "essay_set", "essay", "grade"])
        writer.writerows(rows)

    script = {"rules": rules, "default": {"error": "protocol"}}
    (FIXTURES / "mock_script.json").write_text(
        json.dumps(script, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    print(f"wrote {tsv_path} ({len(rows)} essays) and mock_script.json ({len(rules)} rules)")


if __name__ == "__main__":
    main()
