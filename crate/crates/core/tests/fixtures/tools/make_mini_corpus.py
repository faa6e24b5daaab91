"""Writes the 50-record miniature corpus used by the ingest tests."""
import json
import random
import sys
from pathlib import Path

rng = random.Random(20240601)
out = Path(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).resolve().parents[1])

ARTICLES = ["2", "3", "5", "6", "8", "10", "P1-1"]
WORDS = ("applicant court detention police hearing property complaint search "
         "custody prison judgment remedy domestic authorities").split()
OUTSIDE = ["Smith v. the United Kingdom", "Airey v. Ireland", "Golder v. the United Kingdom",
           "Handyside v. the United Kingdom", "Soering v. the United Kingdom"]


def case_id(i):
    return f"Mini v. State {i:02d}"


def variant(cite):
    # Same citation after trim, case-fold and whitespace collapse.
    style = rng.randrange(4)
    if style == 0:
        return cite
    if style == 1:
        return cite.upper()
    if style == 2:
        return "  " + cite.lower().replace(" ", "   ") + " "
    return cite.replace(" ", "\t", 1)


def sentence(n):
    return " ".join(rng.choice(WORDS) for _ in range(n)) + "."


records = []
for i in range(50):
    rec = {"id": case_id(i)}
    facts = sentence(rng.randint(6, 14))
    law = sentence(rng.randint(6, 14))
    if i == 13:
        rec["body"] = "PROCEDURE\n" + facts + "\n"
    elif i % 10 == 4:
        rec["body"] = "PROCEDURE\nintro.\nTHE FACTS\n" + facts + "\n"
    elif i < 35:
        head = rng.choice(["THE FACTS", "I. THE FACTS", "The Facts:", "  the facts"])
        law_head = rng.choice(["THE LAW", "II. THE LAW", "The Law"])
        rec["body"] = f"PROCEDURE\nintro.\n{head}\n{facts}\n{law_head}\n{law}\n"
    else:
        rec["facts"] = facts
        if i % 7 != 0:
            rec["arguments"] = law
    labels = rng.sample(ARTICLES, rng.randint(0, 3))
    if i == 27:
        labels.append("99")
    rec["outcome"] = labels
    cites = []
    if i % 6 != 5:
        for _ in range(rng.randint(0, 5)):
            j = rng.randrange(50)
            cites.append(variant(case_id(j)))
    if i % 4 == 0:
        cites.append(variant(rng.choice(OUTSIDE)))
    if i % 9 == 0:
        cites.append(case_id(i))
    if cites and i % 5 == 0:
        cites.append(variant(cites[0].strip()))
    rec["citations"] = cites
    split = rng.choice(["train"] * 6 + ["validation", "dev", "test", "test", None])
    if split is not None:
        rec["split"] = split
    records.append(rec)

with open(out / "mini_corpus.jsonl", "w") as f:
    for r in records:
        f.write(json.dumps(r, ensure_ascii=False) + "\n")
(out / "mini_articles.txt").write_text("# articles used by the miniature corpus\n" + "\n".join(ARTICLES) + "\n")
