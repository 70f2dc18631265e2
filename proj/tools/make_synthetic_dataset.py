#!/usr/bin/env python3
"""Regenerates the bundled synthetic datasets under data/synthetic/.

Deterministic: running it twice produces identical files.
"""
import json
import os
import random

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, "..", "data", "synthetic")

RUBRIC = {
    "items": [
        {"number": 1, "name": "Identifying the base case(s)",
         "explanation": "The proof states which base case(s) must be shown.", "weight": 1.0},
        {"number": 2, "name": "Proving the base case(s)",
         "explanation": "The base case(s) are actually verified.", "weight": 1.0},
        {"number": 3, "name": "Stating the inductive hypothesis",
         "explanation": "The inductive hypothesis is stated explicitly.", "weight": 1.0},
        {"number": 4, "name": "Setting the bound of the inductive hypothesis",
         "explanation": "The hypothesis is assumed for the correct range of values.", "weight": 1.0},
        {"number": 5, "name": "Stating the goal of the inductive step",
         "explanation": "The statement to be proven in the step is given.", "weight": 1.0},
        {"number": 6, "name": "Breaking down the inductive step",
         "explanation": "The step is decomposed so the hypothesis can apply.", "weight": 1.0},
        {"number": 7, "name": "Applying the inductive hypothesis",
         "explanation": "The hypothesis is used to complete the step.", "weight": 1.0},
    ]
}

TOPICS = [
    ("q1", "Explain the difference between a stack and a queue, including one "
           "use case for each."),
    ("q2", "What does TCP provide that UDP does not? Name two guarantees and "
           "explain how one of them is achieved."),
    ("q3", "Prove by induction that the sum of the first n odd numbers is n^2."),
]

PHRASES = [
    "A stack is last-in first-out while a queue is first-in first-out.",
    "TCP provides reliable in-order delivery using acknowledgements and retransmission.",
    "The base case n=1 gives 1 which equals 1 squared.",
    "Assume the claim holds for n=k, then consider n=k+1.",
    "Adding the next odd number 2k+1 to k^2 gives (k+1)^2.",
    "Stacks are used for undo history and queues for task scheduling.",
    "UDP is connectionless and does not retransmit lost packets.",
    "By the inductive hypothesis the first k odd numbers sum to k squared.",
    "Congestion control adjusts the sending rate from observed loss.",
    "The inductive step follows by simple algebra.",
]


def response_text(rng, serial):
    parts = rng.sample(PHRASES, k=rng.randint(2, 4))
    return f"[submission {serial}] " + " ".join(parts)


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as f:
        for record in records:
            f.write(json.dumps(record, sort_keys=True) + "\n")


def main():
    os.makedirs(OUT, exist_ok=True)
    rng = random.Random(20240901)

    # Main synthetic dataset: 3 questions x 20 submissions, 0-10 scale.
    records = []
    for qid, prompt in TOPICS:
        q = {"type": "question", "question_id": qid, "prompt_text": prompt}
        if qid == "q3":
            q["rubric"] = RUBRIC
        records.append(q)
    serial = 0
    for qid, _ in TOPICS:
        for _ in range(20):
            serial += 1
            sub = {
                "type": "submission",
                "submission_id": f"s{serial:03d}",
                "question_id": qid,
                "response_text": response_text(rng, serial),
                "gold_raw": rng.randint(0, 10),
            }
            if qid == "q3":
                sub["gold_items"] = {str(i): rng.random() < 0.6 for i in range(1, 8)}
            records.append(sub)
    write_jsonl(os.path.join(OUT, "dataset.jsonl"), records)
    with open(os.path.join(OUT, "descriptor.json"), "w", encoding="utf-8") as f:
        json.dump({"name": "synthetic",
                   "scale": {"kind": "numeric-range", "min": 0, "max": 10}},
                  f, indent=2, sort_keys=True)
        f.write("\n")

    # Rubric-only dataset: 2 proof questions x 12 labeled submissions.
    records = []
    for qid, prompt in [("p1", "Prove by induction that 2^n > n for all n >= 1."),
                        ("p2", "Prove by induction that n^3 - n is divisible by 3.")]:
        records.append({"type": "question", "question_id": qid,
                        "prompt_text": prompt, "rubric": RUBRIC})
    serial = 0
    for qid in ("p1", "p2"):
        for _ in range(12):
            serial += 1
            items = {str(i): rng.random() < 0.7 for i in range(1, 8)}
            selected = sum(items.values())
            records.append({
                "type": "submission",
                "submission_id": f"r{serial:03d}",
                "question_id": qid,
                "response_text": response_text(rng, serial),
                "gold_raw": round(100.0 * selected / 7.0, 4),
                "gold_items": items,
            })
    write_jsonl(os.path.join(OUT, "proofs.jsonl"), records)
    with open(os.path.join(OUT, "proofs.descriptor.json"), "w", encoding="utf-8") as f:
        json.dump({"name": "proofs",
                   "scale": {"kind": "numeric-range", "min": 0, "max": 100}},
                  f, indent=2, sort_keys=True)
        f.write("\n")

    # Mock backend scripts for offline runs.
    with open(os.path.join(OUT, "mock_script.json"), "w", encoding="utf-8") as f:
        json.dump({"grade_from_hash": True}, f, indent=2)
        f.write("\n")
    rubric_items = [{"name": item["name"], "selected": i % 2 == 0}
                    for i, item in enumerate(RUBRIC["items"])]
    rubric_response = json.dumps({"feedback": "mock rubric feedback",
                                  "rubric_items": rubric_items})
    with open(os.path.join(OUT, "mock_rubric_script.json"), "w", encoding="utf-8") as f:
        json.dump({"default": rubric_response}, f, indent=2)
        f.write("\n")


if __name__ == "__main__":
    main()
