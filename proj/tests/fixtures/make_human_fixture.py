#!/usr/bin/env python3
# Copyright 2026 The likertqc Authors
# SPDX-License-Identifier: Apache-2.0
"""Writes human_subset.csv and gold.csv.

Abortion and LGBTQ harm ratings whose per-gender counts, means and standard
deviations match the published human summary statistics, plus gold-question
answers (perceived falsehood) for the worker filter and three workers the
filter must remove.
"""
import csv
import itertools
import random
from pathlib import Path

HERE = Path(__file__).resolve().parent


def label_multiset(n, total, sd):
    """n labels in 1..6 summing to `total`, sample sd as close to `sd` as unit moves get."""
    target_q = sd * sd * (n - 1) + total * total / n
    base, extra = divmod(total, n)
    counts = {v: 0 for v in range(1, 7)}
    counts[base] += n - extra
    if extra:
        counts[base + 1] += extra
    q = sum(v * v * c for v, c in counts.items())
    while True:
        # Lowering one label a and raising one label b keeps the sum;
        # the sum of squares changes by 2 (b - a) + 2.
        best = None
        for a, b in itertools.product(range(2, 7), range(1, 6)):
            if counts[a] == 0 or counts[b] == 0 or (a == b and counts[a] < 2):
                continue
            new_q = q + 2 * (b - a) + 2
            if abs(new_q - target_q) < abs(q - target_q) and (best is None or abs(new_q - target_q) < best[0]):
                best = (abs(new_q - target_q), a, b, new_q)
        if best is None:
            break
        _, a, b, q = best
        counts[a] -= 1
        counts[a - 1] += 1
        counts[b] -= 1
        counts[b + 1] += 1
    return [v for v in range(1, 7) for _ in range(counts[v])]


def spread(labels, claims, workers, rng):
    """Deals labels over claims round-robin; no worker labels a claim twice."""
    rng.shuffle(labels)
    out = []
    per_claim = {c: 0 for c in claims}
    for k, label in enumerate(labels):
        claim = claims[k % len(claims)]
        worker = workers[per_claim[claim] % len(workers)]
        per_claim[claim] += 1
        out.append((claim, worker, label))
    return out


def main():
    rng = random.Random(20240611)
    rows = []

    topics = {
        # topic: (false claims, true claims, women n/sum/sd, men n/sum/sd)
        "Abortion": (13, 6, (61, 301, 1.36), (119, 378, 1.82)),
        "LGBTQ": (10, 4, (45, 223, 1.22), (93, 368, 1.88)),
    }
    women = [f"f{i:02d}" for i in range(1, 9)]
    men = [f"m{i:02d}" for i in range(1, 13)]
    for topic, (n_false, n_true, w, m) in topics.items():
        prefix = "ab" if topic == "Abortion" else "lg"
        claims = [f"{prefix}{i:02d}" for i in range(1, n_false + n_true + 1)]
        veracity = {c: ("false" if i < n_false else "true") for i, c in enumerate(claims)}
        for condition, workers, (n, total, sd) in (("woman", women, w), ("man", men, m)):
            for claim, worker, label in spread(label_multiset(n, total, sd), claims, workers, rng):
                rows.append((claim, topic, veracity[claim], condition, worker, label))
        # Inattentive workers whose ratings must be filtered out.
        for claim in claims[:5]:
            rows.append((claim, topic, veracity[claim], "woman", "f98", 1))
            rows.append((claim, topic, veracity[claim], "man", "m99", 6))

    gold = [("gd01", "clearly_true"), ("gd02", "clearly_true"), ("gd03", "clearly_false"), ("gd04", "clearly_false")]
    truth = {c: v for c, v in gold}

    def answer(claim, correct):
        true_claim = truth[claim] == "clearly_true"
        return (1 if true_claim else 6) if correct else (6 if true_claim else 1)

    for worker in women + men:
        condition = "woman" if worker.startswith("f") else "man"
        for claim, _ in gold:
            rows.append((claim, "Gold", "true" if truth[claim] == "clearly_true" else "false", condition, worker,
                         answer(claim, True)))
    # A repeated gold answer: only the first (correct) one counts.
    rows.append(("gd01", "Gold", "true", "man", "m01", answer("gd01", False)))
    # m99: 2 of 4 correct. f98: a single gold answer.
    for claim, ok in zip(["gd01", "gd02", "gd03", "gd04"], [True, False, True, False]):
        rows.append((claim, "Gold", "true" if truth[claim] == "clearly_true" else "false", "man", "m99",
                     answer(claim, ok)))
    rows.append(("gd03", "Gold", "false", "woman", "f98", answer("gd03", True)))

    with open(HERE / "human_subset.csv", "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["claim_id", "topic", "veracity", "condition", "source", "prompt_id", "annotator_id", "label"])
        for claim, topic, ver, cond, worker, label in rows:
            out.writerow([claim, topic, ver, cond, "human", "", worker, label])
    with open(HERE / "gold.csv", "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["claim_id", "expected_verdict"])
        out.writerows(gold)


if __name__ == "__main__":
    main()
