#!/usr/bin/env python3
"""Regenerate the bundled synthetic datasets under data/.

Produces:
  data/demo20.jsonl        - 2 language pairs x 10 segments, hand-assigned scores
  data/demo20_lexicon.json - mock-backend lexicon covering every demo source
  data/roen867.jsonl       - 867-segment ro-en set for failure accounting runs
  data/roen867.meta.json   - mock failure rate that hits exactly 461 segment ids

Everything is deterministic (fixed seed, fixed word lists), so reruns are
byte-identical.
"""

from __future__ import annotations

import json
import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from pseudoref.hashing import fnv1a64  # noqa: E402

ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "data"

DEMO_SEGMENTS = [
    # (id, lp, src, mt, human_score, reference translation for the lexicon)
    ("de-en-01", "de-en", "Guten Morgen.", "Good morning.", 95.0, "Good morning."),
    ("de-en-02", "de-en", "Das Wetter ist heute schön.", "The weather is beautiful today.", 90.0, "The weather is nice today."),
    ("de-en-03", "de-en", "Ich habe den Zug verpasst.", "I missed the train.", 88.0, "I missed the train."),
    ("de-en-04", "de-en", "Wo ist der Bahnhof?", "Where is train station?", 70.0, "Where is the train station?"),
    ("de-en-05", "de-en", "Er liest jeden Abend ein Buch.", "He reads a book every evening.", 92.0, "He reads a book every evening."),
    ("de-en-06", "de-en", "Die Katze schläft auf dem Sofa.", "The cat sleeps about the sofa.", 60.0, "The cat is sleeping on the sofa."),
    ("de-en-07", "de-en", "Wir treffen uns um drei Uhr.", "We meet at three clock.", 65.0, "We are meeting at three o'clock."),
    ("de-en-08", "de-en", "Das Essen war ausgezeichnet.", "The food was excellent.", 94.0, "The food was excellent."),
    ("de-en-09", "de-en", "Sie arbeitet in einem Krankenhaus.", "She works in a hospital.", 91.0, "She works in a hospital."),
    ("de-en-10", "de-en", "Der Film beginnt in zehn Minuten.", "Movie begin ten minute.", 40.0, "The film starts in ten minutes."),
    ("ro-en-01", "ro-en", "Bună dimineața.", "Good morning.", 96.0, "Good morning."),
    ("ro-en-02", "ro-en", "Cartea este pe masă.", "The book is on the table.", 93.0, "The book is on the table."),
    ("ro-en-03", "ro-en", "Orașul este foarte vechi.", "The city is very old.", 89.0, "The city is very old."),
    ("ro-en-04", "ro-en", "Trenul pleacă la ora cinci.", "Train leaves to hour five.", 55.0, "The train leaves at five o'clock."),
    ("ro-en-05", "ro-en", "Îmi place să citesc seara.", "I like to read in the evening.", 92.0, "I like reading in the evening."),
    ("ro-en-06", "ro-en", "Vremea este frumoasă astăzi.", "Weather beautiful today is.", 50.0, "The weather is beautiful today."),
    ("ro-en-07", "ro-en", "Copiii se joacă în parc.", "The children play in the park.", 90.0, "The children are playing in the park."),
    ("ro-en-08", "ro-en", "Am pierdut cheile acasă.", "I lost my keys at home.", 87.0, "I lost my keys at home."),
    ("ro-en-09", "ro-en", "Restaurantul se închide la miezul nopții.", "Restaurant closing midnight at.", 45.0, "The restaurant closes at midnight."),
    ("ro-en-10", "ro-en", "Ea cântă la pian de zece ani.", "She has played the piano for ten years.", 94.0, "She has been playing the piano for ten years."),
]

RO_WORDS = (
    "casa munte apa soare carte drum oras copil noapte floare timp vant "
    "mare padure strada lume masa tren seara dimineata piatra rau camp nor"
).split()

EN_WORDS = (
    "house mountain water sun book road city child night flower time wind "
    "sea forest street world table train evening morning stone river field cloud"
).split()

TARGET_FAILURES = 461
RO_EN_SIZE = 867


def make_demo():
    DATA.mkdir(exist_ok=True)
    with (DATA / "demo20.jsonl").open("w", encoding="utf-8") as fh:
        for seg_id, lp, src, mt, score, _ in DEMO_SEGMENTS:
            record = {"id": seg_id, "lp": lp, "src": src, "mt": mt, "human_score": score}
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    lexicon = {src: ref for _, _, src, _, _, ref in DEMO_SEGMENTS}
    (DATA / "demo20_lexicon.json").write_text(
        json.dumps(lexicon, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )


def make_roen867():
    rng = random.Random(20220867)
    records = []
    for i in range(1, RO_EN_SIZE + 1):
        seg_id = f"roen-{i:04d}"
        n_src = rng.randint(4, 9)
        src = " ".join(rng.choice(RO_WORDS) for _ in range(n_src)).capitalize() + "."
        n_mt = rng.randint(4, 9)
        mt = " ".join(rng.choice(EN_WORDS) for _ in range(n_mt)).capitalize() + "."
        score = round(rng.uniform(0, 100), 1)
        records.append({"id": seg_id, "lp": "ro-en", "src": src, "mt": mt, "human_score": score})
    with (DATA / "roen867.jsonl").open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")

    # pick the injection rate that fails exactly TARGET_FAILURES ids
    hashes = sorted(fnv1a64(r["id"]) % 1_000_000 for r in records)
    low = hashes[TARGET_FAILURES - 1]
    high = hashes[TARGET_FAILURES]
    if low == high:
        raise SystemExit("hash collision at the failure threshold; adjust the seed")
    threshold = (low + high + 1) // 2  # fail iff hash < threshold
    meta = {"failure_rate": threshold / 1_000_000, "expected_failures": TARGET_FAILURES}
    (DATA / "roen867.meta.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")


if __name__ == "__main__":
    make_demo()
    make_roen867()
    print(f"wrote datasets to {DATA}")
