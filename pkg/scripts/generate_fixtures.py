#!/usr/bin/env python3
"""Generate the synthetic corpus, annotation and EMB1 fixtures under tests/data/.

Deterministic: rerunning produces byte-identical files. The corpus plants
three topic blobs (family / friends / strangers) so the clustering stage has
a recoverable structure, and verdict embeddings carry a planted separator so
the probe has something to learn.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from conflictkit.annotation import ASPECTS, RAW_LABELS, AnnotationRecord, write_annotations_csv
from conflictkit.corpus import DEFAULT_LEXICON, mine_verdicts, parse_corpus
from conflictkit.embeddings import EmbeddingMatrix, write_embeddings

OUT = Path(__file__).resolve().parent.parent / "tests" / "data"

N_TOPICS = 3
POSTS_PER_TOPIC = 20
EMB_DIM = 12

TOPIC_WORDS = ("my sister", "my best friend", "a stranger at the bar")
VERDICT_BODIES = (
    "NTA, they were way out of line",
    "YTA for sure",
    "not the asshole at all",
    "you are the asshole here",
    "honestly no idea what to say",           # no verdict
    "YTA at first but after the edit NTA",    # ambiguous, discarded
)


def build_corpus() -> list[str]:
    rng = np.random.default_rng(100)
    lines = []
    comment_counter = 0
    for topic in range(N_TOPICS):
        for k in range(POSTS_PER_TOPIC):
            post_idx = topic * POSTS_PER_TOPIC + k
            post_id = f"post{post_idx:03d}"
            title = f"AITA for arguing with {TOPIC_WORDS[topic]} about chore {k}"
            body = (
                f"Long story about {TOPIC_WORDS[topic]} and chore {k}. "
                "We disagreed and now everyone is upset."
            )
            comments = []
            for _ in range(int(rng.integers(3, 6))):
                body_choice = VERDICT_BODIES[int(rng.integers(0, len(VERDICT_BODIES)))]
                comments.append(
                    {"id": f"c{comment_counter:04d}", "body": body_choice}
                )
                comment_counter += 1
            lines.append(
                json.dumps(
                    {"id": post_id, "title": title, "body": body, "comments": comments}
                )
            )
    return lines


def topic_of(post_id: str) -> int:
    return int(post_id[4:]) // POSTS_PER_TOPIC


def write_post_embeddings(posts, path: Path, seed: int) -> None:
    rng = np.random.default_rng(seed)
    centers = np.zeros((N_TOPICS, EMB_DIM))
    for t in range(N_TOPICS):
        centers[t, t] = 6.0
    rows = np.stack(
        [rng.normal(centers[topic_of(p.id)], 0.5) for p in posts]
    ).astype(np.float32)
    with open(path, "wb") as fh:
        write_embeddings(EmbeddingMatrix(tuple(p.id for p in posts), rows), fh)


def write_verdict_embeddings(verdicts, path: Path, seed: int) -> None:
    rng = np.random.default_rng(seed)
    mu = np.full(EMB_DIM, 0.6)
    rows = []
    for record in verdicts:
        center = mu if record.verdict.value == "YTA" else -mu
        rows.append(rng.normal(center, 0.4))
    matrix = EmbeddingMatrix(
        tuple(v.comment_id for v in verdicts), np.stack(rows).astype(np.float32)
    )
    with open(path, "wb") as fh:
        write_embeddings(matrix, fh)


def build_annotations(posts) -> list[AnnotationRecord]:
    rng = np.random.default_rng(300)
    records = []
    for idx, post in enumerate(posts):
        base = {
            aspect: RAW_LABELS[aspect][(idx + shift) % len(RAW_LABELS[aspect])]
            for shift, aspect in enumerate(ASPECTS)
        }
        records.append(
            AnnotationRecord(post.id, "annotator_a", base, True, True)
        )
        second = dict(base)
        # second annotator mostly agrees, with occasional drift
        for aspect in ASPECTS:
            if rng.random() < 0.15:
                domain = RAW_LABELS[aspect]
                second[aspect] = domain[(domain.index(second[aspect]) + 1) % len(domain)]
        records.append(
            AnnotationRecord(post.id, "annotator_b", second, True, True)
        )
    # one attention-check failure that must never influence results
    noisy = {a: RAW_LABELS[a][0] for a in ASPECTS}
    records.append(AnnotationRecord(posts[0].id, "annotator_x", noisy, False, True))
    return records


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    lines = build_corpus()
    (OUT / "corpus.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")
    posts = parse_corpus(lines)
    verdicts = mine_verdicts(posts, DEFAULT_LEXICON)
    write_post_embeddings(posts, OUT / "situation.emb1", seed=201)
    write_post_embeddings(posts, OUT / "fulltext.emb1", seed=202)
    write_verdict_embeddings(verdicts, OUT / "verdict_input.emb1", seed=203)
    with open(OUT / "annotations.csv", "w", encoding="utf-8", newline="") as fh:
        write_annotations_csv(build_annotations(posts), fh)
    print(f"posts: {len(posts)}, verdicts: {len(verdicts)}")
    print(f"fixtures written to {OUT}")


if __name__ == "__main__":
    main()
