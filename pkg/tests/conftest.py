import io
import json
from pathlib import Path

import numpy as np
import pytest

from conflictkit.embeddings import EmbeddingMatrix, write_embeddings


def make_post_record(post_id: str, title: str, comments: list[tuple[str, str]]) -> str:
    return json.dumps(
        {
            "id": post_id,
            "title": title,
            "body": f"body of {post_id}",
            "comments": [{"id": cid, "body": body} for cid, body in comments],
        }
    )


def write_emb1(path: Path, ids, vectors) -> None:
    matrix = EmbeddingMatrix(tuple(ids), np.asarray(vectors, dtype=np.float32))
    with open(path, "wb") as fh:
        write_embeddings(matrix, fh)


def emb1_bytes(ids, vectors) -> bytes:
    matrix = EmbeddingMatrix(tuple(ids), np.asarray(vectors, dtype=np.float32))
    buf = io.BytesIO()
    write_embeddings(matrix, buf)
    return buf.getvalue()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
