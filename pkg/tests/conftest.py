import struct

import numpy as np
import pytest


def write_iemb(path, rows: np.ndarray):
    """Byte-level embedding-table writer for fixtures, independent of any
    production writer: 'IEMB', u32 version=1, u32 count, u32 dim, f32 LE
    payload."""
    rows = np.asarray(rows, dtype=np.float32)
    count, dim = rows.shape
    with open(path, "wb") as fh:
        fh.write(b"IEMB")
        fh.write(struct.pack("<III", 1, count, dim))
        fh.write(rows.astype("<f4").tobytes(order="C"))
    return path


def hash_embed(texts, dim: int = 64) -> np.ndarray:
    """Deterministic per-text embeddings: token hashes scattered into a
    fixed-dimension vector, L2-normalized. Identical texts map to identical
    rows; unrelated texts are almost surely non-parallel."""
    out = np.zeros((len(texts), dim), dtype=np.float64)
    for i, text in enumerate(texts):
        for token in text.split():
            h = 2166136261
            for ch in token.encode("utf-8"):
                h = ((h ^ ch) * 16777619) & 0xFFFFFFFF
            out[i, h % dim] += 1.0 + (h >> 16) / 65536.0
        norm = np.linalg.norm(out[i])
        if norm == 0:
            out[i, 0] = 1.0
            norm = 1.0
        out[i] /= norm
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
