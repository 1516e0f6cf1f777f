"""384-dimensional description embeddings.

``builtin`` hashes character trigrams into signed buckets and L2-normalizes
the counts; ``file`` serves vectors precomputed elsewhere from a CSV with
columns ``id,e_0,...,e_383``.
"""
import hashlib
import logging

import numpy as np
import pandas as pd

from drift.exceptions import EmbeddingFileError, UnknownObjectError

logger = logging.getLogger(__name__)

EMBEDDING_WIDTH = 384
NGRAM = 3
EMBEDDING_COLUMNS = tuple(f"e_{i}" for i in range(EMBEDDING_WIDTH))


def trigrams(text):
    padded = f"#{text.strip().lower()}#"
    return [padded[i:i + NGRAM] for i in range(len(padded) - NGRAM + 1)]


def _bucket(gram):
    digest = hashlib.blake2b(gram.encode("utf-8"), digest_size=8).digest()
    value = int.from_bytes(digest, "little")
    return value % EMBEDDING_WIDTH, 1.0 if (value >> 63) & 1 else -1.0


class BuiltinEncoder:
    backend = "builtin"

    def encode(self, description, object_id=None):
        if not description or not description.strip():
            raise ValueError("cannot embed an empty description")
        vector = np.zeros(EMBEDDING_WIDTH)
        for gram in trigrams(description):
            index, sign = _bucket(gram)
            vector[index] += sign
        norm = np.linalg.norm(vector)
        if norm == 0:
            raise ValueError(f"description {description!r} hashes to a zero vector")
        return vector / norm


class FileEncoder:
    backend = "file"

    def __init__(self, path):
        self.path = path
        self.vectors = load_embedding_file(path)

    def encode(self, description, object_id=None):
        if not description or not description.strip():
            raise ValueError("cannot embed an empty description")
        try:
            return self.vectors[object_id].copy()
        except KeyError:
            raise UnknownObjectError(f"{self.path} has no embedding for {object_id!r}") from None


def load_embedding_file(path):
    try:
        frame = pd.read_csv(path, header=None, dtype=str, keep_default_na=False)
    except pd.errors.ParserError as error:
        raise EmbeddingFileError(f"{path}: {error}") from None
    if len(frame) == 0 or frame.iloc[0, 0] != "id":
        raise EmbeddingFileError(f"{path}: header must start with 'id'")
    vectors = {}
    for number, row in enumerate(frame.iloc[1:].itertuples(index=False), start=2):
        cells = [cell for cell in row[1:] if cell != ""]
        if len(cells) != EMBEDDING_WIDTH:
            raise EmbeddingFileError(
                f"expected {EMBEDDING_WIDTH} values, found {len(cells)}", row=number
            )
        try:
            vector = np.array([float(cell) for cell in cells])
        except ValueError as error:
            raise EmbeddingFileError(str(error), row=number) from None
        if not np.isfinite(vector).all():
            raise EmbeddingFileError("non-finite value", row=number)
        vectors[row[0]] = vector
    logger.debug("loaded %d embeddings from %s", len(vectors), path)
    return vectors


def write_embedding_file(vectors, path):
    frame = pd.DataFrame(
        [np.asarray(vector, dtype=float) for vector in vectors.values()],
        columns=EMBEDDING_COLUMNS,
    )
    frame.insert(0, "id", list(vectors))
    frame.to_csv(path, index=False, float_format="%.17g")
    return path


def get_encoder(backend="builtin", embedding_file=None):
    if backend == "builtin":
        return BuiltinEncoder()
    if backend == "file":
        if not embedding_file:
            raise ValueError("the file backend needs an embedding file")
        return FileEncoder(embedding_file)
    raise ValueError(f"unknown text backend {backend!r}")
