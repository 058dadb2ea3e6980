"""Embedding matrix type, word2vec-style text I/O, normalization and
similarity retrieval (cosine and CSLS)."""

import numpy as np


class EmbeddingFormatError(Exception):
    pass


class EmbeddingMatrix:
    """Token-indexed dense matrix.  Immutable after construction."""

    def __init__(self, tokens, rows):
        rows = np.asarray(rows, dtype=np.float64)
        if rows.ndim != 2:
            rows = rows.reshape(len(tokens), -1)
        if len(tokens) != rows.shape[0]:
            raise ValueError(f"{len(tokens)} tokens but {rows.shape[0]} rows")
        if len(set(tokens)) != len(tokens):
            raise ValueError("duplicate tokens")
        if rows.size and not np.all(np.isfinite(rows)):
            raise ValueError("non-finite entries")
        self.tokens = list(tokens)
        self.rows = rows
        self.index = {tok: i for i, tok in enumerate(self.tokens)}

    @property
    def dim(self):
        return self.rows.shape[1]

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, tok):
        return tok in self.index

    def get(self, tok):
        return self.rows[self.index[tok]]


def read_embeddings(path):
    """Read header ("N D" first line) or headerless text embeddings.
    Duplicate tokens keep the first occurrence; the count of dropped
    duplicates is returned on the matrix as .duplicates_dropped."""
    with open(path, encoding="utf-8") as f:
        lines = f.read().splitlines()
    start = 0
    dim = None
    if lines:
        head = lines[0].split()
        if len(head) == 2:
            try:
                _, dim = int(head[0]), int(head[1])
                start = 1
            except ValueError:
                pass
    tokens, rows = [], []
    seen = set()
    dups = 0
    for ln, line in enumerate(lines[start:], start=start + 1):
        if not line.strip():
            continue
        parts = line.rstrip().split(" ")
        tok, vals = parts[0], parts[1:]
        if dim is None:
            dim = len(vals)
        if len(vals) != dim:
            raise EmbeddingFormatError(
                f"{path}:{ln}: expected {dim} values, got {len(vals)}")
        if tok in seen:
            dups += 1
            continue
        seen.add(tok)
        try:
            rows.append([float(v) for v in vals])
        except ValueError as e:
            raise EmbeddingFormatError(f"{path}:{ln}: non-numeric field: {e}") from e
        tokens.append(tok)
    m = EmbeddingMatrix(tokens, np.array(rows, dtype=np.float64).reshape(len(tokens), dim or 0))
    m.duplicates_dropped = dups
    return m


def write_embeddings(matrix, path):
    """Write in header form with 6 significant decimals."""
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"{len(matrix)} {matrix.dim}\n")
        for tok, row in zip(matrix.tokens, matrix.rows):
            f.write(tok + " " + " ".join("%.6g" % v for v in row) + "\n")


def unit_normalize(v):
    """Scale to L2 norm 1; the zero vector is returned unchanged (callers that
    need nonzero norms must check)."""
    v = np.asarray(v, dtype=np.float64)
    n = np.linalg.norm(v)
    if n == 0:
        return v
    return v / n


def normalize_rows(rows):
    rows = np.asarray(rows, dtype=np.float64)
    norms = np.linalg.norm(rows, axis=1, keepdims=True)
    safe = np.where(norms == 0, 1.0, norms)
    return rows / safe


def _cosines(rows, query):
    qn = unit_normalize(query)
    return normalize_rows(rows) @ qn


def nearest_neighbors(matrix, query, k):
    """Top-k tokens by cosine, descending; ties broken by token order."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(query) != matrix.dim:
        raise ValueError(f"query dim {len(query)} != matrix dim {matrix.dim}")
    cos = _cosines(matrix.rows, query)
    k = min(k, len(matrix))
    order = sorted(range(len(matrix)), key=lambda i: (-cos[i], i))[:k]
    return [(matrix.tokens[i], float(cos[i])) for i in order]


def csls_neighborhood(space_rows, queries, k=10):
    """Mean cosine of each query's k nearest neighbors in `space_rows`.
    Both inputs are expected unit-normalized."""
    space_rows = np.asarray(space_rows, dtype=np.float64)
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    if space_rows.shape[0] == 0:
        raise ValueError("empty opposing space")
    k = min(k, space_rows.shape[0])
    sims = queries @ space_rows.T
    top = np.sort(sims, axis=1)[:, -k:]
    return top.mean(axis=1)


def csls_score(x, y, r_t_x, r_s_y):
    """CSLS(x, y) = 2 cos(x, y) - rT(x) - rS(y), for unit-normalized x, y."""
    return 2.0 * float(np.dot(x, y)) - float(r_t_x) - float(r_s_y)
