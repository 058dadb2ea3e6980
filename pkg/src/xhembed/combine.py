"""Initial embedding construction for the task vocabulary under each
strategy: Random, XhPre, XhSub, VecMap, XhMeta."""

import enum
from dataclasses import dataclass

import numpy as np

from .corpus import SPECIALS, PAD
from .embedstore import EmbeddingMatrix


class InitStrategy(enum.Enum):
    RANDOM = "Random"
    XH_PRE = "XhPre"
    XH_SUB = "XhSub"
    VECMAP = "VecMap"
    XH_META = "XhMeta"

    @classmethod
    def parse(cls, name):
        for s in cls:
            if s.value.lower() == name.lower():
                return s
        raise ValueError(f"unknown strategy {name!r}; "
                         f"choose from {[s.value for s in cls]}")

    def __str__(self):
        return self.value


# fixed row order for the results report
STRATEGY_ORDER = [InitStrategy.RANDOM, InitStrategy.VECMAP, InitStrategy.XH_SUB,
                  InitStrategy.XH_PRE, InitStrategy.XH_META]


@dataclass
class InitializedEmbeddings:
    matrix: EmbeddingMatrix
    provenance: dict  # token -> fromEV | fromEM | unkSubstituted | random

    def write_provenance(self, path):
        with open(path, "w", encoding="utf-8") as f:
            for tok in self.matrix.tokens:
                f.write(f"{tok}\t{self.provenance[tok]}\n")


def unk_vector(e_v):
    """Centroid of all projected rows; the stand-in for words absent from E_V."""
    if len(e_v) == 0:
        raise ValueError("cannot build an UNK vector from an empty matrix")
    return e_v.rows.mean(axis=0)


def meta_embedding(ev_vec, em_vec):
    """Elementwise arithmetic mean of the two source vectors."""
    ev_vec = np.asarray(ev_vec, dtype=np.float64)
    em_vec = np.asarray(em_vec, dtype=np.float64)
    if ev_vec.shape != em_vec.shape:
        raise ValueError(f"dim mismatch: {ev_vec.shape} vs {em_vec.shape}")
    return (ev_vec + em_vec) / 2.0


def _pad_to(vec, dim):
    if len(vec) == dim:
        return vec
    out = np.zeros(dim)
    out[:len(vec)] = vec
    return out


def build_initial_embeddings(strategy, task_vocab, e_v=None, subword_model=None,
                             mapping=None, dim=None, seed=0, init_range=0.1):
    """One row and one provenance tag per task-vocabulary token.

    Specials are always random-initialized (PAD is all zeros).  E_V and E_M
    rows of unequal width are zero-padded to the larger before combining.
    """
    needs = {
        InitStrategy.RANDOM: [],
        InitStrategy.XH_PRE: ["e_v", "subword_model"],
        InitStrategy.XH_SUB: ["subword_model"],
        InitStrategy.VECMAP: ["e_v", "subword_model", "mapping"],
        InitStrategy.XH_META: ["e_v", "subword_model"],
    }[strategy]
    have = {"e_v": e_v, "subword_model": subword_model, "mapping": mapping}
    for name in needs:
        if have[name] is None:
            raise ValueError(f"strategy {strategy} requires input {name!r}")

    if dim is None:
        dims = [m.dim for m in (e_v, subword_model) if m is not None]
        if not dims:
            raise ValueError("Random strategy needs an explicit dim")
        dim = max(dims)

    rng = np.random.default_rng(seed)
    tokens = list(task_vocab.id_to_token)
    rows = np.empty((len(tokens), dim))
    provenance = {}
    centroid = None
    for i, tok in enumerate(tokens):
        if tok in SPECIALS:
            row = np.zeros(dim) if i == PAD else rng.uniform(-init_range, init_range, dim)
            tag = "random"
        elif strategy == InitStrategy.RANDOM:
            row, tag = rng.uniform(-init_range, init_range, dim), "random"
        elif strategy == InitStrategy.XH_SUB:
            row, tag = _pad_to(subword_model.compose(tok), dim), "fromEM"
        elif strategy == InitStrategy.XH_PRE:
            if tok in e_v:
                row, tag = _pad_to(e_v.get(tok), dim), "fromEV"
            else:
                row, tag = _pad_to(subword_model.compose(tok), dim), "fromEM"
        elif strategy == InitStrategy.VECMAP:
            if tok in e_v:
                row, tag = _pad_to(mapping.map_x(e_v.get(tok)), dim), "fromEV"
            else:
                row, tag = _pad_to(mapping.map_z(subword_model.compose(tok)), dim), "fromEM"
        elif strategy == InitStrategy.XH_META:
            em_row = _pad_to(subword_model.compose(tok), dim)
            if tok in e_v:
                ev_row, tag = _pad_to(e_v.get(tok), dim), "fromEV"
            else:
                if centroid is None:
                    centroid = unk_vector(e_v)
                ev_row, tag = _pad_to(centroid, dim), "unkSubstituted"
            row = meta_embedding(ev_row, em_row)
        else:  # pragma: no cover - exhaustive enum
            raise AssertionError(strategy)
        rows[i] = row
        provenance[tok] = tag
    return InitializedEmbeddings(EmbeddingMatrix(tokens, rows), provenance)
