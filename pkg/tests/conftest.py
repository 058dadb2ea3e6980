import numpy as np
import pytest

from xhembed.corpus import Vocabulary
from xhembed.embedstore import EmbeddingMatrix
from xhembed.nmt import Seq2SeqConfig, build_model


def vocab_of(words):
    return Vocabulary({w: 5 for w in words})


def tiny_model(n_src=16, n_tgt=16, emb=8, hidden=8, seed=1, init_scale=0.5,
               **cfg_kwargs):
    """Small double-precision seq2seq at a random (non-degenerate) point."""
    rng = np.random.default_rng(seed)
    sv = vocab_of([f"w{i}" for i in range(n_src)])
    tv = vocab_of([f"v{i}" for i in range(n_tgt)])
    cfg_kwargs.setdefault("dropout", 0.0)
    cfg = Seq2SeqConfig(hidden=hidden, emb_dim=emb, seed=seed, **cfg_kwargs)
    init = EmbeddingMatrix(sv.id_to_token,
                           rng.uniform(-init_scale, init_scale, (len(sv), emb)))
    params = build_model(cfg, init, tv, init_scale=init_scale, source_vocab=sv)
    return cfg, params, sv, tv


def random_pairs(sv, tv, n, rng, src_len=(3, 7), tgt_len=(2, 6)):
    pairs = []
    src_words = sv.tokens()
    tgt_words = tv.tokens()
    for _ in range(n):
        src = [src_words[int(rng.integers(len(src_words)))]
               for _ in range(int(rng.integers(*src_len)))]
        tgt = [tgt_words[int(rng.integers(len(tgt_words)))]
               for _ in range(int(rng.integers(*tgt_len)))]
        pairs.append((src, tgt))
    return pairs
