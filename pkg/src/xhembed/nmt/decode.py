"""Greedy and beam-search decoding, and file-level translation."""

from dataclasses import dataclass, field

import numpy as np

from ..corpus import PAD, BOS, EOS
from .data import make_batch
from .model import decoder_step, encode_for_decoding

# tokens never proposed during decoding
_BANNED = (PAD, BOS)


def _decode_setup(params, cfg, src_ids):
    batch = make_batch([(list(src_ids), [BOS])])
    h_enc, state = encode_for_decoding(params, cfg, batch.src_ids, batch.src_mask)
    return batch, h_enc, state


def _step_logprobs(params, cfg, state, prev_id, h_enc, src_mask):
    lp, new_state = decoder_step(params, cfg, state,
                                 np.array([prev_id]), h_enc, src_mask)
    lp = lp[0].copy()
    lp[list(_BANNED)] = -np.inf
    return lp, new_state


def greedy_decode(params, cfg, src_ids, max_len=None):
    max_len = max_len or cfg.max_decode_len
    batch, h_enc, state = _decode_setup(params, cfg, src_ids)
    out = []
    prev = BOS
    for _ in range(max_len):
        lp, state = _step_logprobs(params, cfg, state, prev, h_enc, batch.src_mask)
        prev = int(lp.argmax())
        if prev == EOS:
            break
        out.append(prev)
    return out


@dataclass
class BeamHypothesis:
    tokens: list            # starts with BOS
    log_prob: float
    state: list = field(repr=False, default=None)


def beam_search(params, cfg, src_ids, beam=None, max_len=None):
    """Breadth-limited search over cumulative log-probability, no length
    normalization.  EOS-terminated hypotheses move to a finished pool; stops
    when the best finished score cannot be beaten or max_len is reached."""
    beam = beam or cfg.beam
    max_len = max_len or cfg.max_decode_len
    batch, h_enc, state = _decode_setup(params, cfg, src_ids)
    live = [BeamHypothesis([BOS], 0.0, state)]
    finished = []
    for _ in range(max_len):
        candidates = []
        for hyp in live:
            lp, new_state = _step_logprobs(params, cfg, hyp.state,
                                           hyp.tokens[-1], h_enc, batch.src_mask)
            top = np.argsort(-lp)[:beam]
            for tok in top:
                if lp[tok] == -np.inf:
                    continue
                candidates.append(BeamHypothesis(
                    hyp.tokens + [int(tok)], hyp.log_prob + float(lp[tok]),
                    new_state))
        candidates.sort(key=lambda h: -h.log_prob)
        live = []
        for hyp in candidates[:beam]:
            if hyp.tokens[-1] == EOS:
                finished.append(hyp)
            else:
                live.append(hyp)
        if not live:
            break
        if finished and max(h.log_prob for h in finished) >= live[0].log_prob:
            break
    pool = finished if finished else live
    best = max(pool, key=lambda h: h.log_prob)
    toks = best.tokens[1:]
    if toks and toks[-1] == EOS:
        toks = toks[:-1]
    return toks


def translate(params, cfg, sentences, src_vocab, tgt_vocab, out_path, beam=None):
    """Decode each source sentence and write one space-joined hypothesis per
    line, order-preserving."""
    with open(out_path, "w", encoding="utf-8") as f:
        for sent in sentences:
            if not sent:
                f.write("\n")
                continue
            ids = [src_vocab.id(t) for t in sent]
            hyp = beam_search(params, cfg, ids, beam=beam)
            f.write(" ".join(tgt_vocab.token(i) for i in hyp) + "\n")
