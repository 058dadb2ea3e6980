"""Model definition: 2-layer BiGRU encoder, 2-layer GRU decoder with global
multiplicative attention.  Forward and backward passes are hand-written on
numpy so gradients can be verified by finite differences."""

from dataclasses import dataclass

import numpy as np

from ..corpus import PAD


@dataclass
class Seq2SeqConfig:
    enc_layers: int = 2
    dec_layers: int = 2
    hidden: int = 128          # per-direction encoder size is hidden // 2
    emb_dim: int = 300
    dropout: float = 0.3
    max_decode_len: int = 50
    beam: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.hidden % 2 != 0:
            raise ValueError("hidden size must be even (split across directions)")
        if self.beam < 1:
            raise ValueError("beam must be >= 1")


def _gru_param_names(prefix):
    return [f"{prefix}_{n}" for n in
            ("Wz", "Uz", "bz", "Wr", "Ur", "br", "Wc", "Uc", "bc")]


def _init_gru(params, rng, prefix, in_dim, hid, scale):
    for gate in ("z", "r", "c"):
        params[f"{prefix}_W{gate}"] = rng.uniform(-scale, scale, (in_dim, hid))
        params[f"{prefix}_U{gate}"] = rng.uniform(-scale, scale, (hid, hid))
        params[f"{prefix}_b{gate}"] = np.zeros(hid)


def build_model(cfg, source_init, target_vocab, seed=None, init_scale=0.1,
                source_vocab=None):
    """Create the parameter dict.  The source embedding table is copied from
    `source_init` (an InitializedEmbeddings or EmbeddingMatrix) whose row
    order must match the source vocabulary ids; everything else is seeded
    uniform +/-init_scale."""
    matrix = getattr(source_init, "matrix", source_init)
    if matrix.dim != cfg.emb_dim:
        raise ValueError(f"source init dim {matrix.dim} != config emb_dim {cfg.emb_dim}")
    if len(matrix) == 0:
        raise ValueError("empty source initialization")
    if source_vocab is not None and matrix.tokens != source_vocab.id_to_token:
        raise ValueError("source init does not cover the source vocabulary "
                         "in id order")
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    h, h2, e = cfg.hidden, cfg.hidden // 2, cfg.emb_dim
    vt = len(target_vocab)
    params = {}
    params["src_emb"] = matrix.rows.copy()
    params["tgt_emb"] = rng.uniform(-init_scale, init_scale, (vt, e))
    for l in range(cfg.enc_layers):
        in_dim = e if l == 0 else h
        _init_gru(params, rng, f"enc_{l}_f", in_dim, h2, init_scale)
        _init_gru(params, rng, f"enc_{l}_b", in_dim, h2, init_scale)
    for l in range(cfg.dec_layers):
        in_dim = e if l == 0 else h
        _init_gru(params, rng, f"dec_{l}", in_dim, h, init_scale)
        params[f"bridge_{l}_W"] = rng.uniform(-init_scale, init_scale, (h, h))
        params[f"bridge_{l}_b"] = np.zeros(h)
    params["att_W"] = rng.uniform(-init_scale, init_scale, (h, h))
    params["comb_W"] = rng.uniform(-init_scale, init_scale, (2 * h, h))
    params["comb_b"] = np.zeros(h)
    params["out_W"] = rng.uniform(-init_scale, init_scale, (h, vt))
    params["out_b"] = np.zeros(vt)
    return params


def zero_grads(params):
    return {k: np.zeros_like(v) for k, v in params.items()}


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _gru_step(p, prefix, x_t, h_prev):
    z = _sigmoid(x_t @ p[f"{prefix}_Wz"] + h_prev @ p[f"{prefix}_Uz"] + p[f"{prefix}_bz"])
    r = _sigmoid(x_t @ p[f"{prefix}_Wr"] + h_prev @ p[f"{prefix}_Ur"] + p[f"{prefix}_br"])
    c = np.tanh(x_t @ p[f"{prefix}_Wc"] + (r * h_prev) @ p[f"{prefix}_Uc"] + p[f"{prefix}_bc"])
    h = (1.0 - z) * h_prev + z * c
    return h, z, r, c


def gru_forward(p, prefix, x, mask, h0, reverse=False):
    """Run a GRU over (B,T,I) input.  Masked positions carry the previous
    state through unchanged.  Returns (hs (B,T,H), h_last, cache)."""
    if reverse:
        x = x[:, ::-1]
        mask = mask[:, ::-1]
    b, t_len, _ = x.shape
    hid = p[f"{prefix}_Uz"].shape[0]
    hs = np.empty((b, t_len, hid))
    zs = np.empty_like(hs)
    rs = np.empty_like(hs)
    cs = np.empty_like(hs)
    h_prevs = np.empty_like(hs)
    h = h0
    for t in range(t_len):
        m = mask[:, t:t + 1]
        h_prevs[:, t] = h
        h_new, z, r, c = _gru_step(p, prefix, x[:, t], h)
        zs[:, t], rs[:, t], cs[:, t] = z, r, c
        h = m * h_new + (1.0 - m) * h
        hs[:, t] = h
    cache = (x, mask, h_prevs, zs, rs, cs, reverse)
    out = hs[:, ::-1] if reverse else hs
    return out, h, cache


def gru_backward(p, prefix, cache, dhs, dh_last, grads):
    """Backward through gru_forward.  dhs: (B,T,H) grads on outputs in
    original time order; dh_last: (B,H) extra grad on the final state.
    Returns (dx in original order, dh0)."""
    x, mask, h_prevs, zs, rs, cs, reverse = cache
    if dhs is None:
        dhs = np.zeros_like(h_prevs)
    elif reverse:
        dhs = dhs[:, ::-1]
    b, t_len, _ = x.shape
    dx = np.zeros_like(x)
    dh = dh_last.copy()
    g = {name: grads[name] for name in _gru_param_names(prefix)}
    for t in range(t_len - 1, -1, -1):
        m = mask[:, t:t + 1]
        x_t, h_prev = x[:, t], h_prevs[:, t]
        z, r, c = zs[:, t], rs[:, t], cs[:, t]
        dh_total = dh + dhs[:, t]
        dh_new = dh_total * m
        dh_prev = dh_total * (1.0 - m)
        dz = dh_new * (c - h_prev)
        dc = dh_new * z
        dh_prev = dh_prev + dh_new * (1.0 - z)
        dac = dc * (1.0 - c * c)
        dx_t = dac @ p[f"{prefix}_Wc"].T
        drh = dac @ p[f"{prefix}_Uc"].T
        g[f"{prefix}_Wc"] += x_t.T @ dac
        g[f"{prefix}_Uc"] += (r * h_prev).T @ dac
        g[f"{prefix}_bc"] += dac.sum(axis=0)
        dr = drh * h_prev
        dh_prev = dh_prev + drh * r
        daz = dz * z * (1.0 - z)
        dar = dr * r * (1.0 - r)
        dx_t += daz @ p[f"{prefix}_Wz"].T + dar @ p[f"{prefix}_Wr"].T
        dh_prev = dh_prev + daz @ p[f"{prefix}_Uz"].T + dar @ p[f"{prefix}_Ur"].T
        g[f"{prefix}_Wz"] += x_t.T @ daz
        g[f"{prefix}_Uz"] += h_prev.T @ daz
        g[f"{prefix}_bz"] += daz.sum(axis=0)
        g[f"{prefix}_Wr"] += x_t.T @ dar
        g[f"{prefix}_Ur"] += h_prev.T @ dar
        g[f"{prefix}_br"] += dar.sum(axis=0)
        dx[:, t] = dx_t
        dh = dh_prev
    if reverse:
        dx = dx[:, ::-1]
    return dx, dh


class _Dropout:
    """Inverted dropout; a None rng or zero rate means identity."""

    def __init__(self, rate, rng):
        self.rate = rate
        self.rng = rng
        self.masks = []

    def apply(self, x):
        if self.rng is None or self.rate <= 0.0:
            self.masks.append(None)
            return x
        m = (self.rng.random(x.shape) >= self.rate) / (1.0 - self.rate)
        self.masks.append(m)
        return x * m

    def backward(self, i, dx):
        m = self.masks[i]
        return dx if m is None else dx * m


def encode(params, cfg, src_ids, src_mask, drop):
    """Returns (encoder outputs (B,S,H), per-layer final states, cache)."""
    x = params["src_emb"][src_ids]
    x = drop.apply(x)
    layer_caches = []
    finals = []
    h2 = cfg.hidden // 2
    b = src_ids.shape[0]
    h0 = np.zeros((b, h2))
    for l in range(cfg.enc_layers):
        hf, hf_last, cf = gru_forward(params, f"enc_{l}_f", x, src_mask, h0)
        hb, hb_last, cb = gru_forward(params, f"enc_{l}_b", x, src_mask, h0, reverse=True)
        out = np.concatenate([hf, hb], axis=2)
        finals.append(np.concatenate([hf_last, hb_last], axis=1))
        layer_caches.append((cf, cb))
        if l < cfg.enc_layers - 1:
            x = drop.apply(out)
        else:
            x = out
    return x, finals, layer_caches


def bridge(params, cfg, enc_finals):
    states, pres = [], []
    for l in range(cfg.dec_layers):
        src = enc_finals[min(l, len(enc_finals) - 1)]
        pre = src @ params[f"bridge_{l}_W"] + params[f"bridge_{l}_b"]
        states.append(np.tanh(pre))
        pres.append((src, states[-1]))
    return states, pres


def attention_output(params, h_top, h_enc, src_mask):
    """Global multiplicative attention + tanh combination layer, vectorized
    over decoder time steps.  h_top: (B,T,H); h_enc: (B,S,H)."""
    proj = h_enc @ params["att_W"].T                      # (B,S,H)
    scores = np.einsum("bth,bsh->bts", h_top, proj)
    scores = scores - 1e9 * (1.0 - src_mask[:, None, :])
    scores -= scores.max(axis=2, keepdims=True)
    exp = np.exp(scores) * src_mask[:, None, :]
    alpha = exp / exp.sum(axis=2, keepdims=True)
    ctx = np.einsum("bts,bsh->bth", alpha, h_enc)
    comb_in = np.concatenate([h_top, ctx], axis=2)
    a = np.tanh(comb_in @ params["comb_W"] + params["comb_b"])
    return a, (proj, alpha, ctx, comb_in, a)


def attention_backward(params, cache, h_top, h_enc, da, grads):
    proj, alpha, ctx, comb_in, a = cache
    da_pre = da * (1.0 - a * a)
    b, t_len, h = a.shape
    grads["comb_W"] += comb_in.reshape(-1, 2 * h).T @ da_pre.reshape(-1, h)
    grads["comb_b"] += da_pre.sum(axis=(0, 1))
    dcomb_in = da_pre @ params["comb_W"].T
    dh_top = dcomb_in[:, :, :h].copy()
    dctx = dcomb_in[:, :, h:]
    dalpha = np.einsum("bth,bsh->bts", dctx, h_enc)
    dh_enc = np.einsum("bts,bth->bsh", alpha, dctx)
    dscores = alpha * (dalpha - np.sum(dalpha * alpha, axis=2, keepdims=True))
    dh_top += np.einsum("bts,bsh->bth", dscores, proj)
    tmp = np.einsum("bts,bsh->bth", dscores, h_enc)      # d(h_top @ att_W)
    grads["att_W"] += h_top.reshape(-1, h).T @ tmp.reshape(-1, h)
    dh_enc += np.einsum("bts,bth->bsh", dscores, h_top @ params["att_W"])
    return dh_top, dh_enc


def forward_loss(params, cfg, batch, dropout_on=False, rng=None,
                 compute_grads=True):
    """Mean token cross-entropy over non-PAD target positions, with gradients
    for every parameter.  Teacher-forced decoding with per-step attention."""
    drop = _Dropout(cfg.dropout if dropout_on else 0.0,
                    rng if dropout_on else None)
    src_ids, src_mask = batch.src_ids, batch.src_mask
    y_in, y_out = batch.tgt_ids[:, :-1], batch.tgt_ids[:, 1:]
    out_mask = (y_out != PAD).astype(np.float64)
    n_tokens = out_mask.sum()
    if n_tokens == 0:
        raise ValueError("batch has no target tokens")

    drop_idx = 0
    h_enc, enc_finals, enc_caches = encode(params, cfg, src_ids, src_mask, drop)
    n_enc_drops = len(drop.masks)
    dec_h0, bridge_cache = bridge(params, cfg, enc_finals)

    x = params["tgt_emb"][y_in]
    x = drop.apply(x)
    in_mask = np.ones_like(y_in, dtype=np.float64)
    dec_caches = []
    dec_inputs = [x]
    for l in range(cfg.dec_layers):
        hs, _, c = gru_forward(params, f"dec_{l}", x, in_mask, dec_h0[l])
        dec_caches.append(c)
        if l < cfg.dec_layers - 1:
            x = drop.apply(hs)
        else:
            x = hs
        dec_inputs.append(x)
    h_top = x

    a, att_cache = attention_output(params, h_top, h_enc, src_mask)
    a_d = drop.apply(a)
    logits = a_d @ params["out_W"] + params["out_b"]
    logits -= logits.max(axis=2, keepdims=True)
    log_z = np.log(np.exp(logits).sum(axis=2, keepdims=True))
    log_probs = logits - log_z
    bsz, t_len = y_out.shape
    gold = log_probs[np.arange(bsz)[:, None], np.arange(t_len)[None, :], y_out]
    loss = -(gold * out_mask).sum() / n_tokens
    if not compute_grads:
        return loss, None

    grads = zero_grads(params)
    probs = np.exp(log_probs)
    dlogits = probs * out_mask[:, :, None]
    dlogits[np.arange(bsz)[:, None], np.arange(t_len)[None, :], y_out] -= out_mask
    dlogits /= n_tokens
    h = cfg.hidden
    grads["out_W"] += a_d.reshape(-1, h).T @ dlogits.reshape(bsz * t_len, -1)
    grads["out_b"] += dlogits.sum(axis=(0, 1))
    da_d = dlogits @ params["out_W"].T
    da = drop.backward(len(drop.masks) - 1, da_d)
    dh_top, dh_enc = attention_backward(params, att_cache, h_top, h_enc, da, grads)

    # decoder GRU stack, top down
    dec_drop_base = n_enc_drops  # index of the tgt-emb dropout mask
    dx_upper = dh_top
    d_h0 = [None] * cfg.dec_layers
    for l in range(cfg.dec_layers - 1, -1, -1):
        dx, dh0 = gru_backward(params, f"dec_{l}", dec_caches[l], dx_upper,
                               np.zeros_like(dec_h0[l]), grads)
        d_h0[l] = dh0
        if l > 0:
            # dx is the grad on the dropped output of layer l-1
            dx_upper = drop.backward(dec_drop_base + l, dx)
        else:
            demb = drop.backward(dec_drop_base, dx)
            np.add.at(grads["tgt_emb"], y_in, demb)

    # bridge
    d_enc_finals = [np.zeros_like(f) for f in enc_finals]
    for l in range(cfg.dec_layers):
        src, out = bridge_cache[l]
        dpre = d_h0[l] * (1.0 - out * out)
        grads[f"bridge_{l}_W"] += src.T @ dpre
        grads[f"bridge_{l}_b"] += dpre.sum(axis=0)
        d_enc_finals[min(l, len(enc_finals) - 1)] += dpre @ params[f"bridge_{l}_W"].T

    # encoder stack, top down
    h2 = cfg.hidden // 2
    dout = dh_enc
    for l in range(cfg.enc_layers - 1, -1, -1):
        cf, cb = enc_caches[l]
        dff, dfb = d_enc_finals[l][:, :h2], d_enc_finals[l][:, h2:]
        dxf, _ = gru_backward(params, f"enc_{l}_f", cf, dout[:, :, :h2], dff, grads)
        dxb, _ = gru_backward(params, f"enc_{l}_b", cb, dout[:, :, h2:], dfb, grads)
        dx = dxf + dxb
        if l > 0:
            dout = drop.backward(l, dx)
        else:
            demb = drop.backward(0, dx)
            np.add.at(grads["src_emb"], src_ids, demb)
    return loss, grads


def decoder_step(params, cfg, state, y_prev, h_enc, src_mask):
    """One decode step for a (B,) batch of previous tokens.  Returns
    (log_probs (B,Vt), new per-layer states)."""
    x = params["tgt_emb"][y_prev]
    new_state = []
    for l in range(cfg.dec_layers):
        h, _, _, _ = _gru_step(params, f"dec_{l}", x, state[l])
        new_state.append(h)
        x = h
    h_top = x[:, None, :]
    a, _ = attention_output(params, h_top, h_enc, src_mask)
    logits = a[:, 0] @ params["out_W"] + params["out_b"]
    logits -= logits.max(axis=1, keepdims=True)
    log_probs = logits - np.log(np.exp(logits).sum(axis=1, keepdims=True))
    return log_probs, new_state


def encode_for_decoding(params, cfg, src_ids, src_mask):
    drop = _Dropout(0.0, None)
    h_enc, finals, _ = encode(params, cfg, src_ids, src_mask, drop)
    state, _ = bridge(params, cfg, finals)
    return h_enc, state
