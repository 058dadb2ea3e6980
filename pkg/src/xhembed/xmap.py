"""Cross-space mapping: preprocessing, orthogonal Procrustes fit, CSLS
dictionary induction, and a self-learning refinement loop."""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .embedstore import normalize_rows


@dataclass
class PreprocessRecord:
    column_means: np.ndarray
    zero_rows: list = field(default_factory=list)

    def apply(self, vec):
        """Apply the recorded chain to a new vector."""
        v = np.asarray(vec, dtype=np.float64)
        n = np.linalg.norm(v)
        if n:
            v = v / n
        v = v - self.column_means
        n = np.linalg.norm(v)
        if n:
            v = v / n
        return v


def preprocess(matrix):
    """Unit-normalize rows, mean-center columns, unit-normalize rows again.
    Zero rows (before or after centering) are flagged and left at zero."""
    x = np.asarray(matrix, dtype=np.float64)
    if x.size == 0:
        raise ValueError("empty matrix")
    x = normalize_rows(x)
    means = x.mean(axis=0)
    x = x - means
    norms = np.linalg.norm(x, axis=1)
    zero_rows = [int(i) for i in np.nonzero(norms == 0)[0]]
    x = normalize_rows(x)
    return x, PreprocessRecord(means, zero_rows)


@dataclass
class MappingModel:
    """Pair of orthogonal matrices taking two spaces into a common space."""
    w_x: np.ndarray
    w_z: np.ndarray
    pre_x: PreprocessRecord | None = None
    pre_z: PreprocessRecord | None = None
    objective: float = float("nan")

    def map_x(self, vec, preprocess_input=True):
        v = self.pre_x.apply(vec) if (preprocess_input and self.pre_x) else np.asarray(vec)
        return v @ self.w_x

    def map_z(self, vec, preprocess_input=True):
        v = self.pre_z.apply(vec) if (preprocess_input and self.pre_z) else np.asarray(vec)
        return v @ self.w_z


def fit_orthogonal_mapping(x, z, pairs, pre_x=None, pre_z=None):
    """Procrustes-optimal orthogonal pair: SVD of X_D^T Z_D = U S V^T gives
    W_x = U, W_z = V; common-space embeddings are X W_x and Z W_z."""
    if not len(pairs):
        raise ValueError("empty dictionary")
    xi = np.array([p[0] for p in pairs])
    zi = np.array([p[1] for p in pairs])
    m = x[xi].T @ z[zi]
    u, s, vt = np.linalg.svd(m)
    if s.size and s[-1] < 1e-12 * max(s[0], 1.0):
        warnings.warn("rank-deficient cross-covariance in orthogonal fit")
    return MappingModel(u, vt.T, pre_x, pre_z)


def dictionary_objective(x, z, pairs, model):
    """Mean cosine over dictionary pairs in the common space."""
    xi = np.array([p[0] for p in pairs])
    zi = np.array([p[1] for p in pairs])
    xm = normalize_rows(x[xi] @ model.w_x)
    zm = normalize_rows(z[zi] @ model.w_z)
    return float(np.sum(xm * zm, axis=1).mean())


def _csls_matrix(x_mapped, z_mapped, k):
    xn = normalize_rows(x_mapped)
    zn = normalize_rows(z_mapped)
    sims = xn @ zn.T
    kx = min(k, zn.shape[0])
    kz = min(k, xn.shape[0])
    r_x = np.sort(sims, axis=1)[:, -kx:].mean(axis=1)   # x's neighborhood in z
    r_z = np.sort(sims, axis=0)[-kz:, :].mean(axis=0)   # z's neighborhood in x
    return 2.0 * sims - r_x[:, None] - r_z[None, :]


def induce_dictionary(x_mapped, z_mapped, k=10):
    """Union of the CSLS-argmax pairing in both directions."""
    if x_mapped.size == 0 or z_mapped.size == 0:
        raise ValueError("empty mapped matrix")
    csls = _csls_matrix(x_mapped, z_mapped, k)
    fwd = {(i, int(j)) for i, j in enumerate(csls.argmax(axis=1))}
    bwd = {(int(i), j) for j, i in enumerate(csls.argmax(axis=0))}
    return sorted(fwd | bwd)


def self_learning_loop(x, z, seed_dict, max_iters=20, patience=3, k=10,
                       pre_x=None, pre_z=None):
    """Alternate Procrustes fit and CSLS induction; return the model with the
    best mean-cosine dictionary objective seen."""
    model = fit_orthogonal_mapping(x, z, seed_dict, pre_x, pre_z)
    model.objective = dictionary_objective(x, z, seed_dict, model)
    best = model
    stall = 0
    for _ in range(max_iters):
        pairs = induce_dictionary(x @ model.w_x, z @ model.w_z, k)
        model = fit_orthogonal_mapping(x, z, pairs, pre_x, pre_z)
        model.objective = dictionary_objective(x, z, pairs, model)
        if model.objective > best.objective + 1e-9:
            best = model
            stall = 0
        else:
            stall += 1
            if stall >= patience:
                break
    return best


def save_mapping(model, path):
    d = model.w_x.shape[0]
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"dim {d} objective {model.objective!r}\n")
        for mat in (model.w_x, model.w_z):
            for row in mat:
                f.write(" ".join("%.17g" % v for v in row) + "\n")
        for rec in (model.pre_x, model.pre_z):
            if rec is None:
                f.write("none\n")
            else:
                f.write(" ".join("%.17g" % v for v in rec.column_means) + "\n")


def load_mapping(path):
    with open(path, encoding="utf-8") as f:
        lines = f.read().splitlines()
    head = lines[0].split()
    d = int(head[1])
    obj = float(head[3])
    w_x = np.array([lines[1 + i].split() for i in range(d)], dtype=np.float64)
    w_z = np.array([lines[1 + d + i].split() for i in range(d)], dtype=np.float64)
    recs = []
    for line in lines[1 + 2 * d:1 + 2 * d + 2]:
        if line == "none":
            recs.append(None)
        else:
            recs.append(PreprocessRecord(np.array(line.split(), dtype=np.float64)))
    return MappingModel(w_x, w_z, recs[0], recs[1], obj)


def fit_mapping(e_v, e_m):
    """Pipeline entry: preprocess both matrices, seed with identity pairs over
    the shared vocabulary, and refine by self-learning."""
    shared = [t for t in e_v.tokens if t in e_m.index]
    if not shared:
        raise ValueError("no shared vocabulary between the two spaces")
    x, pre_x = preprocess(e_v.rows)
    z, pre_z = preprocess(e_m.rows)
    seed = [(e_v.index[t], e_m.index[t]) for t in shared]
    return self_learning_loop(x, z, seed, pre_x=pre_x, pre_z=pre_z)
