import numpy as np
import pytest
from hypothesis import given, strategies as st

from xhembed.embedstore import (EmbeddingFormatError, EmbeddingMatrix,
                                csls_neighborhood, csls_score,
                                nearest_neighbors, normalize_rows,
                                read_embeddings, unit_normalize,
                                write_embeddings)


class TestIO:
    def test_header_form(self, tmp_path):
        p = tmp_path / "e.vec"
        p.write_text("2 3\na 1 0 0\nb 0 1 0\n")
        m = read_embeddings(p)
        assert len(m) == 2 and m.dim == 3
        assert np.allclose(m.get("a"), [1, 0, 0])

    def test_headerless_dim_inferred(self, tmp_path):
        p = tmp_path / "e.vec"
        p.write_text("a 1 0 0\nb 0 1 0\n")
        m = read_embeddings(p)
        assert len(m) == 2 and m.dim == 3

    def test_bad_row_reports_line(self, tmp_path):
        p = tmp_path / "e.vec"
        p.write_text("1 3\na 1 0\n")
        with pytest.raises(EmbeddingFormatError, match=":2:"):
            read_embeddings(p)

    def test_non_numeric(self, tmp_path):
        p = tmp_path / "e.vec"
        p.write_text("a 1 x 0\n")
        with pytest.raises(EmbeddingFormatError):
            read_embeddings(p)

    def test_duplicates_keep_first(self, tmp_path):
        p = tmp_path / "e.vec"
        p.write_text("a 1 0\na 0 1\nb 0 2\n")
        m = read_embeddings(p)
        assert np.allclose(m.get("a"), [1, 0])
        assert m.duplicates_dropped == 1

    def test_write_header(self, tmp_path):
        m = EmbeddingMatrix(["a", "b"], np.zeros((2, 3)))
        write_embeddings(m, tmp_path / "e.vec")
        assert (tmp_path / "e.vec").read_text().splitlines()[0] == "2 3"

    def test_empty_matrix(self, tmp_path):
        m = EmbeddingMatrix([], np.zeros((0, 4)))
        write_embeddings(m, tmp_path / "e.vec")
        m2 = read_embeddings(tmp_path / "e.vec")
        assert len(m2) == 0 and m2.dim == 4

    def test_roundtrip_property(self, tmp_path):
        rng = np.random.default_rng(0)
        m = EmbeddingMatrix([f"t{i}" for i in range(10)],
                            rng.uniform(-1, 1, (10, 5)))
        write_embeddings(m, tmp_path / "e.vec")
        m2 = read_embeddings(tmp_path / "e.vec")
        assert m2.tokens == m.tokens
        assert np.max(np.abs(m2.rows - m.rows)) < 1e-6


class TestNormalize:
    def test_hand_case(self):
        assert np.allclose(unit_normalize([3.0, 4.0]), [0.6, 0.8])

    def test_unit_unchanged(self):
        v = np.array([0.0, 1.0])
        assert np.allclose(unit_normalize(v), v)

    def test_zero_preserved(self):
        assert np.array_equal(unit_normalize([0.0, 0.0]), [0.0, 0.0])

    @given(st.lists(st.floats(-100, 100), min_size=2, max_size=6))
    def test_idempotent_for_nonzero(self, vals):
        v = np.array(vals)
        if np.linalg.norm(v) < 1e-6:  # near-underflow scales lose precision
            return
        u = unit_normalize(v)
        assert np.allclose(unit_normalize(u), u, atol=1e-12)


class TestNearestNeighbors:
    def basis(self):
        return EmbeddingMatrix(["x", "y", "z"], np.eye(3))

    def test_self_is_top(self):
        m = self.basis()
        tok, cos = nearest_neighbors(m, m.get("y"), 1)[0]
        assert tok == "y" and cos == pytest.approx(1.0, abs=1e-9)

    def test_orthogonal(self):
        res = nearest_neighbors(self.basis(), np.array([1.0, 0, 0]), 2)
        assert res[0] == ("x", pytest.approx(1.0))
        assert res[1][1] == pytest.approx(0.0)

    def test_k_clamped(self):
        assert len(nearest_neighbors(self.basis(), np.ones(3), 10)) == 3

    def test_dim_mismatch(self):
        with pytest.raises(ValueError):
            nearest_neighbors(self.basis(), np.ones(2), 1)


def brute_force_csls(x, y, x_space, y_space, k):
    """Independent oracle: direct mean-of-top-k cosines."""
    def mean_topk(v, space):
        sims = sorted(float(np.dot(v, s)) for s in space)
        return float(np.mean(sims[-min(k, len(space)):]))
    return 2 * float(np.dot(x, y)) - mean_topk(x, y_space) - mean_topk(y, x_space)


class TestCsls:
    def test_single_candidate_zero(self):
        x = unit_normalize(np.array([1.0, 1.0]))
        y = unit_normalize(np.array([1.0, 0.0]))
        rt = csls_neighborhood(np.array([y]), x, k=1)[0]
        rs = csls_neighborhood(np.array([x]), y, k=1)[0]
        assert csls_score(x, y, rt, rs) == pytest.approx(0.0, abs=1e-12)

    def test_identical_spaces_self_score(self):
        space = normalize_rows(np.random.default_rng(1).normal(size=(4, 3)))
        x = space[2]
        rt = csls_neighborhood(space, x, k=1)[0]
        assert csls_score(x, x, rt, rt) == pytest.approx(0.0, abs=1e-12)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(2)
        xs = normalize_rows(rng.normal(size=(3, 4)))
        ys = normalize_rows(rng.normal(size=(3, 4)))
        for k in (1, 2, 3):
            for x in xs:
                for y in ys:
                    rt = csls_neighborhood(ys, x, k=k)[0]
                    rs = csls_neighborhood(xs, y, k=k)[0]
                    assert csls_score(x, y, rt, rs) == pytest.approx(
                        brute_force_csls(x, y, xs, ys, k), abs=1e-9)

    def test_empty_space_error(self):
        with pytest.raises(ValueError):
            csls_neighborhood(np.zeros((0, 3)), np.ones(3), 1)
