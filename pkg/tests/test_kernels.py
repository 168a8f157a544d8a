"""Backend agreement: the compiled kernels and the NumPy reference must
produce matching results (bit-exact for split scanning, tight tolerance
for the pairwise accumulations)."""

import numpy as np
import pytest

from upliftrank import _kernels
from upliftrank._kernels import _ref

try:
    from upliftrank._kernels import _fast
except ImportError:
    _fast = None

needs_compiled = pytest.mark.skipif(_fast is None,
                                    reason="compiled kernels not built")


def split_case(rng, n):
    values = np.sort(rng.choice(rng.normal(size=max(2, n // 2)), size=n))
    grads = rng.normal(size=n)
    hess = rng.uniform(0.0, 1.0, size=n)
    return (np.ascontiguousarray(values), np.ascontiguousarray(grads),
            np.ascontiguousarray(hess))


@needs_compiled
class TestBestSplitAgreement:
    def test_matches_reference_bit_exact(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            n = int(rng.integers(2, 60))
            values, grads, hess = split_case(rng, n)
            min_leaf = int(rng.integers(1, 4))
            g_ref, p_ref = _ref.best_split(values, grads, hess, min_leaf,
                                           1.0)
            g_fast, p_fast = _fast.best_split(values, grads, hess, min_leaf,
                                              1.0)
            assert p_ref == p_fast
            assert g_ref == g_fast  # identical arithmetic order

    def test_no_valid_split(self):
        values = np.full(5, 1.0)
        grads = np.arange(5.0)
        hess = np.ones(5)
        for impl in (_ref, _fast):
            gain, pos = impl.best_split(values, grads, hess, 1, 1.0)
            assert pos == -1


def lambda_case(rng, n):
    gains = rng.integers(0, 3, size=n).astype(float)
    weights = rng.uniform(0, 2, size=n)
    scores = rng.normal(size=n)
    hi = np.nonzero(gains == gains.max())[0].astype(np.int64)
    lo = np.nonzero(gains < gains.max())[0].astype(np.int64)
    return gains, weights, np.ascontiguousarray(scores), hi, lo


@needs_compiled
class TestLambdaAgreement:
    def test_bilinear_block(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            n = int(rng.integers(2, 40))
            gains, weights, scores, hi, lo = lambda_case(rng, n)
            if hi.size == 0 or lo.size == 0:
                continue
            k = int(rng.integers(1, n + 1))
            out = []
            for impl in (_ref, _fast):
                lam = np.zeros(n)
                hess = np.zeros(n)
                impl.lambda_block(hi, lo, gains, weights, scores, k, 1.0,
                                  True, lam, hess)
                out.append((lam, hess))
            assert np.allclose(out[0][0], out[1][0], atol=1e-12)
            assert np.allclose(out[0][1], out[1][1], atol=1e-12)

    def test_map_block(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            n = int(rng.integers(2, 40))
            rels = rng.integers(0, 2, size=n).astype(float)
            if rels.sum() in (0, n):
                continue
            scores = np.ascontiguousarray(rng.normal(size=n))
            hi = np.nonzero(rels == 1.0)[0].astype(np.int64)
            lo = np.nonzero(rels == 0.0)[0].astype(np.int64)
            counts = np.cumsum(rels).astype(np.int64)
            prefix = np.concatenate(([0.0], np.cumsum(
                rels / np.arange(1, n + 1, dtype=np.float64))))
            k = int(rng.integers(1, n + 1))
            out = []
            for impl in (_ref, _fast):
                lam = np.zeros(n)
                hess = np.zeros(n)
                impl.lambda_map_block(hi, lo, scores, k, 1.0, counts,
                                      prefix, float(rels.sum()), True,
                                      lam, hess)
                out.append((lam, hess))
            assert np.allclose(out[0][0], out[1][0], atol=1e-12)
            assert np.allclose(out[0][1], out[1][1], atol=1e-12)


class TestBackendSelection:
    def test_backend_reported(self):
        assert _kernels.BACKEND in ("compiled", "python")

    def test_force_python_env(self, monkeypatch):
        import importlib
        import upliftrank._kernels as pkg
        monkeypatch.setenv("UPLIFTRANK_FORCE_PYTHON", "1")
        reloaded = importlib.reload(pkg)
        try:
            assert reloaded.BACKEND == "python"
        finally:
            monkeypatch.delenv("UPLIFTRANK_FORCE_PYTHON")
            importlib.reload(pkg)
