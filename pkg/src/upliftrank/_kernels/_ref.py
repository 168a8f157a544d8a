"""Pure NumPy reference implementation of the hot kernels.

Semantics are shared with the compiled backend (``_fast``); keep both in
sync. Arithmetic here is arranged so that ``best_split`` is bit-identical
to the compiled scan (cumulative sums accumulate sequentially in both).
The pairwise lambda kernels accumulate in a different order, so agreement
with the compiled backend is to rounding, not bit-exact.
"""

import numpy as np

# Cap on the rows-by-columns size of one pairwise chunk (floats).
_CHUNK_ELEMS = 2_000_000


def best_split(values, grads, hess, min_leaf, reg_lambda):
    """Best axis-aligned split of a node, scanned over one sorted feature.

    ``values``/``grads``/``hess`` are aligned and sorted ascending by value.
    A split after position ``p`` sends ``[0..p]`` left and ``[p+1..]`` right;
    only positions with both sides >= min_leaf and a strict value increase
    are eligible. Returns ``(gain, pos)`` with ``pos == -1`` when no
    eligible split exists.
    """
    n = values.shape[0]
    if n < 2 * min_leaf:
        return 0.0, -1
    cg = np.cumsum(grads)
    ch = np.cumsum(hess)
    g_total = cg[-1]
    h_total = ch[-1]
    parent = g_total * g_total / (h_total + reg_lambda)

    pos = np.arange(min_leaf - 1, n - min_leaf)
    gl = cg[pos]
    hl = ch[pos]
    gr = g_total - gl
    hr = h_total - hl
    gain = gl * gl / (hl + reg_lambda) + gr * gr / (hr + reg_lambda) - parent
    gain[values[pos] >= values[pos + 1]] = -np.inf

    best = int(np.argmax(gain))
    if not np.isfinite(gain[best]):
        return 0.0, -1
    return float(gain[best]), int(pos[best])


def lambda_block(hi, lo, gains, weights, scores, cutoff, sigma, restrict,
                 lam, hess):
    """Accumulate pairwise lambdas for a block of (higher, lower) rank pairs.

    All rank-indexed arrays (``gains``, ``weights``, ``scores``, ``lam``,
    ``hess``) use position in the current ranking as index. Every pair
    (i in hi) x (j in lo) satisfies gains[i] > gains[j]. The swap cost is
    the bilinear form |(G_i - G_j) * (w_i - w_j)|; ``weights`` already
    encodes the metric's positional discount, truncated at the cutoff.

    With ``restrict`` set, pairs entirely below the cutoff are skipped
    (their swap cost is zero for every supported metric, so this changes
    nothing but the work done).
    """
    if hi.size == 0 or lo.size == 0:
        return
    chunk = max(1, _CHUNK_ELEMS // max(1, lo.size))
    for start in range(0, hi.size, chunk):
        h = hi[start:start + chunk]
        diff = scores[h][:, None] - scores[lo][None, :]
        with np.errstate(over="ignore"):  # exp overflow -> rho == 0
            rho = 1.0 / (1.0 + np.exp(sigma * diff))
        delta = np.abs((gains[h][:, None] - gains[lo][None, :])
                       * (weights[h][:, None] - weights[lo][None, :]))
        if restrict:
            delta = delta * ((h[:, None] < cutoff) | (lo[None, :] < cutoff))
        step = sigma * rho * delta
        curve = sigma * sigma * rho * (1.0 - rho) * delta
        lam[h] += step.sum(axis=1)
        lam[lo] -= step.sum(axis=0)
        hess[h] += curve.sum(axis=1)
        hess[lo] += curve.sum(axis=0)


def lambda_map_block(hi, lo, scores, cutoff, sigma, rel_counts, rel_prefix,
                     n_relevant, restrict, lam, hess):
    """Accumulate pairwise lambdas under truncated average precision.

    ``hi`` holds ranks of relevant items, ``lo`` ranks of non-relevant ones
    (binary relevance). ``rel_counts[r]`` is the number of relevant items at
    ranks <= r; ``rel_prefix[r + 1]`` is the inclusive prefix sum of
    1/(r'+1) over relevant ranks r' <= r (``rel_prefix[0] == 0``). The swap
    cost is the exact change in AP truncated at ``cutoff`` and normalised
    by ``n_relevant``.
    """
    if hi.size == 0 or lo.size == 0 or n_relevant == 0:
        return
    k = cutoff
    chunk = max(1, _CHUNK_ELEMS // max(1, lo.size))
    for start in range(0, hi.size, chunk):
        a = hi[start:start + chunk][:, None]   # relevant ranks
        b = lo[None, :]                        # non-relevant ranks

        term_a = np.where(a < k, rel_counts[a] / (a + 1.0), 0.0)
        down = a < b
        # relevant item moves down: loses its own term, gains one at b,
        # intermediate relevant ranks each lose 1/(r+1)
        t_b = np.where(b < k, rel_counts[b] / (b + 1.0), 0.0)
        mid_down = (rel_prefix[np.minimum(b, k)]
                    - rel_prefix[np.minimum(a, k - 1) + 1])
        delta_down = -term_a + t_b - mid_down
        # relevant item moves up: symmetric, counts shift by +1 at b
        t_b_up = np.where(b < k, (rel_counts[b] + 1.0) / (b + 1.0), 0.0)
        mid_up = (rel_prefix[np.minimum(a, k)]
                  - rel_prefix[np.minimum(b, k - 1) + 1])
        delta_up = t_b_up - term_a + mid_up

        delta = np.abs(np.where(down, delta_down, delta_up)) / n_relevant
        if restrict:
            delta = delta * ((a < k) | (b < k))

        diff = scores[a] - scores[b]
        with np.errstate(over="ignore"):  # exp overflow -> rho == 0
            rho = 1.0 / (1.0 + np.exp(sigma * diff))
        step = sigma * rho * delta
        curve = sigma * sigma * rho * (1.0 - rho) * delta
        h = hi[start:start + chunk]
        lam[h] += step.sum(axis=1)
        lam[lo] -= step.sum(axis=0)
        hess[h] += curve.sum(axis=1)
        hess[lo] += curve.sum(axis=0)
