"""Pure numpy detector kernels.

This backend defines the semantics; the compiled backend mirrors it operation
for operation.  All kernels work on one received vector y and one dense
effective channel H (n_rx*n_f by n_s*n_f), with candidate supports given as
int32 index rows into the symbol vector.
"""

from __future__ import annotations

import numpy as np

_CHUNK = 1 << 16


def nearest_point_indices(values: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Index of the closest constellation point per entry (lowest index on ties)."""
    v = np.asarray(values).reshape(-1, 1)
    d = (v.real - points.real[None, :]) ** 2 + (v.imag - points.imag[None, :]) ** 2
    return np.argmin(d, axis=1)


def project_points_with_zero(values: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Elementwise projection onto the constellation extended with 0."""
    candidates = np.concatenate([[0.0 + 0.0j], points])
    idx = nearest_point_indices(values, candidates)
    return candidates[idx]


def project_antenna_blocks(
    v: np.ndarray, n_s: int, n_f: int, ant_patterns: np.ndarray
) -> np.ndarray:
    """Per subcarrier block, keep the valid antenna pattern capturing most energy."""
    blocks = v.reshape(n_f, n_s)
    energy = blocks.real**2 + blocks.imag**2
    per_pattern = energy[:, ant_patterns].sum(axis=2)  # (n_f, n_patterns)
    best = np.argmax(per_pattern, axis=1)
    out = np.zeros_like(blocks)
    for f in range(n_f):
        keep = ant_patterns[best[f]]
        out[f, keep] = blocks[f, keep]
    return out.reshape(-1)


def project_subcarrier_blocks(
    v: np.ndarray, n_s: int, n_f: int, sub_patterns: np.ndarray
) -> np.ndarray:
    """Keep the valid active-subcarrier combination capturing most energy."""
    blocks = v.reshape(n_f, n_s)
    col_energy = (blocks.real**2 + blocks.imag**2).sum(axis=1)
    totals = col_energy[sub_patterns].sum(axis=1)
    best = sub_patterns[np.argmax(totals)]
    out = np.zeros_like(blocks)
    out[best] = blocks[best]
    return out.reshape(-1)


def _solve_gram(hc: np.ndarray, y: np.ndarray, reg: float) -> np.ndarray:
    g = hc.conj().T @ hc
    if reg:
        g = g + reg * np.eye(g.shape[0])
    b = hc.conj().T @ y
    try:
        return np.linalg.solve(g, b)
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(hc, y, rcond=None)[0]


def _residual_sq(y: np.ndarray, hc: np.ndarray, s: np.ndarray) -> float:
    r = y - hc @ s
    return float(np.real(np.vdot(r, r)))


def mld_scan(H, y, supports, points):
    """Exhaustive residual minimization over (support, payload) hypotheses.

    Returns (support_pos, payload_digits, residual, n_hypotheses).  Payload
    digits enumerate constellation indices in counting order with the last
    position fastest; the first-encountered minimum wins ties.
    """
    n_sup, k = supports.shape
    m_ord = len(points)
    combos_per_support = m_ord**k
    weights = m_ord ** np.arange(k - 1, -1, -1)
    best_res = np.inf
    best_sup = -1
    best_digits = np.zeros(k, dtype=np.int64)
    for pos in range(n_sup):
        hc = H[:, supports[pos]]
        for start in range(0, combos_per_support, _CHUNK):
            stop = min(start + _CHUNK, combos_per_support)
            lin = np.arange(start, stop)
            digits = (lin[:, None] // weights[None, :]) % m_ord
            vals = points[digits]  # (chunk, k)
            resid = y[:, None] - hc @ vals.T
            res = (resid.real**2 + resid.imag**2).sum(axis=0)
            i = int(np.argmin(res))
            if res[i] < best_res:
                best_res = float(res[i])
                best_sup = pos
                best_digits = digits[i].copy()
    return best_sup, best_digits, best_res, n_sup * combos_per_support


def obmmse_scan(H, y, ordered_supports, points, reg, vth, gram, hy):
    """Regularized block-MMSE over supports in the given order.

    ``gram`` = H^H H and ``hy`` = H^H y are precomputed once per call so each
    candidate only gathers a k x k submatrix.  Stops at the first candidate
    whose residual beats vth, otherwise returns the minimum-residual
    candidate.  Returns (pos_in_order, payload_values, residual, examined).
    """
    n_sup = len(ordered_supports)
    k = ordered_supports.shape[1]
    eye = reg * np.eye(k)
    best = (np.inf, -1, None)
    for pos in range(n_sup):
        idx = ordered_supports[pos]
        g = gram[np.ix_(idx, idx)] + eye
        try:
            ls = np.linalg.solve(g, hy[idx])
        except np.linalg.LinAlgError:
            ls = np.linalg.lstsq(H[:, idx], y, rcond=None)[0]
        s = points[nearest_point_indices(ls, points)]
        d = _residual_sq(y, H[:, idx], s)
        if d < vth:
            return pos, s, d, pos + 1
        if d < best[0]:
            best = (d, pos, s)
    return best[1], best[2], best[0], n_sup


def admm_run(
    H,
    y,
    phi,
    hhy,
    ant_patterns,
    sub_patterns,
    points,
    rho_x,
    rho_r,
    rho_z,
    q_iters,
    x0,
    r0,
    z0,
    n_s,
    n_f,
    reg,
    record_trace=False,
):
    """Operator-splitting iteration with consensus variables for the antenna
    support set, the subcarrier support set, and the constellation.

    Returns (s_best, f_best[, trace]): the best-objective iterate after
    support-restricted polishing on the final iteration.
    """
    x = x0.astype(np.complex128).copy()
    r = r0.astype(np.complex128).copy()
    z = z0.astype(np.complex128).copy()
    u = np.zeros_like(x)
    v = np.zeros_like(x)
    w = np.zeros_like(x)
    f_best = np.inf
    s_best = np.zeros_like(x)
    trace = [] if record_trace else None
    for t in range(q_iters):
        s = phi @ (hhy + rho_x * (x - u) + rho_r * (r - v) + rho_z * (z - w))
        x = project_antenna_blocks(s + u, n_s, n_f, ant_patterns)
        r = project_subcarrier_blocks(s + v, n_s, n_f, sub_patterns)
        z = project_points_with_zero(s + w, points)
        support = np.flatnonzero((x != 0) & (r != 0))
        s_tilde = np.zeros_like(x)
        if support.size:
            if t == q_iters - 1:
                hc = H[:, support]
                ls = _solve_gram(hc, y, reg)
                s_tilde[support] = points[nearest_point_indices(ls, points)]
            else:
                s_tilde[support] = z[support]
        f = _residual_sq(y, H[:, support], s_tilde[support]) if support.size else float(
            np.real(np.vdot(y, y))
        )
        if f < f_best:
            f_best = f
            s_best = s_tilde.copy()
        if record_trace:
            trace.append(f_best)
        u = u + s - x
        v = v + s - r
        w = w + s - z
    if record_trace:
        return s_best, f_best, trace
    return s_best, f_best


def smmp_run(H, y, n_s, n_f, n_a, n_af, n_children, points, record_stats=False):
    """Breadth-limited greedy tree search over structured supports.

    Each level extends every surviving candidate by its strongest residual
    correlations, subject to per-subcarrier and subblock-count feasibility and
    deduplication.  Returns (indices, payload_values, residual_sq, admitted
    [, per_level_counts]).
    """
    depth = n_a * n_af
    # level-0 candidate: empty support carrying the raw observation
    parents = [((), np.zeros(n_f, dtype=np.int64), y.copy(), np.empty(0, np.complex128))]
    total_admitted = 0
    per_level = []
    last_nonempty = parents
    for _ in range(depth):
        seen: set[tuple[int, ...]] = set()
        admitted = []
        for p_idx, p_counts, p_res, _ in parents:
            corr = H.conj().T @ p_res
            mag = corr.real**2 + corr.imag**2
            if p_idx:
                mag[list(p_idx)] = -1.0
            order = np.argsort(-mag, kind="stable")[:n_children]
            for t_j in order:
                t_j = int(t_j)
                block = t_j // n_s
                if p_counts[block] + 1 > n_a:
                    continue
                touched = int(np.count_nonzero(p_counts)) + (0 if p_counts[block] else 1)
                if touched > n_af:
                    continue
                child = tuple(sorted(p_idx + (t_j,)))
                if child in seen:
                    continue
                seen.add(child)
                idx = np.asarray(child, dtype=np.int64)
                hc = H[:, idx]
                ls = _solve_gram(hc, y, 0.0)
                s = points[nearest_point_indices(ls, points)]
                res = y - hc @ s
                counts = p_counts.copy()
                counts[block] += 1
                admitted.append((child, counts, res, s))
        per_level.append(len(admitted))
        if not admitted:
            break
        parents = admitted
        last_nonempty = admitted
        total_admitted += len(admitted)
    best = None
    for child, _, res, s in last_nonempty:
        d = float(np.real(np.vdot(res, res)))
        if best is None or d < best[0]:
            best = (d, child, s)
    d, child, s = best
    out = (np.asarray(child, dtype=np.int64), s, d, total_admitted)
    if record_stats:
        return out + (per_level,)
    return out
