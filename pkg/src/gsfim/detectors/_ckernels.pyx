# cython: language_level=3
"""Compiled detector kernels.

Operation-for-operation mirror of gsfim.detectors._pykernels; see that module
for the semantics.  All hot loops run on typed memoryviews of contiguous
complex128/int32 arrays.
"""

import numpy as np

from libc.math cimport INFINITY, sqrt

ctypedef double complex dc


cdef inline double _abs2(dc v) noexcept nogil:
    return v.real * v.real + v.imag * v.imag


cdef inline Py_ssize_t _nearest_idx(dc v, dc[::1] points) noexcept nogil:
    cdef Py_ssize_t j, best = 0
    cdef double d, best_d = INFINITY
    for j in range(points.shape[0]):
        d = (v.real - points[j].real) ** 2 + (v.imag - points[j].imag) ** 2
        if d < best_d:
            best_d = d
            best = j
    return best


cdef inline dc _nearest_with_zero(dc v, dc[::1] points) noexcept nogil:
    # candidate 0 comes first, then the constellation in index order
    cdef dc best = 0
    cdef double d, best_d = _abs2(v)
    cdef Py_ssize_t j
    for j in range(points.shape[0]):
        d = (v.real - points[j].real) ** 2 + (v.imag - points[j].imag) ** 2
        if d < best_d:
            best_d = d
            best = points[j]
    return best


cdef void _cholesky(dc[:, ::1] g, Py_ssize_t k) noexcept nogil:
    # In-place lower Cholesky of a Hermitian positive (semi)definite matrix;
    # pivots are clamped so rank-deficient inputs degrade instead of crashing.
    cdef Py_ssize_t i, j, p
    cdef double piv
    cdef dc acc
    for j in range(k):
        acc = g[j, j]
        for p in range(j):
            acc = acc - g[j, p] * g[j, p].conjugate()
        piv = acc.real
        if piv < 1e-300:
            piv = 1e-300
        piv = sqrt(piv)
        g[j, j] = piv
        for i in range(j + 1, k):
            acc = g[i, j]
            for p in range(j):
                acc = acc - g[i, p] * g[j, p].conjugate()
            g[i, j] = acc / piv


cdef void _chol_solve(dc[:, ::1] l, dc[::1] b, Py_ssize_t k) noexcept nogil:
    # Solve L L^H x = b in place.
    cdef Py_ssize_t i, p
    cdef dc acc
    for i in range(k):
        acc = b[i]
        for p in range(i):
            acc = acc - l[i, p] * b[p]
        b[i] = acc / l[i, i].real
    for i in range(k - 1, -1, -1):
        acc = b[i]
        for p in range(i + 1, k):
            acc = acc - l[p, i].conjugate() * b[p]
        b[i] = acc / l[i, i].real


cdef void _gram_solve_project(
    dc[:, ::1] hc,      # (k, m): row j holds channel column j of the support
    dc[::1] y,
    dc[:, ::1] g,       # (k, k) scratch
    dc[::1] b,          # (k,) scratch; holds the projected solution on return
    dc[::1] points,
    double reg,
    Py_ssize_t k,
    Py_ssize_t m,
) noexcept nogil:
    cdef Py_ssize_t p, q, i
    cdef dc acc
    for p in range(k):
        for q in range(p + 1):
            acc = 0
            for i in range(m):
                acc = acc + hc[p, i].conjugate() * hc[q, i]
            g[p, q] = acc
        g[p, p] = g[p, p] + reg
    for p in range(k):
        acc = 0
        for i in range(m):
            acc = acc + hc[p, i].conjugate() * y[i]
        b[p] = acc
    _cholesky(g, k)
    _chol_solve(g, b, k)
    for p in range(k):
        b[p] = points[_nearest_idx(b[p], points)]


cdef double _support_residual(
    dc[:, ::1] hc, dc[::1] y, dc[::1] s, Py_ssize_t k, Py_ssize_t m
) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef dc acc
    cdef double res = 0.0
    for i in range(m):
        acc = y[i]
        for j in range(k):
            acc = acc - s[j] * hc[j, i]
        res += _abs2(acc)
    return res


def mld_scan(dc[:, ::1] H, dc[::1] y, int[:, ::1] supports, dc[::1] points):
    cdef Py_ssize_t m = H.shape[0]
    cdef Py_ssize_t n_sup = supports.shape[0]
    cdef Py_ssize_t k = supports.shape[1]
    cdef Py_ssize_t m_ord = points.shape[0]
    cdef long long combos = 1
    cdef Py_ssize_t i, j, col, pos
    for j in range(k):
        combos *= m_ord
    hc_arr = np.empty((k, m), dtype=np.complex128)
    r_arr = np.empty(m, dtype=np.complex128)
    digits_arr = np.zeros(k, dtype=np.int64)
    best_digits_arr = np.zeros(k, dtype=np.int64)
    cdef dc[:, ::1] hc = hc_arr
    cdef dc[::1] r = r_arr
    cdef long long[::1] dg = digits_arr
    cdef long long[::1] bdg = best_digits_arr
    cdef double best_res = INFINITY
    cdef Py_ssize_t best_sup = -1
    cdef long long c
    cdef double res
    cdef dc p0, delta
    for pos in range(n_sup):
        for j in range(k):
            col = supports[pos, j]
            for i in range(m):
                hc[j, i] = H[i, col]
        p0 = points[0]
        for i in range(m):
            r[i] = y[i]
        for j in range(k):
            for i in range(m):
                r[i] = r[i] - p0 * hc[j, i]
            dg[j] = 0
        for c in range(combos):
            if c > 0:
                j = k - 1
                while True:
                    if dg[j] + 1 < m_ord:
                        delta = points[dg[j]] - points[dg[j] + 1]
                        dg[j] += 1
                        for i in range(m):
                            r[i] = r[i] + delta * hc[j, i]
                        break
                    delta = points[dg[j]] - points[0]
                    dg[j] = 0
                    for i in range(m):
                        r[i] = r[i] + delta * hc[j, i]
                    j -= 1
            res = 0.0
            for i in range(m):
                res += _abs2(r[i])
            if res < best_res:
                best_res = res
                best_sup = pos
                for j in range(k):
                    bdg[j] = dg[j]
    return int(best_sup), best_digits_arr, float(best_res), int(n_sup) * int(combos)


def obmmse_scan(
    dc[:, ::1] H,
    dc[::1] y,
    int[:, ::1] ordered,
    dc[::1] points,
    double reg,
    double vth,
    dc[:, ::1] gram,
    dc[::1] hy,
):
    cdef Py_ssize_t m = H.shape[0]
    cdef Py_ssize_t n_sup = ordered.shape[0]
    cdef Py_ssize_t k = ordered.shape[1]
    g_arr = np.empty((k, k), dtype=np.complex128)
    b_arr = np.empty(k, dtype=np.complex128)
    best_arr = np.zeros(k, dtype=np.complex128)
    cdef dc[:, ::1] g = g_arr
    cdef dc[::1] b = b_arr
    cdef dc[::1] best_s = best_arr
    cdef double best_res = INFINITY
    cdef Py_ssize_t best_pos = -1
    cdef Py_ssize_t pos, i, j, p
    cdef double d
    cdef dc acc
    for pos in range(n_sup):
        for p in range(k):
            for j in range(p + 1):
                g[p, j] = gram[ordered[pos, p], ordered[pos, j]]
            g[p, p] = g[p, p] + reg
            b[p] = hy[ordered[pos, p]]
        _cholesky(g, k)
        _chol_solve(g, b, k)
        for p in range(k):
            b[p] = points[_nearest_idx(b[p], points)]
        d = 0.0
        for i in range(m):
            acc = y[i]
            for j in range(k):
                acc = acc - b[j] * H[i, ordered[pos, j]]
            d += _abs2(acc)
        if d < vth:
            return int(pos), b_arr.copy(), float(d), int(pos) + 1
        if d < best_res:
            best_res = d
            best_pos = pos
            for j in range(k):
                best_s[j] = b[j]
    return int(best_pos), best_arr, float(best_res), int(n_sup)


def admm_run(
    dc[:, ::1] H,
    dc[::1] y,
    dc[:, ::1] phi,
    dc[::1] hhy,
    int[:, ::1] ant,
    int[:, ::1] sub,
    dc[::1] points,
    double rho_x,
    double rho_r,
    double rho_z,
    int q_iters,
    dc[::1] x0,
    dc[::1] r0,
    dc[::1] z0,
    int n_s,
    int n_f,
    double reg,
):
    cdef Py_ssize_t m = H.shape[0]
    cdef Py_ssize_t n = H.shape[1]
    cdef Py_ssize_t n_ant = ant.shape[0]
    cdef Py_ssize_t n_a = ant.shape[1]
    cdef Py_ssize_t n_sub = sub.shape[0]
    cdef Py_ssize_t n_af = sub.shape[1]
    cdef Py_ssize_t kmax = n_a * n_af

    x_arr = np.array(x0, dtype=np.complex128, copy=True)
    r_arr = np.array(r0, dtype=np.complex128, copy=True)
    z_arr = np.array(z0, dtype=np.complex128, copy=True)
    u_arr = np.zeros(n, dtype=np.complex128)
    v_arr = np.zeros(n, dtype=np.complex128)
    w_arr = np.zeros(n, dtype=np.complex128)
    s_arr = np.zeros(n, dtype=np.complex128)
    tmp_arr = np.zeros(n, dtype=np.complex128)
    st_arr = np.zeros(n, dtype=np.complex128)
    best_arr = np.zeros(n, dtype=np.complex128)
    cole_arr = np.zeros(n_f, dtype=np.float64)
    idx_arr = np.zeros(n, dtype=np.int64)
    hc_arr = np.empty((kmax, m), dtype=np.complex128)
    g_arr = np.empty((kmax, kmax), dtype=np.complex128)
    b_arr = np.empty(kmax, dtype=np.complex128)

    cdef dc[::1] x = x_arr, r = r_arr, z = z_arr
    cdef dc[::1] u = u_arr, v = v_arr, w = w_arr
    cdef dc[::1] s = s_arr, tmp = tmp_arr, st = st_arr, best_s = best_arr
    cdef double[::1] cole = cole_arr
    cdef long long[::1] idx = idx_arr
    cdef dc[:, ::1] hc = hc_arr
    cdef dc[:, ::1] g = g_arr
    cdef dc[::1] b = b_arr

    cdef double f_best = INFINITY
    cdef Py_ssize_t t, i, j, f, p, base, col, ksup
    cdef double e, best_e, res
    cdef Py_ssize_t best_p
    cdef dc acc

    for t in range(q_iters):
        for i in range(n):
            tmp[i] = hhy[i] + rho_x * (x[i] - u[i]) + rho_r * (r[i] - v[i]) + rho_z * (z[i] - w[i])
        for i in range(n):
            acc = 0
            for j in range(n):
                acc = acc + phi[i, j] * tmp[j]
            s[i] = acc
        # antenna-support projection per block, keeping the raw values
        for f in range(n_f):
            base = f * n_s
            best_e = -1.0
            best_p = 0
            for p in range(n_ant):
                e = 0.0
                for j in range(n_a):
                    col = base + ant[p, j]
                    e += _abs2(s[col] + u[col])
                if e > best_e:
                    best_e = e
                    best_p = p
            for i in range(n_s):
                x[base + i] = 0
            for j in range(n_a):
                col = base + ant[best_p, j]
                x[col] = s[col] + u[col]
        # subcarrier-support projection
        for f in range(n_f):
            base = f * n_s
            e = 0.0
            for i in range(n_s):
                e += _abs2(s[base + i] + v[base + i])
            cole[f] = e
        best_e = -1.0
        best_p = 0
        for p in range(n_sub):
            e = 0.0
            for j in range(n_af):
                e += cole[sub[p, j]]
            if e > best_e:
                best_e = e
                best_p = p
        for i in range(n):
            r[i] = 0
        for j in range(n_af):
            base = sub[best_p, j] * n_s
            for i in range(n_s):
                r[base + i] = s[base + i] + v[base + i]
        # constellation projection (with zero)
        for i in range(n):
            z[i] = _nearest_with_zero(s[i] + w[i], points)
        # support estimate and candidate symbol
        ksup = 0
        for i in range(n):
            if x[i] != 0 and r[i] != 0:
                idx[ksup] = i
                ksup += 1
        for i in range(n):
            st[i] = 0
        if ksup > 0:
            if t == q_iters - 1:
                for j in range(ksup):
                    col = idx[j]
                    for i in range(m):
                        hc[j, i] = H[i, col]
                _gram_solve_project(hc, y, g, b, points, reg, ksup, m)
                for j in range(ksup):
                    st[idx[j]] = b[j]
            else:
                for j in range(ksup):
                    st[idx[j]] = z[idx[j]]
        res = 0.0
        for i in range(m):
            acc = y[i]
            for j in range(ksup):
                acc = acc - st[idx[j]] * H[i, idx[j]]
            res += _abs2(acc)
        if res < f_best:
            f_best = res
            for i in range(n):
                best_s[i] = st[i]
        for i in range(n):
            u[i] = u[i] + s[i] - x[i]
            v[i] = v[i] + s[i] - r[i]
            w[i] = w[i] + s[i] - z[i]
    return best_arr, float(f_best)


def smmp_run(
    dc[:, ::1] H,
    dc[::1] y,
    int n_s,
    int n_f,
    int n_a,
    int n_af,
    int n_children,
    dc[::1] points,
):
    cdef Py_ssize_t m = H.shape[0]
    cdef Py_ssize_t n = H.shape[1]
    cdef Py_ssize_t depth = n_a * n_af
    cdef Py_ssize_t level, i_par, pick, i, j, col, block, q, pos, touched
    cdef Py_ssize_t par_count = 1
    cdef double best, d
    cdef Py_ssize_t bi
    cdef dc acc

    par_indices = np.zeros((1, 0), dtype=np.int32)
    par_blockcnt = np.zeros((1, n_f), dtype=np.int8)
    par_res = np.asarray(y, dtype=np.complex128).reshape(1, m).copy()
    par_svals = np.zeros((1, 0), dtype=np.complex128)

    mag_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] mag = mag_arr
    hc_arr = np.empty((depth, m), dtype=np.complex128)
    g_arr = np.empty((depth, depth), dtype=np.complex128)
    b_arr = np.empty(depth, dtype=np.complex128)
    cdef dc[:, ::1] hc = hc_arr
    cdef dc[:, ::1] g = g_arr
    cdef dc[::1] b = b_arr

    cdef int[:, ::1] p_idx
    cdef signed char[:, ::1] p_cnt
    cdef dc[:, ::1] p_res
    cdef int[:, ::1] c_idx
    cdef signed char[:, ::1] c_cnt
    cdef dc[:, ::1] c_res
    cdef dc[:, ::1] c_sval

    cdef long long total_admitted = 0

    for level in range(1, depth + 1):
        cap = par_count * n_children
        ch_indices = np.empty((cap, level), dtype=np.int32)
        ch_blockcnt = np.empty((cap, n_f), dtype=np.int8)
        ch_res = np.empty((cap, m), dtype=np.complex128)
        ch_svals = np.empty((cap, level), dtype=np.complex128)
        p_idx = par_indices
        p_cnt = par_blockcnt
        p_res = par_res
        c_idx = ch_indices
        c_cnt = ch_blockcnt
        c_res = ch_res
        c_sval = ch_svals
        seen = set()
        q = 0
        for i_par in range(par_count):
            for col in range(n):
                acc = 0
                for i in range(m):
                    acc = acc + H[i, col].conjugate() * p_res[i_par, i]
                mag[col] = _abs2(acc)
            for j in range(level - 1):
                mag[p_idx[i_par, j]] = -1.0
            for pick in range(n_children):
                best = -1.0
                bi = -1
                for col in range(n):
                    if mag[col] > best:
                        best = mag[col]
                        bi = col
                if bi < 0:
                    break
                mag[bi] = -1.0
                block = bi // n_s
                if p_cnt[i_par, block] + 1 > n_a:
                    continue
                touched = 1 if p_cnt[i_par, block] == 0 else 0
                for j in range(n_f):
                    if p_cnt[i_par, j] > 0:
                        touched += 1
                if touched > n_af:
                    continue
                # sorted insertion of the new index
                pos = 0
                for j in range(level - 1):
                    if p_idx[i_par, j] < bi:
                        pos += 1
                for j in range(pos):
                    c_idx[q, j] = p_idx[i_par, j]
                c_idx[q, pos] = bi
                for j in range(pos, level - 1):
                    c_idx[q, j + 1] = p_idx[i_par, j]
                key = ch_indices[q].tobytes()
                if key in seen:
                    continue
                seen.add(key)
                for j in range(n_f):
                    c_cnt[q, j] = p_cnt[i_par, j]
                c_cnt[q, block] += 1
                for j in range(level):
                    col = c_idx[q, j]
                    for i in range(m):
                        hc[j, i] = H[i, col]
                _gram_solve_project(hc, y, g, b, points, 0.0, level, m)
                for j in range(level):
                    c_sval[q, j] = b[j]
                for i in range(m):
                    acc = y[i]
                    for j in range(level):
                        acc = acc - b[j] * hc[j, i]
                    c_res[q, i] = acc
                q += 1
        if q == 0:
            break
        par_indices = ch_indices[:q].copy()
        par_blockcnt = ch_blockcnt[:q].copy()
        par_res = ch_res[:q].copy()
        par_svals = ch_svals[:q].copy()
        par_count = q
        total_admitted += q
    # min-residual candidate of the last populated level
    p_res = par_res
    best = INFINITY
    bi = 0
    for i_par in range(par_count):
        d = 0.0
        for i in range(m):
            d += _abs2(p_res[i_par, i])
        if d < best:
            best = d
            bi = i_par
    indices = np.asarray(par_indices[bi], dtype=np.int64)
    svals = np.asarray(par_svals[bi], dtype=np.complex128)
    return indices, svals, float(best), int(total_admitted)
