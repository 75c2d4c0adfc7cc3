"""Pure-Python/numpy versions of the routines in ``_core.pyx``.

Same signatures, same summation orders; used when the extension is not
built or when ``WSSVM_BACKEND=python``.
"""
import numpy as np

LINEAR, POLYNOMIAL, RBF, SIGMOID = range(4)


def _ipow(base, n):
    result = np.ones_like(base) if isinstance(base, np.ndarray) else 1.0
    while n > 0:
        if n & 1:
            result = result * base
        n >>= 1
        if n:
            base = base * base
    return result


def _finish(dot, sq_a, sq_b, kind, gamma, coef0, degree):
    if kind == LINEAR:
        return dot
    if kind == POLYNOMIAL:
        return _ipow(gamma * dot + coef0, degree)
    if kind == RBF:
        d2 = sq_a + sq_b - 2.0 * dot
        return np.exp(-gamma * np.maximum(d2, 0.0))
    return np.tanh(gamma * dot + coef0)


def sparse_dot(ai, av, bi, bv):
    p = q = 0
    s = 0.0
    na, nb = len(ai), len(bi)
    while p < na and q < nb:
        if ai[p] == bi[q]:
            s += float(av[p]) * float(bv[q])
            p += 1
            q += 1
        elif ai[p] < bi[q]:
            p += 1
        else:
            q += 1
    return s


def row_sq_norms(indptr, indices, data):
    n = len(indptr) - 1
    rows = np.repeat(np.arange(n), np.diff(indptr))
    return np.bincount(rows, weights=data * data, minlength=n).astype(np.float64)


def kernel_value(ai, av, sq_a, bi, bv, sq_b, kind, gamma, coef0, degree):
    return float(_finish(sparse_dot(ai, av, bi, bv), sq_a, sq_b, kind, gamma, coef0, degree))


def kernel_row(qi, qv, q_sq, indptr, indices, data, sq_norms, targets,
               kind, gamma, coef0, degree, n_cols, out):
    dense = np.zeros(n_cols)
    dense[qi] = qv
    starts = indptr[targets]
    lengths = indptr[targets + 1] - starts
    total = int(lengths.sum())
    if total:
        offsets = np.zeros(len(targets), dtype=np.intp)
        np.cumsum(lengths[:-1], out=offsets[1:])
        pos = np.repeat(starts - offsets, lengths) + np.arange(total)
        prods = data[pos] * dense[indices[pos]]
        dots = np.bincount(np.repeat(np.arange(len(targets)), lengths), weights=prods,
                           minlength=len(targets))
    else:
        dots = np.zeros(len(targets))
    out[:] = _finish(dots, q_sq, sq_norms[targets], kind, gamma, coef0, degree)


def pair_sweeps(Q, G, alpha, y, C, inner_tol, max_sweeps, eta_floor):
    n = Q.shape[0]
    Ql = Q.tolist()
    g = G.tolist()
    al = alpha.tolist()
    yl = y.tolist()
    total = 0.0
    sweep = 0
    while sweep < max_sweeps:
        sweep += 1
        best = 0.0
        for a in range(n):
            for b in range(n):
                if b == a:
                    continue
                ya, yb = yl[a], yl[b]
                if not ((ya > 0 and al[a] < C) or (ya < 0 and al[a] > 0)):
                    break
                if not ((yb > 0 and al[b] > 0) or (yb < 0 and al[b] < C)):
                    continue
                diff = -ya * g[a] + yb * g[b]
                if diff <= 0.0:
                    continue
                eta = Ql[a][a] + Ql[b][b] - 2.0 * ya * yb * Ql[a][b]
                ua = C - al[a] if ya > 0 else al[a]
                ub = al[b] if yb > 0 else C - al[b]
                if eta > eta_floor and diff / eta < ua and diff / eta < ub:
                    t, hit_a, hit_b = diff / eta, False, False
                elif ua <= ub:
                    t, hit_a, hit_b = ua, True, ua == ub
                else:
                    t, hit_a, hit_b = ub, False, True
                gain = t * diff - 0.5 * eta * t * t
                if gain <= 0.0:
                    continue
                na = (C if ya > 0 else 0.0) if hit_a else al[a] + ya * t
                nb = (0.0 if yb > 0 else C) if hit_b else al[b] - yb * t
                da, db = na - al[a], nb - al[b]
                al[a], al[b] = na, nb
                qa = [row[a] for row in Ql]
                qb = [row[b] for row in Ql]
                for k in range(n):
                    g[k] += qa[k] * da + qb[k] * db
                total += gain
                best = max(best, gain)
        if best < inner_tol:
            break
    G[:] = g
    alpha[:] = al
    return sweep, total


def seq_dot(a, b):
    if len(a) == 0:
        return 0.0
    return float(np.cumsum(a * b)[-1])
