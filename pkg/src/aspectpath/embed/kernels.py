"""Compiled inner loops: path composition, both hinge losses, samplers, SGD.

Everything here works on raw float64 arrays so that worker threads can run the
training loop with the GIL released and write to shared parameters without
locks.  Path ``p`` is described by ``rows[p, :hops[p]]``, indices into the
relation matrix.
"""
import numpy as np
from numba import njit

MAX_HOPS = 3
RESAMPLE_LIMIT = 10

_U12 = np.uint64(12)
_U25 = np.uint64(25)
_U27 = np.uint64(27)
_U11 = np.uint64(11)
_MULT = np.uint64(2685821657736338717)


@njit(cache=True, inline="always")
def next_uniform(state):
    """xorshift64* step; returns a double in [0, 1)."""
    x = state[0]
    x ^= x >> _U12
    x ^= x << _U25
    x ^= x >> _U27
    state[0] = x
    return np.float64((x * _MULT) >> _U11) * (1.0 / 9007199254740992.0)


@njit(cache=True)
def draw_excluding(cdf, exclude, u):
    """Index drawn from cumulative weights ``cdf`` with entry ``exclude`` removed."""
    n = cdf.shape[0]
    if exclude < 0 or exclude >= n:
        idx = np.searchsorted(cdf, u * cdf[n - 1], side="right")
        return min(idx, n - 1)
    lo = cdf[exclude - 1] if exclude > 0 else 0.0
    w_ex = cdf[exclude] - lo
    x = u * (cdf[n - 1] - w_ex)
    if x >= lo:
        x += w_ex
    idx = min(np.searchsorted(cdf, x, side="right"), n - 1)
    if idx == exclude:
        # rounding landed on the excluded bucket
        idx = exclude + 1 if exclude + 1 < n else exclude - 1
    return idx


@njit(cache=True)
def pick(cdf, n, u):
    """Position drawn from the first ``n`` cumulative weights, given a uniform ``u``."""
    return min(np.searchsorted(cdf[:n], u * cdf[n - 1], side="right"), n - 1)


@njit(cache=True)
def draw_path(cdf, n, exclude_pos, state):
    """Position in a per-hop table; rejects ``exclude_pos`` up to RESAMPLE_LIMIT times."""
    idx = pick(cdf, n, next_uniform(state))
    tries = 0
    while idx == exclude_pos and tries < RESAMPLE_LIMIT:
        idx = pick(cdf, n, next_uniform(state))
        tries += 1
    return idx


@njit(cache=True)
def htanh(x):
    if x > 1.0:
        return 1.0
    if x < -1.0:
        return -1.0
    return x


@njit(cache=True)
def compose(relations, W, rows, hop, H, A):
    """Fill ``H[i]`` (and pre-activations ``A[i]``, i >= 1) for one path; returns ``H[hop-1]``."""
    d = relations.shape[1]
    for c in range(d):
        H[0, c] = relations[rows[0], c]
    for i in range(1, hop):
        g = relations[rows[i]]
        for r in range(d):
            s = 0.0
            for c in range(d):
                s += W[r, c] * H[i - 1, c]
            for c in range(d):
                s += W[r, d + c] * g[c]
            A[i, r] = s
            H[i, r] = htanh(s)
    return H[hop - 1]


@njit(cache=True)
def compose_backward(relations, W, rows, hop, H, A, dh_out, G, gW, dh, da):
    """Accumulate gradients of a composed path given d(loss)/d(output) ``dh_out``.

    Relation-row gradients go to ``G[i]`` (step i), composer gradients to ``gW``.
    The clipped activation passes gradient only strictly inside (-1, 1).
    """
    d = relations.shape[1]
    for c in range(d):
        dh[c] = dh_out[c]
    for i in range(hop - 1, 0, -1):
        for r in range(d):
            da[r] = dh[r] if abs(A[i, r]) < 1.0 else 0.0
        g = relations[rows[i]]
        for r in range(d):
            if da[r] != 0.0:
                for c in range(d):
                    gW[r, c] += da[r] * H[i - 1, c]
                    gW[r, d + c] += da[r] * g[c]
        for c in range(d):
            s_h = 0.0
            s_g = 0.0
            for r in range(d):
                s_h += W[r, c] * da[r]
                s_g += W[r, d + c] * da[r]
            dh[c] = s_h
            G[i, c] += s_g
    for c in range(d):
        G[0, c] += dh[c]


@njit(cache=True)
def path_loss_grad(target, relations, W, w1, w2, rows, hops, m, H, A, G, gu, gW, u, dh, da):
    """Translation hinge loss of one triple against ``m`` corrupted paths.

    ``rows[0]``/``hops[0]`` is the observed path, ``rows[1..m]`` the negatives.
    On return ``gu`` is d(loss)/d(w2) (= -d(loss)/d(w1)), ``G[j, i]`` the gradient
    for relation row ``rows[j, i]`` and ``gW`` the composer gradient.
    Returns ``(loss, number of active hinge terms)``.
    """
    d = target.shape[1]
    for c in range(d):
        u[c] = target[w2, c] - target[w1, c]
        gu[c] = 0.0
    G[: m + 1] = 0.0
    gW[:] = 0.0
    for j in range(m + 1):
        compose(relations, W, rows[j], hops[j], H[j], A[j])
    pos = H[0, hops[0] - 1]
    s_pos = 0.0
    for c in range(d):
        s_pos += u[c] * pos[c]
    loss = 0.0
    active = 0
    for j in range(1, m + 1):
        neg = H[j, hops[j] - 1]
        s_neg = 0.0
        for c in range(d):
            s_neg += u[c] * neg[c]
        margin = 1.0 - s_pos + s_neg
        if margin > 0.0:
            loss += margin
            active += 1
            for c in range(d):
                gu[c] += neg[c] - pos[c]
            compose_backward(relations, W, rows[j], hops[j], H[j], A[j], u, G[j], gW, dh, da)
    if active > 0:
        for c in range(d):
            u[c] *= -active
        compose_backward(relations, W, rows[0], hops[0], H[0], A[0], u, G[0], gW, dh, da)
    return loss, active


@njit(cache=True)
def context_loss_grad(target, context, t, c, negs, m, gw, active):
    """Linear-context hinge loss of target ``t`` / context ``c`` against ``m`` negatives.

    ``gw`` receives d(loss)/d(target[t]); ``active[j]`` flags live hinge terms.
    d(loss)/d(context[c]) is ``-n_active * target[t]`` and each live negative
    gets ``+target[t]``.
    """
    d = target.shape[1]
    s = 0.0
    for k in range(d):
        gw[k] = 0.0
        s += target[t, k] * context[c, k]
    loss = 0.0
    n = 0
    for j in range(m):
        cn = negs[j]
        sn = 0.0
        for k in range(d):
            sn += target[t, k] * context[cn, k]
        margin = 1.0 - s + sn
        if margin > 0.0:
            loss += margin
            n += 1
            active[j] = 1
            for k in range(d):
                gw[k] += context[cn, k] - context[c, k]
        else:
            active[j] = 0
    return loss, n


@njit(nogil=True, cache=True)
def train_range(target, context, relations, W, word_cdf,
                path_rows, path_hops, hop_ids, hop_cdf, hop_n, hop_pos,
                kind, inst_a, inst_b, inst_p, start, end,
                k_w, k_r, lr0, total, progress, state, trace, trace_every):
    """SGD over instances ``[start, end)``.

    ``kind`` 0 is a (target, context) pair, 1 a (w1, w2, path) triple.  Shared
    arrays are updated in place without synchronization; ``progress[0]`` is the
    (racy) global instance counter driving the linear learning-rate decay.
    Loss sums per ``trace_every`` instances are written to ``trace``.
    """
    d = target.shape[1]
    kmax = max(k_w, k_r.max())
    H = np.zeros((kmax + 1, MAX_HOPS, d))
    A = np.zeros((kmax + 1, MAX_HOPS, d))
    G = np.zeros((kmax + 1, MAX_HOPS, d))
    gW = np.zeros(W.shape)
    gu = np.zeros(d)
    u = np.zeros(d)
    dh = np.zeros(d)
    da = np.zeros(d)
    wbuf = np.zeros(d)
    rows = np.zeros((kmax + 1, MAX_HOPS), dtype=np.int64)
    hops = np.zeros(kmax + 1, dtype=np.int64)
    negs = np.zeros(kmax, dtype=np.int64)
    active = np.zeros(kmax, dtype=np.int64)

    for n in range(start, end):
        done = progress[0]
        frac = 1.0 - done / total
        lr = lr0 * (frac if frac > 1e-4 else 1e-4)
        loss = 0.0
        if kind[n] == 0:
            t = inst_a[n]
            c = inst_b[n]
            for j in range(k_w):
                negs[j] = draw_excluding(word_cdf, c, next_uniform(state))
            loss, n_act = context_loss_grad(target, context, t, c, negs, k_w, gu, active)
            if n_act > 0:
                for k in range(d):
                    wbuf[k] = target[t, k]
                    target[t, k] -= lr * gu[k]
                    context[c, k] += lr * n_act * wbuf[k]
                for j in range(k_w):
                    if active[j]:
                        cn = negs[j]
                        for k in range(d):
                            context[cn, k] -= lr * wbuf[k]
        else:
            p = inst_p[n]
            hop = path_hops[p]
            m = k_r[hop - 1]
            rows[0] = path_rows[p]
            hops[0] = hop
            nh = hop_n[hop - 1]
            excl = hop_pos[p]
            for j in range(1, m + 1):
                q = hop_ids[hop - 1, draw_path(hop_cdf[hop - 1], nh, excl, state)]
                rows[j] = path_rows[q]
                hops[j] = hop
            w1 = inst_a[n]
            w2 = inst_b[n]
            loss, n_act = path_loss_grad(target, relations, W, w1, w2, rows, hops, m,
                                         H, A, G, gu, gW, u, dh, da)
            if n_act > 0:
                for k in range(d):
                    target[w2, k] -= lr * gu[k]
                    target[w1, k] += lr * gu[k]
                for j in range(m + 1):
                    for i in range(hops[j]):
                        rr = rows[j, i]
                        for k in range(d):
                            relations[rr, k] -= lr * G[j, i, k]
                if hop > 1:
                    for r in range(d):
                        for k in range(2 * d):
                            W[r, k] -= lr * gW[r, k]
        slot = (n - start) // trace_every
        trace[slot] += loss
        progress[0] += 1
