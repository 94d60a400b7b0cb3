"""Hot inner loops, each in two flavours.

``*_loop`` functions are explicit loops compiled with numba; ``*_numpy``
functions are vectorised (or stdlib-backed) equivalents that need no
compiler.  The public names at the bottom of the module point at one or the
other depending on :data:`fragkit._accel.USE_NUMBA`.  Both flavours return
bit-identical results; the test suite checks this.
"""
import numpy as np

from ._accel import USE_NUMBA, njit

# ---------------------------------------------------------------- LZ76


@njit
def lz76_loop(bits):
    """Kaspar-Schuster phrase count of a 0/1 sequence in linear time.

    Each phrase extends while its text so far occurs in the history
    ``bits[:pos + k]``.  That membership test runs against a suffix
    automaton of the history, grown one symbol at a time as the phrase
    advances.
    """
    n = bits.shape[0]
    cap = 2 * n + 2
    nxt = np.full((cap, 2), -1, dtype=np.int64)
    link = np.full(cap, -1, dtype=np.int64)
    length = np.zeros(cap, dtype=np.int64)
    n_states = 1
    last = 0
    built = 0
    c = 0
    pos = 0
    while pos < n:
        k = 0
        state = 0
        while True:
            if pos + k >= n:
                # phrase runs to the end while still copyable
                return c + 1
            while built < pos + k:
                # append bits[built] to the automaton
                ch = bits[built]
                cur = n_states
                n_states += 1
                length[cur] = length[last] + 1
                p = last
                while p >= 0 and nxt[p, ch] < 0:
                    nxt[p, ch] = cur
                    p = link[p]
                if p < 0:
                    link[cur] = 0
                else:
                    q = nxt[p, ch]
                    if length[p] + 1 == length[q]:
                        link[cur] = q
                    else:
                        clone = n_states
                        n_states += 1
                        length[clone] = length[p] + 1
                        nxt[clone, 0] = nxt[q, 0]
                        nxt[clone, 1] = nxt[q, 1]
                        link[clone] = link[q]
                        while p >= 0 and nxt[p, ch] == q:
                            nxt[p, ch] = clone
                            p = link[p]
                        link[q] = clone
                        link[cur] = clone
                last = cur
                built += 1
            # a clone may have taken over the shorter strings of ``state``
            while state > 0 and k <= length[link[state]]:
                state = link[state]
            t = nxt[state, bits[pos + k]]
            if t < 0:
                break
            state = t
            k += 1
        c += 1
        pos += k + 1
    return c


def lz76_numpy(bits):
    """Same count as :func:`lz76_loop`, parsing phrases with ``bytes.find``.

    A phrase starting at ``pos`` grows while its prefix can be copied from
    the history ``s[:pos + k]``.  A copy source found at ``src`` stays valid
    while the next symbols keep agreeing, so a new search is only needed on
    disagreement, and earlier sources never need re-checking.
    """
    s = np.ascontiguousarray(bits, dtype=np.uint8).tobytes()
    n = len(s)
    c = 0
    pos = 0
    while pos < n:
        k = 0
        src = -1
        while True:
            if pos + k >= n:
                # phrase runs to the end while still copyable
                return c + 1
            if k > 0 and s[src + k] == s[pos + k]:
                k += 1
                continue
            src = s.find(s[pos:pos + k + 1], src + 1, pos + k)
            if src < 0:
                break
            k += 1
        c += 1
        pos += k + 1
    return c


# ---------------------------------------------------------------- LCS


@njit
def lcsubstring_loop(a, b):
    m = b.shape[0]
    prev = np.zeros(m + 1, dtype=np.int64)
    cur = np.zeros(m + 1, dtype=np.int64)
    best = 0
    for i in range(a.shape[0]):
        ai = a[i]
        for j in range(1, m + 1):
            if ai == b[j - 1]:
                v = prev[j - 1] + 1
                cur[j] = v
                if v > best:
                    best = v
            else:
                cur[j] = 0
        prev, cur = cur, prev
    return best


def lcsubstring_numpy(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    prev = np.zeros(b.shape[0] + 1, dtype=np.int64)
    best = 0
    for ai in a:
        cur = np.zeros_like(prev)
        cur[1:] = np.where(b == ai, prev[:-1] + 1, 0)
        best = max(best, int(cur.max()))
        prev = cur
    return best


@njit
def lcsubsequence_loop(a, b):
    m = b.shape[0]
    prev = np.zeros(m + 1, dtype=np.int64)
    cur = np.zeros(m + 1, dtype=np.int64)
    for i in range(a.shape[0]):
        ai = a[i]
        for j in range(1, m + 1):
            if ai == b[j - 1]:
                cur[j] = prev[j - 1] + 1
            elif prev[j] >= cur[j - 1]:
                cur[j] = prev[j]
            else:
                cur[j] = cur[j - 1]
        prev, cur = cur, prev
    return prev[m]


def lcsubsequence_numpy(a, b):
    # On a match prev[j-1] + 1 dominates both neighbours, so each DP row is
    # the running maximum of max(prev[j], match * (prev[j-1] + 1)).
    a = np.asarray(a)
    b = np.asarray(b)
    prev = np.zeros(b.shape[0] + 1, dtype=np.int64)
    for ai in a:
        cand = np.maximum(prev[1:], np.where(b == ai, prev[:-1] + 1, 0))
        cur = np.empty_like(prev)
        cur[0] = 0
        cur[1:] = np.maximum.accumulate(cand)
        prev = cur
    return int(prev[-1])


# ---------------------------------------------------------------- nearest neighbours


@njit
def nearest_neighbors_loop(x, dim):
    """Exact nearest neighbour of every delay vector of ``x`` (int64).

    Returns ``(index, squared distance)``; ties go to the lowest index.
    Candidates are visited in order of their first coordinate, outward from
    the query, until that coordinate alone rules out a closer or tied match.
    """
    n = x.shape[0] - dim + 1
    nn = np.full(n, -1, dtype=np.int64)
    dist = np.zeros(n, dtype=np.int64)
    if dim <= 7 and x.min() >= 0 and x.max() < 256:
        # exact duplicates: the lowest-index other copy is the neighbour at distance 0
        code = np.zeros(n, dtype=np.int64)
        for k in range(dim):
            code = code * 256 + x[k:k + n]
        by_code = np.argsort(code, kind="mergesort")
        start = 0
        while start < n:
            stop = start + 1
            while stop < n and code[by_code[stop]] == code[by_code[start]]:
                stop += 1
            if stop - start > 1:
                first, second = by_code[start], by_code[start + 1]
                for r in range(start, stop):
                    nn[by_code[r]] = second if by_code[r] == first else first
            start = stop
    order = np.argsort(x[:n], kind="mergesort")
    rank = np.empty(n, dtype=np.int64)
    for r in range(n):
        rank[order[r]] = r
    for i in range(n):
        if nn[i] >= 0:
            continue
        best = -1
        best_d = 0
        for direction in (1, -1):
            r = rank[i] + direction
            while 0 <= r < n:
                j = order[r]
                gap = x[j] - x[i]
                if best >= 0 and gap * gap > best_d:
                    break
                d = 0
                for k in range(dim):
                    t = x[i + k] - x[j + k]
                    d += t * t
                    if best >= 0 and d > best_d:
                        break
                if best < 0 or d < best_d or (d == best_d and j < best):
                    best = j
                    best_d = d
                r += direction
        nn[i] = best
        dist[i] = best_d
    return nn, dist


def nearest_neighbors_numpy(x, dim, block=512):
    x = np.asarray(x, dtype=np.int64)
    n = x.shape[0] - dim + 1
    vecs = np.lib.stride_tricks.sliding_window_view(x, dim)[:n]
    nn = np.empty(n, dtype=np.int64)
    dist = np.empty(n, dtype=np.int64)
    big = np.iinfo(np.int64).max
    for start in range(0, n, block):
        stop = min(n, start + block)
        diff = vecs[start:stop, None, :] - vecs[None, :, :]
        d = np.einsum("ijk,ijk->ij", diff, diff)
        rows = np.arange(stop - start)
        d[rows, rows + start] = big
        j = np.argmin(d, axis=1)
        nn[start:stop] = j
        dist[start:stop] = d[rows, j]
    return nn, dist


# ---------------------------------------------------------------- tree split search


@njit
def best_split_loop(X, y, w, n_classes, min_leaf, features):
    """Best weighted-Gini binary split over the listed feature columns.

    Returns ``(feature, threshold, score)`` where score is the summed
    ``W_child * gini_child``; feature is -1 when no admissible split exists.
    Candidates are midpoints between consecutive distinct values; a split
    is admissible when both children weigh at least ``min_leaf``.
    """
    n = X.shape[0]
    best_f = -1
    best_t = 0.0
    best_s = np.inf
    left = np.zeros(n_classes)
    total = np.zeros(n_classes)
    for f in features:
        col = X[:, f]
        order = np.argsort(col, kind="mergesort")
        for c in range(n_classes):
            left[c] = 0.0
            total[c] = 0.0
        for i in range(n):
            total[y[order[i]]] += w[order[i]]
        wl = 0.0
        wt = 0.0
        for c in range(n_classes):
            wt += total[c]
        for i in range(n - 1):
            o = order[i]
            left[y[o]] += w[o]
            wl += w[o]
            v0 = col[o]
            v1 = col[order[i + 1]]
            if not v0 < v1:
                continue
            wr = wt - wl
            if wl < min_leaf or wr < min_leaf:
                continue
            sl = 0.0
            sr = 0.0
            for c in range(n_classes):
                sl += left[c] * left[c]
                r = total[c] - left[c]
                sr += r * r
            s = (wl - sl / wl) + (wr - sr / wr)
            if s < best_s:
                best_s = s
                best_f = f
                best_t = (v0 + v1) / 2.0
    return best_f, best_t, best_s


def best_split_numpy(X, y, w, n_classes, min_leaf, features):
    best_f, best_t, best_s = -1, 0.0, np.inf
    onehot = np.zeros((X.shape[0], n_classes))
    onehot[np.arange(X.shape[0]), y] = w
    for f in features:
        col = X[:, f]
        order = np.argsort(col, kind="stable")
        v = col[order]
        cum = np.cumsum(onehot[order], axis=0)
        total = cum[-1].copy()
        # rebuild the running totals in the loop kernel's summation order
        wl = np.cumsum(w[order])[:-1]
        wt = 0.0
        for c in range(n_classes):
            wt += total[c]
        left = cum[:-1]
        ok = v[:-1] < v[1:]
        wr = wt - wl
        ok &= (wl >= min_leaf) & (wr >= min_leaf)
        if not ok.any():
            continue
        idx = np.nonzero(ok)[0]
        lsel = left[idx]
        sl = np.zeros(idx.shape[0])
        sr = np.zeros(idx.shape[0])
        for c in range(n_classes):
            sl += lsel[:, c] * lsel[:, c]
            r = total[c] - lsel[:, c]
            sr += r * r
        s = (wl[idx] - sl / wl[idx]) + (wr[idx] - sr / wr[idx])
        k = int(np.argmin(s))
        if s[k] < best_s:
            best_s = float(s[k])
            best_f = int(f)
            best_t = (v[idx[k]] + v[idx[k] + 1]) / 2.0
    return best_f, best_t, best_s


# ---------------------------------------------------------------- SMO


@njit
def smo_loop(K, y, C, tol, max_iter):
    """Dual soft-margin SVM by SMO with maximal-violating-pair selection.

    ``K`` is the Gram matrix, ``y`` holds +/-1 and ``C`` per-sample box
    constraints.  Returns ``(alpha, b, iterations, converged)``.
    """
    n = y.shape[0]
    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of 0.5 a'Qa - e'a
    it = 0
    converged = False
    while it < max_iter:
        i = -1
        g_max = -np.inf
        j = -1
        g_min = np.inf
        for t in range(n):
            yg = -y[t] * grad[t]
            up = (y[t] > 0 and alpha[t] < C[t]) or (y[t] < 0 and alpha[t] > 0)
            low = (y[t] > 0 and alpha[t] > 0) or (y[t] < 0 and alpha[t] < C[t])
            if up and yg > g_max:
                g_max = yg
                i = t
            if low and yg < g_min:
                g_min = yg
                j = t
        if i < 0 or j < 0 or g_max - g_min <= tol:
            converged = True
            break
        it += 1
        qii = K[i, i]
        qjj = K[j, j]
        qij = y[i] * y[j] * K[i, j]
        a_i = alpha[i]
        a_j = alpha[j]
        if y[i] != y[j]:
            quad = qii + qjj + 2.0 * qij
            if quad <= 0:
                quad = 1e-12
            delta = (-grad[i] - grad[j]) / quad
            diff = a_i - a_j
            new_i = a_i + delta
            new_j = a_j + delta
            if diff > 0:
                if new_j < 0:
                    new_j = 0.0
                    new_i = diff
            else:
                if new_i < 0:
                    new_i = 0.0
                    new_j = -diff
            if diff > C[i] - C[j]:
                if new_i > C[i]:
                    new_i = C[i]
                    new_j = C[i] - diff
            else:
                if new_j > C[j]:
                    new_j = C[j]
                    new_i = C[j] + diff
        else:
            quad = qii + qjj - 2.0 * qij
            if quad <= 0:
                quad = 1e-12
            delta = (grad[i] - grad[j]) / quad
            s = a_i + a_j
            new_i = a_i - delta
            new_j = a_j + delta
            if s > C[i]:
                if new_i > C[i]:
                    new_i = C[i]
                    new_j = s - C[i]
            else:
                if new_j < 0:
                    new_j = 0.0
                    new_i = s
            if s > C[j]:
                if new_j > C[j]:
                    new_j = C[j]
                    new_i = s - C[j]
            else:
                if new_i < 0:
                    new_i = 0.0
                    new_j = s
        d_i = new_i - a_i
        d_j = new_j - a_j
        alpha[i] = new_i
        alpha[j] = new_j
        for t in range(n):
            grad[t] += y[t] * (y[i] * K[t, i] * d_i + y[j] * K[t, j] * d_j)
    b = _smo_bias(y, alpha, grad, C)
    return alpha, b, it, converged


@njit
def _smo_bias(y, alpha, grad, C):
    n = y.shape[0]
    s = 0.0
    nf = 0
    ub = np.inf
    lb = -np.inf
    for t in range(n):
        yg = y[t] * grad[t]
        if alpha[t] > 0 and alpha[t] < C[t]:
            s += yg
            nf += 1
        elif (y[t] > 0 and alpha[t] >= C[t]) or (y[t] < 0 and alpha[t] <= 0):
            if yg > lb:
                lb = yg
        else:
            if yg < ub:
                ub = yg
    if nf > 0:
        rho = s / nf
    else:
        rho = (ub + lb) / 2.0
    return -rho


def smo_numpy(K, y, C, tol, max_iter):
    n = y.shape[0]
    alpha = np.zeros(n)
    grad = -np.ones(n)
    it = 0
    converged = False
    pos = y > 0
    while it < max_iter:
        yg = -y * grad
        up = (pos & (alpha < C)) | (~pos & (alpha > 0))
        low = (pos & (alpha > 0)) | (~pos & (alpha < C))
        if not up.any() or not low.any():
            converged = True
            break
        g_up = np.where(up, yg, -np.inf)
        g_low = np.where(low, yg, np.inf)
        i = int(np.argmax(g_up))
        j = int(np.argmin(g_low))
        if g_up[i] - g_low[j] <= tol:
            converged = True
            break
        it += 1
        new_i, new_j = _smo_pair(K, y, C, grad, alpha, i, j)
        d_i = new_i - alpha[i]
        d_j = new_j - alpha[j]
        alpha[i] = new_i
        alpha[j] = new_j
        grad += y * (y[i] * K[:, i] * d_i + y[j] * K[:, j] * d_j)
    b = _smo_bias_numpy(y, alpha, grad, C)
    return alpha, b, it, converged


def _smo_pair(K, y, C, grad, alpha, i, j):
    qii = K[i, i]
    qjj = K[j, j]
    qij = y[i] * y[j] * K[i, j]
    a_i = alpha[i]
    a_j = alpha[j]
    if y[i] != y[j]:
        quad = qii + qjj + 2.0 * qij
        if quad <= 0:
            quad = 1e-12
        delta = (-grad[i] - grad[j]) / quad
        diff = a_i - a_j
        new_i = a_i + delta
        new_j = a_j + delta
        if diff > 0:
            if new_j < 0:
                new_j, new_i = 0.0, diff
        elif new_i < 0:
            new_i, new_j = 0.0, -diff
        if diff > C[i] - C[j]:
            if new_i > C[i]:
                new_i, new_j = C[i], C[i] - diff
        elif new_j > C[j]:
            new_j, new_i = C[j], C[j] + diff
    else:
        quad = qii + qjj - 2.0 * qij
        if quad <= 0:
            quad = 1e-12
        delta = (grad[i] - grad[j]) / quad
        s = a_i + a_j
        new_i = a_i - delta
        new_j = a_j + delta
        if s > C[i]:
            if new_i > C[i]:
                new_i, new_j = C[i], s - C[i]
        elif new_j < 0:
            new_j, new_i = 0.0, s
        if s > C[j]:
            if new_j > C[j]:
                new_j, new_i = C[j], s - C[j]
        elif new_i < 0:
            new_i, new_j = 0.0, s
    return new_i, new_j


def _smo_bias_numpy(y, alpha, grad, C):
    yg = y * grad
    free = (alpha > 0) & (alpha < C)
    if free.any():
        # sequential sum to mirror the loop kernel
        s = 0.0
        for v in yg[free]:
            s += v
        return -(s / int(free.sum()))
    at_upper = ((y > 0) & (alpha >= C)) | ((y < 0) & (alpha <= 0))
    lb = yg[at_upper].max() if at_upper.any() else -np.inf
    ub = yg[~at_upper].min() if (~at_upper).any() else np.inf
    return -((ub + lb) / 2.0)


if USE_NUMBA:
    lz76_phrase_count = lz76_loop
    lcsubstring_length = lcsubstring_loop
    lcsubsequence_length = lcsubsequence_loop
    nearest_neighbors = nearest_neighbors_loop
    best_split = best_split_loop
    smo_solve = smo_loop
else:
    lz76_phrase_count = lz76_numpy
    lcsubstring_length = lcsubstring_numpy
    lcsubsequence_length = lcsubsequence_numpy
    nearest_neighbors = nearest_neighbors_numpy
    best_split = best_split_numpy
    smo_solve = smo_numpy

BACKEND = "numba" if USE_NUMBA else "numpy"
