"""Compiled inner loops for tree growing and Pegasos training.

All kernels are ``nogil`` so fold- and candidate-level threads run them
concurrently.  Randomness comes from an explicit splitmix64 stream seeded by
the caller, never from global state, so results do not depend on which
thread runs a kernel.
"""

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


@njit(cache=True, nogil=True)
def _next_u64(state):
    state[0] += _GOLDEN
    z = state[0]
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


@njit(cache=True, nogil=True)
def _shuffle(arr, state):
    for i in range(arr.shape[0] - 1, 0, -1):
        j = np.int64(_next_u64(state) % np.uint64(i + 1))
        tmp = arr[i]
        arr[i] = arr[j]
        arr[j] = tmp


@njit(cache=True, nogil=True)
def build_tree(X, y_cls, y_reg, w, rows, n_classes, regression, max_depth, min_leaf,
               max_features, seed):
    """Grow one CART tree over ``rows`` of ``X`` (depth-first).

    Classification minimises weighted Gini impurity, regression minimises
    weighted squared error.  Thresholds sit at midpoints between adjacent
    distinct values; samples with ``x <= threshold`` go left.  When
    ``max_features < d`` the candidate features of each node are visited in
    a random order and the scan stops after ``max_features`` non-constant
    ones.  ``max_depth < 0`` means unlimited.
    """
    n, d = X.shape
    m_all = rows.shape[0]
    cap = 2 * m_all + 1
    n_out = 1 if regression else n_classes
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros((cap, n_out))
    weight = np.zeros(cap)

    idx = rows.copy()
    buf = np.empty(m_all, dtype=np.int64)
    st_node = np.empty(cap, dtype=np.int64)
    st_start = np.empty(cap, dtype=np.int64)
    st_end = np.empty(cap, dtype=np.int64)
    st_depth = np.empty(cap, dtype=np.int64)
    top = 0
    st_node[0] = 0
    st_start[0] = 0
    st_end[0] = m_all
    st_depth[0] = 0
    top = 1
    n_nodes = 1

    state = np.empty(1, dtype=np.uint64)
    state[0] = np.uint64(seed)
    feats = np.arange(d)
    cl = np.zeros(n_out)
    cr = np.zeros(n_out)
    vals = np.empty(m_all)

    while top > 0:
        top -= 1
        nid = st_node[top]
        s = st_start[top]
        e = st_end[top]
        depth = st_depth[top]
        m = e - s

        wsum = 0.0
        ymin = np.inf
        ymax = -np.inf
        for k in range(n_out):
            cr[k] = 0.0
        for p in range(s, e):
            i = idx[p]
            wsum += w[i]
            if regression:
                cr[0] += w[i] * y_reg[i]
                if y_reg[i] < ymin:
                    ymin = y_reg[i]
                if y_reg[i] > ymax:
                    ymax = y_reg[i]
            else:
                cr[y_cls[i]] += w[i]
        weight[nid] = wsum
        if regression:
            value[nid, 0] = cr[0] / wsum if wsum > 0 else 0.0
        else:
            for k in range(n_out):
                value[nid, k] = cr[k]

        if max_depth >= 0 and depth >= max_depth:
            continue
        if m < 2 * min_leaf:
            continue
        if regression:
            if ymax - ymin <= 0.0:
                continue
        else:
            present = 0
            for k in range(n_out):
                if cr[k] > 0:
                    present += 1
            if present <= 1:
                continue

        if max_features < d:
            _shuffle(feats, state)
        best_score = -np.inf
        best_f = -1
        best_t = 0.0
        visited = 0
        for fi in range(d):
            f = feats[fi] if max_features < d else fi
            for p in range(m):
                vals[p] = X[idx[s + p], f]
            order = np.argsort(vals[:m], kind="mergesort")
            if vals[order[0]] == vals[order[m - 1]]:
                continue
            visited += 1
            for k in range(n_out):
                cl[k] = 0.0
                cr[k] = 0.0
            wl = 0.0
            wr = 0.0
            sql = 0.0
            sqr = 0.0
            for p in range(m):
                i = idx[s + order[p]]
                wr += w[i]
                if regression:
                    cr[0] += w[i] * y_reg[i]
                else:
                    cr[y_cls[i]] += w[i]
            if not regression:
                for k in range(n_out):
                    sqr += cr[k] * cr[k]
            for p in range(m - 1):
                i = idx[s + order[p]]
                wi = w[i]
                wl += wi
                wr -= wi
                if regression:
                    cl[0] += wi * y_reg[i]
                    cr[0] -= wi * y_reg[i]
                else:
                    k = y_cls[i]
                    sql += (cl[k] + wi) ** 2 - cl[k] ** 2
                    sqr += (cr[k] - wi) ** 2 - cr[k] ** 2
                    cl[k] += wi
                    cr[k] -= wi
                nl = p + 1
                if nl < min_leaf or m - nl < min_leaf:
                    continue
                va = vals[order[p]]
                vb = vals[order[p + 1]]
                if not va < vb:
                    continue
                if wl <= 0.0 or wr <= 0.0:
                    continue
                if regression:
                    score = cl[0] * cl[0] / wl + cr[0] * cr[0] / wr
                else:
                    score = sql / wl + sqr / wr
                if score > best_score:
                    best_score = score
                    best_f = f
                    t = 0.5 * (va + vb)
                    best_t = t if t < vb else va
            if visited >= max_features:
                break

        if best_f < 0:
            continue

        nl = 0
        nr = 0
        for p in range(s, e):
            i = idx[p]
            if X[i, best_f] <= best_t:
                idx[s + nl] = i
                nl += 1
            else:
                buf[nr] = i
                nr += 1
        for p in range(nr):
            idx[s + nl + p] = buf[p]

        feature[nid] = best_f
        threshold[nid] = best_t
        lid = n_nodes
        rid = n_nodes + 1
        n_nodes += 2
        left[nid] = lid
        right[nid] = rid
        st_node[top] = rid
        st_start[top] = s + nl
        st_end[top] = e
        st_depth[top] = depth + 1
        top += 1
        st_node[top] = lid
        st_start[top] = s
        st_end[top] = s + nl
        st_depth[top] = depth + 1
        top += 1

    return (feature[:n_nodes].copy(), threshold[:n_nodes].copy(), left[:n_nodes].copy(),
            right[:n_nodes].copy(), value[:n_nodes].copy(), weight[:n_nodes].copy())


@njit(cache=True, nogil=True)
def apply_tree(feature, threshold, left, right, X):
    """Leaf index reached by every row of ``X``."""
    n = X.shape[0]
    out = np.empty(n, dtype=np.int64)
    for r in range(n):
        node = 0
        while feature[node] >= 0:
            if X[r, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[r] = node
    return out


@njit(cache=True, nogil=True)
def pegasos_linear(X, Y, lam, order):
    """Primal Pegasos for several one-vs-rest problems sharing a sample order.

    ``Y`` is (n, c) with entries in {-1, +1}.  Returns the average of the
    iterates over the second half of training, shape (c, p).
    """
    n, p = X.shape
    c = Y.shape[1]
    W = np.zeros((c, p))
    avg = np.zeros((c, p))
    T = order.shape[0]
    start = T // 2
    radius = 1.0 / np.sqrt(lam)
    for t in range(1, T + 1):
        i = order[t - 1]
        eta = 1.0 / (lam * t)
        shrink = 1.0 - eta * lam
        for k in range(c):
            dot = 0.0
            for j in range(p):
                dot += W[k, j] * X[i, j]
            y = Y[i, k]
            norm2 = 0.0
            for j in range(p):
                W[k, j] *= shrink
                if y * dot < 1.0:
                    W[k, j] += eta * y * X[i, j]
                norm2 += W[k, j] * W[k, j]
            if norm2 > radius * radius:
                scale = radius / np.sqrt(norm2)
                for j in range(p):
                    W[k, j] *= scale
        if t > start:
            for k in range(c):
                for j in range(p):
                    avg[k, j] += W[k, j]
    return avg / (T - start)


@njit(cache=True, nogil=True)
def pegasos_kernel(X, Y, lam, order, gamma):
    """Kernelized Pegasos with k(a, b) = exp(-gamma |a - b|^2) + 1.

    Returns the per-class hinge-violation counts ``alpha`` (n, c).
    """
    n, p = X.shape
    c = Y.shape[1]
    alpha = np.zeros((n, c))
    g = np.zeros((n, c))
    col = np.empty(n)
    T = order.shape[0]
    for t in range(1, T + 1):
        i = order[t - 1]
        have_col = False
        for k in range(c):
            if Y[i, k] * g[i, k] / (lam * t) < 1.0:
                if not have_col:
                    for j in range(n):
                        d2 = 0.0
                        for q in range(p):
                            diff = X[j, q] - X[i, q]
                            d2 += diff * diff
                        col[j] = np.exp(-gamma * d2) + 1.0
                    have_col = True
                alpha[i, k] += 1.0
                yk = Y[i, k]
                for j in range(n):
                    g[j, k] += yk * col[j]
    return alpha
