"""Compiled CART builders and tree traversal.

Trees are stored as flat arrays in depth-first pre-order. A sample goes
left when ``x[feature] <= threshold``. Split search scans candidate
features in ascending index order and thresholds in ascending order and
only replaces the incumbent on a strictly better score, so ties resolve to
the lowest feature index, then the lowest threshold.
"""
import numba
import numpy as np


@numba.njit(nogil=True, cache=True)
def _draw_candidates(feats, n_cand, rng):
    # partial Fisher-Yates over a persistent index buffer
    p = feats.shape[0]
    if n_cand >= p:
        return np.arange(p)
    for i in range(n_cand):
        j = i + int(rng.random() * (p - i))
        if j >= p:
            j = p - 1
        tmp = feats[i]
        feats[i] = feats[j]
        feats[j] = tmp
    return np.sort(feats[:n_cand].copy())


@numba.njit(nogil=True, cache=True)
def _midpoint(lo, hi):
    thr = lo + (hi - lo) / 2.0
    if thr >= hi:  # adjacent floats: keep the split between the two values
        thr = lo
    return thr


@numba.njit(nogil=True, cache=True)
def _partition(work, buf, start, end, XT, f, thr):
    nl = 0
    for i in range(start, end):
        s = work[i]
        if XT[f, s] <= thr:
            work[start + nl] = s
            nl += 1
        else:
            buf[i - start - nl] = s
    nr = end - start - nl
    for i in range(nr):
        work[start + nl + i] = buf[i]
    return start + nl


@numba.njit(nogil=True, cache=True)
def build_classifier(XT, y, sample_idx, n_classes, max_depth, min_leaf, n_cand, rng):
    """Gini CART on the (possibly repeated) rows in ``sample_idx``.

    ``XT`` is the feature-major (p x n) matrix. Returns feature, threshold,
    left, right, per-node class counts, Gini impurity and node sizes.
    """
    p = XT.shape[0]
    n = sample_idx.shape[0]
    cap = 2 * n + 1
    feature = np.full(cap, -1, np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    value = np.zeros((cap, n_classes))
    impurity = np.zeros(cap)
    n_node = np.zeros(cap)

    work = sample_idx.copy()
    buf = np.empty(n, np.int64)
    vals = np.empty(n)
    feats = np.arange(p)
    counts = np.zeros(n_classes)
    cl = np.zeros(n_classes)
    cr = np.zeros(n_classes)

    st_start = np.empty(cap, np.int64)
    st_end = np.empty(cap, np.int64)
    st_depth = np.empty(cap, np.int64)
    st_parent = np.empty(cap, np.int64)
    st_left = np.empty(cap, np.bool_)
    sp = 0
    st_start[0] = 0
    st_end[0] = n
    st_depth[0] = 0
    st_parent[0] = -1
    st_left[0] = False
    sp = 1
    n_nodes = 0

    while sp > 0:
        sp -= 1
        start = st_start[sp]
        end = st_end[sp]
        depth = st_depth[sp]
        parent = st_parent[sp]
        node = n_nodes
        n_nodes += 1
        if parent >= 0:
            if st_left[sp]:
                left[parent] = node
            else:
                right[parent] = node

        nn = end - start
        counts[:] = 0.0
        for i in range(start, end):
            counts[y[work[i]]] += 1.0
        sq = 0.0
        cmax = 0.0
        for k in range(n_classes):
            sq += counts[k] * counts[k]
            if counts[k] > cmax:
                cmax = counts[k]
        gini = 1.0 - sq / (nn * nn)
        if cmax == nn:
            gini = 0.0
        value[node, :] = counts
        impurity[node] = gini
        n_node[node] = nn

        if depth >= max_depth or nn < 2 * min_leaf or cmax == nn:
            continue

        cands = _draw_candidates(feats, n_cand, rng)
        best_score = -np.inf
        best_f = -1
        best_thr = 0.0
        for f in cands:
            for i in range(nn):
                vals[i] = XT[f, work[start + i]]
            order = np.argsort(vals[:nn])
            cl[:] = 0.0
            cr[:] = counts
            sql = 0.0
            sqr = sq
            for i in range(nn - 1):
                c = y[work[start + order[i]]]
                # incremental sums of squared class counts
                sql += 2.0 * cl[c] + 1.0
                sqr -= 2.0 * cr[c] - 1.0
                cl[c] += 1.0
                cr[c] -= 1.0
                v = vals[order[i]]
                vn = vals[order[i + 1]]
                if vn <= v:
                    continue
                nl = i + 1
                nr = nn - nl
                if nl < min_leaf or nr < min_leaf:
                    continue
                score = sql / nl + sqr / nr
                if score > best_score:
                    best_score = score
                    best_f = f
                    best_thr = _midpoint(v, vn)
        if best_f < 0:
            continue

        mid = _partition(work, buf, start, end, XT, best_f, best_thr)
        feature[node] = best_f
        threshold[node] = best_thr
        # push right first so the left subtree is numbered next
        st_start[sp] = mid
        st_end[sp] = end
        st_depth[sp] = depth + 1
        st_parent[sp] = node
        st_left[sp] = False
        sp += 1
        st_start[sp] = start
        st_end[sp] = mid
        st_depth[sp] = depth + 1
        st_parent[sp] = node
        st_left[sp] = True
        sp += 1

    return (feature[:n_nodes], threshold[:n_nodes], left[:n_nodes], right[:n_nodes],
            value[:n_nodes], impurity[:n_nodes], n_node[:n_nodes])


@numba.njit(nogil=True, cache=True)
def build_regressor(XT, target, sample_idx, max_depth, min_leaf, n_cand, rng):
    """Squared-error CART; node value is the mean target, impurity the variance."""
    p = XT.shape[0]
    n = sample_idx.shape[0]
    cap = 2 * n + 1
    feature = np.full(cap, -1, np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    value = np.zeros((cap, 1))
    impurity = np.zeros(cap)
    n_node = np.zeros(cap)

    work = sample_idx.copy()
    buf = np.empty(n, np.int64)
    vals = np.empty(n)
    feats = np.arange(p)

    st_start = np.empty(cap, np.int64)
    st_end = np.empty(cap, np.int64)
    st_depth = np.empty(cap, np.int64)
    st_parent = np.empty(cap, np.int64)
    st_left = np.empty(cap, np.bool_)
    st_start[0] = 0
    st_end[0] = n
    st_depth[0] = 0
    st_parent[0] = -1
    st_left[0] = False
    sp = 1
    n_nodes = 0

    while sp > 0:
        sp -= 1
        start = st_start[sp]
        end = st_end[sp]
        depth = st_depth[sp]
        parent = st_parent[sp]
        node = n_nodes
        n_nodes += 1
        if parent >= 0:
            if st_left[sp]:
                left[parent] = node
            else:
                right[parent] = node

        nn = end - start
        total = 0.0
        tmin = np.inf
        tmax = -np.inf
        for i in range(start, end):
            t = target[work[i]]
            total += t
            if t < tmin:
                tmin = t
            if t > tmax:
                tmax = t
        mean = total / nn
        var = 0.0
        for i in range(start, end):
            d = target[work[i]] - mean
            var += d * d
        value[node, 0] = mean
        impurity[node] = var / nn
        n_node[node] = nn

        if depth >= max_depth or nn < 2 * min_leaf or tmax == tmin:
            continue

        cands = _draw_candidates(feats, n_cand, rng)
        best_score = -np.inf
        best_f = -1
        best_thr = 0.0
        for f in cands:
            for i in range(nn):
                vals[i] = XT[f, work[start + i]]
            order = np.argsort(vals[:nn])
            sl = 0.0
            for i in range(nn - 1):
                sl += target[work[start + order[i]]]
                v = vals[order[i]]
                vn = vals[order[i + 1]]
                if vn <= v:
                    continue
                nl = i + 1
                nr = nn - nl
                if nl < min_leaf or nr < min_leaf:
                    continue
                sr = total - sl
                score = sl * sl / nl + sr * sr / nr
                if score > best_score:
                    best_score = score
                    best_f = f
                    best_thr = _midpoint(v, vn)
        if best_f < 0:
            continue

        mid = _partition(work, buf, start, end, XT, best_f, best_thr)
        feature[node] = best_f
        threshold[node] = best_thr
        st_start[sp] = mid
        st_end[sp] = end
        st_depth[sp] = depth + 1
        st_parent[sp] = node
        st_left[sp] = False
        sp += 1
        st_start[sp] = start
        st_end[sp] = mid
        st_depth[sp] = depth + 1
        st_parent[sp] = node
        st_left[sp] = True
        sp += 1

    return (feature[:n_nodes], threshold[:n_nodes], left[:n_nodes], right[:n_nodes],
            value[:n_nodes], impurity[:n_nodes], n_node[:n_nodes])


@numba.njit(nogil=True, cache=True)
def apply_packed(X, feature, threshold, left, right, offsets):
    """Leaf index (global, into the packed arrays) of every row for every tree."""
    n = X.shape[0]
    n_trees = offsets.shape[0] - 1
    out = np.empty((n, n_trees), np.int64)
    for i in range(n):
        for t in range(n_trees):
            node = offsets[t]
            base = offsets[t]
            while left[node] >= 0:
                if X[i, feature[node]] <= threshold[node]:
                    node = base + left[node]
                else:
                    node = base + right[node]
            out[i, t] = node
    return out
