"""Hot numeric kernels.

Each public name here is a :class:`heliofor._accel.Kernel`. Kernels take and
return plain float64/int64 ndarrays so that numba can compile them; all
validation happens in the calling modules.

Kernels written only in terms of numpy array operations share one source for
both backends. Kernels whose numba form relies on scalar loops (ARMA
recursion, nearest-neighbour scans, tree growth) carry a separately
vectorised numpy fallback.
"""

import numpy as np
from scipy.signal import lfilter

from ._accel import kernel

# ---------------------------------------------------------------------------
# LSTM layer
# ---------------------------------------------------------------------------


@kernel
def lstm_layer_forward(X, Wh, Wx, b):
    """Run one LSTM layer over a batch of sequences from zero state.

    Parameters
    ----------
    X : ndarray of shape (T, B, I)
    Wh : ndarray of shape (4H, H)
        Recurrent weights, gate blocks ordered input, forget, output, candidate.
    Wx : ndarray of shape (4H, I)
    b : ndarray of shape (4H,)

    Returns
    -------
    Hs : ndarray (T, B, H)
    Cs : ndarray (T, B, H)
    Gs : ndarray (T, B, 4H)
        Activated gates ``[i, f, o, g]``.
    """
    T, B, I = X.shape
    H = Wh.shape[1]
    WhT = np.ascontiguousarray(Wh.T)
    WxT = np.ascontiguousarray(Wx.T)
    Zx = np.dot(np.ascontiguousarray(X).reshape(T * B, I), WxT).reshape(T, B, 4 * H)
    Hs = np.zeros((T, B, H))
    Cs = np.zeros((T, B, H))
    Gs = np.zeros((T, B, 4 * H))
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    for t in range(T):
        z = Zx[t] + np.dot(h, WhT) + b
        i = 1.0 / (1.0 + np.exp(-z[:, 0:H]))
        f = 1.0 / (1.0 + np.exp(-z[:, H:2 * H]))
        o = 1.0 / (1.0 + np.exp(-z[:, 2 * H:3 * H]))
        g = np.tanh(z[:, 3 * H:4 * H])
        c = f * c + i * g
        h = o * np.tanh(c)
        Gs[t, :, 0:H] = i
        Gs[t, :, H:2 * H] = f
        Gs[t, :, 2 * H:3 * H] = o
        Gs[t, :, 3 * H:4 * H] = g
        Cs[t] = c
        Hs[t] = h
    return Hs, Cs, Gs


@kernel
def lstm_layer_backward(X, Wh, Wx, Hs, Cs, Gs, dHs):
    """Backpropagate through one LSTM layer over time.

    ``dHs`` holds the gradient of the loss with respect to each emitted
    hidden state coming from above (head or next layer), excluding the
    recurrent path, which is accumulated here.

    Returns
    -------
    dX : ndarray (T, B, I)
    dWh : ndarray (4H, H)
    dWx : ndarray (4H, I)
    db : ndarray (4H,)
    dH_total : ndarray (T, B, H)
        Total derivative of the loss with respect to ``h_t``.
    """
    T, B, I = X.shape
    H = Wh.shape[1]
    dZ = np.zeros((T, B, 4 * H))
    dH_total = np.zeros((T, B, H))
    dh_next = np.zeros((B, H))
    dc_next = np.zeros((B, H))
    zeros = np.zeros((B, H))
    for t in range(T - 1, -1, -1):
        dh = dHs[t] + dh_next
        dH_total[t] = dh
        i = Gs[t, :, 0:H]
        f = Gs[t, :, H:2 * H]
        o = Gs[t, :, 2 * H:3 * H]
        g = Gs[t, :, 3 * H:4 * H]
        tc = np.tanh(Cs[t])
        c_prev = Cs[t - 1] if t > 0 else zeros
        do = dh * tc
        dc = dc_next + dh * o * (1.0 - tc * tc)
        di = dc * g
        dg = dc * i
        df = dc * c_prev
        dc_next = dc * f
        dZ[t, :, 0:H] = di * i * (1.0 - i)
        dZ[t, :, H:2 * H] = df * f * (1.0 - f)
        dZ[t, :, 2 * H:3 * H] = do * o * (1.0 - o)
        dZ[t, :, 3 * H:4 * H] = dg * (1.0 - g * g)
        dh_next = np.dot(np.ascontiguousarray(dZ[t]), Wh)
    dZ2 = dZ.reshape(T * B, 4 * H)
    dZ2T = np.ascontiguousarray(dZ2.T)
    dWx = np.dot(dZ2T, np.ascontiguousarray(X).reshape(T * B, I))
    dX = np.dot(dZ2, Wx).reshape(T, B, I)
    db = dZ2.sum(axis=0)
    if T > 1:
        dZp = np.ascontiguousarray(dZ[1:].reshape((T - 1) * B, 4 * H).T)
        dWh = np.dot(dZp, np.ascontiguousarray(Hs[:-1]).reshape((T - 1) * B, H))
    else:
        dWh = np.zeros((4 * H, H))
    return dX, dWh, dWx, db, dH_total


# ---------------------------------------------------------------------------
# NARX feedforward net
# ---------------------------------------------------------------------------


@kernel
def narx_forward_rows(W1, b1, w2, b2, R):
    """Evaluate the two-layer net row by row (sigmoid hidden, linear output)."""
    n = R.shape[0]
    out = np.empty(n)
    for k in range(n):
        a = np.dot(W1, R[k]) + b1
        hidden = 1.0 / (1.0 + np.exp(-a))
        out[k] = np.dot(w2, hidden) + b2
    return out


@kernel
def narx_closed_loop(W1, b1, w2, b2, u_all, y_seed, d_u, d_y, horizon, bound):
    """Parallel-mode recursion feeding predictions back into the output lags.

    ``u_all`` stacks the last ``d_u`` history input rows followed by the future
    inputs; ``y_seed`` holds the last ``d_y`` history outputs (oldest first).
    Returns ``(predictions, n_clamped)``.
    """
    F = u_all.shape[1]
    y_all = np.zeros(d_y + horizon)
    y_all[:d_y] = y_seed
    out = np.empty(horizon)
    r = np.empty(d_u * F + d_y)
    n_clamped = 0
    for j in range(horizon):
        cur_u = d_u - 1 + j
        for lag in range(d_u):
            r[lag * F:(lag + 1) * F] = u_all[cur_u - lag]
        cur_y = d_y - 1 + j
        for lag in range(d_y):
            r[d_u * F + lag] = y_all[cur_y - lag]
        a = np.dot(W1, r) + b1
        hidden = 1.0 / (1.0 + np.exp(-a))
        pred = np.dot(w2, hidden) + b2
        if not (pred <= bound):
            pred = bound
            n_clamped += 1
        elif pred < -bound:
            pred = -bound
            n_clamped += 1
        out[j] = pred
        y_all[d_y + j] = pred
    return out, n_clamped


@kernel
def narx_sgd_epoch(X, y, order, W1, b1, w2, b2, lr, batch_size):
    """One epoch of mini-batch gradient descent on MSE, updating in place.

    Returns the mean of the per-batch losses seen during the epoch.
    """
    n = order.shape[0]
    total = 0.0
    n_batches = 0
    start = 0
    while start < n:
        stop = min(start + batch_size, n)
        idx = order[start:stop]
        m = stop - start
        Xb = X[idx]
        yb = y[idx]
        A = np.dot(Xb, np.ascontiguousarray(W1.T)) + b1
        S = 1.0 / (1.0 + np.exp(-A))
        pred = np.dot(S, w2) + b2
        err = pred - yb
        total += np.dot(err, err) / m
        n_batches += 1
        d_pred = 2.0 * err / m
        g_w2 = np.dot(d_pred, S)
        g_b2 = d_pred.sum()
        dA = np.outer(d_pred, w2) * S * (1.0 - S)
        g_W1 = np.dot(np.ascontiguousarray(dA.T), Xb)
        g_b1 = dA.sum(axis=0)
        W1 -= lr * g_W1
        b1 -= lr * g_b1
        w2 -= lr * g_w2
        b2[0] -= lr * g_b2
        start = stop
    return total / max(n_batches, 1)


# ---------------------------------------------------------------------------
# ARMA conditional sum of squares
# ---------------------------------------------------------------------------


def _arma_css_numpy(z, phi, theta):
    p = phi.shape[0]
    q = theta.shape[0]
    n = z.shape[0]
    m = n - p
    ar_part = z[p:].copy()
    for k in range(p):
        ar_part -= phi[k] * z[p - k - 1:n - k - 1]
    denom = np.concatenate(([1.0], theta))
    e = lfilter([1.0], denom, ar_part)
    J = np.zeros((m, p + q))
    for k in range(p):
        J[:, k] = lfilter([1.0], denom, -z[p - k - 1:n - k - 1])
    for k in range(q):
        lagged = np.zeros(m)
        lagged[k + 1:] = e[:m - k - 1]
        J[:, p + k] = lfilter([1.0], denom, -lagged)
    full = np.zeros(n)
    full[p:] = e
    return full, J


@kernel(fallback=_arma_css_numpy)
def arma_css(z, phi, theta):
    """Conditional innovations and their Jacobian for a demeaned series.

    Innovations before index ``p`` are taken as zero. Returns the full-length
    innovation vector (zeros for the first ``p`` entries) and the Jacobian of
    the innovations ``e[p:]`` with respect to ``(phi, theta)``.
    """
    p = phi.shape[0]
    q = theta.shape[0]
    n = z.shape[0]
    m = n - p
    e = np.zeros(n)
    J = np.zeros((m, p + q))
    for t in range(p, n):
        acc = z[t]
        for k in range(p):
            acc -= phi[k] * z[t - k - 1]
        for k in range(q):
            if t - k - 1 >= p:
                acc -= theta[k] * e[t - k - 1]
        e[t] = acc
        row = t - p
        for k in range(p):
            d = -z[t - k - 1]
            for j in range(q):
                if row - j - 1 >= 0:
                    d -= theta[j] * J[row - j - 1, k]
            J[row, k] = d
        for k in range(q):
            d = -e[t - k - 1] if t - k - 1 >= p else 0.0
            for j in range(q):
                if row - j - 1 >= 0:
                    d -= theta[j] * J[row - j - 1, p + k]
            J[row, p + k] = d
    return e, J


# ---------------------------------------------------------------------------
# Elastic net coordinate descent
# ---------------------------------------------------------------------------


@kernel
def elastic_net_cd(XT, y, alpha, l1_ratio, tol, max_iter):
    """Cyclic coordinate descent on standardised, centred data.

    Minimises ``1/(2n)||y - X w||^2 + alpha*l1_ratio*||w||_1
    + alpha*(1-l1_ratio)/2*||w||^2``. ``XT`` is the transposed design
    (features by samples). Returns ``(w, n_iter, max_change)``.
    """
    p, n = XT.shape
    w = np.zeros(p)
    r = y.copy()
    col_sq = np.empty(p)
    for j in range(p):
        col_sq[j] = np.dot(XT[j], XT[j]) / n
    l1 = alpha * l1_ratio
    l2 = alpha * (1.0 - l1_ratio)
    max_change = np.inf
    it = 0
    while it < max_iter:
        it += 1
        max_change = 0.0
        for j in range(p):
            if col_sq[j] == 0.0:
                continue
            old = w[j]
            rho = np.dot(XT[j], r) / n + col_sq[j] * old
            if rho > l1:
                new = (rho - l1) / (col_sq[j] + l2)
            elif rho < -l1:
                new = (rho + l1) / (col_sq[j] + l2)
            else:
                new = 0.0
            if new != old:
                r -= (new - old) * XT[j]
                w[j] = new
                change = abs(new - old)
                if change > max_change:
                    max_change = change
        if max_change < tol:
            break
    return w, it, max_change


# ---------------------------------------------------------------------------
# k nearest neighbours
# ---------------------------------------------------------------------------


def _knn_numpy(X, y, Q, k):
    m = Q.shape[0]
    out = np.empty(m)
    chunk = max(1, 2_000_000 // max(X.shape[0], 1))
    for s in range(0, m, chunk):
        q = Q[s:s + chunk]
        diff = q[:, None, :] - X[None, :, :]
        # explicit left-to-right accumulation keeps distances bit-equal to the jitted scan
        d = np.zeros((q.shape[0], X.shape[0]))
        for f in range(X.shape[1]):
            d += diff[:, :, f] * diff[:, :, f]
        idx = np.argsort(d, axis=1, kind="stable")[:, :k]
        acc = np.zeros(q.shape[0])
        for j in range(k):
            acc += y[idx[:, j]]
        out[s:s + chunk] = acc / k
    return out


@kernel(fallback=_knn_numpy)
def knn_predict_batch(X, y, Q, k):
    """Mean target of the ``k`` nearest rows by squared Euclidean distance.

    Ties go to the lowest training index; targets are summed in neighbour
    order.
    """
    n, d = X.shape
    m = Q.shape[0]
    out = np.empty(m)
    best_d = np.empty(k)
    best_i = np.empty(k, dtype=np.int64)
    for qi in range(m):
        count = 0
        for r in range(n):
            dist = 0.0
            for f in range(d):
                diff = Q[qi, f] - X[r, f]
                dist += diff * diff
            if count < k:
                pos = count
                count += 1
            elif dist < best_d[k - 1]:
                pos = k - 1
            else:
                continue
            while pos > 0 and best_d[pos - 1] > dist:
                best_d[pos] = best_d[pos - 1]
                best_i[pos] = best_i[pos - 1]
                pos -= 1
            best_d[pos] = dist
            best_i[pos] = r
        acc = 0.0
        for j in range(k):
            acc += y[best_i[j]]
        out[qi] = acc / k
    return out


# ---------------------------------------------------------------------------
# Extremely randomised trees
# ---------------------------------------------------------------------------


def _grow_tree_numpy(X, y, min_samples_leaf, max_features, U):
    n, F = X.shape
    cap = U.shape[0]
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros(cap)
    idx = np.arange(n)
    start_of = np.zeros(cap, dtype=np.int64)
    stop_of = np.zeros(cap, dtype=np.int64)
    stop_of[0] = n
    n_nodes = 1
    stack = [0]
    while stack:
        node = stack.pop()
        s, e = start_of[node], stop_of[node]
        rows = idx[s:e]
        ys = y[rows]
        cnt = e - s
        total = 0.0
        for v in ys:
            total += v
        value[node] = total / cnt
        if cnt < 2 * min_samples_leaf:
            continue
        if np.all(ys == ys[0]):
            continue
        feats = np.argsort(U[node, :F], kind="stable")[:max_features]
        best_score = -np.inf
        best_f = -1
        best_thr = 0.0
        for f in feats:
            col = X[rows, f]
            lo, hi = col.min(), col.max()
            if not hi > lo:
                continue
            thr = lo + U[node, F + f] * (hi - lo)
            go_left = col <= thr
            nl = int(go_left.sum())
            nr = cnt - nl
            if nl < min_samples_leaf or nr < min_samples_leaf:
                continue
            sl = 0.0
            for v in ys[go_left]:
                sl += v
            sr = total - sl
            score = sl * sl / nl + sr * sr / nr
            if score > best_score:
                best_score = score
                best_f = f
                best_thr = thr
        if best_f < 0:
            continue
        col = X[rows, best_f]
        go_left = col <= best_thr
        idx[s:e] = np.concatenate((rows[go_left], rows[~go_left]))
        mid = s + int(go_left.sum())
        feature[node] = best_f
        threshold[node] = best_thr
        lnode, rnode = n_nodes, n_nodes + 1
        n_nodes += 2
        left[node], right[node] = lnode, rnode
        start_of[lnode], stop_of[lnode] = s, mid
        start_of[rnode], stop_of[rnode] = mid, e
        stack.append(rnode)
        stack.append(lnode)
    return (feature[:n_nodes], threshold[:n_nodes], left[:n_nodes],
            right[:n_nodes], value[:n_nodes])


@kernel(fallback=_grow_tree_numpy)
def grow_tree(X, y, min_samples_leaf, max_features, U):
    """Grow one extremely randomised regression tree on all rows.

    Row ``k`` of ``U`` holds the uniform draws for node ``k``: the first
    ``F`` entries rank features (the ``max_features`` smallest are the
    candidate subset), the next ``F`` place each candidate's threshold inside
    the node's range. The split with the largest variance reduction wins.
    Nodes are numbered in creation order, depth first, left child first.
    """
    n, F = X.shape
    cap = U.shape[0]
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros(cap)
    idx = np.arange(n)
    buf = np.empty(n, dtype=np.int64)
    start_of = np.zeros(cap, dtype=np.int64)
    stop_of = np.zeros(cap, dtype=np.int64)
    stop_of[0] = n
    n_nodes = 1
    stack = np.empty(cap, dtype=np.int64)
    top = 0
    stack[top] = 0
    top += 1
    while top > 0:
        top -= 1
        node = stack[top]
        s = start_of[node]
        e = stop_of[node]
        cnt = e - s
        total = 0.0
        constant = True
        y0 = y[idx[s]]
        for r in range(s, e):
            total += y[idx[r]]
            if y[idx[r]] != y0:
                constant = False
        value[node] = total / cnt
        if cnt < 2 * min_samples_leaf or constant:
            continue
        feats = np.argsort(U[node, :F], kind="mergesort")[:max_features]
        best_score = -np.inf
        best_f = -1
        best_thr = 0.0
        for fi in range(feats.shape[0]):
            f = feats[fi]
            lo = X[idx[s], f]
            hi = lo
            for r in range(s + 1, e):
                v = X[idx[r], f]
                if v < lo:
                    lo = v
                if v > hi:
                    hi = v
            if not hi > lo:
                continue
            thr = lo + U[node, F + f] * (hi - lo)
            nl = 0
            sl = 0.0
            for r in range(s, e):
                if X[idx[r], f] <= thr:
                    nl += 1
                    sl += y[idx[r]]
            nr = cnt - nl
            if nl < min_samples_leaf or nr < min_samples_leaf:
                continue
            sr = total - sl
            score = sl * sl / nl + sr * sr / nr
            if score > best_score:
                best_score = score
                best_f = f
                best_thr = thr
        if best_f < 0:
            continue
        a = s
        b = 0
        for r in range(s, e):
            if X[idx[r], best_f] <= best_thr:
                idx[a] = idx[r]
                a += 1
            else:
                buf[b] = idx[r]
                b += 1
        for r in range(b):
            idx[a + r] = buf[r]
        feature[node] = best_f
        threshold[node] = best_thr
        lnode = n_nodes
        rnode = n_nodes + 1
        n_nodes += 2
        left[node] = lnode
        right[node] = rnode
        start_of[lnode] = s
        stop_of[lnode] = a
        start_of[rnode] = a
        stop_of[rnode] = e
        stack[top] = rnode
        top += 1
        stack[top] = lnode
        top += 1
    return (feature[:n_nodes].copy(), threshold[:n_nodes].copy(), left[:n_nodes].copy(),
            right[:n_nodes].copy(), value[:n_nodes].copy())


def _forest_predict_numpy(feature, threshold, left, right, value, roots, Q):
    m = Q.shape[0]
    acc = np.zeros(m)
    rows = np.arange(m)
    for root in roots:
        node = np.full(m, root, dtype=np.int64)
        active = feature[node] >= 0
        while active.any():
            a = node[active]
            go_left = Q[rows[active], feature[a]] <= threshold[a]
            node[active] = np.where(go_left, left[a], right[a])
            active = feature[node] >= 0
        acc += value[node]
    return acc / roots.shape[0]


@kernel(fallback=_forest_predict_numpy)
def forest_predict(feature, threshold, left, right, value, roots, Q):
    """Average leaf values over trees stored back to back in flat arrays.

    Child indices are absolute positions in the flat arrays; ``roots`` gives
    each tree's root position. Trees are accumulated in order.
    """
    m = Q.shape[0]
    out = np.zeros(m)
    for qi in range(m):
        acc = 0.0
        for t in range(roots.shape[0]):
            node = roots[t]
            while feature[node] >= 0:
                if Q[qi, feature[node]] <= threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
            acc += value[node]
        out[qi] = acc / roots.shape[0]
    return out


ALL_KERNELS = (
    lstm_layer_forward,
    lstm_layer_backward,
    narx_forward_rows,
    narx_closed_loop,
    narx_sgd_epoch,
    arma_css,
    elastic_net_cd,
    knn_predict_batch,
    grow_tree,
    forest_predict,
)
