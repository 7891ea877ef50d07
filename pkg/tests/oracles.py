"""Independent slow reference implementations used by the tests."""

import math

import numpy as np


def naive_conv(x, w, b, stride, padding):
    c, h, wd = x.shape
    k, _, kh, kw = w.shape
    xp = np.zeros((c, h + 2 * padding, wd + 2 * padding))
    xp[:, padding:padding + h, padding:padding + wd] = x
    ho = (h + 2 * padding - kh) // stride + 1
    wo = (wd + 2 * padding - kw) // stride + 1
    out = np.zeros((k, ho, wo))
    for f in range(k):
        for i in range(ho):
            for j in range(wo):
                acc = b[f]
                for ch in range(c):
                    for u in range(kh):
                        for v in range(kw):
                            acc += w[f, ch, u, v] * xp[ch, i * stride + u, j * stride + v]
                out[f, i, j] = acc
    return out


def naive_pool(x, pool, stride):
    c, h, w = x.shape
    ho = (h - pool) // stride + 1
    wo = (w - pool) // stride + 1
    out = np.zeros((c, ho, wo))
    for ch in range(c):
        for i in range(ho):
            for j in range(wo):
                out[ch, i, j] = max(
                    x[ch, i * stride + u, j * stride + v] for u in range(pool) for v in range(pool)
                )
    return out


def naive_dense(x, w, b, activation):
    out = []
    for r in range(w.shape[0]):
        z = b[r] + sum(w[r, c] * x[c] for c in range(w.shape[1]))
        if activation == "relu":
            z = max(z, 0.0)
        elif activation == "sigmoid":
            z = 1.0 / (1.0 + math.exp(-z))
        out.append(z)
    return np.array(out)


def _sig(z):
    return 1.0 / (1.0 + math.exp(-z))


def scalar_lstm(seq, W, U, b):
    """seq is (m, n); gate rows stacked input, forget, candidate, output."""
    m, n = seq.shape
    H = U.shape[1]
    h = [0.0] * H
    c = [0.0] * H
    for t in range(n):
        x = seq[:, t]
        z = []
        for r in range(4 * H):
            acc = b[r]
            for k in range(m):
                acc += W[r, k] * x[k]
            for k in range(H):
                acc += U[r, k] * h[k]
            z.append(acc)
        new_h, new_c = [], []
        for j in range(H):
            i = _sig(z[j])
            f = _sig(z[H + j])
            g = math.tanh(z[2 * H + j])
            o = _sig(z[3 * H + j])
            cj = f * c[j] + i * g
            new_c.append(cj)
            new_h.append(o * math.tanh(cj))
        h, c = new_h, new_c
    return np.array(h)


def reference_adam(w0, grad_fn, lr, steps, b1=0.9, b2=0.999, eps=1e-8):
    """Textbook Adam on a scalar, written out step by step."""
    w, m, v = w0, 0.0, 0.0
    traj = []
    for t in range(1, steps + 1):
        g = grad_fn(w)
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        mhat = m / (1 - b1 ** t)
        vhat = v / (1 - b2 ** t)
        w = w - lr * mhat / (math.sqrt(vhat) + eps)
        traj.append(w)
    return traj


def central_difference(f, x, h=1e-5):
    """Gradient of scalar f at array x (modified in place and restored)."""
    grad = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        old = x[idx]
        x[idx] = old + h
        fp = f()
        x[idx] = old - h
        fm = f()
        x[idx] = old
        grad[idx] = (fp - fm) / (2 * h)
    return grad


def rel_error(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-8)
    return float(np.max(np.abs(a - b) / denom))


def binomial_tail_bruteforce(n):
    """Counts of k successes over all 2**n equally likely outcomes."""
    counts = np.zeros(n + 1, dtype=np.int64)
    if n == 0:
        counts[0] = 1
        return counts
    outcomes = np.arange(2 ** n, dtype=np.int64)
    ones = np.zeros_like(outcomes)
    for bit in range(n):
        ones += (outcomes >> bit) & 1
    np.add.at(counts, ones, 1)
    return counts


def bruteforce_pr_auc(scores, labels):
    """Enumerate each distinct threshold independently, then integrate."""
    thresholds = sorted(set(scores), reverse=True)
    pos = sum(1 for l in labels if l == 1)
    points = []
    for t in thresholds:
        tp = sum(1 for s, l in zip(scores, labels) if s >= t and l == 1)
        fp = sum(1 for s, l in zip(scores, labels) if s >= t and l == 0)
        points.append((tp / pos, tp / (tp + fp)))
    area = 0.0
    prev_r, prev_p = 0.0, points[0][1]
    for r, p in points:
        area += (r - prev_r) * (p + prev_p) / 2.0
        prev_r, prev_p = r, p
    return area
