"""Slow, obviously-correct reference implementations used only by the tests."""

import itertools
import math

import numpy as np


def distance_loop(X):
    n = len(X)
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            D[i, j] = math.sqrt(sum((X[i][t] - X[j][t]) ** 2 for t in range(len(X[i]))))
    return D


def cosine_loop(A, B):
    out = np.zeros((len(A), len(B)))
    for i, a in enumerate(A):
        for j, b in enumerate(B):
            dot = sum(x * y for x, y in zip(a, b))
            out[i, j] = dot / (math.sqrt(sum(x * x for x in a)) * math.sqrt(sum(y * y for y in b)))
    return out


def silhouette_loop(X, labels):
    """Per-point silhouette straight from the definitions (Euclidean distance)."""
    n = len(X)
    labels = list(labels)
    clusters = sorted(set(labels))
    d = lambda i, j: math.sqrt(sum((X[i][t] - X[j][t]) ** 2 for t in range(len(X[i]))))  # noqa: E731
    out = []
    for i in range(n):
        own = [j for j in range(n) if labels[j] == labels[i] and j != i]
        if not own:
            out.append(0.0)
            continue
        a = sum(d(i, j) for j in own) / len(own)
        b = min(
            sum(d(i, j) for j in range(n) if labels[j] == c) / sum(1 for j in range(n) if labels[j] == c)
            for c in clusters if c != labels[i]
        )
        m = max(a, b)
        out.append(0.0 if m == 0 else (b - a) / m)
    return out


def nmi_table(x, y):
    """Arithmetic-mean normalised MI from explicit dictionary counting."""
    n = len(x)
    joint, px, py = {}, {}, {}
    for a, b in zip(x, y):
        joint[(a, b)] = joint.get((a, b), 0) + 1
        px[a] = px.get(a, 0) + 1
        py[b] = py.get(b, 0) + 1
    hx = -sum(c / n * math.log(c / n) for c in px.values())
    hy = -sum(c / n * math.log(c / n) for c in py.values())
    mi = sum(c / n * math.log((c / n) / ((px[a] / n) * (py[b] / n))) for (a, b), c in joint.items())
    if hx == 0 and hy == 0:
        return 1.0
    if hx == 0 or hy == 0:
        return 0.0
    return 2 * mi / (hx + hy)


def best_matching_brute(C):
    K = len(C)
    return max(sum(C[k][p[k]] for k in range(K)) for p in itertools.permutations(range(K)))


def central_difference(f, params, eps=1e-5):
    """Finite-difference gradient of scalar ``f()`` w.r.t. each array in ``params`` (mutated in place)."""
    grads = []
    for p in params:
        g = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            old = p[idx]
            p[idx] = old + eps
            fp = f()
            p[idx] = old - eps
            fm = f()
            p[idx] = old
            g[idx] = (fp - fm) / (2 * eps)
        grads.append(g)
    return grads


def rel_error(a, b):
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if max(na, nb) < 1e-10:
        return 0.0
    return float(np.linalg.norm(a - b) / max(na, nb))


def mlp_loop(layers, x):
    """Scalar-loop evaluation of a dense stack: layers = [(W, b, act)]."""
    v = list(x)
    for W, b, act in layers:
        out = []
        for j in range(W.shape[1]):
            s = b[j] + sum(v[i] * W[i, j] for i in range(W.shape[0]))
            out.append(max(s, 0.0) if act == "relu" else s)
        v = out
    return np.array(v)
