"""
Scoring views before trusting them
==================================

Two views of the same 300 points: one shows three clean blobs, the other is
noise. k-means plus the silhouette tells them apart, and the agreement between
their labellings sets the cross-view weight.
"""

import numpy as np

from dwcl import KMeansConfig, build_plan, kmeans, silhouette

r = np.random.default_rng(0)
truth = np.repeat(np.arange(3), 100)
centers = np.array([[0, 0], [6, 0], [3, 5]], float)
clean = centers[truth] + r.normal(scale=0.6, size=(300, 2))
noise = r.normal(size=(300, 2))

# cluster each view on its own
labels = [kmeans(X, KMeansConfig(k=3, seed=1)).labels for X in (clean, noise)]
si = [silhouette(X, lab).mean for X, lab in zip((clean, noise), labels)]
print("mean silhouette per view:", np.round(si, 3))

# the best view anchors every cross-view; weights are e^SI products times e^CMI - 1
plan = build_plan("bestother", 2, int(np.argmax(si)), si, labels, k=3)
d = plan.diagnostics
print("best view:", d.best_view)
print("pairs:", d.pairs, "CMI:", np.round(d.cmi, 3))
print("W_SI pair:", np.round(d.w_si_pair, 3), "W_CMI:", np.round(d.w_cmi, 3))
print("dual weight:", np.round(d.w_dual, 4))

# a duplicated view agrees perfectly with itself: W_CMI hits its ceiling e - 1
twin = build_plan("bestother", 2, 0, [si[0], si[0]], [labels[0], labels[0]], k=3)
print("duplicate view W_CMI:", twin.diagnostics.w_cmi[0], "vs e-1 =", np.e - 1)
