"""
Scoring a clustering against ground truth
==========================================

Cluster ids are arbitrary, so accuracy first finds the best one-to-one map
from predicted to true ids. NMI needs no matching.
"""

import numpy as np

from dwcl import accuracy, confusion_matrix, hungarian_match, nmi

truth = np.array([0, 0, 0, 1, 1, 1, 2, 2, 2])
pred = np.array([2, 2, 1, 0, 0, 0, 1, 1, 1])

C = confusion_matrix(pred, truth)
print("confusion (rows = predicted, cols = true):")
print(C)
perm = hungarian_match(C)
print("matched true id for each predicted id:", perm)
print("ACC:", accuracy(pred, truth), "NMI:", round(nmi(pred, truth), 4))

# relabelling the prediction changes neither score
shuffled = np.array([1, 2, 0])[pred]
print("after relabelling:", accuracy(shuffled, truth), round(nmi(shuffled, truth), 4))
