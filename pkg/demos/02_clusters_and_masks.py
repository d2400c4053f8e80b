"""
Pseudo labels and redundancy bits
=================================

Teacher codes are grouped with k-means; within each group, dimensions whose
values are close to balanced carry little information and get masked.
"""

import numpy as np

from brcd.bitmask import bit_frequency_histogram, masks_from_clusters
from brcd.cluster import choose_k, kmeans_fit
from brcd.codes import CodeMatrix

rng = np.random.default_rng(1)

# three planted groups: 10 fixed dims each, the rest coin flips
b = 24
rows = []
for g in range(3):
    block = rng.choice([-1, 1], size=(200, b))
    block[:, g * 7 : g * 7 + 10] = rng.choice([-1, 1], size=10)
    rows.append(block)
codes = CodeMatrix.from_pm1(np.concatenate(rows))

print("elbow pick for k:", choose_k(codes, k_values=[2, 3, 4, 6, 8]))
model = kmeans_fit(codes, 3, seed=0)
print("inertia by iteration:", [round(v, 1) for v in model.inertia_history])

labels = model.labels_for(codes.ids)
masks = masks_from_clusters(codes, labels, model.k, delta=0.4)
for c in range(model.k):
    kept = np.flatnonzero(masks.masks[c])
    print(f"cluster {c}: keeps dims {kept.tolist()}")

# the same picture as +1 / -1 shares for cluster 0
hist = bit_frequency_histogram(codes.to_pm1()[labels == 0])
print(np.round(hist[:12], 2))
