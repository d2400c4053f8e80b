"""
Contrastive distillation losses
===============================

Three losses of increasing robustness, and a finite-difference check of
their analytic gradients.
"""

import numpy as np

from brcd.bitmask import make_masks
from brcd.kd_loss import BatchView, LossConfig, grad_brcd, loss_basic, loss_brcd, loss_robust

rng = np.random.default_rng(2)
M, b = 6, 16
teacher = rng.choice([-1.0, 1.0], size=(M, b))
teacher_aug = np.where(rng.random((M, b)) < 0.15, -teacher, teacher)
student = teacher + 0.8 * rng.normal(size=(M, b))

# anchors 0 and 3 share a cluster; augmentation 5 drifted away from its anchor
y = np.array([0, 1, 2, 0, 1, 2])
y_aug = np.array([0, 1, 2, 0, 1, 0])
batch = BatchView(student, teacher, teacher_aug, y, y_aug)
cfg = LossConfig(alpha=0.8, tau=0.3)
masks = make_masks(rng.random((3, b)), 0.4)

print("basic ", loss_basic(batch, cfg))
print("robust", loss_robust(batch, cfg))
print("brcd  ", loss_brcd(batch, cfg, masks))

# central differences against the closed form
g = grad_brcd(batch, cfg, masks)
h = 1e-5
fd = np.zeros_like(student)
for idx in np.ndindex(student.shape):
    up, down = student.copy(), student.copy()
    up[idx] += h
    down[idx] -= h
    fd[idx] = (loss_brcd(batch.with_student(up), cfg, masks) - loss_brcd(batch.with_student(down), cfg, masks)) / (2 * h)
print("max |analytic - numeric|:", np.abs(g - fd).max())
