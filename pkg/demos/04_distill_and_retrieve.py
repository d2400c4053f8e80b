"""
Distilling a student and searching with it
==========================================

A frozen teacher encodes Gaussian blobs; a linear student learns to match it.
Retrieval is scored with the student's own database (SSHP) and with the
teacher's (ASHP).
"""

import numpy as np

from brcd.data import make_blobs, split
from brcd.distill import AugmentationSpec, StudentModel, TeacherModel, TrainConfig, train
from brcd.metrics import RelevanceJudge, nra_at_k
from brcd.search import evaluate

x, y = make_blobs(10, 600, 64, spread=1.5, seed=0)
(tr, ytr), (q, yq), (db, ydb) = split(x, y, [3000, 500, 2500], seed=0)

teacher = TeacherModel.centroid(tr, ytr, 32, seed=0)
student = StudentModel.init(64, 32, seed=0)
cfg = TrainConfig(M=64, epochs=15, k=20)
result = train(tr, teacher, student, cfg, AugmentationSpec(gaussian_sigma=0.5, seed=0))

for row in result.log[::5] + result.log[-1:]:
    print("epoch {epoch:2d}  loss {loss:.3f}  isd {isd:.2f}  opr {opr:.3f}".format(**row))

db_ids = np.arange(len(db))
q_ids = len(db) + np.arange(len(q))
judge = RelevanceJudge.from_arrays(np.r_[db_ids, q_ids], np.r_[ydb, yq])
t_db = teacher.encode(db, db_ids)
s_db, s_q = result.student.encode(db, db_ids), result.student.encode(q, q_ids)

print("SSHP mAP@100", round(evaluate("SSHP", s_db, t_db, s_q, judge, 100), 4))
print("ASHP mAP@100", round(evaluate("ASHP", s_db, t_db, s_q, judge, 100), 4))
print("NRA@50      ", round(nra_at_k(s_q, t_db, judge, 50), 4))
