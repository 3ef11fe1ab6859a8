"""
Training a small predictor
==========================

Generate a small TDD set, train the hybrid model for a few epochs and compare
it against repeating the last observed slot.
"""
import time

from csplab.chansim import DatasetConfig, generate_dataset
from csplab.model import BackboneConfig, CspModel
from csplab.trainer import TrainConfig, evaluate, evaluate_persistence, train

sets = {s: generate_dataset(DatasetConfig(count=n, split=s), 42)
        for s, n in (("train", 64), ("val", 16), ("test", 16))}
print({s: len(d) for s, d in sets.items()}, "samples")

model = CspModel(BackboneConfig(), seed=0)
t0 = time.perf_counter()
res = train(model, sets["train"], sets["val"], TrainConfig(epochs=4))
print("trained in %.0f s" % (time.perf_counter() - t0))
for rec in res.history:
    print("epoch %d  train %.4f  val %.4f" % (rec.epoch, rec.train_nmse, rec.val_nmse))
print("kept epoch", res.best_epoch)

rep = evaluate(res.model, sets["test"])
base = evaluate_persistence(sets["test"])
print("test NMSE: model %.4f, persistence %.4f" % (rep.overall_nmse, base.overall_nmse))
print("per horizon (model):", {l: round(v, 4) for l, v in rep.per_horizon.items()})
print("per horizon (persistence):", {l: round(v, 4) for l, v in base.per_horizon.items()})
