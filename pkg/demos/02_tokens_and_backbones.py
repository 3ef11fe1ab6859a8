"""
From CSI grid to tokens to backbone
===================================

Preprocess one grid into patches, run the three backbone variants and check
the structural identities that tie the hybrid to the plain SSM stack.
"""
import numpy as np

from csplab.model import BackboneConfig, CspModel, backbone_forward, init_backbone_params
from csplab.numcore import Tensor, no_grad
from csplab.pipeline import preprocess

rng = np.random.default_rng(0)
h = rng.normal(size=(48, 16)) + 1j * rng.normal(size=(48, 16))

# Frequency and delay views, real/imag rows stacked, normalised, cut into patches of 4 slots
batch = preprocess(h, patch_size=4)
print("patched frequency branch:", batch.x_f_p.shape, "-> N=%d, P'=%d" % (batch.N, batch.P_prime))

cfg = BackboneConfig()  # F=64, 8 SSM blocks, a mixer every k=4 blocks, 2 heads
print("mixers after blocks", cfg.mixer_positions())

model = CspModel(cfg, seed=0)
pred = model.predict(h)
print("prediction grid:", pred.shape, "parameters:", sum(p.size for p in model.params.values()))

# Same seed gives the same SSM weights across variants, so k > L_M reduces the hybrid to plain.
x = Tensor(rng.normal(size=(1, 16, 6)))
small = dict(F=16, L_M=4, S=4, H=2)
hy = BackboneConfig(**small, k=5)
pl = BackboneConfig(**small, variant="plain-ssm")
with no_grad():
    a = backbone_forward(x, hy, init_backbone_params(hy, 1)).data
    b = backbone_forward(x, pl, init_backbone_params(pl, 1)).data
print("hybrid with k > L_M equals plain:", np.array_equal(a, b))

# Zeroing each mixer's output projection has the same effect.
hy = BackboneConfig(**small, k=2)
params = init_backbone_params(hy, 1)
for name in params:
    if name.endswith("w_o.w"):
        params[name] = Tensor(np.zeros(params[name].shape))
with no_grad():
    c = backbone_forward(x, hy, params).data
print("hybrid with W_O = 0 equals plain:", np.array_equal(c, b))
