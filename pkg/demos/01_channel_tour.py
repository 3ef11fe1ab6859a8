"""
A tour of the synthetic channel
===============================

Draw one multipath user, look at its Doppler spread, observe it through the
pilot grid and see how quickly the channel forgets its past.
"""
import numpy as np

from csplab.chansim import (ArrayGeometry, DmrsPattern, OfdmNumerology, PathSet, apply_dmrs_observation,
                            interpolate_pilots, max_doppler, sample_paths, synth_channel)
from csplab.numcore import RngStream

np.set_printoptions(precision=3, suppress=True)

num = OfdmNumerology()  # 48 RBs of 180 kHz around 2.4 GHz, 1 ms slots
geom = ArrayGeometry()  # 2 x 2 planar array at the base station

# The fastest users move at 100 km/h.
print("max Doppler at 100 km/h: %.1f Hz" % max_doppler(100, num.f_c))

paths = sample_paths(RngStream(0, "demo"), velocity=60.0)
print("path delays (us):", paths.tau * 1e6)
print("path powers:", np.abs(paths.alpha) ** 2)
print("Doppler shifts (Hz):", paths.f_d)

# 16 history slots on the uplink band, antenna 0
h = synth_channel(paths, "ul", num, geom, range(16))[0]
print("grid shape (RBs x slots):", h.shape)

# A single path rotates by exactly exp(2j*pi*f_d*T) per slot.
one = synth_channel(PathSet.single(1.0, tau=4e-7, f_d=50.0), "ul", num, geom, range(4))[0]
print("per-slot phase step:", np.angle(one[0, 1:] / one[0, :-1]), "expected", 2 * np.pi * 50e-3)

# Pilots live on every other slot at 20 dB SNR; the rest is interpolated.
obs, mask = apply_dmrs_observation(h, DmrsPattern(), RngStream(0, "noise"))
est = interpolate_pilots(obs, mask)
err = np.sum(np.abs(est - h) ** 2) / np.sum(np.abs(h) ** 2)
print("pilot density %.2f, interpolation NMSE %.4f" % (mask.mean(), err))

# Temporal correlation: how much does slot 0 resemble slot l?
for v in (10, 50, 100):
    p = sample_paths(RngStream(1, "corr"), velocity=v)
    g = synth_channel(p, "ul", num, geom, range(8))[0]
    corr = [abs(np.vdot(g[:, 0], g[:, l])) / np.linalg.norm(g[:, 0]) / np.linalg.norm(g[:, l]) for l in range(8)]
    print("%3d km/h correlation vs lag:" % v, np.array(corr))
