"""Selective state-space block.

Shapes: tokens are columns. ``x`` is (B, F, T); the expanded stream ``u`` is
(B, E, T); per-token input/output projections ``B_t``/``C_t`` are (B, S, T);
the diagonal decay ``A`` is (E, S). The hidden state is (B, E, S).
"""
from __future__ import annotations

import numpy as np

from csplab.numcore import NumericFailure, Tensor
from csplab.numcore import tensor as T
from csplab.numcore.memory import note_alloc, note_free


def selective_scan(u: Tensor, delta: Tensor, a: Tensor, b: Tensor, c: Tensor, d: Tensor) -> Tensor:
    """Run the input-dependent recurrence token by token.

    ``h_t = exp(delta_t * A) * h_{t-1} + delta_t * B_t * u_t`` with ``h_0 = 0``;
    ``y_t = C_t . h_t + D * u_t``. Intermediate decays and states are kept only
    when a gradient will be needed.
    """
    ud, dd, ad, bd, cd, skip = u.data, delta.data, a.data, b.data, c.data, d.data
    nb, e, t_len = ud.shape
    s = ad.shape[1]
    keep = T.grad_enabled() and any(p.requires_grad for p in (u, delta, a, b, c, d))
    h = np.zeros((nb, e, s))
    y = np.empty((nb, e, t_len))
    state_bytes = h.nbytes
    if keep:
        decays = np.empty((t_len, nb, e, s))
        states = np.empty((t_len, nb, e, s))
        state_bytes += decays.nbytes + states.nbytes
    note_alloc(state_bytes)
    for t in range(t_len):
        dt = dd[:, :, t]
        decay = np.exp(dt[:, :, None] * ad)
        h = decay * h + (dt * ud[:, :, t])[:, :, None] * bd[:, None, :, t]
        y[:, :, t] = np.matmul(h, cd[:, :, t, None])[:, :, 0]
        if keep:
            decays[t] = decay
            states[t] = h
    note_free(state_bytes)
    y += skip[None, :, None] * ud
    if not np.all(np.isfinite(y)):
        raise NumericFailure("selective scan produced non-finite activations")
    if not keep:
        return Tensor(y)

    def backward(gy):
        gu = gy * skip[None, :, None]
        gdelta = np.empty_like(dd)
        gb = np.empty_like(bd)
        gc = np.empty_like(cd)
        ga = np.zeros_like(ad)
        g_state = np.zeros((nb, e, s))
        for t in range(t_len - 1, -1, -1):
            h_t = states[t]
            h_prev = states[t - 1] if t > 0 else 0.0
            gc[:, :, t] = np.einsum("be,bes->bs", gy[:, :, t], h_t)
            g_state = g_state + gy[:, :, t, None] * cd[:, None, :, t]
            dt, ut, bt = dd[:, :, t], ud[:, :, t], bd[:, :, t]
            g_decay = g_state * h_prev * decays[t]  # grad through exp(dt*A)
            inp = np.einsum("bes,bs->be", g_state, bt)  # sum_s G * B_t
            gdelta[:, :, t] = np.einsum("bes,es->be", g_decay, ad) + inp * ut
            ga += np.einsum("bes,be->es", g_decay, dt)
            gb[:, :, t] = np.einsum("bes,be->bs", g_state, dt * ut)
            gu[:, :, t] += inp * dt
            g_state = g_state * decays[t]
        gd = np.einsum("bet,bet->e", gy, ud)
        return gu, gdelta, ga, gb, gc, gd

    return T.record(y, (u, delta, a, b, c, d), backward, "selective_scan")


def selective_scan_chunked(u, delta, a, b, c, d, chunk: int = 4) -> np.ndarray:
    """Two-pass evaluation of :func:`selective_scan` on raw arrays.

    Pass one computes every chunk's states from a zero start together with the
    cumulative decay inside the chunk; pass two carries the boundary state from
    chunk to chunk and adds its decayed contribution.
    """
    nb, e, t_len = u.shape
    s = a.shape[1]
    decay = np.exp(delta.transpose(2, 0, 1)[..., None] * a)  # (T, B, E, S)
    drive = (delta * u).transpose(2, 0, 1)[..., None] * b.transpose(2, 0, 1)[:, :, None, :]
    local = np.empty_like(decay)
    cum = np.empty_like(decay)
    for start in range(0, t_len, chunk):
        h = np.zeros((nb, e, s))
        run = np.ones((nb, e, s))
        for t in range(start, min(start + chunk, t_len)):
            h = decay[t] * h + drive[t]
            run = run * decay[t]
            local[t], cum[t] = h, run
    states = np.empty_like(decay)
    carry = np.zeros((nb, e, s))
    for start in range(0, t_len, chunk):
        stop = min(start + chunk, t_len)
        states[start:stop] = local[start:stop] + cum[start:stop] * carry
        carry = states[stop - 1]
    y = np.einsum("tbes,bst->bet", states, c)
    return y + d[None, :, None] * u


def causal_depthwise_conv(u: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """Per-channel causal convolution along tokens; ``weight`` is (E, W), tap W-1 hits the current token."""
    width = weight.shape[1]
    t_len = u.shape[-1]
    padded = T.pad(u, [(0, 0), (0, 0), (width - 1, 0)])
    out = None
    for j in range(width):
        term = padded[:, :, j:j + t_len] * weight[:, j:j + 1]
        out = term if out is None else out + term
    return out + bias.reshape(-1, 1)


def ssm_block_forward(x: Tensor, p: dict[str, Tensor]) -> Tensor:
    """Pre-norm selective SSM block with SiLU gate and residual; (B, F, T) -> (B, F, T)."""
    xn = T.layer_norm(x, p["norm.scale"], p["norm.offset"], axis=-2)
    u = T.linear(xn, p["w_in.w"])
    z = T.linear(xn, p["w_gate.w"])
    u = T.silu(causal_depthwise_conv(u, p["conv.w"], p["conv.b"]))
    delta = T.softplus(T.linear(u, p["w_delta.w"], p["b_delta"]))
    b = T.linear(u, p["w_B.w"])
    c = T.linear(u, p["w_C.w"])
    a = -T.exp(p["a_log"])
    y = selective_scan(u, delta, a, b, c, p["d_skip"])
    return x + T.linear(y * T.silu(z), p["w_out.w"])
