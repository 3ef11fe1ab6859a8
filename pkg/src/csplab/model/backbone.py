from __future__ import annotations

from csplab.model.attention import feed_forward, patch_mixer_forward
from csplab.model.config import BackboneConfig
from csplab.model.params import Params, block_params
from csplab.model.ssm import ssm_block_forward
from csplab.numcore import Tensor


def backbone_forward(x: Tensor, cfg: BackboneConfig, params: Params) -> Tensor:
    """Sequence backbone on (B, F, P') embeddings.

    hybrid: SSM blocks with a residual patch mixer after blocks k, 2k, ...;
    plain-ssm: SSM blocks only; full-attention: attention + feed-forward in
    every layer.
    """
    if cfg.variant == "full-attention":
        for i in range(cfg.L_M):
            x = x + patch_mixer_forward(x, block_params(params, f"attn.{i}"), cfg.H)
            x = feed_forward(x, block_params(params, f"ffn.{i}"))
        return x
    mixers = cfg.mixer_positions()
    for i in range(cfg.L_M):
        x = ssm_block_forward(x, block_params(params, f"ssm.{i}"))
        if i + 1 in mixers:
            j = mixers.index(i + 1)
            x = x + patch_mixer_forward(x, block_params(params, f"mix.{j}"), cfg.H)
    return x
