"""Learnable components: tokenizer, selective SSM, patch-mixer attention, backbones, head."""
from csplab.model.attention import feed_forward, patch_mixer_forward
from csplab.model.backbone import backbone_forward
from csplab.model.checkpoint import load_checkpoint, round_to_f32, save_checkpoint
from csplab.model.config import VARIANTS, BackboneConfig
from csplab.model.head import head_project
from csplab.model.network import CspModel, predict
from csplab.model.params import block_params, frozen_core_mask, init_backbone_params, init_params
from csplab.model.ssm import (causal_depthwise_conv, selective_scan, selective_scan_chunked,
                              ssm_block_forward)
from csplab.model.tokenizer import positional_encoding, token_mixer_forward, tokenize

__all__ = [
    "VARIANTS", "BackboneConfig", "CspModel", "backbone_forward", "block_params",
    "causal_depthwise_conv", "feed_forward", "frozen_core_mask", "head_project",
    "init_backbone_params", "init_params", "load_checkpoint", "patch_mixer_forward",
    "positional_encoding", "predict", "round_to_f32", "save_checkpoint", "selective_scan",
    "selective_scan_chunked", "ssm_block_forward", "token_mixer_forward", "tokenize",
]
