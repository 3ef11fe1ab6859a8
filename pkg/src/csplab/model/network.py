"""End-to-end predictor: complex UL history -> complex DL prediction."""
from __future__ import annotations

import numpy as np

from csplab.model.backbone import backbone_forward
from csplab.model.config import BackboneConfig
from csplab.model.head import head_project
from csplab.model.params import Params, init_params
from csplab.model.tokenizer import tokenize
from csplab.numcore import Tensor, no_grad
from csplab.pipeline import PatchedInput, finalize_prediction, preprocess


class CspModel:
    def __init__(self, config: BackboneConfig, params: Params | None = None, seed: int = 0):
        self.config = config
        self.params = params if params is not None else init_params(config, seed)

    def forward_patched(self, batch: PatchedInput) -> Tensor:
        """Normalised (B, 2K, L) prediction from preprocessed patches."""
        cfg = self.config
        emb = tokenize(Tensor(batch.x_f_p), Tensor(batch.x_tau_p), self.params, cfg)
        seq = backbone_forward(emb, cfg, self.params)
        return head_project(seq, self.params["head.w"], self.params["head.b"], cfg.K, cfg.L)

    def forward(self, ul: np.ndarray) -> tuple[Tensor, PatchedInput]:
        """Run a (B, K, P) batch; also returns the preprocessing result (carries NormStats)."""
        ul = np.asarray(ul)
        if ul.shape[-2:] != (self.config.K, self.config.P):
            raise ValueError(f"history grid {ul.shape[-2:]} does not match model (K={self.config.K}, P={self.config.P})")
        batch = preprocess(ul, self.config.patch_size)
        return self.forward_patched(batch), batch

    def predict(self, ul: np.ndarray) -> np.ndarray:
        """Complex DL prediction for a (K, P) grid or (B, K, P) batch."""
        ul = np.asarray(ul)
        single = ul.ndim == 2
        with no_grad():
            x_hat, batch = self.forward(ul[None] if single else ul)
        out = finalize_prediction(x_hat.data, batch.norm_f)
        return out[0] if single else out

    def trainable(self) -> dict[str, Tensor]:
        mask = self.config.freeze_mask
        return {n: p for n, p in self.params.items() if mask.get(n, True)}

    def n_params(self) -> int:
        return sum(p.size for p in self.params.values())


def predict(sample, model: CspModel) -> np.ndarray:
    """K x L complex prediction for one :class:`~csplab.chansim.Sample`."""
    return model.predict(sample.ul_history)
