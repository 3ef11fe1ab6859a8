"""Channel-state prediction laboratory: channel synthesis, tokenization,
hybrid selective-SSM/attention backbones, training and scaling benchmarks."""

__version__ = "0.1.0"
