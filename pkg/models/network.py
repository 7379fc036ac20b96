"""PyTorch module that executes a ModelSpec."""

from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import torch
import torch.nn as nn
import torch.nn.functional as F

from utils.logging import get_logger
from .specs import (
    LEAKY_SLOPE,
    PARAMETRIC_KINDS,
    Activation,
    AlphaHandle,
    InitSpec,
    LayerKind,
    LayerSpec,
    ModelSpec,
)

logger = get_logger(__name__)

Output = Union[torch.Tensor, Tuple[torch.Tensor, ...]]


def _make_module(layer: LayerSpec) -> nn.Module:
    c_in, h, w = layer.in_shape
    if layer.kind == LayerKind.DENSE:
        return nn.Linear(c_in * h * w, layer.out_shape[0])
    if layer.kind == LayerKind.CONV:
        return nn.Conv2d(c_in, layer.out_shape[0], layer.kernel,
                         stride=layer.stride, padding=layer.kernel // 2)
    if layer.kind == LayerKind.DECONV:
        return nn.ConvTranspose2d(c_in, layer.out_shape[0], layer.kernel, stride=layer.stride,
                                  padding=layer.kernel // 2, output_padding=layer.stride - 1)
    if layer.kind == LayerKind.BATCHNORM:
        if h == 1 and w == 1:
            return nn.BatchNorm1d(c_in)
        return nn.BatchNorm2d(c_in)
    raise ValueError(f"{layer.kind} has no parameters")


def _activate(x: torch.Tensor, activation: Activation) -> torch.Tensor:
    if activation == Activation.TANH:
        return torch.tanh(x)
    if activation == Activation.SIGMOID:
        return torch.sigmoid(x)
    if activation == Activation.RELU:
        return F.relu(x)
    if activation == Activation.LEAKY_RELU:
        return F.leaky_relu(x, LEAKY_SLOPE)
    return x


def init_weights(module: nn.Module, init: InitSpec = InitSpec()) -> None:
    """Normal(mean, std) weights and zero biases; batch-norm scales Normal(1, std)."""
    for m in module.modules():
        if isinstance(m, (nn.Conv2d, nn.ConvTranspose2d, nn.Linear)):
            nn.init.normal_(m.weight, init.mean, init.std)
            if m.bias is not None:
                nn.init.zeros_(m.bias)
        elif isinstance(m, (nn.BatchNorm1d, nn.BatchNorm2d)):
            nn.init.normal_(m.weight, 1.0, init.std)
            nn.init.zeros_(m.bias)


class SpecNetwork(nn.Module):
    """
    A network built from a ModelSpec.

    Parametric layers live in a flat ``ModuleDict`` keyed by layer name, so
    two networks that share layer names share state-dict keys.
    """

    def __init__(self, spec: ModelSpec, initialize: bool = True):
        super().__init__()
        self.spec = spec
        self.layers = nn.ModuleDict()
        for layer in spec.iter_layers():
            if layer.kind in PARAMETRIC_KINDS:
                self.layers[layer.name] = _make_module(layer)
        if initialize:
            init_weights(self, spec.init)

    @property
    def alpha(self) -> Optional[AlphaHandle]:
        return self.spec.alpha

    def _apply_layer(self, layer: LayerSpec, x: torch.Tensor,
                     taps: Optional[Dict[str, torch.Tensor]]) -> torch.Tensor:
        kind = layer.kind
        if kind == LayerKind.DENSE:
            x = _activate(self.layers[layer.name](x.flatten(1)), layer.activation)
        elif kind in (LayerKind.CONV, LayerKind.DECONV):
            x = _activate(self.layers[layer.name](x), layer.activation)
        elif kind == LayerKind.BATCHNORM:
            x = self.layers[layer.name](x)
        elif kind == LayerKind.LEAKY_RELU:
            x = F.leaky_relu(x, layer.params.get("slope", LEAKY_SLOPE))
        elif kind == LayerKind.RELU:
            x = F.relu(x)
        elif kind == LayerKind.DROPOUT:
            x = F.dropout(x, layer.params.get("rate", 0.5), training=self.training)
        elif kind == LayerKind.FLATTEN:
            x = x.flatten(1)
        elif kind == LayerKind.RESHAPE:
            x = x.reshape(x.shape[0], *layer.params["shape"])
        elif kind == LayerKind.UPSAMPLE:
            x = F.interpolate(x, scale_factor=layer.params.get("factor", 2), mode="nearest")
        elif kind == LayerKind.DOWNSAMPLE:
            x = F.avg_pool2d(x, layer.params.get("factor", 2))
        elif kind == LayerKind.WEIGHTED_SUM:
            alpha = layer.alpha.value
            old = self._run(layer.old, x, taps)
            new = self._run(layer.new, x, taps)
            x = (1.0 - alpha) * old + alpha * new
        if taps is not None:
            taps[layer.name] = x
        return x

    def _run(self, layers: Iterable[LayerSpec], x: torch.Tensor,
             taps: Optional[Dict[str, torch.Tensor]] = None) -> torch.Tensor:
        for layer in layers:
            x = self._apply_layer(layer, x, taps)
        return x

    def forward(self, x: torch.Tensor) -> Output:
        h = self._run(self.spec.layers, x)
        if not self.spec.heads:
            return h
        return tuple(self._apply_layer(head, h, None) for head in self.spec.heads)

    def forward_with_features(self, x: torch.Tensor, names: Sequence[str]) -> Tuple[Output, Dict[str, torch.Tensor]]:
        """Run forward and also return the outputs of the named layers."""
        taps: Dict[str, torch.Tensor] = {}
        h = self._run(self.spec.layers, x, taps)
        if self.spec.heads:
            h = tuple(self._apply_layer(head, h, taps) for head in self.spec.heads)
        missing = [n for n in names if n not in taps]
        if missing:
            raise KeyError(f"No layers named {missing} in {self.spec.name}")
        return h, {n: taps[n] for n in names}


def transfer_weights(src: nn.Module, dst: nn.Module) -> List[str]:
    """
    Copy every parameter and buffer whose name and shape match.

    Returns:
        Sorted list of copied state-dict keys
    """
    src_state = src.state_dict()
    dst_state = dst.state_dict()
    copied = []
    with torch.no_grad():
        for key, value in src_state.items():
            if key in dst_state and dst_state[key].shape == value.shape:
                dst_state[key].copy_(value)
                copied.append(key)
    logger.debug(f"Transferred {len(copied)}/{len(dst_state)} tensors")
    return sorted(copied)
