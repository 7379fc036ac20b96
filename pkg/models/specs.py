"""Declarative layer and model descriptions."""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

from utils.errors import ModelSpecError

Shape = Tuple[int, int, int]

KERNEL_SIZE = 5
LEAKY_SLOPE = 0.2
DROPOUT_RATE = 0.5


class LayerKind(str, Enum):
    """Layer kinds a ModelSpec may contain."""
    DENSE = "dense"
    CONV = "conv"
    DECONV = "deconv"
    BATCHNORM = "batchnorm"
    LEAKY_RELU = "leaky_relu"
    RELU = "relu"
    DROPOUT = "dropout"
    FLATTEN = "flatten"
    RESHAPE = "reshape"
    UPSAMPLE = "upsample"
    DOWNSAMPLE = "downsample"
    WEIGHTED_SUM = "weighted_sum"


class Activation(str, Enum):
    """Activation fused into a dense/conv/deconv layer."""
    NONE = "none"
    LEAKY_RELU = "leaky_relu"
    RELU = "relu"
    TANH = "tanh"
    SIGMOID = "sigmoid"
    LINEAR = "linear"


PARAMETRIC_KINDS = frozenset({LayerKind.DENSE, LayerKind.CONV, LayerKind.DECONV, LayerKind.BATCHNORM})

KIND_LABELS = {
    LayerKind.DENSE: "Dense",
    LayerKind.CONV: "Conv",
    LayerKind.DECONV: "Deconv",
    LayerKind.BATCHNORM: "BatchNorm",
    LayerKind.LEAKY_RELU: "LeakyReLU",
    LayerKind.RELU: "ReLU",
    LayerKind.DROPOUT: "Dropout",
    LayerKind.FLATTEN: "Flatten",
    LayerKind.RESHAPE: "Reshape",
    LayerKind.UPSAMPLE: "UpSampling",
    LayerKind.DOWNSAMPLE: "Downsample",
    LayerKind.WEIGHTED_SUM: "WeightedSum",
}

ACTIVATION_LABELS = {
    Activation.NONE: "-",
    Activation.LEAKY_RELU: "LeakyReLU",
    Activation.RELU: "ReLU",
    Activation.TANH: "tanh",
    Activation.SIGMOID: "sigmoid",
    Activation.LINEAR: "linear",
}


class AlphaHandle:
    """Mutable fade-in weight shared between a growth network and its trainer."""

    def __init__(self, value: float = 0.0):
        self._value = 0.0
        self.set(value)

    @property
    def value(self) -> float:
        return self._value

    def set(self, value: float) -> None:
        value = float(value)
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {value}")
        self._value = value

    def __repr__(self) -> str:
        return f"AlphaHandle({self._value})"


def format_shape(shape: Sequence[int]) -> str:
    return "x".join(str(int(s)) for s in shape)


def _is_flat(shape: Shape) -> bool:
    return shape[1] == 1 and shape[2] == 1


def infer_shape(layer: "LayerSpec", in_shape: Shape) -> Shape:
    """
    Output shape of a layer from its input shape.

    Convolutions use SAME padding, so a stride-s conv divides height and
    width by s and a stride-s deconv multiplies them by s.
    """
    c, h, w = in_shape
    kind = layer.kind
    if kind == LayerKind.DENSE:
        if not _is_flat(in_shape):
            raise ModelSpecError(f"{layer.name}: dense needs a flat input, got {format_shape(in_shape)}")
        return (int(layer.params["units"]), 1, 1)
    if kind == LayerKind.CONV:
        if h % layer.stride or w % layer.stride:
            raise ModelSpecError(f"{layer.name}: {h}x{w} not divisible by stride {layer.stride}")
        return (int(layer.params["channels"]), h // layer.stride, w // layer.stride)
    if kind == LayerKind.DECONV:
        return (int(layer.params["channels"]), h * layer.stride, w * layer.stride)
    if kind in (LayerKind.BATCHNORM, LayerKind.LEAKY_RELU, LayerKind.RELU, LayerKind.DROPOUT):
        return in_shape
    if kind == LayerKind.FLATTEN:
        return (c * h * w, 1, 1)
    if kind == LayerKind.RESHAPE:
        target = tuple(int(s) for s in layer.params["shape"])
        if target[0] * target[1] * target[2] != c * h * w:
            raise ModelSpecError(
                f"{layer.name}: cannot reshape {format_shape(in_shape)} to {format_shape(target)}"
            )
        return target
    if kind == LayerKind.UPSAMPLE:
        f = int(layer.params.get("factor", 2))
        return (c, h * f, w * f)
    if kind == LayerKind.DOWNSAMPLE:
        f = int(layer.params.get("factor", 2))
        if h % f or w % f:
            raise ModelSpecError(f"{layer.name}: {h}x{w} not divisible by {f}")
        return (c, h // f, w // f)
    if kind == LayerKind.WEIGHTED_SUM:
        old = _chain_shape(layer.old, in_shape)
        new = _chain_shape(layer.new, in_shape)
        if old != new:
            raise ModelSpecError(
                f"{layer.name}: branch shapes differ ({format_shape(old)} vs {format_shape(new)})"
            )
        return old
    raise ModelSpecError(f"Unknown layer kind: {kind}")


def _chain_shape(layers: Sequence["LayerSpec"], in_shape: Shape) -> Shape:
    shape = in_shape
    for layer in layers:
        shape = infer_shape(layer, shape)
    return shape


@dataclass(frozen=True)
class LayerSpec:
    """One layer: kind, geometry and declared input/output shapes."""
    name: str
    kind: LayerKind
    in_shape: Shape
    out_shape: Shape
    kernel: Optional[int] = None
    stride: int = 1
    padding: str = "same"
    activation: Activation = Activation.NONE
    params: Dict[str, Any] = field(default_factory=dict, hash=False)
    old: Tuple["LayerSpec", ...] = ()
    new: Tuple["LayerSpec", ...] = ()

    @property
    def label(self) -> str:
        return KIND_LABELS[self.kind]

    @property
    def activation_label(self) -> str:
        if self.kind == LayerKind.LEAKY_RELU:
            return ACTIVATION_LABELS[Activation.LEAKY_RELU]
        if self.kind == LayerKind.RELU:
            return ACTIVATION_LABELS[Activation.RELU]
        return ACTIVATION_LABELS[self.activation]

    @property
    def alpha(self) -> Optional[AlphaHandle]:
        return self.params.get("alpha")

    def validate(self) -> None:
        """Check geometry and that the declared out_shape matches the inferred one."""
        if not self.name:
            raise ModelSpecError(f"{self.kind.value} layer has no name")
        if self.kind in (LayerKind.CONV, LayerKind.DECONV):
            if self.kernel is None or self.kernel < 1 or self.kernel % 2 == 0:
                raise ModelSpecError(f"{self.name}: kernel must be a positive odd size, got {self.kernel}")
            if self.padding != "same":
                raise ModelSpecError(f"{self.name}: only same padding is supported")
            if self.stride not in (1, 2):
                raise ModelSpecError(f"{self.name}: stride must be 1 or 2, got {self.stride}")
        if self.kind == LayerKind.WEIGHTED_SUM:
            if not self.old or not self.new:
                raise ModelSpecError(f"{self.name}: weighted sum needs two branches")
            if self.alpha is None:
                raise ModelSpecError(f"{self.name}: weighted sum needs an alpha handle")
            for branch in (self.old, self.new):
                _validate_chain(branch, self.in_shape)
        expected = infer_shape(self, self.in_shape)
        if tuple(self.out_shape) != expected:
            raise ModelSpecError(
                f"{self.name}: declared output {format_shape(self.out_shape)} "
                f"but computed {format_shape(expected)}"
            )

    def iter_layers(self):
        """Yield this layer followed by every layer nested in its branches."""
        yield self
        for branch in (self.old, self.new):
            for layer in branch:
                yield from layer.iter_layers()

    def to_dict(self) -> Dict[str, Any]:
        params = {k: v for k, v in self.params.items() if k != "alpha"}
        if self.alpha is not None:
            params["alpha_value"] = self.alpha.value
        return {
            "name": self.name,
            "kind": self.kind.value,
            "in_shape": list(self.in_shape),
            "out_shape": list(self.out_shape),
            "kernel": self.kernel,
            "stride": self.stride,
            "padding": self.padding,
            "activation": self.activation.value,
            "params": params,
            "old": [layer.to_dict() for layer in self.old],
            "new": [layer.to_dict() for layer in self.new],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any], alpha: Optional[AlphaHandle] = None) -> "LayerSpec":
        params = dict(data.get("params", {}))
        if "shape" in params:
            params["shape"] = tuple(params["shape"])
        alpha_value = params.pop("alpha_value", None)
        if data["kind"] == LayerKind.WEIGHTED_SUM.value:
            if alpha is None:
                alpha = AlphaHandle(alpha_value if alpha_value is not None else 0.0)
            params["alpha"] = alpha
        return cls(
            name=data["name"],
            kind=LayerKind(data["kind"]),
            in_shape=tuple(data["in_shape"]),
            out_shape=tuple(data["out_shape"]),
            kernel=data.get("kernel"),
            stride=int(data.get("stride", 1)),
            padding=data.get("padding", "same"),
            activation=Activation(data.get("activation", "none")),
            params=params,
            old=tuple(cls.from_dict(d, alpha) for d in data.get("old", [])),
            new=tuple(cls.from_dict(d, alpha) for d in data.get("new", [])),
        )


def _validate_chain(layers: Sequence[LayerSpec], in_shape: Shape) -> Shape:
    shape = tuple(in_shape)
    for layer in layers:
        if tuple(layer.in_shape) != shape:
            raise ModelSpecError(
                f"{layer.name}: declared input {format_shape(layer.in_shape)} "
                f"but previous layer emits {format_shape(shape)}"
            )
        layer.validate()
        shape = tuple(layer.out_shape)
    return shape


@dataclass(frozen=True)
class InitSpec:
    """Zero-mean normal weight init; batch-norm scales are drawn around 1."""
    mean: float = 0.0
    std: float = 0.02

    def to_dict(self) -> Dict[str, float]:
        return {"mean": self.mean, "std": self.std}


@dataclass(frozen=True)
class ModelSpec:
    """
    A whole network as an ordered layer list.

    ``heads`` are parallel dense layers applied to the trunk output; a model
    with heads returns one tensor per head.
    """
    name: str
    layers: Tuple[LayerSpec, ...]
    input_shape: Shape
    output_shape: Shape
    heads: Tuple[LayerSpec, ...] = ()
    init: InitSpec = field(default_factory=InitSpec)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not self.layers:
            raise ModelSpecError(f"{self.name}: model has no layers")
        trunk = _validate_chain(self.layers, self.input_shape)
        outputs = [trunk]
        if self.heads:
            outputs = [_validate_chain([head], trunk) for head in self.heads]
            if len(set(outputs)) != 1:
                raise ModelSpecError(f"{self.name}: heads must share one output shape")
        if tuple(self.output_shape) != outputs[0]:
            raise ModelSpecError(
                f"{self.name}: declared output {format_shape(self.output_shape)} "
                f"but layers produce {format_shape(outputs[0])}"
            )
        names = [layer.name for layer in self.iter_layers()]
        duplicates = sorted({n for n in names if names.count(n) > 1})
        if duplicates:
            raise ModelSpecError(f"{self.name}: duplicate layer names {duplicates}")

    def iter_layers(self):
        """All layers, depth first, including branch and head layers."""
        for layer in self.layers:
            yield from layer.iter_layers()
        yield from self.heads

    def layer(self, name: str) -> LayerSpec:
        for layer in self.iter_layers():
            if layer.name == name:
                return layer
        raise KeyError(name)

    @property
    def final_activation(self) -> Activation:
        last = self.heads[-1] if self.heads else self.layers[-1]
        return last.activation

    @property
    def alpha(self) -> Optional[AlphaHandle]:
        for layer in self.iter_layers():
            if layer.alpha is not None:
                return layer.alpha
        return None

    def rows(self) -> List[Tuple[str, str, str, str]]:
        """Table rows: (layer, activation, input shape, output shape)."""
        rows = []

        def emit(layer: LayerSpec, prefix: str = "") -> None:
            for tag, branch in (("old", layer.old), ("new", layer.new)):
                for inner in branch:
                    emit(inner, f"{prefix}{tag}: ")
            rows.append((
                prefix + layer.label,
                layer.activation_label,
                format_shape(layer.in_shape),
                format_shape(layer.out_shape),
            ))

        for layer in self.layers:
            emit(layer)
        for head in self.heads:
            rows.append((
                f"{head.name} ({head.label})",
                head.activation_label,
                format_shape(head.in_shape),
                format_shape(head.out_shape),
            ))
        return rows

    def to_table(self) -> str:
        lines = ["layer | act | in | out"]
        lines.extend(" | ".join(row) for row in self.rows())
        return "\n".join(lines) + "\n"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "input_shape": list(self.input_shape),
            "output_shape": list(self.output_shape),
            "init": self.init.to_dict(),
            "layers": [layer.to_dict() for layer in self.layers],
            "heads": [head.to_dict() for head in self.heads],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ModelSpec":
        try:
            alpha = None
            layers = []
            for d in data["layers"]:
                layer = LayerSpec.from_dict(d, alpha)
                alpha = alpha or layer.alpha
                layers.append(layer)
            return cls(
                name=data["name"],
                layers=tuple(layers),
                input_shape=tuple(data["input_shape"]),
                output_shape=tuple(data["output_shape"]),
                heads=tuple(LayerSpec.from_dict(d) for d in data.get("heads", [])),
                init=InitSpec(**data.get("init", {})),
            )
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, ModelSpecError):
                raise
            raise ModelSpecError(f"Malformed model description: {e}") from e
