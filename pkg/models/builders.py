"""
Builders for every network the toolkit trains.

All convolutions use kernel 5 with SAME padding. Sizes below 128 are
desk-scale variants that keep the channel progression and drop blocks.
"""

import math
from dataclasses import replace
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from utils.errors import ModelSpecError
from .specs import (
    DROPOUT_RATE,
    KERNEL_SIZE,
    LEAKY_SLOPE,
    Activation,
    AlphaHandle,
    LayerKind,
    LayerSpec,
    ModelSpec,
    Shape,
    infer_shape,
)

GAN_LATENT_DIM = 100
VAE_LATENT_DIM = 512
SUPPORTED_SIZES = (32, 64, 128)
SEED_RESOLUTION = 8
SEED_CHANNELS = 1024
GENERATOR_BLOCK_CHANNELS = (256, 128, 64, 32)
ENCODER_CHANNELS = (16, 32, 64, 128)
ENCODER_HIDDEN = 1024
PROG_SEED_CHANNELS = 64


class ProgBlock(str, Enum):
    DECONV_1 = "DECONV_1"
    DECONV_2 = "DECONV_2"
    CONV_1 = "CONV_1"
    CONV_2 = "CONV_2"


class ProgStage(str, Enum):
    """Networks of the three-stage progressive schedule."""
    G64 = "g64"
    C64 = "c64"
    G128 = "g128"
    C128 = "c128"
    G_GROWTH = "g_growth"
    C_GROWTH = "c_growth"

    @property
    def is_growth(self) -> bool:
        return self in (ProgStage.G_GROWTH, ProgStage.C_GROWTH)

    @property
    def is_generator(self) -> bool:
        return self.value.startswith("g")


class _Chain:
    """Appends layers while tracking the running shape."""

    def __init__(self, in_shape: Sequence[int]):
        self.input_shape: Shape = tuple(int(s) for s in in_shape)
        self.shape: Shape = self.input_shape
        self.layers: List[LayerSpec] = []

    def add(
        self,
        name: str,
        kind: LayerKind,
        kernel: Optional[int] = None,
        stride: int = 1,
        activation: Activation = Activation.NONE,
        **params,
    ) -> "_Chain":
        layer = LayerSpec(name, kind, self.shape, self.shape, kernel, stride, "same", activation, params)
        layer = replace(layer, out_shape=infer_shape(layer, self.shape))
        self.layers.append(layer)
        self.shape = layer.out_shape
        return self

    def conv(self, name: str, channels: int, stride: int = 1,
             activation: Activation = Activation.NONE) -> "_Chain":
        return self.add(name, LayerKind.CONV, KERNEL_SIZE, stride, activation, channels=channels)

    def deconv(self, name: str, channels: int, stride: int = 1,
               activation: Activation = Activation.NONE) -> "_Chain":
        return self.add(name, LayerKind.DECONV, KERNEL_SIZE, stride, activation, channels=channels)

    def dense(self, name: str, units: int, activation: Activation = Activation.NONE) -> "_Chain":
        return self.add(name, LayerKind.DENSE, activation=activation, units=units)

    def leaky(self, name: str) -> "_Chain":
        return self.add(name, LayerKind.LEAKY_RELU, slope=LEAKY_SLOPE)

    def extend(self, layers: Sequence[LayerSpec]) -> "_Chain":
        for layer in layers:
            if layer.in_shape != self.shape:
                raise ModelSpecError(f"{layer.name}: expects {layer.in_shape}, chain is at {self.shape}")
            self.layers.append(layer)
            self.shape = layer.out_shape
        return self

    def blend(self, name: str, old: Sequence[LayerSpec], new: Sequence[LayerSpec],
              alpha: AlphaHandle) -> "_Chain":
        layer = LayerSpec(name, LayerKind.WEIGHTED_SUM, self.shape, self.shape,
                          params={"alpha": alpha}, old=tuple(old), new=tuple(new))
        layer = replace(layer, out_shape=infer_shape(layer, self.shape))
        self.layers.append(layer)
        self.shape = layer.out_shape
        return self

    def spec(self, name: str, heads: Sequence[LayerSpec] = ()) -> ModelSpec:
        output = heads[0].out_shape if heads else self.shape
        return ModelSpec(name, tuple(self.layers), self.input_shape, output, tuple(heads))


def _block_count(size: int) -> int:
    if size not in SUPPORTED_SIZES:
        raise ModelSpecError(f"Unsupported image size {size}; expected one of {SUPPORTED_SIZES}")
    return int(math.log2(size // SEED_RESOLUTION))


def _check_latent(latent_dim: int) -> None:
    if latent_dim < 1:
        raise ModelSpecError(f"latent_dim must be >= 1, got {latent_dim}")


def build_dcgan_generator(
    latent_dim: int = GAN_LATENT_DIM,
    out: int = 128,
    dropout: bool = True,
    dropout_rate: float = DROPOUT_RATE,
    out_activation: Activation = Activation.TANH,
    name: str = "generator",
) -> ModelSpec:
    """
    Dense seed to 1024x8x8, then stride-2 deconv blocks up to ``out``.

    Each block is deconv, batch norm, LeakyReLU and (optionally) dropout.
    At out=128 there are four blocks with 256, 128, 64 and 32 channels.
    """
    _check_latent(latent_dim)
    chain = _Chain((latent_dim, 1, 1))
    chain.dense("dense", SEED_CHANNELS * SEED_RESOLUTION ** 2)
    chain.add("reshape", LayerKind.RESHAPE, shape=(SEED_CHANNELS, SEED_RESOLUTION, SEED_RESOLUTION))
    for i, channels in enumerate(GENERATOR_BLOCK_CHANNELS[:_block_count(out)], start=1):
        chain.deconv(f"block{i}_deconv", channels, stride=2)
        chain.add(f"block{i}_bn", LayerKind.BATCHNORM)
        chain.leaky(f"block{i}_act")
        if dropout:
            chain.add(f"block{i}_drop", LayerKind.DROPOUT, rate=dropout_rate)
    chain.deconv("to_image", 1, stride=1, activation=out_activation)
    return chain.spec(name)


def build_dcgan_discriminator(
    in_size: int = 128,
    dropout: bool = False,
    dropout_rate: float = DROPOUT_RATE,
    out_activation: Activation = Activation.SIGMOID,
    name: str = "discriminator",
) -> ModelSpec:
    """
    Stride-1 conv on the image, stride-2 conv blocks down to 256x8x8, dense score.

    With ``dropout`` a dropout layer follows every LeakyReLU.
    """
    blocks = tuple(reversed(GENERATOR_BLOCK_CHANNELS[:_block_count(in_size)]))
    chain = _Chain((1, in_size, in_size))
    chain.conv("from_image", 1, stride=1)
    chain.leaky("from_image_act")
    if dropout:
        chain.add("from_image_drop", LayerKind.DROPOUT, rate=dropout_rate)
    for i, channels in enumerate(blocks, start=1):
        chain.conv(f"block{i}_conv", channels, stride=2)
        chain.add(f"block{i}_bn", LayerKind.BATCHNORM)
        chain.leaky(f"block{i}_act")
        if dropout:
            chain.add(f"block{i}_drop", LayerKind.DROPOUT, rate=dropout_rate)
    chain.add("flatten", LayerKind.FLATTEN)
    chain.dense("score", 1, activation=out_activation)
    return chain.spec(name)


def build_wgan(
    latent_dim: int = GAN_LATENT_DIM,
    out: int = 128,
    generator_dropout: bool = True,
    critic_dropout: bool = False,
) -> Tuple[ModelSpec, ModelSpec]:
    """Generator shared with DCGAN; critic is the discriminator with a linear score."""
    generator = build_dcgan_generator(latent_dim, out, dropout=generator_dropout)
    critic = build_dcgan_discriminator(out, dropout=critic_dropout,
                                       out_activation=Activation.LINEAR, name="critic")
    return generator, critic


def _block_input(block: ProgBlock, base: int) -> Shape:
    return {
        ProgBlock.DECONV_1: (PROG_SEED_CHANNELS, base, base),
        ProgBlock.DECONV_2: (128, base, base),
        ProgBlock.CONV_1: (64, 2 * base, 2 * base),
        ProgBlock.CONV_2: (128, base, base),
    }[block]


def build_prog_block(name, base: int = 64) -> List[LayerSpec]:
    """
    Layer list of a progressive block at low resolution ``base``.

    DECONV_1 and CONV_2 run at ``base``; DECONV_2 upsamples to ``2 * base``
    and CONV_1 downsamples back.
    """
    try:
        block = ProgBlock(name)
    except ValueError:
        raise ModelSpecError(f"Unknown block {name!r}; expected one of {[b.value for b in ProgBlock]}")
    if base < 1:
        raise ModelSpecError(f"base resolution must be >= 1, got {base}")

    chain = _Chain(_block_input(block, base))
    if block == ProgBlock.DECONV_1:
        for part in ("a", "b"):
            chain.deconv(f"deconv1_{part}", 128)
            chain.add(f"deconv1_{part}_bn", LayerKind.BATCHNORM)
            chain.leaky(f"deconv1_{part}_act")
    elif block == ProgBlock.DECONV_2:
        chain.add("deconv2_up", LayerKind.UPSAMPLE, factor=2)
        for part in ("a", "b"):
            chain.deconv(f"deconv2_{part}", 64)
            chain.add(f"deconv2_{part}_bn", LayerKind.BATCHNORM)
            chain.leaky(f"deconv2_{part}_act")
    elif block == ProgBlock.CONV_1:
        for part, channels in (("a", 64), ("b", 128)):
            chain.conv(f"conv1_{part}", channels)
            chain.add(f"conv1_{part}_bn", LayerKind.BATCHNORM)
            chain.leaky(f"conv1_{part}_act")
        chain.add("conv1_down", LayerKind.DOWNSAMPLE, factor=2)
    else:
        for part in ("a", "b"):
            chain.conv(f"conv2_{part}", 128)
            chain.add(f"conv2_{part}_bn", LayerKind.BATCHNORM)
            chain.leaky(f"conv2_{part}_act")
    return chain.layers


def _to_image(name: str, shape: Shape) -> List[LayerSpec]:
    return _Chain(shape).deconv(name, 1, activation=Activation.TANH).layers


def _from_image(name: str, channels: int, size: int) -> List[LayerSpec]:
    return _Chain((1, size, size)).conv(name, channels).leaky(f"{name}_act").layers


def _critic_tail(chain: _Chain, base: int) -> None:
    chain.extend(build_prog_block(ProgBlock.CONV_2, base))
    chain.add("flatten", LayerKind.FLATTEN)
    chain.dense("score", 1, activation=Activation.LINEAR)


def build_prog_stage(
    stage,
    alpha_handle: Optional[AlphaHandle] = None,
    base: int = 64,
    latent_dim: int = GAN_LATENT_DIM,
) -> ModelSpec:
    """
    Build one network of the progressive schedule.

    Layers that persist across stages keep their names, so weights move
    between stages by name. Growth stages blend an old path and a new path
    with ``(1 - alpha) * old + alpha * new``.

    Args:
        stage: ProgStage or its string value
        alpha_handle: Fade-in weight, required for growth stages
        base: Low resolution (64 reproduces the full-size networks)
        latent_dim: Generator input width

    Returns:
        ModelSpec
    """
    try:
        stage = ProgStage(stage)
    except ValueError:
        raise ModelSpecError(f"Unknown stage {stage!r}; expected one of {[s.value for s in ProgStage]}")
    if stage.is_growth and alpha_handle is None:
        raise ModelSpecError(f"Stage {stage.value} needs an alpha handle")
    _check_latent(latent_dim)
    high = 2 * base

    if stage.is_generator:
        chain = _Chain((latent_dim, 1, 1))
        chain.dense("dense", PROG_SEED_CHANNELS * base * base)
        chain.add("reshape", LayerKind.RESHAPE, shape=(PROG_SEED_CHANNELS, base, base))
        chain.extend(build_prog_block(ProgBlock.DECONV_1, base))
        if stage == ProgStage.G64:
            chain.extend(_to_image("to_image_low", chain.shape))
        elif stage == ProgStage.G128:
            chain.extend(build_prog_block(ProgBlock.DECONV_2, base))
            chain.extend(_to_image("to_image_high", chain.shape))
        else:
            old = _Chain(chain.shape).add("fade_up", LayerKind.UPSAMPLE, factor=2)
            old.extend(_to_image("to_image_low", old.shape))
            new = _Chain(chain.shape).extend(build_prog_block(ProgBlock.DECONV_2, base))
            new.extend(_to_image("to_image_high", new.shape))
            chain.blend("fade", old.layers, new.layers, alpha_handle)
        return chain.spec(stage.value)

    if stage == ProgStage.C64:
        chain = _Chain((1, base, base)).extend(_from_image("from_image_low", 128, base))
    elif stage == ProgStage.C128:
        chain = _Chain((1, high, high)).extend(_from_image("from_image_high", 64, high))
        chain.extend(build_prog_block(ProgBlock.CONV_1, base))
    else:
        chain = _Chain((1, high, high))
        old = _Chain(chain.shape).add("fade_down", LayerKind.DOWNSAMPLE, factor=2)
        old.extend(_from_image("from_image_low", 128, base))
        new = _Chain(chain.shape).extend(_from_image("from_image_high", 64, high))
        new.extend(build_prog_block(ProgBlock.CONV_1, base))
        chain.blend("fade", old.layers, new.layers, alpha_handle)
    _critic_tail(chain, base)
    return chain.spec(stage.value)


def build_vae_encoder(latent_dim: int = VAE_LATENT_DIM, in_size: int = 128) -> ModelSpec:
    """ReLU conv stack, 1024-wide hidden dense, parallel ``mu`` and ``sigma`` heads."""
    _check_latent(latent_dim)
    _block_count(in_size)
    chain = _Chain((1, in_size, in_size))
    for i, channels in enumerate(ENCODER_CHANNELS, start=1):
        chain.conv(f"conv{i}", channels, stride=2)
        chain.add(f"conv{i}_bn", LayerKind.BATCHNORM)
        chain.add(f"conv{i}_act", LayerKind.RELU)
    chain.add("flatten", LayerKind.FLATTEN)
    chain.dense("hidden", ENCODER_HIDDEN)
    chain.add("hidden_bn", LayerKind.BATCHNORM)
    chain.add("hidden_act", LayerKind.RELU)
    heads = [_Chain(chain.shape).dense(head, latent_dim).layers[0] for head in ("mu", "sigma")]
    return chain.spec("vae_encoder", heads)


def build_vae_decoder(latent_dim: int = VAE_LATENT_DIM, out: int = 128, dropout: bool = True) -> ModelSpec:
    """Generator topology fed by the VAE latent, with a sigmoid image head."""
    return build_dcgan_generator(latent_dim, out, dropout=dropout,
                                 out_activation=Activation.SIGMOID, name="vae_decoder")


NAMED_MODELS: Dict[str, Callable[[int], ModelSpec]] = {
    "dcgan-g": lambda size: build_dcgan_generator(out=size),
    "dcgan-d": lambda size: build_dcgan_discriminator(in_size=size),
    "wgan-c": lambda size: build_wgan(out=size)[1],
    "g64": lambda size: build_prog_stage(ProgStage.G64, base=size // 2),
    "g128": lambda size: build_prog_stage(ProgStage.G128, base=size // 2),
    "growth": lambda size: build_prog_stage(ProgStage.G_GROWTH, AlphaHandle(0.0), base=size // 2),
    "c64": lambda size: build_prog_stage(ProgStage.C64, base=size // 2),
    "c128": lambda size: build_prog_stage(ProgStage.C128, base=size // 2),
    "c-growth": lambda size: build_prog_stage(ProgStage.C_GROWTH, AlphaHandle(0.0), base=size // 2),
    "vae-enc": lambda size: build_vae_encoder(in_size=size),
    "vae-dec": lambda size: build_vae_decoder(out=size),
}


def build_named(model: str, size: int = 128) -> ModelSpec:
    """Build a network by its short name (``dcgan-g``, ``g128``, ``vae-enc`` ...)."""
    if model not in NAMED_MODELS:
        raise ModelSpecError(f"Unknown model {model!r}; expected one of {sorted(NAMED_MODELS)}")
    return NAMED_MODELS[model](size)
