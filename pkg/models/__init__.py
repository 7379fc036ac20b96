from .specs import (
    Activation,
    AlphaHandle,
    InitSpec,
    LayerKind,
    LayerSpec,
    ModelSpec,
    format_shape,
    infer_shape,
)
from .builders import (
    GAN_LATENT_DIM,
    VAE_LATENT_DIM,
    NAMED_MODELS,
    ProgBlock,
    ProgStage,
    build_dcgan_discriminator,
    build_dcgan_generator,
    build_named,
    build_prog_block,
    build_prog_stage,
    build_vae_decoder,
    build_vae_encoder,
    build_wgan,
)
from .network import SpecNetwork, init_weights, transfer_weights
from .vae import VAE, reparameterize
from .latent import LatentMode, LatentSource, save_moments, load_moments, MOMENTS_NAME
