"""Command-line interface for the terrain GAN toolkit."""

import argparse
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from config import Config, get_config, get_yaml_config, load_preset, PRESET_NAMES
from utils.errors import (
    CheckpointError,
    CorpusError,
    LogFormatError,
    ModelSpecError,
    RasterFormatError,
    TrainingAbortedError,
)
from utils.logging import LoggerSetup, get_logger

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_ABORTED = 3

DATA_ERRORS = (RasterFormatError, CorpusError, CheckpointError, LogFormatError,
               ModelSpecError, FileNotFoundError, OSError)

VARIANT_CHOICES = ("dcgan", "wgan", "proggan", "vae", "vae-wgan")
INSPECT_CHOICES = ("dcgan-g", "dcgan-d", "wgan-c", "g64", "g128", "growth",
                   "c64", "c128", "c-growth", "vae-enc", "vae-dec")

# TrainConfig fields that config.yaml's training section may default
YAML_TRAINING_KEYS = ("batch_size", "checkpoint_every", "sample_count")


class UsageError(Exception):
    """Bad command line; reported with exit code 1."""


class CLIParser(argparse.ArgumentParser):
    """ArgumentParser that raises instead of exiting with status 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def build_parser() -> CLIParser:
    parser = CLIParser(
        prog="terrain-gan",
        description="Terrain GAN - heightmap corpora, GAN/VAE training and export",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=CLIParser)
    dataset = get_yaml_config("dataset")

    p = sub.add_parser("dataset-build", help="Crop, augment and filter a source raster into a tile corpus")
    p.add_argument("--input", required=True, help="Source grayscale raster")
    p.add_argument("--tile", type=int, default=dataset.get("tile", 1024), help="Crop size in source pixels")
    p.add_argument("--stride", type=int, default=dataset.get("stride", 512), help="Sliding-window step")
    p.add_argument("--rounds", type=int, default=dataset.get("rounds", 15), help="Augmentation rounds")
    p.add_argument("--target", type=int, default=dataset.get("target", 128), help="Output tile size")
    p.add_argument("--gamma", type=float, default=dataset.get("gamma", 0.5),
                   help="Brightness gamma applied before cropping (1 disables)")
    p.add_argument("--workers", type=int, default=dataset.get("workers", 1), help="Threads for per-tile work")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="Corpus directory")

    p = sub.add_parser("train", help="Train a model variant")
    p.add_argument("--variant", choices=VARIANT_CHOICES)
    p.add_argument("--preset", choices=PRESET_NAMES, help="Experiment preset (e1..e11)")
    p.add_argument("--corpus", required=True, help="Corpus directory from dataset-build")
    p.add_argument("--epochs", type=int, help="Override every phase length")
    p.add_argument("--vae-epochs", type=int, help="Override the VAE phase length of vae-wgan")
    p.add_argument("--desk-scale", action="store_true", help="Use the short desk-scale epoch counts")
    p.add_argument("--seed", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--image-size", type=int, help="Training resolution (default: corpus tile size)")
    p.add_argument("--checkpoint-every", type=int)
    p.add_argument("--decoder-checkpoint", help="Trained VAE decoder for vae-wgan (skips the VAE phase)")
    p.add_argument("--device")
    p.add_argument("--out", help="Run directory (default: <output_dir>/<preset or variant>)")

    p = sub.add_parser("generate", help="Sample heightmaps from a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--n", type=int, default=16)
    p.add_argument("--latent", choices=("normal", "learned"), default="normal")
    p.add_argument("--moments", help="Moment bank for --latent learned")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--columns", type=int, help="Montage columns (default: square grid)")
    p.add_argument("--out", required=True)

    p = sub.add_parser("plot", help="Render curves and a summary from a TrainLog CSV")
    p.add_argument("--log", required=True)
    p.add_argument("--out", required=True, help="Output directory")

    p = sub.add_parser("export-mesh", help="Convert a heightmap image to an OBJ mesh")
    p.add_argument("--heightmap", required=True)
    p.add_argument("--scale", type=float, help="Height scale (default: 0.25 x width)")
    p.add_argument("--out", required=True)

    p = sub.add_parser("inspect", help="Print the layer/shape table of a network")
    p.add_argument("--model", required=True, choices=INSPECT_CHOICES)
    p.add_argument("--size", type=int, default=128, choices=(32, 64, 128))

    return parser


def cmd_dataset_build(args, config: Config) -> int:
    from dataset import BrightnessCurve, brightness_remap, build_corpus, load_raster

    source = load_raster(args.input)
    if args.gamma != 1:
        source = brightness_remap(source, BrightnessCurve.gamma(args.gamma))
    thresholds = get_yaml_config("dataset")
    corpus = build_corpus(
        source,
        rounds=args.rounds,
        tile=args.tile,
        stride=args.stride,
        target=args.target,
        seed=args.seed,
        low_threshold=thresholds.get("low_threshold", 25),
        low_fraction=thresholds.get("low_fraction", 0.95),
        sentinel=thresholds.get("sentinel", 255),
        fill_value=thresholds.get("fill_value", 255),
        workers=args.workers,
    )
    corpus.save(args.out)
    manifest = corpus.manifest
    print(f"kept {manifest.kept_count} of {len(manifest.entries)} tiles -> {args.out}")
    return EXIT_OK


def resolve_train_config(args, config: Config, corpus_resolution: int):
    """
    Merge training settings: flags > preset > config.yaml > dataclass defaults.

    Raises:
        UsageError: No variant/preset, or neither --epochs nor --desk-scale
    """
    from training import TrainConfig, Variant

    if args.variant is None and args.preset is None:
        raise UsageError("train: one of --variant or --preset is required")
    if args.epochs is None and not args.desk_scale:
        raise UsageError("train: pass --epochs N or --desk-scale (presets carry multi-day epoch counts)")

    training_yaml = config.yaml_config.get("training", {})
    data: Dict[str, Any] = {k: training_yaml[k] for k in YAML_TRAINING_KEYS if k in training_yaml}
    data["device"] = config.device
    if args.preset:
        data.update(load_preset(args.preset, config.presets_dir))
    if args.variant:
        data["variant"] = args.variant
    variant = Variant.parse(data["variant"])

    desk = get_yaml_config("desk_scale")
    epochs = args.epochs if args.epochs is not None else int(desk.get("epochs", 200))
    if variant == Variant.PROGGAN:
        stages = (epochs,) * 3 if args.epochs is not None else tuple(desk.get("stage_epochs", (epochs,) * 3))
        data["stage_epochs"] = list(stages)
        data["epochs"] = sum(stages)
    else:
        data["epochs"] = epochs
    if variant == Variant.VAE_WGAN:
        if args.vae_epochs is not None:
            data["vae_epochs"] = args.vae_epochs
        elif args.epochs is not None:
            data["vae_epochs"] = args.epochs
        else:
            data["vae_epochs"] = int(desk.get("vae_epochs", 50))

    data.setdefault("name", args.preset or variant.value)
    overrides = {
        "seed": args.seed,
        "batch_size": args.batch_size,
        "checkpoint_every": args.checkpoint_every,
        "device": args.device,
        "image_size": args.image_size or corpus_resolution,
    }
    data.update({k: v for k, v in overrides.items() if v is not None})
    return TrainConfig.from_dict(data)


def cmd_train(args, config: Config) -> int:
    from dataset import TileCorpus
    from training import run_training

    corpus = TileCorpus.load(args.corpus)
    train_config = resolve_train_config(args, config, corpus.resolution)
    out_dir = Path(args.out) if args.out else config.output_dir / train_config.name
    logger.info(f"Training {train_config.variant.value} ({train_config.name}) into {out_dir}")
    result = run_training(corpus, train_config, out_dir, decoder_checkpoint=args.decoder_checkpoint)
    for path in result.checkpoints:
        print(path)
    return EXIT_OK


def _moment_bank(checkpoint: Path, explicit: Optional[str]) -> Path:
    from models import MOMENTS_NAME

    if explicit:
        return Path(explicit)
    # VAE runs keep the bank beside checkpoints/; vae-wgan runs keep it in the sibling vae/ dir
    run_dir = checkpoint.parent.parent
    for candidate in (run_dir / MOMENTS_NAME, run_dir.parent / "vae" / MOMENTS_NAME):
        if candidate.exists():
            return candidate
    raise CheckpointError(f"No {MOMENTS_NAME} found near {checkpoint}; pass --moments")


def cmd_generate(args, config: Config) -> int:
    from models import LatentSource
    from training import generate, write_samples

    latent = None
    if args.latent == "learned":
        latent = LatentSource.from_bank(_moment_bank(Path(args.checkpoint), args.moments))
    tiles = generate(args.checkpoint, latent=latent, n=args.n, seed=args.seed, device=config.device)
    export = get_yaml_config("export")
    paths = write_samples(tiles, args.out, columns=args.columns,
                          separator=export.get("separator", 1),
                          separator_value=export.get("separator_value", 255))
    print(f"wrote {len(paths)} images -> {args.out}")
    return EXIT_OK


def cmd_plot(args, config: Config) -> int:
    from metrics import plot_log

    for path in plot_log(args.log, args.out):
        print(path)
    return EXIT_OK


def cmd_export_mesh(args, config: Config) -> int:
    from dataset import load_raster
    from export import heightmap_to_mesh, save_mesh_obj

    heightmap = load_raster(args.heightmap)
    scale = args.scale
    if scale is None:
        scale = get_yaml_config("export").get("height_scale_factor", 0.25) * heightmap.width
    mesh = heightmap_to_mesh(heightmap, scale)
    save_mesh_obj(mesh, args.out)
    print(f"{mesh.vertex_count} vertices, {mesh.face_count} faces -> {args.out}")
    return EXIT_OK


def cmd_inspect(args, config: Config) -> int:
    from models import build_named

    sys.stdout.write(build_named(args.model, args.size).to_table())
    return EXIT_OK


COMMANDS = {
    "dataset-build": cmd_dataset_build,
    "train": cmd_train,
    "generate": cmd_generate,
    "plot": cmd_plot,
    "export-mesh": cmd_export_mesh,
    "inspect": cmd_inspect,
}


def run(argv: Optional[Sequence[str]] = None) -> int:
    """
    Execute one subcommand.

    Returns:
        0 success, 1 usage error, 2 data error, 3 training aborted
    """
    config = get_config()
    LoggerSetup.setup(log_file=config.log_file, log_level=config.log_level)
    try:
        args = build_parser().parse_args(list(sys.argv[1:] if argv is None else argv))
        return COMMANDS[args.command](args, config)
    except SystemExit as e:
        # --help
        return int(e.code or 0)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    except TrainingAbortedError as e:
        logger.error(f"Training aborted: {e}")
        return EXIT_ABORTED
    except DATA_ERRORS as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_DATA
    except ValueError as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
