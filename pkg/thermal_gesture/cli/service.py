import functools
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import click
import numpy as np
from rich.console import Console

from thermal_gesture.config.logging_config import setup_logging
from thermal_gesture.config.settings import settings
from thermal_gesture.models.thermal import Daypart, GestureLabel
from thermal_gesture.services.errors import ServiceError

logger = logging.getLogger(__name__)

console = Console()
err_console = Console(stderr=True)


def handle_errors(func):
    """Turn service failures into a red diagnostic and exit code 1"""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (ServiceError, OSError) as e:
            logger.error(f"{func.__name__.replace('_', '-')} failed: {type(e).__name__}: {e}")
            err_console.print(f"[red]{type(e).__name__}: {e}[/red]")
            sys.exit(1)

    return wrapper


def pipeline_options(func):
    """Pipeline hyper-parameter flags shared by `eval` and `run`"""
    options = [
        click.option("--n-c", type=int, default=None, help=f"Frames per window (default {settings.N_C})"),
        click.option("--theta-s", type=float, default=None, help=f"Spike threshold (default {settings.THETA_S})"),
        click.option("--rpca-lambda", type=float, default=None,
                     help=f"R-PCA sparsity weight (default {settings.RPCA_LAMBDA})"),
        click.option("--rpca-max-iter", type=int, default=None,
                     help=f"R-PCA iteration cap (default {settings.RPCA_MAX_ITER})"),
        click.option("--rpca-mu-growth", type=float, default=None,
                     help=f"R-PCA penalty growth per iteration (default {settings.RPCA_MU_GROWTH})"),
        click.option("--beta", type=float, default=None, help=f"Track low-pass decay (default {settings.BETA})"),
        click.option("--track-length", type=int, default=None,
                     help=f"Track length L (default {settings.TRACK_LENGTH})"),
        click.option("--theta-c1", type=float, default=None, help=f"Circularity threshold (default {settings.THETA_C1})"),
        click.option("--theta-c2", type=float, default=None, help=f"Minimum extent (default {settings.THETA_C2})"),
        click.option("--theta-blob", type=float, default=None, help=f"Blob threshold (default {settings.THETA_BLOB})"),
        click.option("--n-gap", type=int, default=None, help=f"Sleep after N negatives (default {settings.N_GAP})"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _pipeline_config(detector: Optional[Path], **flags):
    from thermal_gesture.services.pipeline import PipelineConfig

    cfg = PipelineConfig.from_settings(detector_path=detector, **flags)
    logger.info(f"Configuration: {cfg.model_dump_json()}")
    return cfg


@click.group()
@click.option("--debug", is_flag=True, help="Enable debug output")
def cli(debug: bool):
    """Thermal gesture recognition with an MMV wake-up detector"""
    setup_logging(logging.DEBUG if debug else None)


@cli.command()
@click.argument("src", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.argument("dst", type=click.Path(file_okay=False, path_type=Path))
@click.option("--fps", type=int, default=settings.FPS, show_default=True)
@handle_errors
def convert(src: Path, dst: Path, fps: int):
    """Convert a released dataset directory into canonical acquisition files"""
    from thermal_gesture.services.thermal_io import convert_release

    logger.info(f"Configuration: {json.dumps({'src': str(src), 'dst': str(dst), 'fps': fps})}")
    written = convert_release(src, dst, fps=fps)
    console.print(f"[green]Wrote {len(written)} acquisitions to {dst}[/green]")


def _training_samples(data_dir: Optional[Path], synthetic: int, classes: int, n_c: int, theta_s: float, seed: int):
    from thermal_gesture.services import mmv_train
    from thermal_gesture.services.pipeline import day_night_split
    from thermal_gesture.services.synthetic import SceneGenerator
    from thermal_gesture.services.thermal_io import load_directory

    if data_dir is not None:
        acquisitions = load_directory(data_dir)
        if classes == 2:
            train_acqs, _ = day_night_split(acquisitions)
            return mmv_train.build_detection_dataset(train_acqs, n_c, theta_s)
        morning = [a for a in acquisitions if a.daypart is Daypart.MORNING]
        return mmv_train.build_class_dataset(morning, n_c, theta_s)

    generator = SceneGenerator(seed=seed)
    if classes == 2:
        return generator.detection_samples(synthetic, n_c, theta_s)
    per_class = max(1, synthetic // 20)
    acquisitions = [
        generator.acquisition(label, n_gestures=per_class)
        for label in GestureLabel if label is not GestureLabel.ALL_GESTURES
    ]
    return mmv_train.build_class_dataset(acquisitions, n_c, theta_s)


@cli.command("train-detector")
@click.argument("data_dir", required=False, type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Checkpoint path (default <DATA_DIR>/detector.mmv)")
@click.option("--history", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Training history CSV (default next to the checkpoint)")
@click.option("--neurons", type=int, default=settings.NEURONS, show_default=True)
@click.option("--classes", type=click.Choice(["2", "5"]), default="2", show_default=True,
              help="2 for the wake-up detector, 5 for the MMV-only baseline")
@click.option("--epochs", type=int, default=settings.EPOCHS, show_default=True)
@click.option("--learning-rate", type=float, default=settings.LEARNING_RATE, show_default=True)
@click.option("--batch-size", type=int, default=settings.BATCH_SIZE, show_default=True)
@click.option("--binarize-start", type=int, default=settings.BINARIZE_START_EPOCH, show_default=True)
@click.option("--binarize-end", type=int, default=settings.BINARIZE_END_EPOCH, show_default=True)
@click.option("--split", type=float, default=settings.SPLIT_FRACTION, show_default=True)
@click.option("--seed", type=int, default=settings.SEED, show_default=True)
@click.option("--synthetic", type=int, default=500, show_default=True,
              help="Synthetic windows to train on when no DATA_DIR is given")
@click.option("--n-c", type=int, default=settings.N_C, show_default=True)
@click.option("--theta-s", type=float, default=settings.THETA_S, show_default=True)
@handle_errors
def train_detector(data_dir, out, history, neurons, classes, epochs, learning_rate, batch_size,
                   binarize_start, binarize_end, split, seed, synthetic, n_c, theta_s):
    """Train an MMV network and write its checkpoint and history"""
    from thermal_gesture.services.checkpoint import save_checkpoint
    from thermal_gesture.services.display import TerminalDisplay
    from thermal_gesture.services.mmv_train import TrainConfig, split_dataset, train_mmv

    cfg = TrainConfig(
        learning_rate=learning_rate,
        batch_size=batch_size,
        epochs=epochs,
        binarize_start_epoch=binarize_start,
        binarize_end_epoch=binarize_end,
        split_fraction=split,
        seed=seed,
        neurons=neurons,
        tau_b=settings.TAU_B,
    )
    source = {"data_dir": str(data_dir)} if data_dir is not None else {"synthetic": synthetic}
    logger.info(
        f"Configuration: {cfg.model_dump_json()} "
        f"{json.dumps({'classes': int(classes), 'n_c': n_c, 'theta_s': theta_s, **source})}"
    )

    num_classes = int(classes)
    samples = _training_samples(data_dir, synthetic, num_classes, n_c, theta_s, seed)
    train_set, val_set = split_dataset(samples, cfg.split_fraction, cfg.seed)
    net, record = train_mmv(train_set, val_set, cfg, num_classes=num_classes)

    out = out or (data_dir or settings.DATA_DIR) / "detector.mmv"
    save_checkpoint(net, out)
    record.to_csv(history or out.with_suffix(".history.csv"))
    TerminalDisplay(console).render_history(record)
    console.print(f"[green]Saved checkpoint to {out} (best val. acc. {record.best_val_acc:.3f})[/green]")


@cli.command("eval")
@click.argument("data_dir", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--detector", required=True, type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--mode", type=click.Choice(["modular", "mmv-only"]), default="modular", show_default=True)
@click.option("--all", "use_all", is_flag=True, help="Evaluate every acquisition, not only the held-out split")
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), default=None,
              help="Directory for report.jsonl and confusion.csv")
@click.option("--concurrent", is_flag=True, help="Evaluate acquisitions in parallel threads")
@pipeline_options
@handle_errors
def evaluate_command(data_dir, detector, mode, use_all, out, concurrent, **flags):
    """Score the pipeline on held-out acquisitions"""
    import asyncio

    from thermal_gesture.services.checkpoint import load_checkpoint
    from thermal_gesture.services.display import TerminalDisplay
    from thermal_gesture.services.pipeline import day_night_split, evaluate, evaluate_async
    from thermal_gesture.services.thermal_io import load_directory

    cfg = _pipeline_config(detector, **flags)
    net = load_checkpoint(detector, time_steps=cfg.time_steps)
    acquisitions = load_directory(data_dir)
    dataset = acquisitions if use_all else day_night_split(acquisitions)[1]

    if concurrent:
        report = asyncio.run(evaluate_async(dataset, cfg, net, mode=mode))
    else:
        report = evaluate(dataset, cfg, net, mode=mode)

    TerminalDisplay(console).render_report(report)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.jsonl").write_text(report.to_json_lines(), encoding="utf-8")
        (out / "confusion.csv").write_text(report.to_csv(), encoding="utf-8")
        console.print(f"[green]Report written to {out}[/green]")


@cli.command("run")
@click.argument("acquisition", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--detector", required=True, type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--tracks", type=click.Path(file_okay=False, path_type=Path), default=None,
              help="Directory to dump each event's track as CSV")
@pipeline_options
@handle_errors
def run_command(acquisition, detector, tracks, **flags):
    """Process one acquisition into gesture events"""
    from thermal_gesture.services.checkpoint import load_checkpoint
    from thermal_gesture.services.display import TerminalDisplay
    from thermal_gesture.services.pipeline import GesturePipeline
    from thermal_gesture.services.thermal_io import load_acquisition

    cfg = _pipeline_config(detector, **flags)
    acq = load_acquisition(acquisition)
    net = load_checkpoint(detector, time_steps=cfg.time_steps)
    pipeline = GesturePipeline(net, cfg)
    events = pipeline.process_stream(acq)

    TerminalDisplay(console).render_events(events)
    console.print(
        f"[dim]{pipeline.counters.windows} windows, {pipeline.counters.detections} detections, "
        f"{pipeline.counters.rpca_calls} R-PCA calls[/dim]"
    )
    if tracks is not None:
        tracks.mkdir(parents=True, exist_ok=True)
        for i, event in enumerate(events):
            (tracks / f"{acq.name}-{i:03d}.csv").write_text(event.track.to_csv(), encoding="utf-8")


@cli.command("rpca-demo")
@click.argument("acquisition", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--frame", "k", type=int, required=True, help="Index of the window's last frame")
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), required=True)
@click.option("--n-c", type=int, default=settings.N_C, show_default=True)
@click.option("--lambda", "lam", type=float, default=settings.RPCA_LAMBDA, show_default=True)
@click.option("--max-iter", type=int, default=settings.RPCA_MAX_ITER, show_default=True)
@handle_errors
def rpca_demo(acquisition, k, out, n_c, lam, max_iter):
    """Decompose one normalized window and write L and S as CSV matrices"""
    from thermal_gesture.services.rpca import RpcaConfig, pcp
    from thermal_gesture.services.thermal_io import load_acquisition, normalize, window_at

    cfg = RpcaConfig(lam=lam, max_iter=max_iter)
    logger.info(f"Configuration: {cfg.model_dump_json()}")
    window = normalize(window_at(load_acquisition(acquisition), k, n_c))
    result = pcp(window.rows, cfg)

    out.mkdir(parents=True, exist_ok=True)
    np.savetxt(out / "L.csv", result.L, delimiter=",", fmt="%.17g")
    np.savetxt(out / "S.csv", result.S, delimiter=",", fmt="%.17g")
    state = "converged" if result.converged else "did not converge"
    console.print(
        f"[green]R-PCA {state} in {result.iterations} iterations "
        f"(relative residual {result.residual:.2e}); wrote {out}/L.csv and {out}/S.csv[/green]"
    )


@cli.command("cost-report")
@click.option("--detector", type=click.Path(exists=True, dir_okay=False, path_type=Path), default=None,
              help="Report a trained checkpoint instead of the standard sizes")
@click.option("--sizes", default="125,250,500", show_default=True, help="Comma-separated neuron counts")
@click.option("--json", "as_json", is_flag=True, help="Print JSON lines instead of a table")
@handle_errors
def cost_report(detector, sizes, as_json):
    """Parameter memory and average operations per second"""
    from thermal_gesture.services.checkpoint import load_checkpoint
    from thermal_gesture.services.display import TerminalDisplay
    from thermal_gesture.services.metrics import CostModel

    model = CostModel()
    logger.info(f"Configuration: {json.dumps(vars(model))}")
    if detector is not None:
        net = load_checkpoint(detector)
        reports = [CostModel(num_classes=net.num_classes).report(net)]
    else:
        try:
            counts = [int(s) for s in sizes.split(",") if s.strip()]
        except ValueError:
            raise click.BadParameter(f"'{sizes}' is not a list of integers", param_hint="--sizes")
        reports = model.report_for_sizes(counts)

    if as_json:
        for report in reports:
            click.echo(json.dumps(report.to_dict()))
    else:
        TerminalDisplay(console).render_costs(reports)


@cli.command()
@click.argument("out_dir", type=click.Path(file_okay=False, path_type=Path))
@click.option("--seed", type=int, default=settings.SEED, show_default=True)
@click.option("--gestures", type=int, default=1, show_default=True, help="Gestures per single-class file")
@click.option("--gap", type=int, default=20, show_default=True, help="Static frames between gestures")
@click.option("--noise", type=float, default=0.02, show_default=True, help="Noise on the normalized scale")
@handle_errors
def synth(out_dir, seed, gestures, gap, noise):
    """Write a synthetic dataset with one file per class and daypart"""
    from thermal_gesture.services.synthetic import SceneGenerator
    from thermal_gesture.services.thermal_io import write_acquisition

    logger.info(f"Configuration: {json.dumps({'seed': seed, 'gestures': gestures, 'gap': gap, 'noise': noise})}")
    generator = SceneGenerator(seed=seed, noise_sigma=noise)
    written = 0
    for daypart in Daypart:
        for label in GestureLabel:
            count = 4 * gestures if label is GestureLabel.ALL_GESTURES else gestures
            acq = generator.acquisition(label, n_gestures=count, gap=gap, daypart=daypart)
            write_acquisition(acq, out_dir / f"{acq.name}.csv", fps=settings.FPS)
            written += 1
    console.print(f"[green]Wrote {written} synthetic acquisitions to {out_dir}[/green]")


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    """Invoke the CLI and return its exit code instead of exiting"""
    try:
        cli.main(args=list(argv) if argv is not None else None, prog_name="thermal-gesture")
    except SystemExit as e:
        if e.code is None:
            return 0
        return e.code if isinstance(e.code, int) else 1
    return 0


if __name__ == "__main__":
    cli()
