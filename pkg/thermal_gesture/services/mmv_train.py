"""Quantization-aware surrogate-gradient training of MMV networks

The relaxed network runs the same synchronous timer automaton as
`services.mmv`, written with differentiable tensor operations:

    keep   = g * (1 - inh)
    c'     = keep * (c + 1)
    fire   = keep * H(c' - P + 1/2)
    g'     = keep * (1 - fire) + ((1 - g) + fire) * exc
    c      = keep * (1 - fire) * c'

EXC/INH gates are H(drive - 1/2) over the blended synapse weights. Every
H is exact in the forward pass and uses the Gaussian surrogate in the
backward pass, so with fully ternary weights the relaxed logits equal
the discrete run + readout logits. `smooth=True` swaps each H for the
antiderivative of the surrogate and the quantizer for an erf ramp, which
makes the whole forward pass differentiable for gradient checking at any
rho.
"""
import copy
import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import torch
from pydantic import Field, model_validator
from torch import nn

from thermal_gesture.config.config import RunConfig
from thermal_gesture.config.settings import settings
from thermal_gesture.models.mmv import MmvNetwork, TernaryConnectivity
from thermal_gesture.models.thermal import Acquisition, GestureLabel, SpikeRaster
from thermal_gesture.models.track import GestureClass
from thermal_gesture.services.errors import TrainingError
from thermal_gesture.services.thermal_io import encode_window, iter_windows

logger = logging.getLogger(__name__)

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

Sample = Tuple[SpikeRaster, int]


class EmptySplitError(TrainingError):
    """Exception raised when a training or validation split has no samples"""
    pass


class TrainingDivergedError(TrainingError):
    """Exception raised when the loss or an activation becomes non-finite"""
    pass


def surrogate_grad(state):
    """Gaussian pseudo-derivative of the spike step, exp(-2 s^2) / sqrt(2 pi)"""
    if isinstance(state, torch.Tensor):
        return torch.exp(-2.0 * state ** 2) * _INV_SQRT_2PI
    result = np.exp(-2.0 * np.square(state)) * _INV_SQRT_2PI
    return float(result) if np.ndim(result) == 0 else result


class SurrogateSpike(torch.autograd.Function):
    """Strict Heaviside step H(x > 0) with the Gaussian surrogate as its derivative"""

    @staticmethod
    def forward(ctx, x):
        ctx.save_for_backward(x)
        return (x > 0).to(x.dtype)

    @staticmethod
    def backward(ctx, grad_output):
        (x,) = ctx.saved_tensors
        return grad_output * surrogate_grad(x)


class SmoothStep(torch.autograd.Function):
    """Antiderivative of the surrogate, 1/4 * (1 + erf(sqrt(2) x))"""

    @staticmethod
    def forward(ctx, x):
        ctx.save_for_backward(x)
        return 0.25 * (1.0 + torch.erf(math.sqrt(2.0) * x))

    @staticmethod
    def backward(ctx, grad_output):
        (x,) = ctx.saved_tensors
        return grad_output * surrogate_grad(x)


class TernarizeSTE(torch.autograd.Function):
    """Ternary quantizer with a straight-through gradient"""

    @staticmethod
    def forward(ctx, w, tau_b):
        return torch.sign(w) * (w.abs() > tau_b).to(w.dtype)

    @staticmethod
    def backward(ctx, grad_output):
        return grad_output, None


SMOOTH_TERNARY_WIDTH = 0.1


def smooth_ternarize(w: torch.Tensor, tau_b: float, width: float = SMOOTH_TERNARY_WIDTH) -> torch.Tensor:
    """Differentiable stand-in for `ternarize`: -1, 0, +1 plateaus joined by erf ramps at +-tau_b"""
    return 0.5 * (torch.erf((w - tau_b) / width) - torch.erf((-w - tau_b) / width))


def ternarize(w, tau_b: float = settings.TAU_B):
    """sign(w) where |w| > tau_b, else 0"""
    if tau_b <= 0:
        raise TrainingError(f"Ternarization threshold must be positive, got {tau_b}")
    if isinstance(w, torch.Tensor):
        return TernarizeSTE.apply(w, tau_b)
    result = (np.sign(w) * (np.abs(w) > tau_b)).astype(np.int8)
    return int(result) if np.ndim(result) == 0 else result


class TrainableMmv(nn.Module):
    """Real-valued MMV network whose synapses anneal to EXC / INH / NONE"""

    def __init__(
        self,
        input_width: int,
        neurons: int,
        num_classes: int = 2,
        time_steps: int = 96,
        tau_b: float = settings.TAU_B,
        seed: int = settings.SEED,
    ):
        super().__init__()
        if neurons < 1 or input_width < 1 or num_classes < 1 or time_steps < 1:
            raise TrainingError(
                f"Invalid model shape: width={input_width} neurons={neurons} "
                f"classes={num_classes} steps={time_steps}"
            )
        generator = torch.Generator().manual_seed(seed)
        dtype = torch.float64

        def uniform(*shape, low=-0.5, high=0.5):
            return torch.rand(*shape, generator=generator, dtype=dtype) * (high - low) + low

        self.time_steps = time_steps
        self.tau_b = tau_b
        self.rho = 0.0

        self.weights_in = nn.Parameter(uniform(input_width, neurons))
        self.weights_rec = nn.Parameter(uniform(neurons, neurons))
        periods = torch.randint(2, 17, (neurons,), generator=generator).to(dtype)
        self.periods = nn.Parameter(periods.clamp(1.0, float(time_steps)))
        self.readout_weights = nn.Parameter(uniform(neurons, num_classes) / time_steps)
        self.readout_bias = nn.Parameter(uniform(num_classes) / time_steps)
        self.register_buffer("rec_mask", 1.0 - torch.eye(neurons, dtype=dtype))

    @property
    def input_width(self) -> int:
        return self.weights_in.shape[0]

    @property
    def neurons(self) -> int:
        return self.weights_in.shape[1]

    @property
    def num_classes(self) -> int:
        return self.readout_weights.shape[1]

    def effective_weights(self, smooth: bool = False) -> Tuple[torch.Tensor, torch.Tensor]:
        """Blend (1 - rho) * w + rho * ternary(w); smooth mode uses the erf-ramp quantizer"""
        w_in, w_rec = self.weights_in, self.weights_rec * self.rec_mask
        rho = self.rho
        quantize = smooth_ternarize if smooth else ternarize

        def blend(w: torch.Tensor) -> torch.Tensor:
            if rho == 0.0:
                return w
            return (1.0 - rho) * w + rho * quantize(w, self.tau_b)

        return blend(w_in), blend(w_rec)

    def forward(self, spikes: torch.Tensor, smooth: bool = False) -> torch.Tensor:
        """Logits for a (B, T_steps, w_tw) batch of rasters"""
        step_fn: Callable = SmoothStep.apply if smooth else SurrogateSpike.apply
        w_in, w_rec = self.effective_weights(smooth)
        exc_in, inh_in = w_in.clamp(min=0.0), (-w_in).clamp(min=0.0)
        exc_rec, inh_rec = w_rec.clamp(min=0.0), (-w_rec).clamp(min=0.0)
        periods = self.periods.clamp(1.0, float(self.time_steps))

        batch = spikes.shape[0]
        shape = (batch, self.neurons)
        counter = spikes.new_zeros(shape)
        triggered = spikes.new_zeros(shape)
        fired = spikes.new_zeros(shape)
        counts = spikes.new_zeros(shape)

        for t in range(spikes.shape[1]):
            x = spikes[:, t, :]
            exc = step_fn(x @ exc_in + fired @ exc_rec - 0.5)
            inh = step_fn(x @ inh_in + fired @ inh_rec - 0.5)

            keep = triggered * (1.0 - inh)
            advanced = keep * (counter + 1.0)
            fired = keep * step_fn(advanced - periods + 0.5)
            still = keep * (1.0 - fired)
            counter = still * advanced
            triggered = still + ((1.0 - triggered) + fired) * exc
            counts = counts + fired

        logits = counts @ self.readout_weights + self.readout_bias
        if not torch.all(torch.isfinite(logits)):
            raise TrainingDivergedError("Non-finite logits in relaxed forward pass")
        return logits

    @torch.no_grad()
    def clamp_periods(self) -> None:
        self.periods.clamp_(1.0, float(self.time_steps))

    @torch.no_grad()
    def to_network(self) -> MmvNetwork:
        """Freeze to a discrete network: ternary synapses, periods rounded half-up"""
        rec = ternarize(self.weights_rec, self.tau_b) * self.rec_mask
        periods = torch.floor(self.periods.clamp(1.0, float(self.time_steps)) + 0.5)
        return MmvNetwork(
            connectivity=TernaryConnectivity(
                input_conn=ternarize(self.weights_in, self.tau_b).numpy().astype(np.int8),
                recurrent_conn=rec.numpy().astype(np.int8),
            ),
            periods=periods.numpy().astype(np.int64),
            readout_weights=self.readout_weights.detach().numpy().copy(),
            readout_bias=self.readout_bias.detach().numpy().copy(),
        )


def _as_batch(rasters: Union[SpikeRaster, Sequence[SpikeRaster], torch.Tensor]) -> torch.Tensor:
    if isinstance(rasters, torch.Tensor):
        return rasters.to(torch.float64)
    if isinstance(rasters, SpikeRaster):
        rasters = [rasters]
    return torch.as_tensor(np.stack([r.bits for r in rasters]), dtype=torch.float64)


def forward_relaxed(
    model: TrainableMmv,
    raster: Union[SpikeRaster, Sequence[SpikeRaster], torch.Tensor],
    smooth: bool = False,
) -> torch.Tensor:
    """Logits of the relaxed network; a single raster gives a (1, K) batch"""
    return model(_as_batch(raster), smooth=smooth)


class TrainConfig(RunConfig):
    learning_rate: float = Field(default=5e-3, gt=0.0)
    batch_size: int = Field(default=32, ge=1)
    epochs: int = Field(default=50, ge=1)
    binarize_start_epoch: int = Field(default=10, ge=0)
    binarize_end_epoch: int = Field(default=25, ge=1)
    split_fraction: float = Field(default=0.7, gt=0.0, lt=1.0)
    seed: int = 0
    neurons: int = Field(default=125, ge=1)
    tau_b: float = Field(default=0.3, gt=0.0)

    @model_validator(mode="after")
    def _check_schedule(self) -> "TrainConfig":
        if not self.binarize_start_epoch < self.binarize_end_epoch <= self.epochs:
            raise ValueError(
                "binarization must satisfy start < end <= epochs, got "
                f"{self.binarize_start_epoch} < {self.binarize_end_epoch} <= {self.epochs}"
            )
        return self

    @classmethod
    def from_settings(cls, **overrides) -> "TrainConfig":
        values = dict(
            learning_rate=settings.LEARNING_RATE,
            batch_size=settings.BATCH_SIZE,
            epochs=settings.EPOCHS,
            binarize_start_epoch=settings.BINARIZE_START_EPOCH,
            binarize_end_epoch=settings.BINARIZE_END_EPOCH,
            split_fraction=settings.SPLIT_FRACTION,
            seed=settings.SEED,
            neurons=settings.NEURONS,
            tau_b=settings.TAU_B,
        )
        values.update(overrides)
        return cls(**values)


def rho_schedule(epoch: int, cfg: TrainConfig) -> float:
    """Binarization progress for 1-based `epoch`: 0 until start, linear to 1 at end"""
    span = cfg.binarize_end_epoch - cfg.binarize_start_epoch
    return float(min(max((epoch - cfg.binarize_start_epoch) / span, 0.0), 1.0))


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    val_acc: float
    rho: float


@dataclass
class TrainingHistory:
    records: List[EpochRecord] = field(default_factory=list)
    best_epoch: Optional[int] = None
    best_val_acc: float = 0.0

    def append(self, record: EpochRecord) -> None:
        self.records.append(record)

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["epoch", "loss", "val_acc", "rho"])
            for r in self.records:
                writer.writerow([r.epoch, repr(r.loss), repr(r.val_acc), repr(r.rho)])
        return path


def _window_samples(acq: Acquisition, label: int, n_c: int, theta_s: float, active_only: bool) -> List[Sample]:
    samples = []
    for window in iter_windows(acq, n_c):
        raster = encode_window(window, theta_s)
        if active_only and not raster.bits.any():
            continue
        samples.append((raster, label))
    return samples


def build_detection_dataset(
    acquisitions: Iterable[Acquisition],
    n_c: int = settings.N_C,
    theta_s: float = settings.THETA_S,
    active_only: bool = True,
) -> List[Sample]:
    """Windows of no-gesture recordings labelled 0, of every other recording 1

    With `active_only`, spike-free windows of gesture recordings are dropped:
    they are indistinguishable from background.
    """
    samples: List[Sample] = []
    for acq in acquisitions:
        if acq.gesture_label is GestureLabel.NO_GESTURE:
            samples.extend(_window_samples(acq, 0, n_c, theta_s, active_only=False))
        else:
            samples.extend(_window_samples(acq, 1, n_c, theta_s, active_only))
    logger.info(f"Built detection dataset with {len(samples)} windows")
    return samples


def build_class_dataset(
    acquisitions: Iterable[Acquisition],
    n_c: int = settings.N_C,
    theta_s: float = settings.THETA_S,
    active_only: bool = True,
) -> List[Sample]:
    """Windows labelled by GestureClass index; mixed recordings are skipped"""
    samples: List[Sample] = []
    for acq in acquisitions:
        gesture_class = acq.gesture_label.gesture_class
        if gesture_class is None:
            logger.warning(f"Skipping {acq.name}: no per-gesture label")
            continue
        keep_silent = gesture_class is GestureClass.NO_GESTURE or not active_only
        samples.extend(_window_samples(acq, gesture_class.index, n_c, theta_s, not keep_silent))
    logger.info(f"Built {len(GestureClass)}-class dataset with {len(samples)} windows")
    return samples


def split_dataset(samples: Sequence[Sample], fraction: float, seed: int = 0) -> Tuple[List[Sample], List[Sample]]:
    """Seeded random split into (train, validation)"""
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(samples))
    n_train = int(round(fraction * len(samples)))
    train = [samples[i] for i in order[:n_train]]
    val = [samples[i] for i in order[n_train:]]
    if not train or not val:
        raise EmptySplitError(
            f"Split of {len(samples)} samples at {fraction} leaves train={len(train)} val={len(val)}"
        )
    return train, val


def _stack(samples: Sequence[Sample]) -> Tuple[torch.Tensor, torch.Tensor]:
    spikes = _as_batch([raster for raster, _ in samples])
    labels = torch.as_tensor([label for _, label in samples], dtype=torch.long)
    return spikes, labels


@torch.no_grad()
def _accuracy(model: TrainableMmv, spikes: torch.Tensor, labels: torch.Tensor, batch_size: int) -> float:
    correct = 0
    for start in range(0, len(labels), batch_size):
        logits = model(spikes[start:start + batch_size])
        correct += int((logits.argmax(dim=1) == labels[start:start + batch_size]).sum())
    return correct / len(labels)


def train_mmv(
    train_set: Sequence[Sample],
    val_set: Sequence[Sample],
    cfg: Optional[TrainConfig] = None,
    num_classes: int = 2,
) -> Tuple[MmvNetwork, TrainingHistory]:
    """Train with Adam, anneal synapses to ternary, keep the best binarized snapshot"""
    cfg = cfg or TrainConfig()
    if not train_set or not val_set:
        raise EmptySplitError(f"Empty split: train={len(train_set)} val={len(val_set)}")
    train_x, train_y = _stack(train_set)
    val_x, val_y = _stack(val_set)
    if int(train_y.max()) >= num_classes or int(val_y.max()) >= num_classes:
        raise TrainingError(f"Labels exceed {num_classes} classes")

    torch.manual_seed(cfg.seed)
    model = TrainableMmv(
        input_width=train_x.shape[2],
        neurons=cfg.neurons,
        num_classes=num_classes,
        time_steps=train_x.shape[1],
        tau_b=cfg.tau_b,
        seed=cfg.seed,
    )
    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate)
    loss_fn = nn.BCEWithLogitsLoss()
    shuffle = torch.Generator().manual_seed(cfg.seed)

    history = TrainingHistory()
    best_state = None

    for epoch in range(1, cfg.epochs + 1):
        model.rho = rho_schedule(epoch, cfg)
        order = torch.randperm(len(train_y), generator=shuffle)
        total_loss = 0.0

        for start in range(0, len(order), cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            targets = nn.functional.one_hot(train_y[batch], num_classes).to(torch.float64)
            loss = loss_fn(model(train_x[batch]), targets)
            if not torch.isfinite(loss):
                raise TrainingDivergedError(f"Non-finite loss at epoch {epoch}, batch starting {start}")
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            model.clamp_periods()
            total_loss += loss.item() * len(batch)

        val_acc = _accuracy(model, val_x, val_y, cfg.batch_size)
        record = EpochRecord(epoch=epoch, loss=total_loss / len(order), val_acc=val_acc, rho=model.rho)
        history.append(record)
        logger.info(f"Epoch {epoch}/{cfg.epochs}: loss={record.loss:.4f} val_acc={val_acc:.3f} rho={model.rho:.2f}")

        if model.rho >= 1.0 and (history.best_epoch is None or val_acc > history.best_val_acc):
            history.best_epoch = epoch
            history.best_val_acc = val_acc
            best_state = copy.deepcopy(model.state_dict())

    model.load_state_dict(best_state)
    model.rho = 1.0
    logger.info(f"Keeping epoch {history.best_epoch} snapshot (val_acc={history.best_val_acc:.3f})")
    return model.to_network(), history


def train_detector(
    train_set: Sequence[Sample],
    val_set: Sequence[Sample],
    cfg: Optional[TrainConfig] = None,
) -> Tuple[MmvNetwork, TrainingHistory]:
    """Two-class wake-up detector: index 0 no gesture, 1 gesture"""
    return train_mmv(train_set, val_set, cfg, num_classes=2)


def finite_difference_check(
    model: TrainableMmv,
    raster: Union[SpikeRaster, torch.Tensor],
    label: int,
    eps: float = 1e-5,
    atol: float = 1e-6,
) -> float:
    """Largest per-parameter relative error between backprop and central differences

    Runs the smooth relaxation at the model's current rho, where the forward
    pass is differentiable and its exact derivative is what the custom
    backward passes compute. Errors are relative to max(|analytic|,
    |numeric|, atol), so parameters with a vanishing gradient score near 0.
    """
    if eps <= 0 or atol <= 0:
        raise TrainingError(f"Gradient check needs positive eps and atol, got {eps} and {atol}")
    spikes = _as_batch(raster)
    targets = nn.functional.one_hot(torch.tensor([label]), model.num_classes).to(torch.float64)
    loss_fn = nn.BCEWithLogitsLoss()

    def loss_value() -> torch.Tensor:
        return loss_fn(model(spikes, smooth=True), targets)

    model.zero_grad()
    loss_value().backward()

    worst = 0.0
    for name, param in model.named_parameters():
        analytic = param.grad.detach().clone()
        numeric = torch.zeros_like(param)
        flat = param.data.view(-1)
        with torch.no_grad():
            for i in range(flat.numel()):
                original = flat[i].item()
                flat[i] = original + eps
                upper = loss_value().item()
                flat[i] = original - eps
                lower = loss_value().item()
                flat[i] = original
                numeric.view(-1)[i] = (upper - lower) / (2.0 * eps)
        scale = max(float(analytic.norm()), float(numeric.norm()), atol)
        error = float((analytic - numeric).norm()) / scale
        logger.debug(f"Gradient check {name}: relative error {error:.2e}")
        worst = max(worst, error)
    model.zero_grad()
    return worst
