"""Parameter and operation-count cost model"""
import logging
import math
from dataclasses import asdict, dataclass
from typing import Dict, List, Optional, Sequence

from thermal_gesture.config.settings import settings
from thermal_gesture.models.mmv import MmvNetwork
from thermal_gesture.services.errors import ConfigError

logger = logging.getLogger(__name__)

SYNAPSE_BITS = 2
PERIOD_BITS = 8
READOUT_BITS = 32

# Published (kB, MMV ops/s, R-PCA ops/s) per network size
PUBLISHED = {
    125: (36.7, 129e3, 1.7e6),
    250: (50.5, 257e3, 1.7e6),
    500: (101.4, 513e3, 1.7e6),
}


@dataclass(frozen=True)
class ParamCount:
    neurons: int
    synapses: int
    packed_bytes: int    # 2 bits per synapse, 8 per period, 32 per readout value
    unpacked_bytes: int  # 1 byte per synapse, otherwise as packed


def count_params_for(neurons: int, input_width: int, num_classes: int) -> ParamCount:
    if neurons < 0 or input_width < 0 or num_classes < 0:
        raise ConfigError("Network dimensions must be non-negative")
    synapses = input_width * neurons + neurons * neurons
    readout_values = neurons * num_classes + num_classes
    fixed_bits = PERIOD_BITS * neurons + READOUT_BITS * readout_values
    return ParamCount(
        neurons=neurons,
        synapses=synapses,
        packed_bytes=math.ceil((SYNAPSE_BITS * synapses + fixed_bits) / 8),
        unpacked_bytes=synapses + math.ceil(fixed_bits / 8),
    )


def count_params(net: MmvNetwork) -> ParamCount:
    return count_params_for(net.neurons, net.input_width, net.num_classes)


def flops_svd(n_c: int, h: int, w: int) -> int:
    """2 n_c (h w)^2 + 11 (h w)^3"""
    if min(n_c, h, w) <= 0:
        raise ConfigError(f"SVD dimensions must be positive, got ({n_c}, {h}, {w})")
    pixels = h * w
    return 2 * n_c * pixels ** 2 + 11 * pixels ** 3


def mmv_ops_per_window(connected_synapses: int, neurons: int, time_steps: int) -> int:
    """One OR-accumulate per connected synapse plus one counter update per neuron, every step"""
    return (connected_synapses + neurons) * time_steps


def rpca_ops_per_gesture(
    n_c: int = settings.N_C,
    h: int = settings.FRAME_HEIGHT,
    w: int = settings.FRAME_WIDTH,
    max_iter: int = settings.RPCA_MAX_ITER,
    windows_per_gesture: int = settings.TRACK_LENGTH,
) -> int:
    return max_iter * flops_svd(n_c, h, w) * windows_per_gesture


def avg_flops(per_gesture_ops: float, gesture_rate: float, mmv_ops_per_frame: float, frame_rate: float) -> float:
    """Average operations per second: always-on MMV plus R-PCA at the gesture rate"""
    if gesture_rate < 0 or frame_rate < 0:
        raise ConfigError(f"Rates must be non-negative, got {gesture_rate}, {frame_rate}")
    return mmv_ops_per_frame * frame_rate + per_gesture_ops * gesture_rate


@dataclass(frozen=True)
class CostReport:
    neurons: int
    params_packed_bytes: int
    params_unpacked_bytes: int
    mmv_ops_per_window: int
    rpca_ops_per_gesture: int
    mmv_flops: float
    rpca_flops: float
    avg_flops: float
    published_kb: Optional[float] = None
    published_mmv_flops: Optional[float] = None
    published_rpca_flops: Optional[float] = None

    def to_dict(self) -> Dict:
        return asdict(self)


class CostModel:
    """Memory and average-compute figures for MMV detector configurations"""

    def __init__(
        self,
        n_c: int = settings.N_C,
        height: int = settings.FRAME_HEIGHT,
        width: int = settings.FRAME_WIDTH,
        fps: float = settings.FPS,
        gestures_per_minute: float = settings.GESTURES_PER_MINUTE,
        max_iter: int = settings.RPCA_MAX_ITER,
        windows_per_gesture: int = settings.TRACK_LENGTH,
        num_classes: int = 2,
    ):
        self.n_c = n_c
        self.height = height
        self.width = width
        self.fps = fps
        self.gesture_rate = gestures_per_minute / 60.0
        self.max_iter = max_iter
        self.windows_per_gesture = windows_per_gesture
        self.num_classes = num_classes

    @property
    def time_steps(self) -> int:
        return (self.n_c - 1) * self.height

    def _report(self, params: ParamCount, connected: int, with_rpca: bool = True) -> CostReport:
        mmv_ops = mmv_ops_per_window(connected, params.neurons, self.time_steps)
        rpca_ops = 0
        if with_rpca:
            rpca_ops = rpca_ops_per_gesture(
                self.n_c, self.height, self.width, self.max_iter, self.windows_per_gesture
            )
        mmv_flops = avg_flops(0, 0, mmv_ops, self.fps)
        rpca_flops = avg_flops(rpca_ops, self.gesture_rate, 0, 0)
        published = PUBLISHED.get(params.neurons, (None, None, None)) if with_rpca else (None, None, None)
        return CostReport(
            neurons=params.neurons,
            params_packed_bytes=params.packed_bytes,
            params_unpacked_bytes=params.unpacked_bytes,
            mmv_ops_per_window=mmv_ops,
            rpca_ops_per_gesture=rpca_ops,
            mmv_flops=mmv_flops,
            rpca_flops=rpca_flops,
            avg_flops=mmv_flops + rpca_flops,
            published_kb=published[0],
            published_mmv_flops=published[1],
            published_rpca_flops=published[2],
        )

    def report(self, net: MmvNetwork, with_rpca: bool = True) -> CostReport:
        """Figures for a trained network, counting only its connected synapses"""
        report = self._report(count_params(net), net.connectivity.connected_count, with_rpca)
        self._check_published(report)
        return report

    def report_for_sizes(self, sizes: Sequence[int] = (125, 250, 500)) -> List[CostReport]:
        """Upper-bound figures assuming every synapse is connected"""
        reports = []
        for neurons in sizes:
            params = count_params_for(neurons, self.width, self.num_classes)
            reports.append(self._report(params, params.synapses))
            self._check_published(reports[-1])
        return reports

    def _check_published(self, report: CostReport) -> None:
        if report.published_rpca_flops is None or report.rpca_flops == 0:
            return
        ratio = report.rpca_flops / report.published_rpca_flops
        if not 0.5 <= ratio <= 2.0:
            logger.warning(
                f"R-PCA cost for {report.neurons} neurons is {report.rpca_flops:.3g} ops/s from the "
                f"SVD operation-count formula, {ratio:.3g}x the published {report.published_rpca_flops:.3g}"
            )
