import csv
import io
import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from thermal_gesture.models.thermal import Daypart, GestureLabel
from thermal_gesture.models.track import GestureClass

CLASS_NAMES = [c.value for c in GestureClass]


@dataclass
class AcquisitionResult:
    """Scored outcome of one recording"""
    name: str
    label: GestureLabel
    daypart: Daypart
    predictions: List[GestureClass]
    gesture_count: Optional[int] = None
    confusion: np.ndarray = field(default_factory=lambda: np.zeros((5, 5), dtype=np.int64))
    rpca_calls: int = 0

    @property
    def samples(self) -> int:
        return int(self.confusion.sum())

    @property
    def correct(self) -> int:
        return int(np.trace(self.confusion))

    @property
    def missed(self) -> int:
        truth = self.label.gesture_class
        if truth is None or truth is GestureClass.NO_GESTURE:
            return 0
        return int(self.confusion[truth.index, GestureClass.NO_GESTURE.index])


@dataclass
class EvaluationReport:
    accuracy: float
    confusion: np.ndarray  # rows: true class, columns: predicted class
    params_bytes: int = 0
    avg_flops: float = 0.0
    acquisitions: List[AcquisitionResult] = field(default_factory=list)
    mode: str = "modular"

    @classmethod
    def from_results(
        cls,
        results: Sequence[AcquisitionResult],
        params_bytes: int = 0,
        avg_flops: float = 0.0,
        mode: str = "modular",
    ) -> "EvaluationReport":
        ordered = sorted(results, key=lambda r: r.name)
        confusion = np.zeros((len(GestureClass), len(GestureClass)), dtype=np.int64)
        for result in ordered:
            confusion += result.confusion
        total = int(confusion.sum())
        accuracy = float(np.trace(confusion)) / total if total else 0.0
        return cls(
            accuracy=accuracy,
            confusion=confusion,
            params_bytes=params_bytes,
            avg_flops=avg_flops,
            acquisitions=list(ordered),
            mode=mode,
        )

    @property
    def total_samples(self) -> int:
        return int(self.confusion.sum())

    def summary(self) -> Dict:
        return {
            "mode": self.mode,
            "accuracy": self.accuracy,
            "samples": self.total_samples,
            "params_bytes": self.params_bytes,
            "avg_flops": self.avg_flops,
            "classes": CLASS_NAMES,
            "confusion": self.confusion.tolist(),
        }

    def to_json_lines(self) -> str:
        """One summary line followed by one line per acquisition"""
        lines = [json.dumps({"type": "summary", **self.summary()})]
        for r in self.acquisitions:
            lines.append(json.dumps({
                "type": "acquisition",
                "name": r.name,
                "label": r.label.value,
                "daypart": r.daypart.value,
                "gesture_count": r.gesture_count,
                "predictions": [p.value for p in r.predictions],
                "samples": r.samples,
                "correct": r.correct,
                "missed": r.missed,
                "rpca_calls": r.rpca_calls,
            }))
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        """Confusion matrix with class names on both axes"""
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["true\\predicted", *CLASS_NAMES])
        for name, row in zip(CLASS_NAMES, self.confusion.tolist()):
            writer.writerow([name, *row])
        return buffer.getvalue()
