from typing import List, Optional, Sequence

from rich.console import Console
from rich.panel import Panel
from rich.table import Table
from rich.text import Text

from thermal_gesture.models.report import CLASS_NAMES, EvaluationReport
from thermal_gesture.models.track import GestureEvent
from thermal_gesture.services.metrics import CostReport
from thermal_gesture.services.mmv_train import TrainingHistory


def _si(value: Optional[float]) -> str:
    if value is None:
        return "-"
    for threshold, suffix in ((1e9, "G"), (1e6, "M"), (1e3, "k")):
        if abs(value) >= threshold:
            return f"{value / threshold:.3g}{suffix}"
    return f"{value:.3g}"


class TerminalDisplay:
    def __init__(self, console: Optional[Console] = None):
        self.console = console or Console()

    def render_report(self, report: EvaluationReport) -> None:
        """Accuracy panel, confusion matrix and per-acquisition breakdown"""
        header = Text()
        header.append(f"Accuracy {report.accuracy * 100:.1f}%", style="bold cyan")
        header.append(f"  ({report.total_samples} samples, {report.mode})\n", style="dim")
        header.append(f"Parameters: {report.params_bytes / 1000:.2f} kB  ", style="dim")
        header.append(f"Avg. operations/s: {_si(report.avg_flops)}", style="dim")
        self.console.print(Panel(header, expand=False))

        confusion = Table(title="Confusion (rows true, columns predicted)")
        confusion.add_column("", style="bold")
        for name in CLASS_NAMES:
            confusion.add_column(name, justify="right")
        for name, row in zip(CLASS_NAMES, report.confusion.tolist()):
            confusion.add_row(name, *(f"[green]{v}[/green]" if i == CLASS_NAMES.index(name) else str(v)
                                      for i, v in enumerate(row)))
        self.console.print(confusion)

        if report.acquisitions:
            table = Table(title="Acquisitions")
            for column in ("Name", "Label", "Events", "Correct", "Missed", "R-PCA"):
                table.add_column(column)
            for r in report.acquisitions:
                table.add_row(r.name, r.label.value, str(len(r.predictions)),
                              f"{r.correct}/{r.samples}", str(r.missed), str(r.rpca_calls))
            self.console.print(table)

    def render_events(self, events: Sequence[GestureEvent]) -> None:
        if not events:
            self.console.print("[yellow]No gestures detected[/yellow]")
            return
        table = Table(title="Gesture events")
        table.add_column("Start", justify="right")
        table.add_column("End", justify="right")
        table.add_column("Class", style="bold green")
        for event in events:
            table.add_row(str(event.start_index), str(event.end_index), event.predicted.value)
        self.console.print(table)

    def render_costs(self, reports: List[CostReport]) -> None:
        table = Table(title="Cost model")
        for column in ("Neurons", "Packed kB", "Unpacked kB", "Published kB",
                       "MMV ops/s", "R-PCA ops/s", "Published"):
            table.add_column(column, justify="right")
        for r in reports:
            published = "-"
            if r.published_mmv_flops is not None:
                published = f"{_si(r.published_mmv_flops)} + {_si(r.published_rpca_flops)}"
            table.add_row(
                str(r.neurons),
                f"{r.params_packed_bytes / 1000:.2f}",
                f"{r.params_unpacked_bytes / 1000:.2f}",
                "-" if r.published_kb is None else f"{r.published_kb}",
                _si(r.mmv_flops),
                _si(r.rpca_flops),
                published,
            )
        self.console.print(table)

    def render_history(self, history: TrainingHistory) -> None:
        table = Table(title="Training")
        for column in ("Epoch", "Loss", "Val. acc.", "rho"):
            table.add_column(column, justify="right")
        for r in history.records:
            style = "bold green" if r.epoch == history.best_epoch else None
            table.add_row(str(r.epoch), f"{r.loss:.4f}", f"{r.val_acc:.3f}", f"{r.rho:.2f}", style=style)
        self.console.print(table)
