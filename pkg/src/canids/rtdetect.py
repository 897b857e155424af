"""Streaming detection over CAN log lines with per-frame latency accounting."""
import time
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np

from . import canio, kernels
from .nncore import Model

REALTIME_BOUND_US = 10_000.0


class ModelMissing(RuntimeError):
    pass


@dataclass(frozen=True)
class DetectionEvent:
    timestamp: float
    arbitration_id: int
    class_name: str
    label: int
    confidence: float
    latency_us: float

    def format(self) -> str:
        return (f"{self.timestamp:.6f}\t{self.arbitration_id:03X}\t{self.class_name}"
                f"\t{self.confidence:.6f}\t{self.latency_us:.3f}")


@dataclass(frozen=True)
class ParseWarning:
    lineno: int
    line: str
    reason: str

    def format(self) -> str:
        return f"#WARN\tline {self.lineno}\t{self.reason}"


@dataclass(frozen=True)
class LatencyStats:
    count: int
    mean: float = 0.0
    median: float = 0.0
    p95: float = 0.0
    p99: float = 0.0
    max: float = 0.0

    @classmethod
    def from_samples(cls, samples_us) -> "LatencyStats":
        a = np.asarray(samples_us, dtype=np.float64)
        if a.size == 0:
            return cls(0)
        median, p95, p99 = np.percentile(a, [50, 95, 99])
        top = float(a.max())
        # interpolation can overshoot max by an ulp
        return cls(int(a.size), float(a.mean()), float(min(median, top)), float(min(p95, top)),
                   float(min(p99, top)), top)


def latency_report(stats: LatencyStats, title: str = "classification latency") -> str:
    if stats.count == 0:
        return f"{title}: no samples\n"
    verdict = "PASS" if stats.p99 < REALTIME_BOUND_US else "FAIL"
    return (f"{title}: {stats.count} samples\n"
            f"  mean   {stats.mean:10.3f} us\n"
            f"  median {stats.median:10.3f} us\n"
            f"  p95    {stats.p95:10.3f} us\n"
            f"  p99    {stats.p99:10.3f} us\n"
            f"  max    {stats.max:10.3f} us\n"
            f"  real-time bound {REALTIME_BOUND_US / 1000:.0f} ms (p99): {verdict}\n")


class Detector:
    """Classifies frames one at a time.

    The timed window covers feature extraction, the forward pass and argmax;
    parsing is timed separately into ``parse_latencies_us``.
    """

    def __init__(self, model: Optional[Model], impl=None):
        if model is None:
            raise ModelMissing("a trained model is required")
        self.model = model
        self.impl = impl or kernels.ACTIVE
        self._params = model.params
        self._dims = model.dims
        self._den = model.norm_denominators
        kernels.warmup(self.impl)
        self.latencies_us = []
        self.parse_latencies_us = []

    def classify(self, frame: canio.RawCanFrame) -> DetectionEvent:
        clock = time.perf_counter_ns
        t = clock()
        x = canio.frame_to_vector(frame, self._den)
        label, conf = self.impl.predict_one(self._params, self._dims, x)
        elapsed = (clock() - t) / 1000.0
        self.latencies_us.append(elapsed)
        label = int(label)
        return DetectionEvent(frame.timestamp, frame.arbitration_id, self.model.class_names[label],
                              label, float(conf), elapsed)

    def run(self, source: Iterable[str], sink: Callable) -> LatencyStats:
        clock = time.perf_counter_ns
        for lineno, line in enumerate(source, start=1):
            if not line.strip():
                continue
            t = clock()
            try:
                frame = canio.parse_log_line(line)
            except canio.CanParseError as exc:
                sink(ParseWarning(lineno, line.rstrip("\n"), str(exc)))
                continue
            self.parse_latencies_us.append((clock() - t) / 1000.0)
            sink(self.classify(frame))
        return self.stats()

    def stats(self) -> LatencyStats:
        return LatencyStats.from_samples(self.latencies_us)

    def parse_stats(self) -> LatencyStats:
        return LatencyStats.from_samples(self.parse_latencies_us)


def run_stream(model: Optional[Model], source: Iterable[str], sink: Callable, impl=None) -> LatencyStats:
    return Detector(model, impl).run(source, sink)


def format_log_line(frame: canio.RawCanFrame, iface: str = "can0") -> str:
    return f"({frame.timestamp:.6f}) {iface} {frame.arbitration_id:03X}#{frame.data.hex().upper()}"
