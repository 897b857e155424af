"""CAN frame parsing and feature extraction.

A frame becomes a 9-element feature vector: the arbitration ID followed by
eight data bytes (zero-padded), each scaled into [0, 1] by a fixed protocol
maximum.
"""
import re
from dataclasses import dataclass

import numpy as np

MAX_BASE_ID = 0x7FF
MAX_DLC = 8
NUM_FEATURES = 1 + MAX_DLC
ID_DENOMINATOR = 2047.0
BYTE_DENOMINATOR = 255.0


class CanParseError(ValueError):
    """Base class for CAN input errors."""


class MalformedLine(CanParseError):
    pass


class IdOutOfRange(CanParseError):
    pass


class OddPayload(CanParseError):
    pass


class ValueOutOfRange(CanParseError):
    pass


@dataclass(frozen=True)
class RawCanFrame:
    arbitration_id: int
    data: bytes = b""
    timestamp: float = 0.0

    def __post_init__(self):
        if not 0 <= self.arbitration_id <= MAX_BASE_ID:
            raise IdOutOfRange(f"arbitration id {self.arbitration_id:#x} is not an 11-bit base id")
        if len(self.data) > MAX_DLC:
            raise ValueOutOfRange(f"payload of {len(self.data)} bytes exceeds {MAX_DLC}")
        if self.timestamp < 0:
            raise ValueOutOfRange(f"negative timestamp {self.timestamp}")
        object.__setattr__(self, "data", bytes(self.data))

    @property
    def dlc(self) -> int:
        return len(self.data)


_LINE_RE = re.compile(
    r"^\((?P<ts>\d+(?:\.\d*)?)\)\s+(?P<iface>\S+)\s+(?P<id>[0-9A-Fa-f]+)#(?P<payload>[0-9A-Fa-f]*)$"
)


def parse_log_line(text: str) -> RawCanFrame:
    """Parse one ``(<ts>) <iface> <id>#<payload>`` log line.

    >>> parse_log_line("(12.5) can0 123#090D08060403050E").data.hex()
    '090d08060403050e'
    """
    m = _LINE_RE.match(text.strip())
    if m is None:
        raise MalformedLine(f"not a CAN log line: {text.strip()!r}")
    hexid = m["id"]
    payload = m["payload"]
    if len(hexid) != 3:
        # wider ids are either extended frames or garbage; both are out of range here
        if len(hexid) > 3 and int(hexid, 16) > MAX_BASE_ID:
            raise IdOutOfRange(f"id {hexid} exceeds 0x7FF")
        raise MalformedLine(f"id field must be 3 hex digits, got {hexid!r}")
    can_id = int(hexid, 16)
    if can_id > MAX_BASE_ID:
        raise IdOutOfRange(f"id {hexid} exceeds 0x7FF")
    if len(payload) % 2:
        raise OddPayload(f"payload {payload!r} has an odd number of hex digits")
    if len(payload) > 2 * MAX_DLC:
        raise MalformedLine(f"payload {payload!r} longer than {MAX_DLC} bytes")
    return RawCanFrame(can_id, bytes.fromhex(payload), float(m["ts"]))


def extract_features(frame: RawCanFrame) -> list[int]:
    """``[id, db1, ..., db8]`` in decimal; missing bytes are 0."""
    data = frame.data
    return [frame.arbitration_id] + list(data) + [0] * (MAX_DLC - len(data))


def normalize(raw) -> np.ndarray:
    raw = np.asarray(raw, dtype=np.float64)
    if raw.shape != (NUM_FEATURES,):
        raise ValueOutOfRange(f"expected {NUM_FEATURES} raw features, got shape {raw.shape}")
    if raw[0] < 0 or raw[0] > MAX_BASE_ID or np.any(raw[1:] < 0) or np.any(raw[1:] > 255):
        raise ValueOutOfRange(f"raw features out of range: {raw.tolist()}")
    out = np.empty(NUM_FEATURES)
    out[0] = raw[0] / ID_DENOMINATOR
    out[1:] = raw[1:] / BYTE_DENOMINATOR
    return out


def normalize_rows(raw: np.ndarray, denominators=(ID_DENOMINATOR, BYTE_DENOMINATOR)) -> np.ndarray:
    """Vectorized ``normalize`` for an ``(n, 9)`` integer matrix."""
    raw = np.asarray(raw)
    if raw.ndim != 2 or raw.shape[1] != NUM_FEATURES:
        raise ValueOutOfRange(f"expected (n, {NUM_FEATURES}) raw features, got {raw.shape}")
    if raw.size and (raw.min() < 0 or raw[:, 0].max() > MAX_BASE_ID or raw[:, 1:].max() > 255):
        raise ValueOutOfRange("raw feature matrix has values outside the protocol ranges")
    out = raw.astype(np.float64)
    out[:, 0] /= denominators[0]
    out[:, 1:] /= denominators[1]
    return out


def frame_to_vector(frame: RawCanFrame, denominators=(ID_DENOMINATOR, BYTE_DENOMINATOR)) -> np.ndarray:
    """Extract and scale in one step, skipping the range checks (a valid frame is always in range)."""
    out = np.zeros(NUM_FEATURES)
    out[0] = frame.arbitration_id / denominators[0]
    data = frame.data
    for i in range(len(data)):
        out[1 + i] = data[i] / denominators[1]
    return out
