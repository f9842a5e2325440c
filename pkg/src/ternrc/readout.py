"""Ternary readout plane, its two-plane Boolean decomposition, and the
subtractive scalar detection.

The mirror array can only route light toward or away from the detector, so a
ternary weight vector is realized as two disjoint Boolean planes measured
sequentially; the negative weights come from subtracting the two detected
signals electronically.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InvalidPlaneError, ShapeError, UsageError
from .substrate import ReservoirState, circle_mask

MODES = ("boolean", "ternary")


@dataclass(frozen=True)
class TernaryMask:
    """Readout weight vector with entries in {-1, 0, +1}.

    Boolean mode restricts the alphabet to {0, +1}; ternary mode allows all
    three symbols.
    """

    weights: np.ndarray
    mode: str = "ternary"

    def __post_init__(self):
        w = np.asarray(self.weights)
        if w.ndim != 1 or w.size < 1:
            raise ShapeError(f"weights must be a non-empty vector, got shape {w.shape}")
        if not np.isin(w, (-1, 0, 1)).all():
            raise ConfigError("weights must take values in {-1, 0, +1}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "boolean" and np.any(w == -1):
            raise ConfigError("boolean-mode masks cannot contain -1")

    def __len__(self) -> int:
        return self.weights.size

    def __eq__(self, other) -> bool:
        return (isinstance(other, TernaryMask) and self.mode == other.mode
                and np.array_equal(self.weights, other.weights))


@dataclass(frozen=True)
class BooleanPlane:
    """One displayable mirror plane: which nodes reach the detector."""

    bits: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bits)
        if b.ndim != 1 or b.dtype != bool:
            raise ShapeError("bits must be a flat boolean vector")


def decompose(mask: TernaryMask) -> tuple[BooleanPlane, BooleanPlane]:
    """Split a ternary mask into its (+1) plane and (-1) plane.

    The planes are disjoint by construction: no node can be routed to both
    detector configurations.
    """
    w = np.asarray(mask.weights)
    return BooleanPlane(bits=w == 1), BooleanPlane(bits=w == -1)


def compose(plus: BooleanPlane, minus: BooleanPlane, mode: str = "ternary") -> TernaryMask:
    """Inverse of :func:`decompose`; rejects overlapping planes."""
    p, m = plus.bits, minus.bits
    if p.size != m.size:
        raise ShapeError(f"plane lengths differ: {p.size} != {m.size}")
    if np.any(p & m):
        raise InvalidPlaneError("planes overlap: a node cannot feed both detector paths")
    w = np.zeros(p.size, dtype=np.int8)
    w[p] = 1
    w[m] = -1
    return TernaryMask(weights=w, mode=mode)


def random_mask(length: int, mode: str = "ternary", seed: int | np.random.Generator = 0) -> TernaryMask:
    """Uniform random mask over the mode's alphabet, deterministic per seed."""
    if length < 1:
        raise UsageError(f"length must be >= 1, got {length}")
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    alphabet = np.array([0, 1], dtype=np.int8) if mode == "boolean" else np.array([-1, 0, 1], dtype=np.int8)
    return TernaryMask(weights=rng.choice(alphabet, size=length), mode=mode)


class DetectorModel:
    """Scalar photodetector with additive gaussian noise.

    ``noise_sigma`` is relative to ``noise_scale``, a fixed reference power
    calibrated once per experiment as the mean all-on detected power. One
    noise value is drawn per measurement from the seeded stream, so
    measurement sequences are reproducible. With ``dual_detector`` the two
    planes of a ternary mask are measured simultaneously on separate
    detectors and subtracted in real time, costing a single draw.
    """

    def __init__(self, noise_sigma: float = 0.0, seed: int = 0,
                 noise_scale: float = 1.0, dual_detector: bool = False):
        if not math.isfinite(noise_sigma) or noise_sigma < 0:
            raise ConfigError(f"noise_sigma must be finite and >= 0, got {noise_sigma}")
        self.noise_sigma = noise_sigma
        self.noise_scale = noise_scale
        self.dual_detector = dual_detector
        self._rng = np.random.default_rng(seed)

    def calibrate(self, states: np.ndarray) -> float:
        """Set the noise reference to the mean all-on power of a batch of
        states (rows are per-sample node intensities)."""
        self.noise_scale = float(np.asarray(states).sum(axis=1).mean())
        return self.noise_scale

    def draw(self, n: int | None = None):
        sd = self.noise_sigma * self.noise_scale
        if n is None:
            return sd * self._rng.standard_normal()
        return sd * self._rng.standard_normal(n)


def detect(state: ReservoirState, plane: BooleanPlane, substrate_gain: float,
           det: DetectorModel) -> float:
    """Detected power for one plane: gain * sum of selected intensities plus
    one noise draw."""
    x = state.intensities
    if x.size != plane.bits.size:
        raise ShapeError(f"state length {x.size} != plane length {plane.bits.size}")
    return float(substrate_gain * x[plane.bits].sum() + det.draw())


def readout(state: ReservoirState, mask: TernaryMask, substrate_gain: float,
            det: DetectorModel) -> float:
    """Scalar output for one input: subtraction of the two plane detections.

    A ternary mask costs two sequential measurements (two noise draws); a
    boolean mask needs only its (+1) plane (one draw); a dual-detector
    ternary readout costs one combined draw.
    """
    if len(mask) != state.intensities.size:
        raise ShapeError(f"mask length {len(mask)} != state length {state.intensities.size}")
    plus, minus = decompose(mask)
    if mask.mode == "boolean":
        return detect(state, plus, substrate_gain, det)
    if det.dual_detector:
        x = state.intensities
        return float(substrate_gain * (x[plus.bits].sum() - x[minus.bits].sum()) + det.draw())
    return detect(state, plus, substrate_gain, det) - detect(state, minus, substrate_gain, det)


def detect_batch(states: np.ndarray, plane: BooleanPlane, substrate_gain: float,
                 det: DetectorModel) -> np.ndarray:
    """Vectorized :func:`detect` over an (N, K) state matrix: one sweep of
    the plane across the batch, one noise draw per sample."""
    if states.shape[1] != plane.bits.size:
        raise ShapeError(f"state width {states.shape[1]} != plane length {plane.bits.size}")
    return substrate_gain * (states @ plane.bits.astype(float)) + det.draw(states.shape[0])


def readout_batch(states: np.ndarray, mask: TernaryMask, substrate_gain: float,
                  det: DetectorModel) -> np.ndarray:
    """Vectorized :func:`readout`: the (+1) plane is swept over the whole
    batch, then the (-1) plane, mirroring how the hardware sequences its
    measurements."""
    if states.shape[1] != len(mask):
        raise ShapeError(f"state width {states.shape[1]} != mask length {len(mask)}")
    plus, minus = decompose(mask)
    if mask.mode == "boolean":
        return detect_batch(states, plus, substrate_gain, det)
    if det.dual_detector:
        w = np.asarray(mask.weights, dtype=float)
        return substrate_gain * (states @ w) + det.draw(states.shape[0])
    return (detect_batch(states, plus, substrate_gain, det)
            - detect_batch(states, minus, substrate_gain, det))


def mask_to_json(mask: TernaryMask, grid_side: int | None = None) -> str:
    """Serialize to a flat JSON weight array plus mode; ``grid_side``
    records the display geometry (row-major over the active disk)."""
    doc = {"weights": [int(v) for v in mask.weights], "mode": mask.mode}
    if grid_side is not None:
        doc["grid_side"] = int(grid_side)
    return json.dumps(doc)


def mask_from_json(doc: str | dict) -> TernaryMask:
    data = json.loads(doc) if isinstance(doc, str) else dict(doc)
    unknown = set(data) - {"weights", "mode", "grid_side"}
    if unknown:
        raise ConfigError(f"unknown mask fields: {sorted(unknown)}")
    return TernaryMask(weights=np.asarray(data["weights"], dtype=np.int8),
                       mode=data.get("mode", "ternary"))


def mask_to_grid(mask: TernaryMask, grid_side: int) -> np.ndarray:
    """Reshape the flat mask onto its grid for display: active cells filled
    row-major, inactive cells zero."""
    node_mask = circle_mask(grid_side)
    if int(node_mask.sum()) != len(mask):
        raise ShapeError(
            f"mask length {len(mask)} does not match the {grid_side}x{grid_side} disk")
    grid = np.zeros((grid_side, grid_side), dtype=int)
    grid[node_mask] = mask.weights
    return grid
