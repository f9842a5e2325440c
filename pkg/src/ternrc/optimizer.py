"""Error-adaptive in-situ search over Boolean/ternary readout masks.

Each epoch perturbs the current best mask at a number of positions tied to
the current error, keeps the candidate only if its measured error strictly
improves, and reverts otherwise. The error itself plays the role that
temperature plays in classical annealing: large error means large jumps,
small error means fine single-mirror moves.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .errors import ConfigError, UsageError
from .readout import MODES, TernaryMask, random_mask

NORMALIZE_MODES = ("off", "zscore", "first_epoch")

#: guard below which the output spread counts as degenerate (constant trace)
STD_FLOOR = 1e-12


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of one optimization run."""

    alpha: float
    max_epochs: int
    mode: str = "ternary"
    seed: int = 0
    target_levels: tuple[float, float] = (0.0, 1.0)
    patience: int | None = None
    normalize: str = "off"

    def validate(self) -> None:
        if not math.isfinite(self.alpha) or self.alpha < 0:
            raise ConfigError(f"alpha must be finite and >= 0, got {self.alpha}")
        if self.max_epochs < 1:
            raise ConfigError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        lo, hi = self.target_levels
        if not lo < hi:
            raise ConfigError(f"target levels must satisfy low < high, got {self.target_levels}")
        if self.patience is not None and self.patience < 1:
            raise ConfigError(f"patience must be >= 1 or None, got {self.patience}")
        if self.normalize not in NORMALIZE_MODES:
            raise ConfigError(f"normalize must be one of {NORMALIZE_MODES}, got {self.normalize!r}")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    nmse_best: float
    n_mirrors: int
    accepted: bool


@dataclass(frozen=True)
class TrainResult:
    best_mask: TernaryMask
    history: tuple[EpochRecord, ...]
    final_nmse: float
    initial_nmse: float
    output_transform: tuple[float, float] | None = None

    @property
    def n_accepted(self) -> int:
        return sum(r.accepted for r in self.history)


def nmse(y_out: np.ndarray, y_target: np.ndarray) -> float:
    """Normalized mean square error of a measured trace against its target:
    sum of squared residuals over N times the population standard deviation
    of the trace. A (near-)constant trace has no usable spread and returns
    +inf so it can never be accepted."""
    y = np.asarray(y_out, dtype=float)
    t = np.asarray(y_target, dtype=float)
    if y.shape != t.shape or y.ndim != 1:
        raise UsageError(f"trace/target must be equal-length vectors, got {y.shape} / {t.shape}")
    n = y.size
    if n < 2:
        raise UsageError(f"need at least 2 samples, got {n}")
    sd = float(np.std(y))
    if sd < STD_FLOOR:
        return math.inf
    return float(np.sum((y - t) ** 2) / (n * sd))


def n_mirrors(alpha: float, nmse_k: float, cap: int | None = None) -> int:
    """Number of mirror positions to perturb this epoch: ceil(alpha * error),
    floored at one so the search always moves. The ceiling is evaluated in
    exact rational arithmetic; a float product can round across an integer
    boundary. An infinite error (degenerate trace) clamps to the mask
    length ``cap``."""
    if alpha < 0 or not math.isfinite(alpha):
        raise UsageError(f"alpha must be finite and >= 0, got {alpha}")
    if nmse_k < 0:
        raise UsageError(f"nmse must be >= 0, got {nmse_k}")
    if math.isinf(nmse_k):
        if cap is None:
            raise UsageError("infinite error needs the mask length to clamp to")
        return cap
    n = max(1, math.ceil(Fraction(alpha) * Fraction(nmse_k)))
    return n if cap is None else min(n, cap)


def propose(mask: TernaryMask, n: int, mode: str | None = None,
            rng: np.random.Generator | None = None) -> TernaryMask:
    """Candidate mask: ``n`` positions drawn uniformly with replacement, each
    reassigned a uniform symbol from the mode's alphabet. The input mask is
    left untouched. A redrawn symbol may equal the old one, so the candidate
    differs from the original in at most ``n`` positions."""
    k = len(mask)
    if not 1 <= n <= k:
        raise UsageError(f"n must be in [1, {k}], got {n}")
    mode = mask.mode if mode is None else mode
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    rng = np.random.default_rng() if rng is None else rng
    alphabet = np.array([0, 1], dtype=np.int8) if mode == "boolean" else np.array([-1, 0, 1], dtype=np.int8)
    positions = rng.integers(0, k, size=n)
    values = rng.choice(alphabet, size=n)
    w = np.array(mask.weights, dtype=np.int8, copy=True)
    # duplicate positions resolve to the last drawn value, as in a sequential loop
    w[positions] = values
    return TernaryMask(weights=w, mode=mode)


class _Normalizer:
    """Optional affine conditioning of raw detector traces before the error.

    zscore: each measured trace is standardized and mapped onto the target's
    mean and spread, so the error compares shapes regardless of the raw
    detection scale. first_epoch: an affine map is frozen from the first
    measured trace (min -> low level, max -> high level) and applied to all
    later traces. off: raw traces.
    """

    def __init__(self, mode: str, y_target: np.ndarray):
        self.mode = mode
        self._t_mean = float(np.mean(y_target))
        self._t_std = float(np.std(y_target))
        self._lo_level = float(np.min(y_target))
        self._hi_level = float(np.max(y_target))
        self.transform: tuple[float, float] | None = None

    def fit_first(self, y: np.ndarray) -> None:
        if self.mode != "first_epoch":
            return
        lo, hi = float(np.min(y)), float(np.max(y))
        span = hi - lo if hi > lo else 1.0
        self.transform = (lo, span)

    def __call__(self, y: np.ndarray) -> np.ndarray:
        if self.mode == "off":
            return y
        if self.mode == "first_epoch":
            lo, span = self.transform
            return (y - lo) / span * (self._hi_level - self._lo_level) + self._lo_level
        sd = float(np.std(y))
        if sd < STD_FLOOR:
            return np.full_like(y, self._t_mean)
        return (y - np.mean(y)) / sd * self._t_std + self._t_mean


def train(forward_pass: Callable[[TernaryMask], np.ndarray], y_target: np.ndarray,
          cfg: TrainConfig, n_nodes: int | None = None,
          initial_mask: TernaryMask | None = None) -> TrainResult:
    """Run the adaptive accept-if-better search.

    ``forward_pass`` measures one candidate mask on the fixed training batch
    and returns the N-vector of readout outputs (it owns the substrate, the
    detector and its noise). The mask length comes from ``initial_mask`` or
    ``n_nodes``. Identical config, seed and a deterministic forward pass
    reproduce the identical result.
    """
    cfg.validate()
    t = np.asarray(y_target, dtype=float)
    if initial_mask is None:
        if n_nodes is None:
            raise UsageError("provide n_nodes or initial_mask to size the search")
        rng = np.random.default_rng(cfg.seed)
        mask = random_mask(n_nodes, cfg.mode, rng)
    else:
        if initial_mask.mode != cfg.mode:
            raise UsageError(f"initial mask mode {initial_mask.mode!r} != cfg mode {cfg.mode!r}")
        rng = np.random.default_rng(cfg.seed)
        mask = initial_mask
    k = len(mask)

    norm = _Normalizer(cfg.normalize, t)
    y0 = _measure(forward_pass, mask, t.size)
    norm.fit_first(y0)
    best = nmse(norm(y0), t)
    initial = best

    history: list[EpochRecord] = []
    since_improve = 0
    for epoch in range(1, cfg.max_epochs + 1):
        n = n_mirrors(cfg.alpha, best, cap=k)
        cand = propose(mask, n, cfg.mode, rng)
        e = nmse(norm(_measure(forward_pass, cand, t.size)), t)
        accepted = e < best
        if accepted:
            mask, best = cand, e
            since_improve = 0
        else:
            since_improve += 1
        history.append(EpochRecord(epoch=epoch, nmse_best=best, n_mirrors=n, accepted=accepted))
        if cfg.patience is not None and since_improve >= cfg.patience:
            break
    return TrainResult(best_mask=mask, history=tuple(history), final_nmse=best,
                       initial_nmse=initial, output_transform=norm.transform)


def _measure(forward_pass, mask, n_expected):
    y = np.asarray(forward_pass(mask), dtype=float)
    if y.shape != (n_expected,):
        raise UsageError(
            f"forward_pass returned shape {y.shape}, expected ({n_expected},)")
    return y


@dataclass(frozen=True)
class Metrics:
    """Evaluation summary of one mask on one batch."""

    nmse: float
    accuracy: float
    ser: float
    threshold: float


def midpoint_threshold(y_out: np.ndarray, y_target: np.ndarray) -> float:
    """Midpoint of the class-conditional mean outputs."""
    pos = _positive_class(y_target)
    if not pos.any() or pos.all():
        raise UsageError("midpoint threshold needs both classes present")
    return float((y_out[pos].mean() + y_out[~pos].mean()) / 2.0)


def _positive_class(y_target: np.ndarray) -> np.ndarray:
    t = np.asarray(y_target, dtype=float)
    return t > (t.min() + t.max()) / 2.0


def evaluate(forward_pass: Callable[[TernaryMask], np.ndarray], mask: TernaryMask,
             y_target: np.ndarray, threshold_rule: float | str = "midpoint",
             normalize: str = "off",
             output_transform: tuple[float, float] | None = None) -> Metrics:
    """Measure a mask once and score it: error, accuracy and symbol error
    rate under the threshold decision ``y > threshold``.

    ``threshold_rule`` is either the string "midpoint" (threshold computed
    from this batch's class-conditional means) or a frozen numeric threshold
    carried over from a training batch.
    """
    t = np.asarray(y_target, dtype=float)
    y = _measure(forward_pass, mask, t.size)
    norm = _Normalizer(normalize, t)
    if normalize == "first_epoch":
        if output_transform is None:
            norm.fit_first(y)
        else:
            norm.transform = output_transform
    y_n = norm(y)
    err = nmse(y_n, t)
    if isinstance(threshold_rule, str):
        if threshold_rule != "midpoint":
            raise UsageError(f"unknown threshold rule {threshold_rule!r}")
        thr = midpoint_threshold(y_n, t)
    else:
        thr = float(threshold_rule)
    pos = _positive_class(t)
    pred = y_n > thr
    ser = float(np.mean(pred != pos))
    return Metrics(nmse=err, accuracy=1.0 - ser, ser=ser, threshold=thr)


def result_to_json(result: TrainResult) -> str:
    """TrainResult as a JSON document (mask, history, error summary)."""
    doc = {
        "mask": {"weights": [int(v) for v in result.best_mask.weights],
                 "mode": result.best_mask.mode},
        "history": [{"epoch": r.epoch, "nmse_best": r.nmse_best,
                     "n_mirrors": r.n_mirrors, "accepted": r.accepted}
                    for r in result.history],
        "final_nmse": result.final_nmse,
        "initial_nmse": result.initial_nmse,
    }
    return json.dumps(doc)


def history_to_csv(result: TrainResult) -> str:
    """Learning curve as CSV with columns epoch,nmse_best,n_mirrors,accepted."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["epoch", "nmse_best", "n_mirrors", "accepted"])
    for r in result.history:
        w.writerow([r.epoch, repr(r.nmse_best), r.n_mirrors, int(r.accepted)])
    return buf.getvalue()
