"""Experiment orchestration: seeded batch acquisition, the four-arm
comparison, alpha scans, the header benchmark and the long-term stability
protocol, with CSV/JSON persistence of every run.

All randomness is derived from the config seeds through tagged seed
sequences, so any experiment rerun with the same config reproduces its
output files byte for byte.
"""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from .baselines import lambda_sweep, ridge_eval, ridge_fit
from .errors import ConfigError, DataError, UsageError
from .optimizer import (Metrics, TrainConfig, TrainResult, _Normalizer, evaluate,
                        nmse, train)
from .readout import DetectorModel, TernaryMask, mask_to_json, readout_batch
from .substrate import (Substrate, SubstrateConfig, build_substrate, advance_drift,
                        forward_batch, states_matrix)
from .tasks import (DigitDataset, LabeledBatch, load_mnist, make_header_batch,
                    make_onevsall_batch)

RESULTS_SCHEMA = "ternrc-results-v1"
CURVES_SCHEMA = "ternrc-curves-v1"

#: lambda grid for the ridge baseline's cross-validated selection
RIDGE_GRID = tuple(float(v) for v in np.logspace(-6, 2, 9))

COMPARISON_ARMS = ("boolean_on", "ternary_on", "ternary_off", "ridge")


def derive_seed(base: int, tag: str, index: int = 0) -> int:
    """Deterministic child seed for one component of one repeat."""
    ss = np.random.SeedSequence([int(base) & 0xFFFFFFFF, zlib.crc32(tag.encode()), int(index)])
    return int(ss.generate_state(1, np.uint32)[0])


# ---------------------------------------------------------------------------
# Experiment configuration

@dataclass(frozen=True)
class HeaderTask:
    n_bits: int = 4
    target_value: int = 5
    n_samples: int = 1000
    image_side: int = 64
    type: str = "header"


@dataclass(frozen=True)
class MnistTask:
    images: str = ""
    labels: str = ""
    test_images: str | None = None
    test_labels: str | None = None
    digit: int | None = 0
    n_samples: int = 1000
    type: str = "mnist"


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one experiment needs: physics, optimizer, workload,
    repeat count and output location.

    ``off_brightness`` models the laser-off reference arm of the comparison:
    without the laser only weakly transmitted light reaches the detector, so
    that arm's detected power is scaled to this fraction of the lasing arm's
    calibrated power while the detector noise scale stays frozen from the
    lasing configuration.
    """

    substrate: SubstrateConfig
    train: TrainConfig
    task: HeaderTask | MnistTask
    repeats: int = 1
    output_dir: str | None = None
    off_brightness: float = 0.15
    ridge_grid: tuple[float, ...] = RIDGE_GRID
    alphas: tuple[float, ...] = (0.0, 5.0, 10.0, 20.0)

    def validate(self) -> None:
        self.substrate.validate()
        self.train.validate()
        if self.repeats < 1:
            raise ConfigError(f"repeats must be >= 1, got {self.repeats}")
        if not 0.0 < self.off_brightness <= 1.0:
            raise ConfigError(f"off_brightness must be in (0, 1], got {self.off_brightness}")
        if isinstance(self.task, HeaderTask) and self.task.image_side != self.substrate.input_side:
            raise ConfigError(
                f"header image_side {self.task.image_side} != substrate input_side "
                f"{self.substrate.input_side}")

    @classmethod
    def from_json(cls, doc: str | dict) -> "ExperimentConfig":
        data = json.loads(doc) if isinstance(doc, str) else dict(doc)
        known = {"substrate", "train", "task", "repeats", "output_dir",
                 "off_brightness", "ridge_grid", "alphas"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        sub = SubstrateConfig.from_json(data.get("substrate", {}))
        tr_doc = dict(data.get("train", {}))
        unknown = set(tr_doc) - set(TrainConfig.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown train fields: {sorted(unknown)}")
        if "target_levels" in tr_doc:
            tr_doc["target_levels"] = tuple(tr_doc["target_levels"])
        tr = TrainConfig(**tr_doc)
        task_doc = dict(data.get("task", {"type": "header"}))
        kind = task_doc.pop("type", "header")
        if kind == "header":
            task = HeaderTask(**task_doc)
        elif kind == "mnist":
            task = MnistTask(**task_doc)
        else:
            raise ConfigError(f"unknown task type {kind!r}")
        cfg = cls(substrate=sub, train=tr, task=task,
                  repeats=int(data.get("repeats", 1)),
                  output_dir=data.get("output_dir"),
                  off_brightness=float(data.get("off_brightness", 0.15)),
                  ridge_grid=tuple(data.get("ridge_grid", RIDGE_GRID)),
                  alphas=tuple(data.get("alphas", (0.0, 5.0, 10.0, 20.0))))
        cfg.validate()
        return cfg

    def to_json_dict(self) -> dict:
        doc = asdict(self)
        doc["task"]["type"] = self.task.type
        return doc


# ---------------------------------------------------------------------------
# Measurement rig

class BatchReadout:
    """One arm's data-acquisition loop over a fixed batch.

    States are computed once (the forward path is deterministic); each
    measurement applies the live detector-path gain, the arm's brightness
    and fresh detector noise. Calling it with a mask returns the N-vector of
    readout outputs, which is exactly the contract the optimizer expects.
    """

    def __init__(self, substrate: Substrate, patterns=None, detector: DetectorModel | None = None,
                 brightness: float = 1.0, states: np.ndarray | None = None):
        if (patterns is None) == (states is None):
            raise UsageError("provide exactly one of patterns or states")
        self.substrate = substrate
        self.states = states if states is not None \
            else states_matrix(forward_batch(substrate, list(patterns)))
        self.detector = detector if detector is not None else DetectorModel()
        self.brightness = brightness

    @property
    def n_samples(self) -> int:
        return self.states.shape[0]

    @property
    def n_nodes(self) -> int:
        return self.states.shape[1]

    @property
    def mean_power(self) -> float:
        """Mean all-on detected power of the batch at unit gain."""
        return float(self.states.sum(axis=1).mean())

    def measure(self, mask: TernaryMask) -> np.ndarray:
        return readout_batch(self.states, mask,
                             self.substrate.gain * self.brightness, self.detector)

    __call__ = measure


# ---------------------------------------------------------------------------
# Batch acquisition per task

def _load_partitions(task: MnistTask) -> tuple[DigitDataset, DigitDataset | None]:
    for p in (task.images, task.labels):
        if not p or not Path(p).exists():
            raise DataError(
                f"digit dataset file not found: {p!r}; pass --mnist-images/--mnist-labels "
                "or point the task config at IDX files")
    train_part = load_mnist(task.images, task.labels)
    test_part = None
    if task.test_images and task.test_labels:
        if not (Path(task.test_images).exists() and Path(task.test_labels).exists()):
            raise DataError(
                f"test dataset files not found: {task.test_images!r} / {task.test_labels!r}")
        test_part = load_mnist(task.test_images, task.test_labels)
    return train_part, test_part


def make_task_batches(cfg: ExperimentConfig, repeat: int, digit: int | None = None,
                      _cache: dict | None = None) -> tuple[LabeledBatch, LabeledBatch]:
    """Build the (train, test) batches for one repeat. Test batches are
    disjoint from training: headers use an independent seed, digit batches
    come from the test partition when available and otherwise from a
    disjoint draw of the training partition."""
    levels = cfg.train.target_levels
    if isinstance(cfg.task, HeaderTask):
        t = cfg.task
        tr_seed = derive_seed(cfg.train.seed, "batch-train", repeat)
        te_seed = derive_seed(cfg.train.seed, "batch-test", repeat)
        return (make_header_batch(t.n_bits, t.target_value, t.n_samples, tr_seed,
                                  t.image_side, levels),
                make_header_batch(t.n_bits, t.target_value, t.n_samples, te_seed,
                                  t.image_side, levels))
    t = cfg.task
    if digit is None:
        digit = t.digit if t.digit is not None else 0
    if _cache is not None and "parts" in _cache:
        train_part, test_part = _cache["parts"]
    else:
        train_part, test_part = _load_partitions(t)
        if _cache is not None:
            _cache["parts"] = (train_part, test_part)
    seed = derive_seed(cfg.train.seed, f"batch-d{digit}", repeat)
    side = cfg.substrate.input_side
    train_batch = make_onevsall_batch(train_part, digit, t.n_samples, seed, draw=0,
                                      input_side=side, target_levels=levels)
    if test_part is not None:
        test_batch = make_onevsall_batch(test_part, digit, t.n_samples,
                                         derive_seed(cfg.train.seed, f"batch-test-d{digit}", repeat),
                                         draw=0, input_side=side, target_levels=levels)
    else:
        test_batch = make_onevsall_batch(train_part, digit, t.n_samples, seed, draw=1,
                                         input_side=side, target_levels=levels)
    return train_batch, test_batch


# ---------------------------------------------------------------------------
# Metrics helpers

def consistency(reference, trace) -> float:
    """Pearson correlation between an output trace and the reference trace
    of the same inputs. Identical traces are exactly 1.0."""
    a = np.asarray(reference, dtype=float)
    b = np.asarray(trace, dtype=float)
    if a.shape != b.shape or a.ndim != 1 or a.size < 2:
        raise UsageError(f"traces must be equal-length vectors of >= 2 samples, "
                         f"got {a.shape} / {b.shape}")
    if np.array_equal(a, b):
        return 1.0
    sa, sb = a.std(), b.std()
    if sa == 0.0 or sb == 0.0:
        raise UsageError("consistency is undefined for a constant trace")
    ac, bc = a - a.mean(), b - b.mean()
    return float((ac @ bc) / (np.linalg.norm(ac) * np.linalg.norm(bc)))


def epochs_to_convergence(result: TrainResult) -> int:
    """First epoch whose best error is within 5% of the run's final
    improvement (0 when the run never improved)."""
    improvement = result.initial_nmse - result.final_nmse
    if not improvement > 0:
        return 0
    level = result.final_nmse + 0.05 * improvement
    for rec in result.history:
        if rec.nmse_best <= level:
            return rec.epoch
    return result.history[-1].epoch


# ---------------------------------------------------------------------------
# Experiment drivers

def _train_and_score(rig_train: BatchReadout, rig_test: BatchReadout,
                     targets_train, targets_test, cfg: TrainConfig) -> tuple[TrainResult, Metrics, Metrics]:
    result = train(rig_train, targets_train, cfg, n_nodes=rig_train.n_nodes)
    m_train = evaluate(rig_train, result.best_mask, targets_train, "midpoint",
                       cfg.normalize, result.output_transform)
    m_test = evaluate(rig_test, result.best_mask, targets_test, m_train.threshold,
                      cfg.normalize, result.output_transform)
    return result, m_train, m_test


def run_comparison(cfg: ExperimentConfig, digits=None) -> list[dict]:
    """Four-arm comparison: Boolean mask + laser on, ternary + on, ternary +
    off, and the ridge baseline, all on the same frozen substrate and
    batches per repeat. Returns one result row per (task, arm, repeat)."""
    cfg.validate()
    if digits is None:
        if isinstance(cfg.task, MnistTask):
            digits = list(range(10)) if cfg.task.digit is None else [cfg.task.digit]
        else:
            digits = [None]
    cache: dict = {}
    rows: list[dict] = []
    out = _OutputSink(cfg)
    for repeat in range(cfg.repeats):
        sub_seed = derive_seed(cfg.substrate.seed, "substrate", repeat)
        on_cfg = SubstrateConfig(**{**asdict(cfg.substrate), "vcsel_on": True, "seed": sub_seed})
        off_cfg = SubstrateConfig(**{**asdict(cfg.substrate), "vcsel_on": False, "seed": sub_seed})
        sub_on = build_substrate(on_cfg)
        sub_off = build_substrate(off_cfg)
        for digit in digits:
            task_name = "header" if digit is None else f"digit{digit}"
            batch_tr, batch_te = make_task_batches(cfg, repeat, digit, _cache=cache)
            arms = _comparison_arms(cfg, repeat, digit, sub_on, sub_off,
                                    batch_tr, batch_te)
            for arm_name, row, result, mask in arms:
                row.update(task=task_name, arm=arm_name, repeat=repeat)
                rows.append(row)
                tag = f"{arm_name}_{task_name}_s{repeat}"
                if result is not None:
                    out.write_history(tag, result)
                if mask is not None:
                    out.write_mask(tag, mask, cfg.substrate.grid_side)
    out.write_results(rows)
    out.write_config(cfg)
    return rows


def _comparison_arms(cfg, repeat, digit, sub_on, sub_off, batch_tr, batch_te):
    """Train/evaluate the four arms on shared batches; yields
    (arm, row, result, mask) tuples."""
    t_tr, t_te = batch_tr.targets, batch_te.targets
    tag = "" if digit is None else f"-d{digit}"
    produced = []

    def det_for(arm):
        return DetectorModel(cfg.substrate.noise_sigma,
                             seed=derive_seed(cfg.train.seed, f"det-{arm}{tag}", repeat))

    def train_cfg(mode, arm):
        return TrainConfig(alpha=cfg.train.alpha, max_epochs=cfg.train.max_epochs,
                           mode=mode, seed=derive_seed(cfg.train.seed, f"train-{arm}{tag}", repeat),
                           target_levels=cfg.train.target_levels,
                           patience=cfg.train.patience, normalize=cfg.train.normalize)

    # states are deterministic, so each arm pair shares one computation
    states_on_tr = states_matrix(forward_batch(sub_on, batch_tr.patterns))
    states_on_te = states_matrix(forward_batch(sub_on, batch_te.patterns))
    sbar = float(states_on_tr.sum(axis=1).mean())  # calibrated once, lasing config

    for arm, mode in (("boolean_on", "boolean"), ("ternary_on", "ternary")):
        det = det_for(arm)
        det.noise_scale = sbar
        rig_tr = BatchReadout(sub_on, detector=det, states=states_on_tr)
        rig_te = BatchReadout(sub_on, detector=det, states=states_on_te)
        res, m_tr, m_te = _train_and_score(rig_tr, rig_te, t_tr, t_te,
                                           train_cfg(mode, arm))
        produced.append((arm, _row(res, m_tr, m_te), res, res.best_mask))

    # laser off: same optics, faint detected signal, same detector calibration
    det_o = det_for("ternary_off")
    det_o.noise_scale = sbar
    states_off_tr = states_matrix(forward_batch(sub_off, batch_tr.patterns))
    states_off_te = states_matrix(forward_batch(sub_off, batch_te.patterns))
    bright = cfg.off_brightness * sbar / float(states_off_tr.sum(axis=1).mean())
    rig_o_tr = BatchReadout(sub_off, detector=det_o, states=states_off_tr, brightness=bright)
    rig_o_te = BatchReadout(sub_off, detector=det_o, states=states_off_te, brightness=bright)
    res, m_tr, m_te = _train_and_score(rig_o_tr, rig_o_te, t_tr, t_te,
                                       train_cfg("ternary", "ternary_off"))
    produced.append(("ternary_off", _row(res, m_tr, m_te), res, res.best_mask))

    # digital reference: ridge regression on the noiseless lasing states
    lam = lambda_sweep(states_on_tr, t_tr, cfg.ridge_grid)
    model = ridge_fit(states_on_tr, t_tr, lam)
    m_tr = ridge_eval(model, states_on_tr, t_tr, "midpoint")
    m_te = ridge_eval(model, states_on_te, t_te, m_tr.threshold)
    row = _row(None, m_tr, m_te)
    row["lambda"] = lam
    produced.append(("ridge", row, None, None))
    return produced


def _row(result: TrainResult | None, m_train: Metrics, m_test: Metrics) -> dict:
    return {
        "train_nmse": m_train.nmse, "test_nmse": m_test.nmse,
        "train_accuracy": m_train.accuracy, "test_accuracy": m_test.accuracy,
        "test_ser": m_test.ser, "threshold": m_train.threshold,
        "epochs_run": len(result.history) if result else 0,
        "n_accepted": result.n_accepted if result else 0,
    }


def run_alpha_scan(cfg: ExperimentConfig, alphas=None) -> list[dict]:
    """Train at each mutation gain over ``repeats`` seeds, recording full
    learning curves and the epochs-to-convergence summary."""
    cfg.validate()
    alphas = list(cfg.alphas if alphas is None else alphas)
    if not alphas:
        raise UsageError("alphas must be non-empty")
    cache: dict = {}
    rows, curves = [], []
    out = _OutputSink(cfg)
    for repeat in range(cfg.repeats):
        sub_seed = derive_seed(cfg.substrate.seed, "substrate", repeat)
        sub = build_substrate(SubstrateConfig(**{**asdict(cfg.substrate), "seed": sub_seed}))
        batch_tr, batch_te = make_task_batches(cfg, repeat, _cache=cache)
        for alpha in alphas:
            det = DetectorModel(cfg.substrate.noise_sigma,
                                seed=derive_seed(cfg.train.seed, f"det-a{alpha}", repeat))
            rig_tr = BatchReadout(sub, batch_tr.patterns, det)
            det.noise_scale = rig_tr.mean_power
            rig_te = BatchReadout(sub, batch_te.patterns, det)
            tc = TrainConfig(alpha=float(alpha), max_epochs=cfg.train.max_epochs,
                             mode=cfg.train.mode,
                             seed=derive_seed(cfg.train.seed, f"train-a{alpha}", repeat),
                             target_levels=cfg.train.target_levels,
                             patience=cfg.train.patience, normalize=cfg.train.normalize)
            result, m_tr, m_te = _train_and_score(rig_tr, rig_te,
                                                  batch_tr.targets, batch_te.targets, tc)
            rows.append({
                "alpha": float(alpha), "repeat": repeat,
                "final_nmse": result.final_nmse, "initial_nmse": result.initial_nmse,
                "epochs_to_convergence": epochs_to_convergence(result),
                "test_accuracy": m_te.accuracy, "test_ser": m_te.ser,
                "mean_n_mirrors": float(np.mean([r.n_mirrors for r in result.history])),
            })
            for rec in result.history:
                curves.append({"alpha": float(alpha), "seed": tc.seed,
                               "epoch": rec.epoch, "nmse_best": rec.nmse_best})
    out.write_curves(curves)
    out.write_alpha_summary(rows)
    out.write_config(cfg)
    return rows


def run_header_task(cfg: ExperimentConfig) -> list[dict]:
    """Train on the header batch and report the symbol error rate on a
    disjoint test batch, once per repeat."""
    cfg.validate()
    if not isinstance(cfg.task, HeaderTask):
        raise ConfigError("run_header_task needs a header task config")
    rows = []
    out = _OutputSink(cfg)
    for repeat in range(cfg.repeats):
        sub_seed = derive_seed(cfg.substrate.seed, "substrate", repeat)
        sub = build_substrate(SubstrateConfig(**{**asdict(cfg.substrate), "seed": sub_seed}))
        batch_tr, batch_te = make_task_batches(cfg, repeat)
        det = DetectorModel(cfg.substrate.noise_sigma,
                            seed=derive_seed(cfg.train.seed, "det", repeat))
        rig_tr = BatchReadout(sub, batch_tr.patterns, det)
        det.noise_scale = rig_tr.mean_power
        rig_te = BatchReadout(sub, batch_te.patterns, det)
        tc = TrainConfig(alpha=cfg.train.alpha, max_epochs=cfg.train.max_epochs,
                         mode=cfg.train.mode, seed=derive_seed(cfg.train.seed, "train", repeat),
                         target_levels=cfg.train.target_levels,
                         patience=cfg.train.patience, normalize=cfg.train.normalize)
        result, m_tr, m_te = _train_and_score(rig_tr, rig_te,
                                              batch_tr.targets, batch_te.targets, tc)
        rows.append({"task": f"header{cfg.task.n_bits}b", "arm": cfg.train.mode,
                     "repeat": repeat, **_row(result, m_tr, m_te)})
        tag = f"header_s{repeat}"
        out.write_history(tag, result)
        out.write_mask(tag, result.best_mask, cfg.substrate.grid_side)
    out.write_results(rows)
    out.write_config(cfg)
    return rows


@dataclass(frozen=True)
class StabilityReport:
    """Re-measurement record of a frozen mask under drift and noise."""

    reference_trace: np.ndarray
    traces: list[np.ndarray]
    consistencies: np.ndarray
    nmse_series: np.ndarray
    gain_series: np.ndarray


def run_stability(cfg: ExperimentConfig, n_checks: int = 3600,
                  drift_steps_per_check: int = 1) -> StabilityReport:
    """Train to convergence, freeze the mask, then repeatedly advance the
    substrate drift and re-measure the full test-batch trace; consistency is
    each trace's Pearson correlation with the first."""
    cfg.validate()
    if n_checks < 2:
        raise UsageError(f"n_checks must be >= 2, got {n_checks}")
    if drift_steps_per_check < 0:
        raise UsageError(f"drift_steps_per_check must be >= 0, got {drift_steps_per_check}")
    sub_seed = derive_seed(cfg.substrate.seed, "substrate", 0)
    sub = build_substrate(SubstrateConfig(**{**asdict(cfg.substrate), "seed": sub_seed}))
    batch_tr, batch_te = make_task_batches(cfg, 0)
    det = DetectorModel(cfg.substrate.noise_sigma, seed=derive_seed(cfg.train.seed, "det", 0))
    rig_tr = BatchReadout(sub, batch_tr.patterns, det)
    det.noise_scale = rig_tr.mean_power
    rig_te = BatchReadout(sub, batch_te.patterns, det)
    tc = TrainConfig(alpha=cfg.train.alpha, max_epochs=cfg.train.max_epochs,
                     mode=cfg.train.mode, seed=derive_seed(cfg.train.seed, "train", 0),
                     target_levels=cfg.train.target_levels,
                     patience=cfg.train.patience, normalize=cfg.train.normalize)
    result = train(rig_tr, batch_tr.targets, tc, n_nodes=rig_tr.n_nodes)
    mask = result.best_mask

    norm = _Normalizer(cfg.train.normalize, batch_te.targets)
    traces, gains, errs = [], [], []
    for _ in range(n_checks):
        advance_drift(sub, drift_steps_per_check)
        trace = rig_te.measure(mask)
        if not traces and cfg.train.normalize == "first_epoch":
            norm.fit_first(trace)
        traces.append(trace)
        gains.append(sub.gain)
        errs.append(nmse(norm(trace), batch_te.targets))
    reference = traces[0]
    cons = np.array([consistency(reference, tr) for tr in traces])
    report = StabilityReport(reference_trace=reference, traces=traces,
                             consistencies=cons, nmse_series=np.array(errs),
                             gain_series=np.array(gains))
    out = _OutputSink(cfg)
    out.write_stability(report)
    out.write_config(cfg)
    return report


# ---------------------------------------------------------------------------
# Persistence

class _OutputSink:
    """Writes result files under the config's output directory; inert when
    no directory is configured."""

    def __init__(self, cfg: ExperimentConfig):
        self.root = Path(cfg.output_dir) if cfg.output_dir else None
        if self.root:
            self.root.mkdir(parents=True, exist_ok=True)

    def _csv(self, name: str, schema: str, columns: list[str], rows: list[dict]) -> None:
        if not self.root:
            return
        lines = [f"# schema: {schema}", ",".join(columns)]
        for r in rows:
            lines.append(",".join(_cell(r.get(c)) for c in columns))
        (self.root / name).write_text("\n".join(lines) + "\n")

    def write_results(self, rows: list[dict]) -> None:
        if not self.root or not rows:
            return
        columns = ["task", "arm", "repeat", "train_nmse", "test_nmse",
                   "train_accuracy", "test_accuracy", "test_ser", "threshold",
                   "epochs_run", "n_accepted", "lambda"]
        summary = []
        for task in sorted({r["task"] for r in rows}):
            for arm in sorted({r["arm"] for r in rows if r["task"] == task}):
                sel = [r["test_accuracy"] for r in rows
                       if r["task"] == task and r["arm"] == arm]
                summary.append({"task": task, "arm": arm, "repeat": "mean",
                                "test_accuracy": float(np.mean(sel))})
                summary.append({"task": task, "arm": arm, "repeat": "median",
                                "test_accuracy": float(np.median(sel))})
        self._csv("results.csv", RESULTS_SCHEMA, columns, rows + summary)

    def write_curves(self, curves: list[dict]) -> None:
        self._csv("curves.csv", CURVES_SCHEMA, ["alpha", "seed", "epoch", "nmse_best"], curves)

    def write_alpha_summary(self, rows: list[dict]) -> None:
        self._csv("alpha_summary.csv", RESULTS_SCHEMA,
                  ["alpha", "repeat", "final_nmse", "initial_nmse",
                   "epochs_to_convergence", "test_accuracy", "test_ser",
                   "mean_n_mirrors"], rows)

    def write_stability(self, report: StabilityReport) -> None:
        rows = [{"check": i, "consistency": float(c), "nmse": float(e), "gain": float(g)}
                for i, (c, e, g) in enumerate(zip(report.consistencies,
                                                  report.nmse_series, report.gain_series))]
        self._csv("stability.csv", RESULTS_SCHEMA,
                  ["check", "consistency", "nmse", "gain"], rows)

    def write_history(self, tag: str, result: TrainResult) -> None:
        if not self.root:
            return
        from .optimizer import history_to_csv
        (self.root / f"history_{tag}.csv").write_text(history_to_csv(result))

    def write_mask(self, tag: str, mask: TernaryMask, grid_side: int) -> None:
        if not self.root:
            return
        (self.root / f"mask_{tag}.json").write_text(mask_to_json(mask, grid_side))

    def write_config(self, cfg: ExperimentConfig) -> None:
        if not self.root:
            return
        doc = cfg.to_json_dict()
        doc["derived_seeds"] = {
            f"repeat{r}": {"substrate": derive_seed(cfg.substrate.seed, "substrate", r)}
            for r in range(cfg.repeats)}
        (self.root / "config.resolved.json").write_text(
            json.dumps(doc, sort_keys=True, indent=2) + "\n")


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)
