"""Parameter-grid sweeps of winding numbers, persisted as resumable JSON lines."""

from __future__ import annotations

import itertools
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable

from .contour import RefinementExhausted, ZeroOnContour, build_semicircle, evans_winding
from .kato import StepTooLarge
from .limits import hf_radius
from .params import DomainError, PhysicalParams, classify_shock
from .profile import ProfileConvergenceError
from .shooting import EvansFunction, IntegrationFailure
from .system import SplitFailure

WORKERS_ENV = "MHD_EVANS_WORKERS"
FSYNC_BATCH = 16
MIN_RADIUS = 1.05
AXES = ("gamma", "v_plus", "b1", "mu0", "sigma")
KEY_LETTERS = dict(zip(AXES, "gvbms"))

NUMERICAL_ERRORS = (SplitFailure, StepTooLarge, IntegrationFailure, ZeroOnContour, RefinementExhausted,
                    ProfileConvergenceError, DomainError, ArithmeticError)

DESK_GRID = {
    "gamma": [1.0, 5 / 3, 3.0],
    "v_plus": [0.8, 1e-2, 1e-5],
    "b1": [0.2, 2.0, 3.8],
    "mu0": [0.2, 3.8],
    "sigma": [0.2, 3.8],
}


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def tuple_key(values: dict) -> str:
    """Canonical key ``g=..,v=..,b=..,m=..,s=..`` with shortest round-trip floats."""
    return ",".join(f"{KEY_LETTERS[a]}={float(values[a])!r}" for a in AXES)


@dataclass(frozen=True)
class SweepSpec:
    axes: dict
    output_path: str
    n_points: int = 120
    radius: str | float = "auto"
    workers: int = field(default_factory=default_workers)
    variant: str = "check"
    record_timing: bool = False

    def __post_init__(self):
        missing = [a for a in AXES if a not in self.axes]
        if missing:
            raise ValueError(f"missing axes: {missing}")
        if self.radius != "auto" and not float(self.radius) > 0:
            raise ValueError("radius must be 'auto' or a positive number")

    def tuples(self) -> list[dict]:
        return [dict(zip(AXES, combo)) for combo in itertools.product(*(self.axes[a] for a in AXES))]

    def radius_for(self, params: PhysicalParams) -> float:
        if self.radius == "auto":
            return max(hf_radius(params).radius, MIN_RADIUS)
        return float(self.radius)


@dataclass(frozen=True)
class SweepRecord:
    key: str
    shock_type: str
    radius: float
    winding: int | None
    max_arg_step: float | None
    n_evals: int
    status: str
    wall_time: float | None = None

    def to_json(self, timing: bool = False) -> str:
        d = asdict(self)
        if not timing:
            d.pop("wall_time")
        return json.dumps(d, sort_keys=True)


@dataclass
class SweepSummary:
    total: int = 0
    computed: int = 0
    skipped: int = 0
    windings: dict = field(default_factory=dict)
    statuses: dict = field(default_factory=dict)

    def add(self, rec: dict):
        w = rec.get("winding")
        self.windings[str(w)] = self.windings.get(str(w), 0) + 1
        self.statuses[rec["status"]] = self.statuses.get(rec["status"], 0) + 1


def evaluate_tuple(values: dict, n_points: int = 120, radius="auto", variant: str = "check") -> SweepRecord:
    """Winding number for one parameter tuple; numerical failures become error records."""
    key = tuple_key(values)
    t0 = time.perf_counter()
    shock, rad, n_evals = "unknown", float("nan"), 0
    try:
        params = PhysicalParams(**{a: float(values[a]) for a in AXES})
        st = classify_shock(params)
        shock = str(st)
        rad = SweepSpec({a: [] for a in AXES}, "", radius=radius).radius_for(params)
        fn = EvansFunction(params, anchor=rad)
        res = evans_winding(fn, build_semicircle(rad, n_points), variant)
        return SweepRecord(key, shock, rad, res.winding, res.max_arg_step, fn.n_evals, "ok",
                           time.perf_counter() - t0)
    except NUMERICAL_ERRORS as exc:
        return SweepRecord(key, shock, rad, None, None, n_evals, f"error:{type(exc).__name__}",
                           time.perf_counter() - t0)


def _evaluate_star(args):
    return evaluate_tuple(*args)


def read_records(path: str | Path) -> dict[str, dict]:
    """Records already on disk, keyed; a torn final line (interrupted write) is ignored."""
    out = {}
    p = Path(path)
    if not p.exists():
        return out
    with open(p, encoding="utf-8") as fh:
        for line in fh:
            try:
                rec = json.loads(line)
            except json.JSONDecodeError:
                continue
            if isinstance(rec, dict) and "key" in rec:
                out[rec["key"]] = rec
    return out


def _truncate_torn_tail(path: Path):
    """Drop a partial last line so appends start on a fresh line."""
    if not path.exists() or path.stat().st_size == 0:
        return
    with open(path, "rb+") as fh:
        data = fh.read()
        if data.endswith(b"\n"):
            return
        cut = data.rfind(b"\n") + 1
        fh.truncate(cut)


def run_sweep(spec: SweepSpec, progress=None) -> SweepSummary:
    """Compute every tuple not yet in ``spec.output_path``; append one JSON line each."""
    path = Path(spec.output_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    _truncate_torn_tail(path)
    done = read_records(path)
    todo = [t for t in spec.tuples() if tuple_key(t) not in done]
    summary = SweepSummary(total=len(spec.tuples()), skipped=len(spec.tuples()) - len(todo))
    for t in spec.tuples():
        k = tuple_key(t)
        if k in done:
            summary.add(done[k])
    jobs = [(t, spec.n_points, spec.radius, spec.variant) for t in todo]
    with open(path, "a", encoding="utf-8") as fh:
        pending = 0

        def write(rec: SweepRecord):
            nonlocal pending
            fh.write(rec.to_json(spec.record_timing) + "\n")
            pending += 1
            if pending >= FSYNC_BATCH:
                fh.flush()
                os.fsync(fh.fileno())
                pending = 0
            summary.computed += 1
            summary.add(json.loads(rec.to_json()))
            if progress is not None:
                progress(rec)

        if spec.workers <= 1 or len(jobs) <= 1:
            for job in jobs:
                write(_evaluate_star(job))
        else:
            with ProcessPoolExecutor(max_workers=spec.workers) as pool:
                for rec in pool.map(_evaluate_star, jobs):
                    write(rec)
        fh.flush()
        os.fsync(fh.fileno())
    return summary


def parse_axis(text: str) -> list[float]:
    """Comma-separated numbers; fractions such as ``5/3`` are accepted."""
    return [parse_number(tok) for tok in text.split(",") if tok.strip()]


def parse_number(text: str) -> float:
    text = text.strip()
    try:
        return float(text)
    except ValueError:
        return float(Fraction(text))


def sorted_lines(path: str | Path) -> list[str]:
    """Record lines sorted by key, for comparing sweep outputs."""
    recs = read_records(path)
    return [json.dumps(recs[k], sort_keys=True) for k in sorted(recs)]


def desk_spec(output_path: str, **kw) -> SweepSpec:
    return SweepSpec(dict(DESK_GRID), output_path, **kw)


def iter_keys(spec: SweepSpec) -> Iterable[str]:
    return (tuple_key(t) for t in spec.tuples())
