"""Pentagon in/out test set, truth oracle and k/c error-ratio statistics.

A problem is ``out^n(in^n(P))`` for the parametric pentagon
``{(0,0), (1,0), (1+d,1), (1,1+d), (0,1)}`` placed at one of three locations.
Its exact answer is P itself, so every one of the 10 output coordinates has a
known true value and a true error ``e = true - x`` to compare with the
estimate ``ee``.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .fpe import EEConfig, Fpe, fpe_literal
from .geometry import EXACT_MODE, DegenerateGeometryError, Pentagon, Point2, iterate
from .softfp import SoftFloatError, round_fraction, to_report

log = logging.getLogger(__name__)

PI_TEXT = "3.14159265358979323846264338327950288419716939937510582097494459"
SQRT2_TEXT = "1.41421356237309504880168872420969807856967187537694807317667973"

LOCATIONS = {
    "origin": ("0", "0"),
    "minus11": ("-1", "-1"),
    "pi_sqrt2": (PI_TEXT, SQRT2_TEXT),
}
DELTA_RANGES = {1: "0.001", 2: "0.01", 3: "0.1"}
DEFAULT_THRESHOLDS = (1e-5, 1e-4, 1e-3, 1e-2, 1e-1)
RATIO_INTERVAL = (0.0, 2.0)
HIST_BINS = 60
_DELTA_STEPS = 10**12

# Problems are only discarded when a determinant is exactly zero, so badly
# conditioned ones still reach the ill-conditioned bucket.
HARNESS_MODE = EXACT_MODE

CSV_HEADER = ("problem_id", "coord", "depth", "location", "delta", "x", "ee", "re_m", "e", "k", "c")


@dataclass(frozen=True)
class ProblemSpec:
    problem_id: int
    depth: int
    location: str
    delta: str
    seed: int

    def vertex_texts(self) -> list[tuple[str, str]]:
        """Exact decimal text of the translated vertices."""
        return pentagon_texts(self.delta, self.location)


def pentagon_texts(delta: str, location: str = "origin") -> list[tuple[str, str]]:
    dx, dy = LOCATIONS[location]
    with localcontext() as ctx:
        ctx.prec = 200
        d = Decimal(delta)
        base = [(0, 0), (1, 0), (1 + d, 1), (1, 1 + d), (0, 1)]
        return [(str(Decimal(x) + Decimal(dx)), str(Decimal(y) + Decimal(dy))) for x, y in base]


def gen_test_set(seed: int, per_depth: int = 100, depths: Sequence[int] = (1, 2, 3),
                 locations: Sequence[str] = tuple(LOCATIONS)) -> list[ProblemSpec]:
    """``per_depth`` random deltas per depth, each run at every location.

    Delta is uniform on the depth's range, drawn on a 10**-12 grid and never
    zero; the draw for (seed, depth, i) does not depend on ``per_depth``.
    """
    if per_depth < 1:
        raise ValueError("per_depth must be >= 1")
    deltas = {}
    for depth in depths:
        if depth not in DELTA_RANGES:
            raise ValueError(f"depth must be one of {sorted(DELTA_RANGES)}, got {depth}")
        rng = np.random.default_rng([seed, depth])
        steps = rng.integers(1, _DELTA_STEPS, size=per_depth, endpoint=True)
        with localcontext() as ctx:
            ctx.prec = 50
            top = Decimal(DELTA_RANGES[depth])
            deltas[depth] = [str((top * int(n) / _DELTA_STEPS).normalize()) for n in steps]
    specs = []
    for location in locations:
        if location not in LOCATIONS:
            raise ValueError(f"unknown location {location!r}")
        for depth in depths:
            for delta in deltas[depth]:
                specs.append(ProblemSpec(len(specs), depth, location, delta, seed))
    return specs


class OracleValue(NamedTuple):
    true: Fraction
    computed: Fpe
    e: Fraction


def build_pentagon(spec: ProblemSpec, cfg: EEConfig) -> Pentagon:
    return Pentagon(Point2(fpe_literal(x, cfg), fpe_literal(y, cfg)) for x, y in spec.vertex_texts())


def reference_result(spec: ProblemSpec, bits: int, mode: str = HARNESS_MODE) -> list[Fraction]:
    """Run the same iteration in plain ``bits``-bit arithmetic from the
    literals rounded at that precision."""
    P = Pentagon(
        Point2(round_fraction(Fraction(x), bits), round_fraction(Fraction(y), bits))
        for x, y in spec.vertex_texts()
    )
    return [c.to_fraction() for c in iterate(P, spec.depth, mode).coordinates()]


def oracle_eval(spec: ProblemSpec, cfg: EEConfig, mode: str = HARNESS_MODE, method: str = "identity",
                computed: Sequence[Fpe] | None = None) -> list[OracleValue]:
    """True value and true error for each of the 10 output coordinates.

    ``identity`` takes the exact answer ``out^n(in^n(P)) = P``; ``pipeline``
    repeats the iteration at 4T bits. Raises DegenerateGeometryError when the
    computed or reference iteration breaks down.
    """
    if computed is None:
        computed = iterate(build_pentagon(spec, cfg), spec.depth, mode).coordinates()
    if method == "identity":
        truths = [Fraction(c) for xy in spec.vertex_texts() for c in xy]
    elif method == "pipeline":
        truths = reference_result(spec, 4 * cfg.t_bits, mode)
    else:
        raise ValueError(f"unknown oracle method {method!r}")
    out = []
    for true, value in zip(truths, computed):
        out.append(OracleValue(true, value, true - value.x.to_fraction()))
    return out


def compute_k(e: float, ee: float) -> float:
    """``e / ee``; 1 when both vanish, signed infinity when only ee does."""
    if ee == 0:
        if e == 0:
            return 1.0
        return math.copysign(math.inf, e)
    return e / ee


def compute_c(e: float, ee: float, qeps: float) -> float:
    """``e / (sign(ee) * (|ee| + qeps))`` with sign(0) = +1."""
    ce = abs(ee) + qeps
    return e / (-ce if ee < 0 else ce)


@dataclass(frozen=True)
class KcSample:
    """One output coordinate. Texts are exact decimals, floats round-trip via repr."""

    problem_id: int
    coord: int
    depth: int
    location: str
    delta: str
    x: str
    ee: str
    re_m: float
    e: str
    k: float
    c: float

    @property
    def e_value(self) -> float:
        return float(Fraction(self.e))

    @property
    def ee_value(self) -> float:
        return float(Fraction(self.ee))

    def row(self) -> list[str]:
        return [str(self.problem_id), str(self.coord), str(self.depth), self.location, self.delta,
                self.x, self.ee, repr(self.re_m), self.e, repr(self.k), repr(self.c)]

    @classmethod
    def from_row(cls, row: dict) -> KcSample:
        return cls(int(row["problem_id"]), int(row["coord"]), int(row["depth"]), row["location"], row["delta"],
                   row["x"], row["ee"], float(row["re_m"]), row["e"], float(row["k"]), float(row["c"]))


def _fraction_text(value: Fraction) -> str:
    """Exact decimal text of a terminating rational."""
    if value.denominator == 1:
        return str(value.numerator)
    d = value.denominator
    twos = (d & -d).bit_length() - 1
    rest = d >> twos
    fives = 0
    while rest % 5 == 0:
        rest //= 5
        fives += 1
    if rest != 1:
        return str(value)
    digits = max(twos, fives)
    with localcontext() as ctx:
        ctx.prec = len(str(abs(value.numerator))) + digits + 5
        text = format(Decimal(value.numerator) / Decimal(value.denominator), "f")
    return text.rstrip("0").rstrip(".") if "." in text else text


@dataclass
class ProblemResult:
    spec: ProblemSpec
    samples: list[KcSample]
    failure: str | None = None
    n_signals: int = 0


def run_problem(spec: ProblemSpec, cfg: EEConfig, mode: str = HARNESS_MODE, oracle: str = "identity") -> ProblemResult:
    signals: list = []
    try:
        result = iterate(build_pentagon(spec, cfg), spec.depth, mode, signals)
        values = oracle_eval(spec, cfg, mode, oracle, computed=result.coordinates())
    except (DegenerateGeometryError, ZeroDivisionError, SoftFloatError) as exc:
        log.info("problem %d (depth %d, %s, delta=%s) discarded: %s",
                 spec.problem_id, spec.depth, spec.location, spec.delta, exc)
        return ProblemResult(spec, [], f"{type(exc).__name__}: {exc}", len(signals))
    samples = []
    for coord, ov in enumerate(values):
        value = ov.computed
        e = float(ov.e)
        ee = float(value.ee)
        samples.append(KcSample(
            spec.problem_id, coord, spec.depth, spec.location, spec.delta,
            to_report(value.x), to_report(value.ee), value.re_m, _fraction_text(ov.e),
            compute_k(e, ee), compute_c(e, ee, cfg.qeps),
        ))
    return ProblemResult(spec, samples, None, len(signals))


def _run_one(args):
    return run_problem(*args)


def worker_count() -> int:
    raw = os.environ.get("ERRFLOAT_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            log.warning("ignoring non-integer ERRFLOAT_THREADS=%r", raw)
    return os.cpu_count() or 1


@dataclass
class ExperimentRun:
    cfg: EEConfig
    results: list[ProblemResult]

    @property
    def samples(self) -> list[KcSample]:
        return [s for r in self.results for s in r.samples]

    @property
    def failures(self) -> list[ProblemResult]:
        return [r for r in self.results if r.failure]


def run_experiment(specs: Sequence[ProblemSpec], cfg: EEConfig, mode: str = HARNESS_MODE,
                   oracle: str = "identity", workers: int | None = None) -> ExperimentRun:
    """Evaluate every problem; results keep the order of ``specs``."""
    workers = workers or worker_count()
    jobs = [(spec, cfg, mode, oracle) for spec in specs]
    if workers <= 1 or len(jobs) < 2:
        results = [_run_one(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    return ExperimentRun(cfg, results)


# ---------------------------------------------------------------- statistics


@dataclass
class Histogram:
    scale: str
    edges: list[float]
    counts: list[int]


def _scale_values(values, scale: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if scale == "linear":
        return arr
    if scale == "cubic":
        return np.cbrt(arr)
    raise ValueError(f"scale must be 'linear' or 'cubic', got {scale!r}")


def histogram(values: Iterable[float], scale: str = "linear", bins: int = HIST_BINS,
              value_range: tuple[float, float] | None = None) -> Histogram:
    """Uniform bins over the scaled values; cubic maps v to sign(v)*|v|**(1/3).

    ``value_range`` and the returned edges are in scaled coordinates.
    """
    if bins < 1:
        raise ValueError("bins must be >= 1")
    mapped = _scale_values([v for v in values if math.isfinite(v)], scale)
    if value_range is None:
        if mapped.size:
            lo, hi = float(mapped.min()), float(mapped.max())
        else:
            lo, hi = 0.0, 1.0
        if lo == hi:
            lo, hi = lo - 0.5, hi + 0.5
        value_range = (lo, hi)
    counts, edges = np.histogram(mapped, bins=bins, range=value_range)
    return Histogram(scale, [float(e) for e in edges], [int(c) for c in counts])


def wilson_interval(successes: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    p = successes / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == n else min(1.0, centre + half)
    return lo, hi


@dataclass
class RatioStats:
    """Moments of the finite values plus the out-of-interval frequency
    (infinite values count as outside)."""

    n: int
    n_infinite: int
    mean: float | None
    std: float | None
    min: float | None
    max: float | None
    spread: float | None
    n_outside: int
    frac_outside: float | None
    frac_outside_lo: float
    frac_outside_hi: float

    @classmethod
    def of(cls, values: Sequence[float], interval: tuple[float, float] = RATIO_INTERVAL) -> RatioStats:
        finite = np.array([v for v in values if math.isfinite(v)], dtype=float)
        n = len(values)
        n_inf = n - finite.size
        lo, hi = interval
        outside = n_inf + int(np.count_nonzero((finite < lo) | (finite > hi)))
        if finite.size:
            vmin, vmax = float(finite.min()), float(finite.max())
            mean = float(finite.mean())
            std = float(finite.std(ddof=1)) if finite.size > 1 else None
        else:
            vmin = vmax = mean = std = None
        w_lo, w_hi = wilson_interval(outside, n)
        return cls(n, n_inf, mean, std, vmin, vmax, None if vmin is None else vmax - vmin,
                   outside, outside / n if n else None, w_lo, w_hi)


@dataclass
class ExactStats:
    """Samples whose true error is exactly zero; ``|ee|`` measured in EPS."""

    n: int
    n_ee_zero: int
    max_abs_ee_over_eps: float | None
    mean_abs_ee_over_eps: float | None


@dataclass
class BucketStats:
    n_problems: int
    n_samples: int
    k: RatioStats
    c: RatioStats
    coverage_k: float | None
    coverage_c: float | None
    exact: ExactStats
    k_hist: Histogram
    c_hist: Histogram


@dataclass
class ThresholdBucket:
    threshold: float
    eps: float
    constrained: BucketStats
    ill: BucketStats


@dataclass
class StatsSummary:
    te_bits: int
    rthd: float
    config: dict
    n_problems: int
    n_failed: int
    n_samples: int
    alpha: float | None
    beta: float | None
    c_k: float | None
    c_c: float | None
    buckets: list[ThresholdBucket] = field(default_factory=list)

    def bucket(self, threshold: float) -> ThresholdBucket:
        for b in self.buckets:
            if b.threshold == threshold:
                return b
        raise KeyError(threshold)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> StatsSummary:
        def bucket_stats(b):
            return BucketStats(
                b["n_problems"], b["n_samples"], RatioStats(**b["k"]), RatioStats(**b["c"]),
                b["coverage_k"], b["coverage_c"], ExactStats(**b["exact"]),
                Histogram(**b["k_hist"]), Histogram(**b["c_hist"]),
            )

        buckets = [ThresholdBucket(b["threshold"], b["eps"], bucket_stats(b["constrained"]), bucket_stats(b["ill"]))
                   for b in d["buckets"]]
        rest = {k: v for k, v in d.items() if k != "buckets"}
        return cls(**rest, buckets=buckets)

    @classmethod
    def from_json(cls, text: str) -> StatsSummary:
        return cls.from_dict(json.loads(text))


def _in_interval(e: Fraction, scale: Fraction, lo: Fraction, hi: Fraction) -> bool:
    a, b = lo * scale, hi * scale
    if a > b:
        a, b = b, a
    return a <= e <= b


def _bucket(samples: Sequence[KcSample], cfg: EEConfig, eps: float) -> BucketStats:
    ks = [s.k for s in samples]
    cs = [s.c for s in samples]
    k_lo, k_hi = Fraction(cfg.k_min), Fraction(cfg.k_max)
    c_lo, c_hi = Fraction(cfg.c_min), Fraction(cfg.c_max)
    qeps = Fraction(cfg.qeps)
    cov_k = cov_c = 0
    exact_ee = []
    for s in samples:
        e, ee = Fraction(s.e), Fraction(s.ee)
        cov_k += _in_interval(e, ee, k_lo, k_hi)
        ce = abs(ee) + qeps
        cov_c += _in_interval(e, -ce if ee < 0 else ce, c_lo, c_hi)
        if e == 0:
            exact_ee.append(abs(float(ee)) / eps)
    n = len(samples)
    exact = ExactStats(
        len(exact_ee), sum(1 for v in exact_ee if v == 0),
        max(exact_ee) if exact_ee else None,
        float(np.mean(exact_ee)) if exact_ee else None,
    )
    return BucketStats(
        len({s.problem_id for s in samples}), n,
        RatioStats.of(ks, (cfg.k_min, cfg.k_max)), RatioStats.of(cs, (cfg.c_min, cfg.c_max)),
        cov_k / n if n else None, cov_c / n if n else None, exact,
        histogram(ks, "cubic"), histogram(cs, "cubic"),
    )


def problem_re_m(samples: Iterable[KcSample]) -> dict[int, float]:
    """Largest re_m over each problem's coordinates."""
    worst: dict[int, float] = {}
    for s in samples:
        if s.re_m > worst.get(s.problem_id, -1.0):
            worst[s.problem_id] = s.re_m
    return worst


def split_by_threshold(samples: Sequence[KcSample], threshold: float) -> tuple[list[KcSample], list[KcSample]]:
    """(constrained, ill-conditioned): a single coordinate with re_m at or
    above the threshold puts its whole problem in the second group."""
    worst = problem_re_m(samples)
    good = [s for s in samples if worst[s.problem_id] < threshold]
    bad = [s for s in samples if worst[s.problem_id] >= threshold]
    return good, bad


def summarize(samples: Sequence[KcSample], cfg: EEConfig, thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
              n_problems: int | None = None, n_failed: int = 0) -> StatsSummary:
    """Per-threshold statistics; alpha/beta are read at ``cfg.rthd``."""
    if not samples:
        raise ValueError("no samples to summarize")
    thresholds = sorted(set(thresholds) | {cfg.rthd})
    buckets = []
    for t in thresholds:
        good, bad = split_by_threshold(samples, t)
        eps = t * cfg.eez
        buckets.append(ThresholdBucket(t, eps, _bucket(good, cfg, eps), _bucket(bad, cfg, eps)))
    cell = next(b for b in buckets if b.threshold == cfg.rthd).constrained
    alpha, beta = cell.k.frac_outside, cell.c.frac_outside
    n_ok = len({s.problem_id for s in samples})
    return StatsSummary(
        te_bits=cfg.te_bits, rthd=cfg.rthd, config=cfg.to_dict(),
        n_problems=n_problems if n_problems is not None else n_ok + n_failed,
        n_failed=n_failed, n_samples=len(samples),
        alpha=alpha, beta=beta,
        c_k=None if alpha is None else 1 - alpha, c_c=None if beta is None else 1 - beta,
        buckets=buckets,
    )


def summarize_run(run: ExperimentRun, thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
                  cfg: EEConfig | None = None) -> StatsSummary:
    return summarize(run.samples, cfg or run.cfg, thresholds, len(run.results), len(run.failures))


def sweep(te_list: Sequence[int], rthd_list: Sequence[float], seed: int, per_depth: int = 100,
          cfg: EEConfig | None = None, mode: str = HARNESS_MODE, workers: int | None = None,
          specs: Sequence[ProblemSpec] | None = None) -> dict[tuple[int, float], StatsSummary]:
    """One summary per (T_e, RTHD) cell over a shared problem set.

    With EEZ fixed the computation does not depend on RTHD (it only moves the
    bucket boundary), so each T_e is evaluated once.
    """
    if not te_list or not rthd_list:
        raise ValueError("te_list and rthd_list must be nonempty")
    cfg = cfg or EEConfig()
    specs = specs if specs is not None else gen_test_set(seed, per_depth)
    grid = {}
    for te in te_list:
        run = run_experiment(specs, cfg.replace(te_bits=te), mode, workers=workers)
        for rthd in rthd_list:
            cell_cfg = cfg.replace(te_bits=te, rthd=rthd)
            grid[(te, rthd)] = summarize(run.samples, cell_cfg, [rthd], len(run.results), len(run.failures))
    return grid


# ------------------------------------------------------------------- file I/O


def samples_to_csv(samples: Iterable[KcSample]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for s in samples:
        writer.writerow(s.row())
    return buf.getvalue()


def samples_from_csv(text: str) -> list[KcSample]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_HEADER:
        raise ValueError(f"unexpected CSV header {reader.fieldnames}")
    return [KcSample.from_row(row) for row in reader]
