"""Interval composition for derived observables and noise-intensity scans.

Primitive bounds on P = <<X^2>>, a1 = <<Xy>>, b1 = <<Xz>> are composed into
enclosures of the spectral amplification B^2 = a1^2 + b1^2 and its
power-normalized variant R = B^2 / P by exact interval arithmetic.  The
squaring rule generalizes the non-negative endpoint formulas to intervals of
arbitrary sign, so the composition stays a valid enclosure even at small D
where low-degree lower bounds dip below zero.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .model import ForcedDoubleWellParams, lift_forced_double_well
from .poly import Polynomial
from .sdp import BoundResult, SolverSettings, bound_pair

OBJECTIVES = {
    "P": (2, 0, 0),
    "a1": (1, 1, 0),
    "b1": (1, 0, 1),
}


@dataclass(frozen=True)
class Interval:
    """Validated lower/upper pair; non-rigorous provenance is carried along."""

    lo: float
    hi: float
    rigorous: bool = True

    def __post_init__(self):
        if math.isfinite(self.lo) and math.isfinite(self.hi) and self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @classmethod
    def from_bound(cls, bound: BoundResult) -> "Interval":
        return cls(bound.lower, bound.upper, bound.rigorous)

    def contains(self, value: float, widen: float = 0.0) -> bool:
        return self.lo - widen <= value <= self.hi + widen

    def width(self) -> float:
        return self.hi - self.lo

    def __add__(self, other: "Interval") -> "Interval":
        return Interval(self.lo + other.lo, self.hi + other.hi,
                        self.rigorous and other.rigorous)

    def to_dict(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "rigorous": self.rigorous}


def square_interval(iv: Interval) -> Interval:
    """Exact image of x -> x^2 over the interval."""
    lo2, hi2 = iv.lo**2, iv.hi**2
    if iv.lo <= 0.0 <= iv.hi:
        return Interval(0.0, max(lo2, hi2), iv.rigorous)
    return Interval(min(lo2, hi2), max(lo2, hi2), iv.rigorous)


def compose_B2(ia: Interval, ib: Interval) -> Interval:
    """Enclosure of a1^2 + b1^2; endpoint sums of squares when both lo >= 0."""
    return square_interval(ia) + square_interval(ib)


def compose_R(ib2: Interval, ip: Interval) -> Interval:
    """Enclosure of R = B^2 / P; requires a strictly positive P interval."""
    if not ip.lo > 0:
        raise ValueError(
            f"P interval lower bound must be > 0 (got {ip.lo}); "
            "P = <<X^2>> is positive for any nondegenerate measure, so this "
            "signals an upstream solver failure")
    return Interval(ib2.lo / ip.hi, ib2.hi / ip.lo, ib2.rigorous and ip.rigorous)


@dataclass(frozen=True)
class ScanRow:
    """Bounds (and optional oracle values) at one noise intensity."""

    D: float
    degree: int
    bounds: dict[str, BoundResult]      # keys P, a1, b1
    B2: Interval
    R: Interval | None
    oracle: dict[str, float] | None = None
    note: str = ""

    def interval(self, name: str) -> Interval:
        if name == "B2":
            return self.B2
        if name == "R":
            if self.R is None:
                raise ValueError(f"no R interval at D={self.D}: {self.note}")
            return self.R
        return Interval.from_bound(self.bounds[name])

    @property
    def all_optimal(self) -> bool:
        return all(b.rigorous for b in self.bounds.values())


@dataclass(frozen=True)
class ScanTable:
    rows: tuple[ScanRow, ...]
    meta: dict = field(default_factory=dict)

    CSV_COLUMNS = ("D", "P_lo", "P_hi", "a1_lo", "a1_hi", "b1_lo", "b1_hi",
                   "B2_lo", "B2_hi", "R_lo", "R_hi", "status_flags")

    def to_csv(self, oracle_columns: bool = False) -> str:
        cols = list(self.CSV_COLUMNS)
        if oracle_columns:
            cols += ["oracle_P", "oracle_a1", "oracle_b1"]
        lines = [",".join(cols)]
        for row in self.rows:
            flags = ";".join(
                f"{name}:{row.bounds[name].status_lower.value}/{row.bounds[name].status_upper.value}"
                for name in ("P", "a1", "b1"))
            r_lo = row.R.lo if row.R is not None else math.nan
            r_hi = row.R.hi if row.R is not None else math.nan
            values = [row.D,
                      row.bounds["P"].lower, row.bounds["P"].upper,
                      row.bounds["a1"].lower, row.bounds["a1"].upper,
                      row.bounds["b1"].lower, row.bounds["b1"].upper,
                      row.B2.lo, row.B2.hi, r_lo, r_hi]
            cells = [_fmt(v) for v in values] + [flags]
            if oracle_columns:
                oracle = row.oracle or {}
                cells += [_fmt(oracle.get(k, math.nan)) for k in ("P", "a1", "b1")]
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "meta": self.meta,
            "rows": [{
                "D": row.D,
                "degree": row.degree,
                "bounds": {k: v.to_dict() for k, v in row.bounds.items()},
                "B2": row.B2.to_dict(),
                "R": row.R.to_dict() if row.R is not None else None,
                "oracle": row.oracle,
                "note": row.note,
            } for row in self.rows],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _fmt(v: float) -> str:
    return format(v, ".17g")


def scan_row(params: ForcedDoubleWellParams, d: int,
             settings: SolverSettings | None = None) -> ScanRow:
    """Bound P, a1, b1 at one noise intensity and compose B^2 and R."""
    model = lift_forced_double_well(params)
    bounds = {}
    for name, alpha in OBJECTIVES.items():
        bounds[name] = bound_pair(model, d, Polynomial.monomial(alpha),
                                  settings, name=name)
    b2 = compose_B2(Interval.from_bound(bounds["a1"]),
                    Interval.from_bound(bounds["b1"]))
    ip = Interval.from_bound(bounds["P"])
    if ip.lo > 0 and math.isfinite(ip.hi):
        r, note = compose_R(b2, ip), ""
    else:
        r, note = None, f"R not composed: P interval [{ip.lo}, {ip.hi}] not strictly positive"
    return ScanRow(float(params.D), d, bounds, b2, r, note=note)


def scan_noise(params_template: ForcedDoubleWellParams, D_grid, d: int,
               settings: SolverSettings | None = None, jobs: int = 1,
               oracle=None) -> ScanTable:
    """Run scan_row over a strictly increasing grid of noise intensities.

    Rows are independent; with jobs > 1 they are solved in a process pool and
    merged back in grid order, so the result is identical to a serial run.
    ``oracle``, when given, is called per params and must return an
    OracleEstimate whose (P, a1, b1) are attached to the row.
    """
    grid = list(D_grid)
    if any(float(b) <= float(a) for a, b in zip(grid, grid[1:])) or any(float(D) <= 0 for D in grid):
        raise ValueError("D_grid must be strictly increasing and positive")
    param_list = [params_template.replace_D(D) for D in grid]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_scan_row_task,
                                 [(p, d, settings) for p in param_list]))
    else:
        rows = [scan_row(p, d, settings) for p in param_list]
    if oracle is not None:
        rows = [ScanRow(r.D, r.degree, r.bounds, r.B2, r.R,
                        oracle=_oracle_triple(oracle(p)), note=r.note)
                for r, p in zip(rows, param_list)]
    meta = {"A": str(params_template.A), "Omega": str(params_template.Omega),
            "degree": d, "D_grid": [str(D) for D in grid]}
    return ScanTable(tuple(rows), meta)


def _scan_row_task(args):
    params, d, settings = args
    return scan_row(params, d, settings)


def _oracle_triple(est) -> dict[str, float]:
    return {"P": est.P, "a1": est.a1, "b1": est.b1}


@dataclass(frozen=True)
class PeakResult:
    D_star: float
    value: float
    interior: bool
    column: str


def find_peak(table: ScanTable, column: str = "B2") -> PeakResult:
    """Discrete argmax of a lower-bound column; no interpolation.

    ``interior`` is False when the argmax sits on a grid endpoint, in which
    case the maximum should not be read as a resonance peak.
    """
    if not table.rows:
        raise ValueError("empty scan table")
    if column not in ("B2", "R"):
        raise ValueError(f"peak column must be 'B2' or 'R', got {column!r}")
    values = []
    for row in table.rows:
        iv = row.B2 if column == "B2" else row.R
        values.append(iv.lo if iv is not None else -math.inf)
    if all(not math.isfinite(v) for v in values):
        raise ValueError(f"no finite {column} lower bounds in table; all solves failed")
    best = max(range(len(values)), key=values.__getitem__)
    interior = 0 < best < len(values) - 1
    return PeakResult(table.rows[best].D, values[best], interior, column)
