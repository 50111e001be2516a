"""Sparse SDPA (.dat-s) export of assembled moment relaxations.

The file encodes min c'x subject to X = sum_i x_i F_i - F_0 >= 0 in two
blocks: the moment-matrix PSD block and a diagonal block of paired
inequalities (A x - b >= 0 and b - A x >= 0) representing the equality rows.
Variables are the surviving moments in graded-lex id order.  Output is
byte-stable for fixed inputs, so the files double as regression artifacts
and can be replayed through external (e.g. extended-precision) solvers.
"""

from __future__ import annotations

from fractions import Fraction
from pathlib import Path

from .sdp import MomentProblem


def _fmt(v: Fraction | float) -> str:
    return format(float(v), ".17g")


def render_sdpa(problem: MomentProblem, comments: list[str] | None = None) -> str:
    """Render the problem in sparse SDPA format.

    The exported objective is c = objective for sense "min" and c = -objective
    for sense "max"; either way the SDPA optimum equals the requested bound up
    to the sign recorded in the header comment.
    """
    index = problem.index
    n_mom = index.n_moments
    nb = len(index.basis)
    n_eq = len(problem.equality_rows)
    sign = 1 if problem.sense == "min" else -1

    lines = []
    for c in comments or []:
        lines.append(f'"{c}')
    lines.append(f'"sense={problem.sense} (objective negated in file when sense=max)')
    lines.append(f'"variables=moments of degree <= {2 * index.degree} in graded-lex order')
    lines.append(f"{n_mom} = mDIM")
    lines.append("2 = nBLOCK")
    lines.append(f"{nb} -{2 * n_eq} = bLOCKsTRUCT")

    c = [Fraction(0)] * n_mom
    for mid, coeff in problem.objective.items():
        c[mid] = sign * coeff
    lines.append(" ".join(_fmt(v) for v in c))

    entries: list[tuple[int, int, int, int, str]] = []
    # F_0: only the diagonal block carries the equality right-hand sides
    for r, row in enumerate(problem.equality_rows):
        if row.rhs != 0:
            pos = r + 1
            entries.append((0, 2, pos, pos, _fmt(row.rhs)))
            neg = n_eq + r + 1
            entries.append((0, 2, neg, neg, _fmt(-row.rhs)))
    # F_k, PSD block: entry (i, j) of the moment matrix references moment k
    for i in range(nb):
        for j in range(i, nb):
            mid = problem.psd_entry(i, j)
            if mid is not None:
                entries.append((mid + 1, 1, i + 1, j + 1, "1"))
    # F_k, diagonal block: equality rows as paired inequalities
    for r, row in enumerate(problem.equality_rows):
        for mid in sorted(row.coeffs):
            coeff = row.coeffs[mid]
            entries.append((mid + 1, 2, r + 1, r + 1, _fmt(coeff)))
            entries.append((mid + 1, 2, n_eq + r + 1, n_eq + r + 1, _fmt(-coeff)))
    entries.sort(key=lambda e: e[:4])
    lines.extend(f"{m} {blk} {i} {j} {v}" for m, blk, i, j, v in entries)
    return "\n".join(lines) + "\n"


def write_sdpa(problem: MomentProblem, path: str | Path,
               comments: list[str] | None = None) -> None:
    Path(path).write_text(render_sdpa(problem, comments))
