"""Polynomial SDE models, the forced double-well lift, and the generator.

An :class:`SdeModel` packages drift polynomials, the pre-squared diffusion
matrix D = (1/2) sigma sigma^T, algebraic support constraints, and an
optional sign symmetry of the dynamics.  The infinitesimal generator
L f = sum_i mu_i d_i f + sum_ij D_ij d_i d_j f is the bridge between models
and the stationarity rows of the moment relaxation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .poly import MultiIndex, Polynomial, RationalLike, default_names, parse_polynomial

# Upper limit A < 2/(3*sqrt(3)) for the forcing amplitude, squared: 4/27.
_A_SQ_LIMIT = Fraction(4, 27)


@dataclass(frozen=True)
class SdeModel:
    """Autonomous polynomial SDE dY = mu(Y) dt + sigma(Y) dW.

    The diffusion is stored pre-squared as D = (1/2) sigma sigma^T, which is
    all the generator and the stationary FP identity consume.  ``constraints``
    are polynomials required to vanish on the support of the stationary
    measure.  ``sign_symmetry`` is a vector in {-1,+1}^nvars under which the
    dynamics is equivariant; when present, moments that are odd under it
    vanish and are eliminated from the relaxation.
    """

    nvars: int
    drift: tuple[Polynomial, ...]
    diffusion: tuple[tuple[Polynomial, ...], ...]
    constraints: tuple[Polynomial, ...] = ()
    sign_symmetry: tuple[int, ...] | None = None
    var_names: tuple[str, ...] | None = None

    def __post_init__(self):
        n = self.nvars
        if len(self.drift) != n:
            raise ValueError(f"drift has {len(self.drift)} components, expected {n}")
        if len(self.diffusion) != n or any(len(row) != n for row in self.diffusion):
            raise ValueError(f"diffusion must be an {n}x{n} matrix of polynomials")
        for p in self.drift:
            if p.nvars != n:
                raise ValueError("drift polynomial has wrong nvars")
        for i in range(n):
            for j in range(n):
                if self.diffusion[i][j].nvars != n:
                    raise ValueError("diffusion polynomial has wrong nvars")
                if self.diffusion[i][j] != self.diffusion[j][i]:
                    raise ValueError(f"diffusion matrix not symmetric at ({i},{j})")
        for g in self.constraints:
            if g.nvars != n:
                raise ValueError("constraint polynomial has wrong nvars")
        if self.sign_symmetry is not None:
            s = self.sign_symmetry
            if len(s) != n or any(v not in (-1, 1) for v in s):
                raise ValueError("sign_symmetry must be a vector over {-1,+1} of length nvars")
            self._check_equivariance()
        if self.var_names is not None and len(self.var_names) != n:
            raise ValueError("var_names length mismatch")

    def _check_equivariance(self):
        """Drift odd, diffusion even, constraints invariant under Y -> s*Y."""
        s = self.sign_symmetry
        for i, mu in enumerate(self.drift):
            if mu.substitute_signs(s) != mu.scale(s[i]):
                raise ValueError(f"drift component {i} is not odd under the declared symmetry")
        for i in range(self.nvars):
            for j in range(self.nvars):
                dij = self.diffusion[i][j]
                if dij.substitute_signs(s) != dij.scale(s[i] * s[j]):
                    raise ValueError(f"diffusion entry ({i},{j}) breaks the declared symmetry")
        for k, g in enumerate(self.constraints):
            if g.substitute_signs(s) != g:
                raise ValueError(f"constraint {k} is not invariant under the declared symmetry")

    def degrees(self) -> tuple[int, int]:
        """(max drift degree, max diffusion-entry degree)."""
        d_mu = max(p.degree() for p in self.drift)
        d_diff = max((self.diffusion[i][j].degree()
                      for i in range(self.nvars) for j in range(self.nvars)), default=-1)
        return d_mu, max(d_diff, 0)

    def generator_degree_increase(self) -> int:
        """Degree added by L: max(d_mu - 1, deg(D_ij) - 2), at least 0 considered.

        With diffusion stored pre-squared, deg(D_ij) - 2 plays the role of
        2*d_sigma - 2 for polynomial sigma.
        """
        d_mu, d_diff = self.degrees()
        return max(d_mu - 1, d_diff - 2)

    def generator_apply(self, f: Polynomial) -> Polynomial:
        """L f = sum_i mu_i d_i f + sum_ij D_ij d_i d_j f, exactly."""
        if f.nvars != self.nvars:
            raise ValueError(f"polynomial has nvars={f.nvars}, model has {self.nvars}")
        out = Polynomial.zero(self.nvars)
        grads = [f.differentiate(i) for i in range(self.nvars)]
        for mu, df in zip(self.drift, grads):
            out = out + mu * df
        for i in range(self.nvars):
            for j in range(self.nvars):
                dij = self.diffusion[i][j]
                if dij:
                    out = out + dij * grads[i].differentiate(j)
        return out

    def moment_vanishes(self, alpha: MultiIndex) -> bool:
        """True when the moment of Y^alpha is forced to 0 by the symmetry."""
        if self.sign_symmetry is None:
            return False
        sign = 1
        for s, e in zip(self.sign_symmetry, alpha):
            if s == -1 and e % 2 == 1:
                sign = -sign
        return sign == -1

    def names(self) -> list[str]:
        return list(self.var_names) if self.var_names else default_names(self.nvars)

    # -- model description files ---------------------------------------

    def to_dict(self) -> dict:
        names = self.names()
        return {
            "nvars": self.nvars,
            "var_names": names,
            "drift": [p.render(names) for p in self.drift],
            "diffusion": [[self.diffusion[i][j].render(names) for j in range(self.nvars)]
                          for i in range(self.nvars)],
            "constraints": [g.render(names) for g in self.constraints],
            "sign_symmetry": list(self.sign_symmetry) if self.sign_symmetry else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SdeModel":
        n = int(data["nvars"])
        names = data.get("var_names") or default_names(n)
        drift = tuple(parse_polynomial(s, n, names) for s in data["drift"])
        diffusion = tuple(tuple(parse_polynomial(s, n, names) for s in row)
                          for row in data["diffusion"])
        constraints = tuple(parse_polynomial(s, n, names) for s in data.get("constraints", []))
        sym = data.get("sign_symmetry")
        return cls(n, drift, diffusion, constraints,
                   tuple(sym) if sym else None, tuple(names))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "SdeModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class ForcedDoubleWellParams:
    """Parameters of dX = (X - X^3 + A cos(Omega t)) dt + sqrt(2 D) dW.

    Stored as exact rationals so constraint assembly stays exact; pass
    strings like "3/10" or decimal strings ("0.3" parses to 3/10 exactly).
    """

    A: Fraction
    Omega: Fraction
    D: Fraction

    def __init__(self, A: RationalLike, Omega: RationalLike, D: RationalLike):
        A, Omega, D = Fraction(A), Fraction(Omega), Fraction(D)
        if D <= 0:
            raise ValueError(f"noise intensity D must be > 0, got {D}")
        if Omega <= 0:
            raise ValueError(f"forcing frequency Omega must be > 0, got {Omega}")
        if A < 0 or A * A >= _A_SQ_LIMIT:
            raise ValueError(f"forcing amplitude must satisfy 0 <= A < 2/(3*sqrt(3)), got {A}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "Omega", Omega)
        object.__setattr__(self, "D", D)

    def replace_D(self, D: RationalLike) -> "ForcedDoubleWellParams":
        return ForcedDoubleWellParams(self.A, self.Omega, D)

    def to_dict(self) -> dict:
        return {"A": str(self.A), "Omega": str(self.Omega), "D": str(self.D)}


def lift_forced_double_well(params: ForcedDoubleWellParams) -> SdeModel:
    """Autonomous lift of the forced double well with y = cos, z = sin.

    Variables (X, y, z) with drift (X - X^3 + A y, -Omega z, Omega y),
    constant diffusion D_11 = D, support constraint y^2 + z^2 - 1 = 0, and
    the sign symmetry (X, y, z) -> -(X, y, z).
    """
    n = 3
    F = Fraction
    x = Polynomial.variable(n, 0)
    y = Polynomial.variable(n, 1)
    z = Polynomial.variable(n, 2)
    drift = (
        x - x * x * x + y.scale(params.A),
        z.scale(-params.Omega),
        y.scale(params.Omega),
    )
    zero = Polynomial.zero(n)
    diffusion = (
        (Polynomial.constant(n, params.D), zero, zero),
        (zero, zero, zero),
        (zero, zero, zero),
    )
    circle = y * y + z * z - Polynomial.constant(n, 1)
    return SdeModel(n, drift, diffusion, (circle,), (-1, -1, -1), ("x", "y", "z"))


def ornstein_uhlenbeck(D: RationalLike, rate: RationalLike = 1) -> SdeModel:
    """One-variable OU model dX = -rate*X dt + sqrt(2 D) dW."""
    D, rate = Fraction(D), Fraction(rate)
    if D <= 0 or rate <= 0:
        raise ValueError("OU model needs D > 0 and rate > 0")
    x = Polynomial.variable(1, 0)
    return SdeModel(
        1,
        (x.scale(-rate),),
        ((Polynomial.constant(1, D),),),
        (),
        None,
        ("x",),
    )
