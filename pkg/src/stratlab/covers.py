"""Kummer and Artin-Schreier covers of the punctured line.

Pushforwards of the structure sheaf, pullback along ``x = y^e`` and the
tame/wild verdict built on :func:`stratlab.loglat.rs_verdict`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Union

from .errors import WildKummer
from .laurent import LaurentPoly, Matrix, dp_derivative
from .loglat import INCONCLUSIVE, RS, WILD, ExponentReport, LogLattice, exponents, rs_verdict
from .padics import PrimeField, binom_raw
from .strat import StratifiedBundle

TAME = "Tame"
WILD_EVIDENCE = "WildEvidence"
INCONCLUSIVE_VERDICT = "Inconclusive"


@dataclass(frozen=True)
class CoverSpec:
    """``kind`` is "kummer" (uses ``e``) or "artin-schreier" (uses ``g``)."""

    kind: str
    p: int
    e: int = 1
    g: Optional[LaurentPoly] = None

    def __post_init__(self):
        PrimeField(self.p)
        if self.kind == "kummer":
            if self.e < 1:
                raise ValueError("Kummer degree must be positive")
            if self.e % self.p == 0:
                raise WildKummer(f"Kummer degree {self.e} is divisible by p={self.p}")
        elif self.kind == "artin-schreier":
            g = self.g
            if g is None or g.is_zero():
                raise ValueError("Artin-Schreier polynomial must be nonzero")
            if g.p != self.p:
                raise ValueError("Artin-Schreier polynomial over a different prime")
            if g.deg >= 0:
                raise ValueError("Artin-Schreier polynomial must have only negative exponents")
        else:
            raise ValueError(f"unknown cover kind {self.kind!r}")

    @classmethod
    def kummer(cls, e: int, p: int) -> "CoverSpec":
        return cls("kummer", p, e=e)

    @classmethod
    def artin_schreier(cls, g: Union[LaurentPoly, str], p: int) -> "CoverSpec":
        if isinstance(g, str):
            g = LaurentPoly.parse(g, p)
        return cls("artin-schreier", p, g=g)

    def to_json(self) -> dict:
        if self.kind == "kummer":
            return {"kind": "kummer", "p": self.p, "e": self.e}
        return {"kind": "artin-schreier", "p": self.p, "g": self.g.to_pairs()}

    @classmethod
    def from_json(cls, data: dict) -> "CoverSpec":
        p = data["p"]
        if data["kind"] == "kummer":
            return cls.kummer(data["e"], p)
        return cls("artin-schreier", p, g=LaurentPoly.from_pairs(data["g"], p))


def kummer_pushforward(e: int, p: int, level: int) -> LogLattice:
    """Lattice spanned by ``1, y, ..., y^(e-1)`` with ``y^e = x``."""
    if e % p == 0:
        raise WildKummer(f"Kummer degree {e} is divisible by p={p}")
    PrimeField(p)
    gens = []
    for m in range(level + 1):
        q = p**m
        gens.append(Matrix.diag([LaurentPoly.const(binom_raw(Fraction(j, e), q, p), p) for j in range(e)], p))
    return LogLattice(p, gens, frame=Matrix.identity(e, p), name=f"kummer({e})")


def kummer_bundle(e: int, p: int, level: int) -> StratifiedBundle:
    return kummer_pushforward(e, p, level).bundle()


def _series_mul(a: list, b: list, n: int, p: int) -> list:
    out = [LaurentPoly.zero(p) for _ in range(n)]
    for i, u in enumerate(a):
        if not u:
            continue
        for j in range(min(len(b), n - i)):
            if b[j]:
                out[i + j] = out[i + j] + u * b[j]
    return out


def artin_schreier_taylor(g: LaurentPoly, p: int, n: int) -> list[LaurentPoly]:
    """``[d^(k) y for k < n]`` (index 0 left zero) for ``y^p - y = g``."""
    out = [LaurentPoly.zero(p) for _ in range(n)]
    for k in range(1, n):
        acc = LaurentPoly.zero(p)
        q = 1
        while k % q == 0:
            acc = acc + dp_derivative(g, k // q).subs_power(q)
            q *= p
        out[k] = -acc
    return out


def artin_schreier_pushforward(g: Union[LaurentPoly, str], p: int, level: int) -> StratifiedBundle:
    """Bundle on the basis ``1, y, ..., y^(p-1)`` with ``y^p - y = g``."""
    spec = CoverSpec.artin_schreier(g, p)
    g = spec.g
    n = p ** (level + 1)
    U = artin_schreier_taylor(g, p, n)
    # powers U^l as truncated series
    powers = [[LaurentPoly.one(p)] + [LaurentPoly.zero(p)] * (n - 1)]
    for _ in range(1, p):
        powers.append(_series_mul(powers[-1], U, n, p))
    gens = []
    for m in range(level + 1):
        q = p**m
        rows = [[LaurentPoly.zero(p) for _ in range(p)] for _ in range(p)]
        for j in range(p):
            for l in range(1, j + 1):
                c = math.comb(j, l) % p
                if c:
                    rows[j - l][j] = rows[j - l][j] + powers[l][q] * c
        gens.append(Matrix(rows, p))
    return StratifiedBundle(p, gens, name=f"artin-schreier({g!r})")


# ---------------------------------------------------------------------------
# Pullback along x = y^e


@lru_cache(maxsize=None)
def pullback_coefficients(e: int, n: int, p: int) -> tuple[int, ...]:
    """``c_j`` (mod p) with ``binom(e*k, n) = sum_j c_j binom(k, j)`` for all k.

    Hence ``delta_y^(n) = sum_j c_j delta_x^(j)`` once ``x = y^e``.
    """
    # finite differences of k -> binom(e*k, n) at k = 0 give exact integers
    out = []
    for j in range(n + 1):
        s = sum((-1) ** (j - i) * math.comb(j, i) * math.comb(e * i, n) for i in range(j + 1))
        out.append(s % p)
    return tuple(out)


def _log_table(E: StratifiedBundle, j: int) -> Matrix:
    return E.theta(j).shift(j)


def _pullback_log_gens(E: StratifiedBundle, e: int) -> list[Matrix]:
    p, r = E.p, E.rank
    gens = []
    for m in range(E.level + 1):
        q = p**m
        acc = Matrix.zeros(r, r, p)
        for j, c in enumerate(pullback_coefficients(e, q, p)):
            if c and j:
                acc = acc + _log_table(E, j).scale(LaurentPoly.const(c, p))
        gens.append(acc.subs_power(e))
    return gens


def pullback_kummer(obj: Union[StratifiedBundle, LogLattice], e: int):
    """Pull back along ``x = y^e`` (result is in the variable ``y``, printed as x)."""
    if e < 1:
        raise ValueError("Kummer degree must be positive")
    if isinstance(obj, LogLattice):
        if e % obj.p == 0:
            raise WildKummer(f"Kummer degree {e} is divisible by p={obj.p}")
        gens = _pullback_log_gens(obj.bundle(), e)
        return LogLattice(obj.p, gens, frame=Matrix.identity(obj.rank, obj.p), name=f"pullback({obj.name}, {e})")
    logs = _pullback_log_gens(obj, e)
    gens = [g.shift(-obj.p**m) for m, g in enumerate(logs)]
    return StratifiedBundle(obj.p, gens, name=f"pullback({obj.name}, {e})")


# ---------------------------------------------------------------------------


@dataclass
class TamenessReport:
    cover: CoverSpec
    verdict: str
    level: int
    exponents: Optional[ExponentReport]
    pole_trace: list
    rs: dict
    parameters: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "cover": self.cover.to_json(),
            "verdict": self.verdict,
            "level": self.level,
            "exponents": None if self.exponents is None else self.exponents.to_json(),
            "pole_trace": self.pole_trace,
            "rs": self.rs,
            "parameters": self.parameters,
        }


def tameness_verdict(cover: CoverSpec, level: int, max_pole: Optional[int] = None, max_iter: int = 64,
                     denom_bound: Optional[int] = None) -> TamenessReport:
    p = cover.p
    if cover.kind == "kummer":
        L = kummer_pushforward(cover.e, p, level)
        E = L.bundle()
    else:
        L = None
        E = artin_schreier_pushforward(cover.g, p, level)
    rs = rs_verdict(E, level, max_pole=max_pole, max_iter=max_iter, denom_bound=denom_bound)
    verdict = {RS: TAME, WILD: WILD_EVIDENCE, INCONCLUSIVE: INCONCLUSIVE_VERDICT}[rs.verdict]
    exps = None
    if verdict == TAME:
        exps = exponents(L, denom_bound) if L is not None else rs.exponents
    return TamenessReport(cover, verdict, level, exps, rs.pole_trace, rs.to_json(), dict(rs.parameters))
