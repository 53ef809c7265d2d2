"""Logarithmic lattices at the boundary ``x = 0`` and their exponents.

A :class:`LogLattice` stores the matrices of ``delta^(p^m) = x^(p^m) d^(p^m)``
on a chosen lattice basis.  Entries are polynomials, so the lattice is stable
under every logarithmic operator; the reductions mod ``x`` (residues) are
simultaneously diagonalizable and their common eigenvalue tuples are the
base-p digits of the exponents.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

import numpy as np

from .errors import (
    ContextMismatch,
    ExponentNotPresent,
    LevelTooLow,
    NoReconstruction,
    NonzeroExponent,
    NotSemisimple,
    RankMismatch,
    UnreconstructableExponent,
)
from .laurent import LaurentPoly, Matrix, PolyLattice, inverse, nullspace_mod
from .padics import PadicDigits, PrimeField, as_exponent, digits, max_denominator_bound, rational_reconstruct
from .strat import StratifiedBundle, flat_frame, gauge


class LogLattice:
    """Lattice with ``L[m]`` = matrix of ``delta^(p^m)`` on its basis.

    ``frame`` optionally records the basis in the coordinates of a reference
    bundle (the one the lattice was first extracted from), so two lattices of
    the same bundle can be compared.
    """

    def __init__(self, p: int, gens, frame: Optional[Matrix] = None, name: str = ""):
        PrimeField(p)
        gens = tuple(gens)
        r = gens[0].shape[0]
        for g in gens:
            if g.p != p:
                raise ContextMismatch("matrix over a different prime")
            if g.shape != (r, r):
                raise RankMismatch(f"matrix of shape {g.shape}, expected {(r, r)}")
        self.p = p
        self.rank = r
        self.level = len(gens) - 1
        self.L = gens
        self.frame = frame
        self.name = name

    @classmethod
    def trivial(cls, rank: int, p: int, level: int) -> "LogLattice":
        z = Matrix.zeros(rank, rank, p)
        return cls(p, [z] * (level + 1), frame=Matrix.identity(rank, p), name="trivial")

    @classmethod
    def from_frame(cls, E: StratifiedBundle, B: Matrix, frame: Optional[Matrix] = None, name: str = "") -> "LogLattice":
        """The lattice spanned by the columns of ``B`` inside ``E``.

        Raises ValueError if the span is not stable under the logarithmic
        operators (some entry has a pole).
        """
        p = E.p
        Binv = inverse(B)
        cols = B.columns()
        gens = []
        for m in range(E.level + 1):
            q = p**m
            image = Matrix.from_columns([tuple(f.shift(q) for f in E.apply_gen(m, c)) for c in cols], p)
            g = Binv @ image
            if not g.is_polynomial():
                raise ValueError(f"span is not stable under delta^({q})")
            gens.append(g)
        return cls(p, gens, frame=B if frame is None else frame, name=name or E.name)

    def bundle(self) -> StratifiedBundle:
        """The restriction to the punctured line, in the lattice basis."""
        return StratifiedBundle(self.p, [g.shift(-self.p**m) for m, g in enumerate(self.L)], name=self.name)

    def truncate(self, level: int) -> "LogLattice":
        return LogLattice(self.p, self.L[: level + 1], frame=self.frame, name=self.name)

    def moved(self, P: Matrix, name: str = "") -> "LogLattice":
        """The lattice spanned by the columns of ``P`` (in this lattice's basis)."""
        frame = P if self.frame is None else self.frame @ P
        return LogLattice.from_frame(self.bundle(), P, frame=frame, name=name or self.name)

    def residues(self) -> list[list[list[int]]]:
        return [g.residue() for g in self.L]

    def check(self) -> list[str]:
        """Invariant violations (empty when the lattice is consistent)."""
        problems = []
        for m, g in enumerate(self.L):
            for i, row in enumerate(g.rows):
                for j, e in enumerate(row):
                    if not e.is_polynomial():
                        problems.append(f"L[{m}][{i}][{j}] = {e!r} has a pole")
        if problems:
            return problems
        p = self.p
        res = [np.array(r, dtype=np.int64) for r in self.residues()]
        for a in range(len(res)):
            for b in range(a + 1, len(res)):
                if ((res[a] @ res[b] - res[b] @ res[a]) % p).any():
                    problems.append(f"residues of levels {a} and {b} do not commute")
        if not problems:
            try:
                residue_decomposition(self)
            except NotSemisimple as exc:
                problems.append(str(exc))
        return problems

    def __eq__(self, other):
        if not isinstance(other, LogLattice):
            return NotImplemented
        return self.p == other.p and self.L == other.L

    def __hash__(self):
        return hash((self.p, self.L))

    def __repr__(self):
        return f"LogLattice(p={self.p}, rank={self.rank}, level={self.level})"


# ---------------------------------------------------------------------------
# Residues and exponents


@dataclass
class ResidueDecomposition:
    p: int
    level: int
    blocks: dict[PadicDigits, np.ndarray]  # columns span the eigenspace mod x

    def multiplicities(self) -> dict[PadicDigits, int]:
        return {k: v.shape[1] for k, v in self.blocks.items()}


def residue_decomposition(L: LogLattice) -> ResidueDecomposition:
    """Simultaneous eigenspaces of the residues of ``delta^(p^m)``, ``m <= M``."""
    p, r = L.p, L.rank
    for m, g in enumerate(L.L):
        if not g.is_polynomial():
            raise NotSemisimple(f"L[{m}] has poles; not a logarithmic lattice")
    res = [np.array(x, dtype=np.int64) for x in L.residues()]
    for a in range(len(res)):
        for b in range(a + 1, len(res)):
            if ((res[a] @ res[b] - res[b] @ res[a]) % p).any():
                raise NotSemisimple(f"residues of levels {a} and {b} do not commute")
    eye = np.eye(r, dtype=np.int64)
    blocks: list[tuple[tuple[int, ...], np.ndarray]] = [((), eye)]
    for m, R in enumerate(res):
        new = []
        for key, W in blocks:
            found = 0
            for c in range(p):
                ys = nullspace_mod(((R - c * eye) @ W) % p, p)
                if ys:
                    Y = np.array(ys, dtype=np.int64).T
                    new.append((key + (c,), (W @ Y) % p))
                    found += len(ys)
            if found != W.shape[1]:
                raise NotSemisimple(f"residue of delta^({p**m}) is not diagonalizable over F_{p}")
        blocks = new
    out = {PadicDigits(k, p): W for k, W in sorted(blocks, key=lambda kw: kw[0])}
    return ResidueDecomposition(p, L.level, out)


@dataclass
class ExponentEntry:
    digits: PadicDigits
    rational: Optional[Fraction]
    multiplicity: int

    def to_json(self) -> dict:
        return {
            "digits": list(self.digits.digits),
            "rational": None if self.rational is None else str(self.rational),
            "multiplicity": self.multiplicity,
        }


@dataclass
class ExponentReport:
    p: int
    level: int
    denom_bound: int
    entries: list[ExponentEntry]

    def multiset(self) -> Counter:
        """Digit vectors with multiplicity."""
        return Counter({e.digits: e.multiplicity for e in self.entries})

    def rationals(self) -> Counter:
        if any(e.rational is None for e in self.entries):
            raise UnreconstructableExponent("some exponents were not reconstructed")
        return Counter({e.rational: e.multiplicity for e in self.entries})

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "level": self.level,
            "denom_bound": self.denom_bound,
            "exponents": [e.to_json() for e in self.entries],
        }


def default_denom_bound(p: int, level: int) -> int:
    return max(1, max_denominator_bound(p, level))


def exponents(L: LogLattice, denom_bound: Optional[int] = None) -> ExponentReport:
    if denom_bound is None:
        denom_bound = default_denom_bound(L.p, L.level)
    dec = residue_decomposition(L)
    entries = []
    for d, W in dec.blocks.items():
        try:
            q = rational_reconstruct(d, denom_bound)
        except (LevelTooLow, NoReconstruction):
            q = None
        entries.append(ExponentEntry(d, q, W.shape[1]))
    return ExponentReport(L.p, L.level, denom_bound, entries)


# ---------------------------------------------------------------------------
# Moves


def twist(L: LogLattice, a: int) -> LogLattice:
    """Rescale every basis vector by ``x^(-a)``; exponents drop by ``a``."""
    if a == 0:
        return L
    P = Matrix.diag([LaurentPoly.monomial(-a, 1, L.p)] * L.rank, L.p)
    return L.moved(P)


def eigen_lift(L: LogLattice) -> tuple[Matrix, list[PadicDigits]]:
    """Constant basis change diagonalizing the residues, with each column's exponent."""
    dec = residue_decomposition(L)
    cols, labels = [], []
    for d, W in dec.blocks.items():
        for j in range(W.shape[1]):
            cols.append(tuple(LaurentPoly.const(int(v), L.p) for v in W[:, j]))
            labels.append(d)
    return Matrix.from_columns(cols, L.p), labels


def shift_exponent(L: LogLattice, target: PadicDigits) -> LogLattice:
    """Multiply the lift of the ``target`` eigenblock by ``x``; that exponent goes up by one."""
    C, labels = eigen_lift(L)
    if target not in labels:
        raise ExponentNotPresent(f"{target} is not an exponent")
    x = LaurentPoly.monomial(1, 1, L.p)
    one = LaurentPoly.one(L.p)
    P = C @ Matrix.diag([x if d == target else one for d in labels], L.p)
    return L.moved(P)


@dataclass(frozen=True)
class TauSection:
    """Section of ``Z_p -> Z_p/Z`` on rational classes.

    ``explicit`` maps a class (its representative in ``[0, 1)``) to the chosen
    representative; classes not listed fall back to the canonical choice
    (the representative in ``[0, 1)``) only when ``explicit`` is None.
    """

    explicit: Optional[tuple[tuple[Fraction, Fraction], ...]] = None

    @classmethod
    def canonical(cls) -> "TauSection":
        return cls(None)

    @classmethod
    def from_mapping(cls, mapping: dict, p: int) -> "TauSection":
        pairs = []
        field_ = PrimeField(p)
        for k, v in mapping.items():
            k, v = as_exponent(k, field_), as_exponent(v, field_)
            if v - k != math.floor(v - k) or not 0 <= k < 1:
                raise ValueError(f"representative {v} does not lie in the class of {k}")
            pairs.append((k, v))
        return cls(tuple(sorted(pairs)))

    @property
    def mode(self) -> str:
        return "canonical" if self.explicit is None else "explicit"

    def __call__(self, alpha: Fraction) -> Fraction:
        cls_ = alpha - math.floor(alpha)
        if self.explicit is None:
            return cls_
        for k, v in self.explicit:
            if k == cls_:
                return v
        raise UnreconstructableExponent(f"no representative for class {cls_}")

    def contains(self, alpha: Fraction) -> bool:
        return self(alpha) == alpha


def tau_extend(L: LogLattice, tau: TauSection = TauSection(), denom_bound: Optional[int] = None) -> LogLattice:
    """Move the exponents into the image of ``tau`` by one twist and some shifts."""
    if denom_bound is None:
        denom_bound = default_denom_bound(L.p, L.level)
    rep = exponents(L, denom_bound)
    current: dict[Fraction, int] = {}
    for e in rep.entries:
        if e.rational is None:
            raise UnreconstructableExponent(f"exponent {e.digits} has no rational within bound {denom_bound}")
        current[e.rational] = e.multiplicity
    gaps = {a: tau(a) - a for a in current}
    a = max(-g for g in gaps.values())
    if all(g == 0 for g in gaps.values()):
        return L
    out = twist(L, int(a))
    current = {alpha - a: mult for alpha, mult in current.items()}
    p, M = L.p, L.level
    while True:
        pending = sorted(alpha for alpha in current if tau(alpha) != alpha)
        if not pending:
            break
        alpha = pending[0]
        d = digits(alpha, M, PrimeField(p))
        clash = [b for b in current if b != alpha and digits(b, M, PrimeField(p)) == d]
        if clash:
            raise UnreconstructableExponent(
                f"exponents {alpha} and {clash[0]} agree to level {M}; raise the level")
        out = shift_exponent(out, d)
        mult = current.pop(alpha)
        current[alpha + 1] = current.get(alpha + 1, 0) + mult
    return out


def exponents_mod_Z_agree(L1: LogLattice, L2: LogLattice, denom_bound: Optional[int] = None) -> bool:
    """Compare exponent multisets after reduction mod Z."""
    def reduced(L):
        rep = exponents(L, denom_bound)
        out = Counter()
        for e in rep.entries:
            if e.rational is None:
                raise UnreconstructableExponent(f"exponent {e.digits} not reconstructed")
            out[e.rational - math.floor(e.rational)] += e.multiplicity
        return out

    return reduced(L1) == reduced(L2)


# ---------------------------------------------------------------------------
# Saturation and the regular-singularity verdict


@dataclass
class NotFoundWithinBounds:
    reason: str
    pole_trace: list[int]
    iterations: int


@dataclass
class Saturation:
    lattice: Optional[PolyLattice]
    log_lattice: Optional[LogLattice]
    iterations: int
    pole_trace: list[int]
    found: bool
    reason: str = ""


def saturate(E: StratifiedBundle, max_pole: Optional[int] = None, max_iter: int = 64,
             start: Optional[PolyLattice] = None) -> Saturation:
    """Smallest delta-stable lattice containing ``start`` (default: standard)."""
    p, r = E.p, E.rank
    if max_pole is None:
        max_pole = default_max_pole(E)
    lat = start if start is not None else PolyLattice.standard(r, p)
    trace = [lat.pole_order]
    for it in range(1, max_iter + 1):
        gens = lat.generators()
        new = list(gens)
        for m in range(E.level + 1):
            q = p**m
            for g in gens:
                new.append(tuple(f.shift(q) for f in E.apply_gen(m, g)))
        nxt = PolyLattice.from_generators(new, r, p)
        if nxt == lat:
            log = LogLattice.from_frame(E, lat.basis())
            return Saturation(lat, log, it, trace, True)
        trace.append(nxt.pole_order)
        if nxt.pole_order > max_pole:
            return Saturation(None, None, it, trace, False, f"pole order {nxt.pole_order} exceeds {max_pole}")
        lat = nxt
    return Saturation(None, None, max_iter, trace, False, f"no stabilization within {max_iter} iterations")


def default_max_pole(E: StratifiedBundle) -> int:
    return 2 * E.rank * E.p ** (E.level + 1)


def find_log_lattice(E: StratifiedBundle, max_pole: Optional[int] = None, max_iter: int = 64,
                     start: Optional[PolyLattice] = None) -> Union[LogLattice, NotFoundWithinBounds]:
    """Saturate the start lattice under ``delta^(p^m)``, ``m <= M``.

    Failure within the bounds is evidence, not proof, of irregularity.
    """
    s = saturate(E, max_pole, max_iter, start)
    if s.found:
        return s.log_lattice
    return NotFoundWithinBounds(s.reason, s.pole_trace, s.iterations)


RS = "RS_AT_LEVEL"
WILD = "WILD_EVIDENCE"
INCONCLUSIVE = "INCONCLUSIVE"


@dataclass
class RSReport:
    verdict: str
    level: int
    stable_from: Optional[int]
    pole_trace: list[Optional[int]]
    iterations: list[int]
    exponents: Optional[ExponentReport]
    parameters: dict = field(default_factory=dict)
    lattice: Optional[LogLattice] = None

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "level": self.level,
            "stable_from": self.stable_from,
            "pole_trace": self.pole_trace,
            "iterations": self.iterations,
            "exponents": None if self.exponents is None else self.exponents.to_json(),
            "parameters": self.parameters,
        }


def rs_verdict(E: StratifiedBundle, levels: Optional[int] = None, max_pole: Optional[int] = None,
               max_iter: int = 64, denom_bound: Optional[int] = None) -> RSReport:
    """Saturate at every truncation level ``0..levels`` and compare.

    ``RS_AT_LEVEL`` when a log lattice exists at the top level and the last
    two levels produce the same lattice; ``WILD_EVIDENCE`` when the minimal
    pole order strictly increases at every level step; otherwise
    ``INCONCLUSIVE``.
    """
    M = E.level if levels is None else levels
    if max_pole is None:
        max_pole = default_max_pole(E.truncate(M))
    sats = [saturate(E.truncate(m), max_pole, max_iter) for m in range(M + 1)]
    trace = [s.lattice.pole_order if s.found else None for s in sats]
    params = {"levels": M, "max_pole": max_pole, "max_iter": max_iter}
    increasing = M >= 1 and all(
        a is not None and (b is None or b > a) for a, b in zip(trace, trace[1:]))
    stable_from = None
    if sats[M].found:
        stable_from = M
        while stable_from > 0 and sats[stable_from - 1].found and sats[stable_from - 1].lattice == sats[M].lattice:
            stable_from -= 1
    if sats[M].found and (M == 0 or stable_from < M):
        log = sats[M].log_lattice
        rep = exponents(log, denom_bound)
        params["denom_bound"] = rep.denom_bound
        return RSReport(RS, M, stable_from, trace, [s.iterations for s in sats], rep, params, log)
    if increasing and (M == 0 or trace[-1] is None or trace[-1] > trace[-2]):
        return RSReport(WILD, M, None, trace, [s.iterations for s in sats], None, params)
    return RSReport(INCONCLUSIVE, M, stable_from, trace, [s.iterations for s in sats], None, params)


# ---------------------------------------------------------------------------
# Zero exponents: the logarithmic structure extends across the boundary


def promote_zero_exponents(L: LogLattice, window: Optional[int] = None) -> StratifiedBundle:
    """Stratified bundle on the whole line (polynomial ``d^(p^m)`` matrices).

    The lattice basis is replaced by sections killed by every ``d^(n)``,
    ``0 < n < p^M`` (iterated Cartier descent); in that basis ``d^(p^M)`` has
    polynomial entries because every exponent is zero.  ``window`` bounds the
    degrees searched; by default it starts at ``rank * p^M`` and doubles.
    """
    dec = residue_decomposition(L)
    for d in dec.blocks:
        if any(d.digits):
            raise NonzeroExponent(f"exponent {d} is not zero")
    E = L.bundle()
    p, M = L.p, L.level
    if M == 0:
        P = Matrix.identity(L.rank, p)
    else:
        widths = [window] if window is not None else [L.rank * p**M * 2**k for k in range(4)]
        P = None
        for w in widths:
            P = flat_frame(E, M, (0, w), polynomial=True)
            if P is not None:
                break
        if P is None:
            raise ValueError(f"no descent frame with degrees <= {widths[-1]}")
    G = gauge(E, P)
    if not G.is_pole_free():
        raise ValueError("promoted operators have poles")
    G.name = f"promote({L.name})"
    return G


def frame_isomorphism(L1: LogLattice, L2: LogLattice) -> Optional[Matrix]:
    """Basis change ``T`` with ``frame2 @ T = frame1`` if it is invertible over F_p[x].

    Both lattices must carry frames in the same reference bundle.  ``T`` is
    then a horizontal isomorphism ``L1.bundle() -> L2.bundle()`` respecting
    the lattices; None means the two frames span different lattices.
    """
    if L1.frame is None or L2.frame is None:
        raise ValueError("both lattices need frames")
    T = inverse(L2.frame) @ L1.frame
    if not T.is_polynomial():
        return None
    try:
        Tinv = inverse(T)
    except Exception:
        return None
    return T if Tinv.is_polynomial() else None
