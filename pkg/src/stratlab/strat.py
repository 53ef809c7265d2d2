"""Level-truncated stratified bundles on the punctured line ``Spec F_p[x, 1/x]``.

A bundle of rank ``r`` and level ``M`` is stored as the matrices ``D[m]`` of
``d^(p^m)`` (divided-power derivative) on the standard basis, ``m <= M``.  The
matrices ``theta(n)`` of every ``d^(n)`` with ``n < p^(M+1)`` are reconstructed
from the generators; a section ``s = sum f_j e_j`` is acted on through the
Leibniz rule ``d^(n)(f e) = sum_{a+b=n} d^(a)(f) d^(b)(e)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ContextMismatch, LevelExceeded, NotDescendable, RankMismatch, WindowTooSmall
from .laurent import LaurentPoly, Matrix, det, dp_derivative, inverse, nullspace_mod
from .padics import PrimeField

Section = tuple  # tuple of LaurentPoly, one per basis vector


def _zero_section(r: int, p: int) -> Section:
    z = LaurentPoly.zero(p)
    return (z,) * r


def _add_sections(s: Sequence[LaurentPoly], t: Sequence[LaurentPoly]) -> Section:
    return tuple(a + b for a, b in zip(s, t))


def _digits(n: int, p: int) -> list[int]:
    out = []
    while n:
        n, d = divmod(n, p)
        out.append(d)
    return out


class StratifiedBundle:
    """Free rank-r module with generators ``d^(p^m)``, ``m <= level``."""

    def __init__(self, p: int, gens: Sequence[Matrix], name: str = ""):
        PrimeField(p)
        if not gens:
            raise ValueError("at least one generator matrix is required")
        r = gens[0].shape[0]
        for g in gens:
            if g.p != p:
                raise ContextMismatch("generator over a different prime")
            if g.shape != (r, r):
                raise RankMismatch(f"generator of shape {g.shape}, expected {(r, r)}")
        self.p = p
        self.rank = r
        self.level = len(gens) - 1
        self.D = tuple(gens)
        self.name = name
        self._theta: dict[int, Matrix] = {0: Matrix.identity(r, p)}
        for m, g in enumerate(self.D):
            self._theta[p**m] = g

    # -- constructors ------------------------------------------------------
    @classmethod
    def trivial(cls, rank: int, p: int, level: int) -> "StratifiedBundle":
        z = Matrix.zeros(rank, rank, p)
        return cls(p, [z] * (level + 1), name="trivial")

    def truncate(self, level: int) -> "StratifiedBundle":
        if level > self.level:
            raise LevelExceeded(f"bundle only has level {self.level}")
        return StratifiedBundle(self.p, self.D[: level + 1], name=self.name)

    def __eq__(self, other):
        if not isinstance(other, StratifiedBundle):
            return NotImplemented
        return self.p == other.p and self.D == other.D

    def __hash__(self):
        return hash((self.p, self.D))

    def __repr__(self):
        return f"StratifiedBundle(p={self.p}, rank={self.rank}, level={self.level})"

    def pole_order(self) -> int:
        return max(g.pole_order() for g in self.D)

    def is_pole_free(self) -> bool:
        return all(g.is_polynomial() for g in self.D)

    # -- operator calculus -------------------------------------------------
    def theta(self, n: int) -> Matrix:
        """Matrix of ``d^(n)`` on the basis, for ``0 <= n < p^(level+1)``."""
        p = self.p
        if n >= p ** (self.level + 1):
            raise LevelExceeded(f"order {n} needs level > {self.level}")
        t = self._theta.get(n)
        if t is not None:
            return t
        for k in range(1, n + 1):
            if k in self._theta:
                continue
            d = _digits(k, p)
            m = next(i for i, c in enumerate(d) if c)
            prev = self._theta[k - p**m]
            inv = pow(d[m], -1, p)
            cols = [self.apply_gen(m, prev.column(j)) for j in range(self.rank)]
            self._theta[k] = Matrix.from_columns(cols, p).scale(inv)
        return self._theta[n]

    def apply_table(self, n: int, s: Sequence[LaurentPoly]) -> Section:
        """``d^(n)(s)`` via Leibniz against the full operator table."""
        out = _zero_section(self.rank, self.p)
        for j, f in enumerate(s):
            if not f:
                continue
            for a in range(n + 1):
                da = dp_derivative(f, a)
                if not da:
                    continue
                col = self.theta(n - a).column(j)
                out = tuple(o + da * c if c else o for o, c in zip(out, col))
        return out

    def apply_gen(self, m: int, s: Sequence[LaurentPoly]) -> Section:
        """Action of the level-m generator ``d^(p^m)`` on a section."""
        if m > self.level:
            raise LevelExceeded(f"generator {m} beyond level {self.level}")
        return self.apply_table(self.p**m, s)

    def apply(self, n: int, s: Sequence[LaurentPoly]) -> Section:
        """``d^(n)(s)`` as a composite of generators divided by ``prod n_m!``."""
        p = self.p
        if n < 0 or n >= p ** (self.level + 1):
            raise LevelExceeded(f"order {n} needs level > {self.level}")
        if len(s) != self.rank:
            raise RankMismatch("section length differs from rank")
        s = tuple(s)
        unit = 1
        for m, c in enumerate(_digits(n, p)):
            for k in range(1, c + 1):
                s = self.apply_gen(m, s)
                unit = unit * k % p
        inv = pow(unit, -1, p)
        return tuple(f * inv for f in s)

    def monomial_section(self, j: int, k: int) -> Section:
        z = LaurentPoly.zero(self.p)
        return tuple(LaurentPoly.monomial(k, 1, self.p) if i == j else z for i in range(self.rank))

    def default_window(self) -> tuple[int, int]:
        """``[-w, w]`` with ``w = r (N+1) p^M`` for the current pole order N."""
        w = self.rank * (self.pole_order() + 1) * self.p**self.level
        return -w, w


# ---------------------------------------------------------------------------
# Validation


@dataclass
class ValidationReport:
    passed: bool
    label: str
    window: tuple[int, int]
    checks: int
    failures: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "label": self.label,
            "window": list(self.window),
            "checks": self.checks,
            "failures": self.failures,
        }


def validation_window(E: StratifiedBundle) -> tuple[int, int]:
    w = min(E.p ** (E.level + 1), 16)
    return -w, w


def validate(E: StratifiedBundle, window: Optional[tuple[int, int]] = None) -> ValidationReport:
    """Check the necessary divided-power identities on monomial sections.

    Checks generator commutation, p-fold nilpotence of each generator, and
    ``d^(p^a) d^(p^b) = d^(p^a + p^b)`` (Leibniz table) for ``a != b``.
    Never raises; failures are listed in the report.
    """
    lo, hi = window if window is not None else validation_window(E)
    p, M = E.p, E.level
    failures: list[dict] = []
    checks = 0
    try:
        for j in range(E.rank):
            for k in range(lo, hi + 1):
                s = E.monomial_section(j, k)
                gens = [E.apply_gen(m, s) for m in range(M + 1)]
                for m in range(M + 1):
                    t = gens[m]
                    for _ in range(p - 1):
                        t = E.apply_gen(m, t)
                    checks += 1
                    if any(t):
                        failures.append({"identity": f"p-power: (d^({p**m}))^{p} = 0",
                                         "section": f"x^{k} e_{j}", "residual": [repr(f) for f in t]})
                for a in range(M + 1):
                    for b in range(a + 1, M + 1):
                        ab = E.apply_gen(a, gens[b])
                        ba = E.apply_gen(b, gens[a])
                        checks += 1
                        if ab != ba:
                            failures.append({"identity": f"commutation: [d^({p**a}), d^({p**b})] = 0",
                                             "section": f"x^{k} e_{j}"})
                        checks += 1
                        if ab != E.apply_table(p**a + p**b, s):
                            failures.append({"identity": f"composite: d^({p**a}) d^({p**b}) = d^({p**a + p**b})",
                                             "section": f"x^{k} e_{j}"})
    except Exception as exc:  # report, never raise
        failures.append({"identity": "evaluation", "error": f"{type(exc).__name__}: {exc}"})
    return ValidationReport(
        passed=not failures,
        label="admissible (necessary identities)" if not failures else "not admissible",
        window=(lo, hi),
        checks=checks,
        failures=failures,
    )


# ---------------------------------------------------------------------------
# Tensor constructions


def _same_context(E: StratifiedBundle, F: StratifiedBundle):
    if E.p != F.p or E.level != F.level:
        raise ContextMismatch(f"bundles over (p={E.p}, M={E.level}) and (p={F.p}, M={F.level})")


def tensor(E: StratifiedBundle, F: StratifiedBundle) -> StratifiedBundle:
    """Basis ``e_i (x) f_k`` at index ``i * rank(F) + k``."""
    _same_context(E, F)
    gens = []
    for m in range(E.level + 1):
        q = E.p**m
        acc = Matrix.zeros(E.rank * F.rank, E.rank * F.rank, E.p)
        for a in range(q + 1):
            ta, tb = E.theta(a), F.theta(q - a)
            if ta.is_zero() or tb.is_zero():
                continue
            acc = acc + ta.kron(tb)
        gens.append(acc)
    return StratifiedBundle(E.p, gens, name=f"({E.name})⊗({F.name})")


def dual(E: StratifiedBundle) -> StratifiedBundle:
    """Dual bundle: the evaluation pairing is horizontal at every order."""
    p = E.p
    top = p**E.level
    star = [Matrix.identity(E.rank, p)]
    for n in range(1, top + 1):
        acc = Matrix.zeros(E.rank, E.rank, p)
        for a in range(n):
            t = E.theta(n - a)
            if not t.is_zero():
                acc = acc + t.transpose() @ star[a]
        star.append(-acc)
    return StratifiedBundle(p, [star[p**m] for m in range(E.level + 1)], name=f"({E.name})^*")


def direct_sum(E: StratifiedBundle, F: StratifiedBundle) -> StratifiedBundle:
    _same_context(E, F)
    return StratifiedBundle(E.p, [a.block_diag(b) for a, b in zip(E.D, F.D)], name=f"({E.name})⊕({F.name})")


def hom_bundle(E: StratifiedBundle, F: StratifiedBundle) -> StratifiedBundle:
    """``Hom(E, F) = E^* (x) F``; see :func:`section_to_matrix` for the basis."""
    return tensor(dual(E), F)


def section_to_matrix(s: Sequence[LaurentPoly], rank_e: int, rank_f: int, p: int) -> Matrix:
    """Read a section of ``hom_bundle(E, F)`` as a ``rank_f x rank_e`` matrix."""
    return Matrix([[s[i * rank_f + k] for i in range(rank_e)] for k in range(rank_f)], p)


def matrix_to_section(T: Matrix) -> Section:
    rf, re = T.shape
    return tuple(T[k, i] for i in range(re) for k in range(rf))


def gauge(E: StratifiedBundle, P: Matrix) -> StratifiedBundle:
    """The same bundle written in the basis given by the columns of ``P``."""
    Pinv = inverse(P)
    cols = P.columns()
    gens = []
    for m in range(E.level + 1):
        image = Matrix.from_columns([E.apply_gen(m, c) for c in cols], E.p)
        gens.append(Pinv @ image)
    return StratifiedBundle(E.p, gens, name=E.name)


# ---------------------------------------------------------------------------
# Horizontal sections


def _kernel(E: StratifiedBundle, levels: Sequence[int], window: tuple[int, int]) -> list[Section]:
    """F_p-basis of sections with exponents in ``window`` killed by the given generators."""
    lo, hi = window
    if lo > hi:
        raise ValueError("empty window")
    p, r = E.p, E.rank
    unknowns = [(j, k) for j in range(r) for k in range(lo, hi + 1)]
    row_index: dict[tuple[int, int, int], int] = {}
    entries: list[tuple[int, int, int]] = []
    for col, (j, k) in enumerate(unknowns):
        s = E.monomial_section(j, k)
        for m in levels:
            img = E.apply_gen(m, s)
            for comp, f in enumerate(img):
                for e, c in f._c.items():
                    key = (m, comp, e)
                    row = row_index.setdefault(key, len(row_index))
                    entries.append((row, col, c))
    a = np.zeros((len(row_index), len(unknowns)), dtype=np.int64)
    for row, col, c in entries:
        a[row, col] = (a[row, col] + c) % p
    out = []
    for v in nullspace_mod(a, p):
        comps = [dict() for _ in range(r)]
        for col in np.nonzero(v)[0]:
            j, k = unknowns[col]
            comps[j][k] = int(v[col])
        out.append(tuple(LaurentPoly(c, p) for c in comps))
    return out


def horizontal_sections(E: StratifiedBundle, window: Optional[tuple[int, int]] = None) -> list[Section]:
    """Basis of horizontal sections with component exponents inside ``window``.

    Semi-decision: horizontal sections with exponents outside the window are
    not found.  Checking the generators suffices because every ``d^(n)`` is a
    composite of them.
    """
    if window is None:
        window = E.default_window()
    return _kernel(E, range(E.level + 1), window)


def horizontal_morphisms(E: StratifiedBundle, F: StratifiedBundle, window: tuple[int, int]) -> list[Matrix]:
    """Horizontal sections of ``Hom(E, F)`` solved directly as matrices.

    A Laurent matrix ``T`` (``rank F x rank E``, entries with exponents in
    ``window``) is horizontal iff ``T theta_E(p^m) = d^(p^m)(T)`` for every
    generator, where the right side acts on the columns of ``T`` in ``F``.
    This is the same linear system as ``horizontal_sections(hom_bundle(E, F))``
    without forming the rank ``rE * rF`` operator table.
    """
    _same_context(E, F)
    lo, hi = window
    p, re, rf = E.p, E.rank, F.rank
    unknowns = [(k, i, e) for k in range(rf) for i in range(re) for e in range(lo, hi + 1)]
    cache: dict[tuple[int, int, int], Section] = {}
    row_index: dict[tuple[int, int, int, int], int] = {}
    entries = []
    for col, (k, i, e) in enumerate(unknowns):
        mono = LaurentPoly.monomial(e, 1, p)
        for m in range(E.level + 1):
            # T theta_E: row k of T is x^e at column i -> row k picks theta_E row i
            th = E.theta(p**m)
            for jj in range(re):
                f = mono * th[i, jj]
                for ex, c in f._c.items():
                    key = (m, k, jj, ex)
                    entries.append((row_index.setdefault(key, len(row_index)), col, c))
            key_c = (m, k, e)
            img = cache.get(key_c)
            if img is None:
                img = F.apply_gen(m, F.monomial_section(k, e))
                cache[key_c] = img
            # column i of T is this section; subtract its image
            for kk, f in enumerate(img):
                for ex, c in f._c.items():
                    key = (m, kk, i, ex)
                    entries.append((row_index.setdefault(key, len(row_index)), col, -c))
    a = np.zeros((len(row_index), len(unknowns)), dtype=np.int64)
    for row, col, c in entries:
        a[row, col] = (a[row, col] + c) % p
    out = []
    for v in nullspace_mod(a, p):
        ent = [[dict() for _ in range(re)] for _ in range(rf)]
        for col in np.nonzero(v)[0]:
            k, i, e = unknowns[col]
            ent[k][i][e] = int(v[col])
        out.append(Matrix([[LaurentPoly(d, p) for d in row] for row in ent], p))
    return out


def is_horizontal_morphism(E: StratifiedBundle, F: StratifiedBundle, T: Matrix) -> bool:
    p = E.p
    for m in range(E.level + 1):
        lhs = T @ E.theta(p**m)
        rhs = Matrix.from_columns([F.apply_gen(m, c) for c in T.columns()], p)
        if lhs != rhs:
            return False
    return True


# ---------------------------------------------------------------------------
# Cartier descent


def _echelon_poly(cols: list[list[LaurentPoly]], nrows: int, p: int) -> list[list[LaurentPoly]]:
    """Basis of the F_p[v]-span of polynomial columns (echelon, not reduced)."""
    active = [c for c in cols if any(c)]
    basis = []
    for i in range(nrows):
        while True:
            nz = [k for k, c in enumerate(active) if c[i]]
            if not nz:
                break
            piv = min(nz, key=lambda k: (active[k][i].deg, k))
            pc = active[piv]
            clean = True
            for k in nz:
                if k == piv:
                    continue
                q, rem = active[k][i].poly_divmod(pc[i])
                active[k] = [x - q * y for x, y in zip(active[k], pc)]
                if rem:
                    clean = False
            if clean:
                break
        if any(c[i] for c in active):
            pc = active.pop(piv)
            basis.append(pc)
            active = [c for c in active if any(c)]
    return basis


def _contract(f: LaurentPoly, q: int) -> LaurentPoly:
    """``g`` with ``f(x) = g(x^q)``; raises if f is not a function of ``x^q``."""
    c = {}
    for k, v in f._c.items():
        if k % q:
            raise NotDescendable(f"{f} is not a function of x^{q}")
        c[k // q] = v
    return LaurentPoly(c, f.p)


def flat_frame(E: StratifiedBundle, depth: int, window: tuple[int, int], polynomial: bool) -> Optional[Matrix]:
    """Basis of E made of sections killed by ``d^(n)`` for ``0 < n < p^depth``.

    Solutions inside ``window`` are split by exponent class mod ``q = p^depth``
    into vectors over ``F_p[v]``, ``v = x^q``, and echelonized.  Returns the
    frame (columns) if it is invertible over F_p[x, 1/x] (or unimodular over
    F_p[x] when ``polynomial``), else None.
    """
    p, r = E.p, E.rank
    q = p**depth
    sols = _kernel(E, range(depth), window)
    if len(sols) < r:
        return None
    lo = window[0]
    s0 = (lo // q) * q
    vecs = []
    for s in sols:
        v = []
        for j in range(r):
            parts = [dict() for _ in range(q)]
            for k, c in s[j]._c.items():
                t, i = divmod(k - s0, q)
                parts[i][t] = c
            v.extend(LaurentPoly(d, p) for d in parts)
        vecs.append(v)
    basis = _echelon_poly(vecs, r * q, p)
    if len(basis) != r:
        return None
    cols = []
    for b in basis:
        comps = []
        for j in range(r):
            f = LaurentPoly.zero(p)
            for i in range(q):
                f = f + b[j * q + i].subs_power(q).shift(s0 + i)
            comps.append(f)
        if not polynomial:
            # normalize by a unit v^t so the lowest exponent lies in [0, q)
            low = int(min(f.val for f in comps if f))
            comps = [f.shift(-(low // q) * q) for f in comps]
        cols.append(tuple(comps))
    P = Matrix.from_columns(cols, p)
    d = det(P)
    if polynomial:
        if not P.is_polynomial() or not (d.is_monomial() and d.deg == 0):
            return None
    elif not d.is_monomial():
        return None
    return P


def p_curvature_vanishes(E: StratifiedBundle, window: Optional[tuple[int, int]] = None) -> bool:
    lo, hi = window if window is not None else validation_window(E)
    for j in range(E.rank):
        for k in range(lo, hi + 1):
            t = E.monomial_section(j, k)
            for _ in range(E.p):
                t = E.apply_gen(0, t)
            if any(t):
                return False
    return True


@dataclass
class Descent:
    bundle: StratifiedBundle  # level M-1, in the variable u = x^p
    frame: Matrix  # flat basis, columns in the original basis


def cartier_descend(E: StratifiedBundle, window: Optional[tuple[int, int]] = None) -> Descent:
    """Descend along Frobenius using the kernel of the level-0 connection.

    Raises NotDescendable if the level is 0 or the p-curvature is nonzero, and
    WindowTooSmall if no flat basis is found with exponents in ``window``.
    """
    if E.level < 1:
        raise NotDescendable("level 0 bundles have nothing to descend to")
    if not p_curvature_vanishes(E):
        raise NotDescendable("p-curvature of the level-0 connection is nonzero")
    if window is None:
        window = E.default_window()
    P = flat_frame(E, 1, window, polynomial=False)
    if P is None:
        raise WindowTooSmall(f"fewer than {E.rank} independent flat sections in window {window}")
    Pinv = inverse(P)
    p = E.p
    gens = []
    for m in range(1, E.level + 1):
        image = Matrix.from_columns([E.apply_gen(m, c) for c in P.columns()], p)
        gens.append((Pinv @ image).map(lambda f: _contract(f, p)))
    return Descent(StratifiedBundle(p, gens, name=f"descent({E.name})"), P)


def frobenius_pullback(G: StratifiedBundle) -> StratifiedBundle:
    """Pull back along ``x -> x^p``: the old basis becomes flat at level 0."""
    p = G.p
    gens = [Matrix.zeros(G.rank, G.rank, p)] + [g.subs_power(p) for g in G.D]
    return StratifiedBundle(p, gens, name=f"F^*({G.name})")
