"""Laurent polynomials over F_p, their matrices, and polynomial lattices.

The only variable is ``x``; the boundary divisor is ``x = 0``.  Lattices are
free F_p[x]-modules sitting between ``x^N`` and ``x^(-N)`` times the standard
lattice and are kept in column Hermite normal form, which makes equality a
comparison of normal forms.
"""
from __future__ import annotations

import re
from typing import Iterable, Sequence

import numpy as np

from .errors import ContextMismatch, NotInvertible, ParseError, RankMismatch
from .padics import binom_int


class LaurentPoly:
    """Sparse Laurent polynomial with coefficients in F_p; immutable."""

    __slots__ = ("p", "_c", "_hash")

    def __init__(self, coeffs, p: int):
        self.p = p
        c = {}
        if coeffs:
            for k, v in dict(coeffs).items():
                v %= p
                if v:
                    c[int(k)] = v
        self._c = c
        self._hash = None

    @classmethod
    def _raw(cls, c: dict, p: int) -> "LaurentPoly":
        obj = cls.__new__(cls)
        obj.p = p
        obj._c = c
        obj._hash = None
        return obj

    @classmethod
    def zero(cls, p: int) -> "LaurentPoly":
        return cls._raw({}, p)

    @classmethod
    def one(cls, p: int) -> "LaurentPoly":
        return cls._raw({0: 1}, p)

    @classmethod
    def monomial(cls, k: int, c: int, p: int) -> "LaurentPoly":
        c %= p
        return cls._raw({k: c} if c else {}, p)

    @classmethod
    def const(cls, c: int, p: int) -> "LaurentPoly":
        return cls.monomial(0, c, p)

    # -- structure -------------------------------------------------------
    def items(self) -> list[tuple[int, int]]:
        return sorted(self._c.items())

    def coeff(self, k: int) -> int:
        return self._c.get(k, 0)

    def is_zero(self) -> bool:
        return not self._c

    def __bool__(self):
        return bool(self._c)

    @property
    def val(self) -> float:
        """x-adic valuation; ``inf`` for zero."""
        return min(self._c) if self._c else float("inf")

    @property
    def deg(self) -> float:
        return max(self._c) if self._c else float("-inf")

    def span(self) -> int:
        return max(self._c) - min(self._c) if self._c else -1

    def is_polynomial(self) -> bool:
        return not self._c or min(self._c) >= 0

    def is_monomial(self) -> bool:
        """Units of the Laurent ring are exactly the nonzero monomials."""
        return len(self._c) == 1

    # -- arithmetic ------------------------------------------------------
    def _check(self, other: "LaurentPoly"):
        if other.p != self.p:
            raise ContextMismatch(f"cannot combine polynomials over F_{self.p} and F_{other.p}")

    def __add__(self, other):
        if isinstance(other, int):
            other = LaurentPoly.const(other, self.p)
        self._check(other)
        p = self.p
        c = dict(self._c)
        for k, v in other._c.items():
            s = (c.get(k, 0) + v) % p
            if s:
                c[k] = s
            else:
                c.pop(k, None)
        return LaurentPoly._raw(c, p)

    __radd__ = __add__

    def __neg__(self):
        p = self.p
        return LaurentPoly._raw({k: p - v for k, v in self._c.items()}, p)

    def __sub__(self, other):
        if isinstance(other, int):
            other = LaurentPoly.const(other, self.p)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        p = self.p
        if isinstance(other, int):
            other %= p
            if not other:
                return LaurentPoly._raw({}, p)
            return LaurentPoly._raw({k: v * other % p for k, v in self._c.items()}, p)
        self._check(other)
        if not self._c or not other._c:
            return LaurentPoly._raw({}, p)
        c: dict[int, int] = {}
        for k1, v1 in self._c.items():
            for k2, v2 in other._c.items():
                k = k1 + k2
                c[k] = (c.get(k, 0) + v1 * v2) % p
        return LaurentPoly._raw({k: v for k, v in c.items() if v}, p)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            if not self.is_monomial():
                raise NotInvertible(f"{self} is not a unit")
            (k, v), = self._c.items()
            return LaurentPoly.monomial(-k * (-n), pow(v, n, self.p), self.p)
        out = LaurentPoly.one(self.p)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def shift(self, k: int) -> "LaurentPoly":
        """Multiply by ``x^k``."""
        if k == 0:
            return self
        return LaurentPoly._raw({e + k: v for e, v in self._c.items()}, self.p)

    def subs_power(self, e: int) -> "LaurentPoly":
        """``f(x^e)``."""
        return LaurentPoly._raw({k * e: v for k, v in self._c.items()}, self.p)

    def unit_inverse(self) -> "LaurentPoly":
        return self ** -1

    def _normalized(self):
        v = min(self._c)
        return v, self.shift(-v)

    def poly_divmod(self, other: "LaurentPoly"):
        """Long division of polynomials (valuations must be >= 0)."""
        self._check(other)
        if other.is_zero():
            raise ZeroDivisionError("division by zero polynomial")
        p = self.p
        dd = max(other._c)
        inv_lead = pow(other._c[dd], -1, p)
        rem = dict(self._c)
        quo: dict[int, int] = {}
        while rem:
            top = max(rem)
            if top < dd:
                break
            f = rem[top] * inv_lead % p
            shift = top - dd
            quo[shift] = f
            for k, v in other._c.items():
                kk = k + shift
                s = (rem.get(kk, 0) - f * v) % p
                if s:
                    rem[kk] = s
                else:
                    rem.pop(kk, None)
        return LaurentPoly._raw(quo, p), LaurentPoly._raw(rem, p)

    def laurent_divmod(self, other: "LaurentPoly"):
        """Euclidean division in F_p[x, 1/x] with norm ``deg - val``."""
        if other.is_zero():
            raise ZeroDivisionError("division by zero polynomial")
        if self.is_zero():
            return self, self
        u, a0 = self._normalized()
        v, b0 = other._normalized()
        q0, r0 = a0.poly_divmod(b0)
        return q0.shift(u - v), r0.shift(u)

    def __eq__(self, other):
        if isinstance(other, LaurentPoly):
            return self.p == other.p and self._c == other._c
        if isinstance(other, int):
            return self._c == LaurentPoly.const(other, self.p)._c
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.p, frozenset(self._c.items())))
        return self._hash

    # -- text and serialization -----------------------------------------
    def to_pairs(self) -> list[list[int]]:
        return [[k, v] for k, v in self.items()]

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[int]], p: int) -> "LaurentPoly":
        c = {}
        last = None
        for pair in pairs:
            if len(pair) != 2 or not all(isinstance(t, int) and not isinstance(t, bool) for t in pair):
                raise ParseError(f"bad [exponent, coefficient] pair {pair!r}")
            k, v = pair
            if last is not None and k <= last:
                raise ParseError("exponents must be strictly increasing")
            if not 1 <= v < p:
                raise ParseError(f"coefficient {v} not in [1, {p})")
            last = k
            c[k] = v
        return cls._raw(c, p)

    _TERM = re.compile(r"^(?:(\d+)\*?)?(?:x(?:\^\(?(-?\d+)\)?)?)?$")

    @classmethod
    def parse(cls, text: str, p: int) -> "LaurentPoly":
        """Parse strings like ``"x^-1 + 2*x^3 - 1"``."""
        s = text.replace(" ", "")
        if not s:
            raise ParseError("empty polynomial")
        s = s.replace("-", "+-").replace("^+-", "^-").replace("(+-", "(-")
        out = cls.zero(p)
        for term in s.split("+"):
            if not term:
                continue
            sign = 1
            if term.startswith("-"):
                sign, term = -1, term[1:]
            m = cls._TERM.match(term)
            if not m or not term:
                raise ParseError(f"cannot parse term {term!r} in {text!r}")
            coef = int(m.group(1)) if m.group(1) else 1
            if "x" in term:
                exp = int(m.group(2)) if m.group(2) is not None else 1
            else:
                if m.group(1) is None:
                    raise ParseError(f"cannot parse term {term!r}")
                exp = 0
            out = out + cls.monomial(exp, sign * coef, p)
        return out

    def __repr__(self):
        if not self._c:
            return "0"
        parts = []
        for k, v in self.items():
            if k == 0:
                parts.append(str(v))
            else:
                mon = "x" if k == 1 else f"x^{k}"
                parts.append(mon if v == 1 else f"{v}*{mon}")
        return " + ".join(parts)


def dp_derivative(f: LaurentPoly, a: int) -> LaurentPoly:
    """Divided-power derivative: ``x^k -> binom(k, a) x^(k-a)``."""
    if a == 0:
        return f
    p = f.p
    c = {}
    for k, v in f._c.items():
        b = binom_int(k, a, p)
        if b:
            c[k - a] = v * b % p
    return LaurentPoly._raw(c, p)


def log_dp_derivative(f: LaurentPoly, a: int) -> LaurentPoly:
    """``x^a`` times the divided-power derivative; diagonal on monomials."""
    if a == 0:
        return f
    p = f.p
    c = {}
    for k, v in f._c.items():
        b = binom_int(k, a, p)
        if b:
            c[k] = v * b % p
    return LaurentPoly._raw(c, p)


class Matrix:
    """Dense matrix of LaurentPoly entries; immutable."""

    __slots__ = ("rows", "p")

    def __init__(self, rows: Sequence[Sequence[LaurentPoly]], p: int):
        self.rows = tuple(tuple(r) for r in rows)
        self.p = p
        if self.rows:
            w = len(self.rows[0])
            if any(len(r) != w for r in self.rows):
                raise ValueError("ragged matrix")

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.rows), (len(self.rows[0]) if self.rows else 0)

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    @classmethod
    def zeros(cls, n: int, m: int, p: int) -> "Matrix":
        z = LaurentPoly.zero(p)
        return cls([[z] * m for _ in range(n)], p)

    @classmethod
    def identity(cls, n: int, p: int) -> "Matrix":
        z, o = LaurentPoly.zero(p), LaurentPoly.one(p)
        return cls([[o if i == j else z for j in range(n)] for i in range(n)], p)

    @classmethod
    def diag(cls, entries: Sequence[LaurentPoly], p: int) -> "Matrix":
        n = len(entries)
        z = LaurentPoly.zero(p)
        return cls([[entries[i] if i == j else z for j in range(n)] for i in range(n)], p)

    @classmethod
    def from_ints(cls, rows: Sequence[Sequence[int]], p: int) -> "Matrix":
        return cls([[LaurentPoly.const(int(v), p) for v in r] for r in rows], p)

    @classmethod
    def from_columns(cls, cols: Sequence[Sequence[LaurentPoly]], p: int) -> "Matrix":
        if not cols:
            raise ValueError("no columns")
        n = len(cols[0])
        return cls([[c[i] for c in cols] for i in range(n)], p)

    def column(self, j: int) -> tuple[LaurentPoly, ...]:
        return tuple(r[j] for r in self.rows)

    def columns(self) -> list[tuple[LaurentPoly, ...]]:
        return [self.column(j) for j in range(self.shape[1])]

    def map(self, fn) -> "Matrix":
        return Matrix([[fn(e) for e in r] for r in self.rows], self.p)

    def _check(self, other: "Matrix"):
        if other.p != self.p:
            raise ContextMismatch("matrices over different primes")

    def __add__(self, other: "Matrix") -> "Matrix":
        self._check(other)
        if self.shape != other.shape:
            raise ValueError("shape mismatch")
        return Matrix([[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(self.rows, other.rows)], self.p)

    def __sub__(self, other: "Matrix") -> "Matrix":
        return self + (-other)

    def __neg__(self):
        return self.map(lambda e: -e)

    def scale(self, f) -> "Matrix":
        return self.map(lambda e: e * f)

    def __matmul__(self, other: "Matrix") -> "Matrix":
        self._check(other)
        n, k = self.shape
        k2, m = other.shape
        if k != k2:
            raise ValueError("shape mismatch")
        z = LaurentPoly.zero(self.p)
        out = []
        for i in range(n):
            row = []
            ri = self.rows[i]
            for j in range(m):
                acc = z
                for t in range(k):
                    a = ri[t]
                    if a:
                        b = other.rows[t][j]
                        if b:
                            acc = acc + a * b
                row.append(acc)
            out.append(row)
        return Matrix(out, self.p)

    def apply(self, v: Sequence[LaurentPoly]) -> tuple[LaurentPoly, ...]:
        z = LaurentPoly.zero(self.p)
        out = []
        for r in self.rows:
            acc = z
            for a, b in zip(r, v):
                if a and b:
                    acc = acc + a * b
            out.append(acc)
        return tuple(out)

    def transpose(self) -> "Matrix":
        n, m = self.shape
        return Matrix([[self.rows[i][j] for i in range(n)] for j in range(m)], self.p)

    def kron(self, other: "Matrix") -> "Matrix":
        self._check(other)
        n1, m1 = self.shape
        n2, m2 = other.shape
        rows = []
        for i1 in range(n1):
            for i2 in range(n2):
                rows.append([self.rows[i1][j1] * other.rows[i2][j2] for j1 in range(m1) for j2 in range(m2)])
        return Matrix(rows, self.p)

    def block_diag(self, other: "Matrix") -> "Matrix":
        n1, m1 = self.shape
        n2, m2 = other.shape
        z = LaurentPoly.zero(self.p)
        rows = [list(r) + [z] * m2 for r in self.rows]
        rows += [[z] * m1 + list(r) for r in other.rows]
        return Matrix(rows, self.p)

    def subs_power(self, e: int) -> "Matrix":
        return self.map(lambda f: f.subs_power(e))

    def shift(self, k: int) -> "Matrix":
        return self.map(lambda f: f.shift(k))

    def is_zero(self) -> bool:
        return all(e.is_zero() for r in self.rows for e in r)

    def is_polynomial(self) -> bool:
        return all(e.is_polynomial() for r in self.rows for e in r)

    def pole_order(self) -> int:
        """Largest pole order among the entries (0 if polynomial)."""
        v = min((e.val for r in self.rows for e in r), default=float("inf"))
        return 0 if v == float("inf") or v >= 0 else int(-v)

    def residue(self) -> list[list[int]]:
        """Constant terms; meaningful for polynomial matrices (reduction mod x)."""
        return [[e.coeff(0) for e in r] for r in self.rows]

    def __eq__(self, other):
        if not isinstance(other, Matrix):
            return NotImplemented
        return self.p == other.p and self.rows == other.rows

    def __hash__(self):
        return hash((self.p, self.rows))

    def __repr__(self):
        return "Matrix(" + repr([list(r) for r in self.rows]) + ")"

    def to_json(self) -> list:
        return [[e.to_pairs() for e in r] for r in self.rows]

    @classmethod
    def from_json(cls, data, p: int) -> "Matrix":
        if not isinstance(data, list) or not all(isinstance(r, list) for r in data):
            raise ParseError("matrix must be a nested array")
        return cls([[LaurentPoly.from_pairs(e, p) for e in r] for r in data], p)


# ---------------------------------------------------------------------------
# Elimination over the Laurent ring (a Euclidean domain)


def _euclid_rows(a: list[list[LaurentPoly]], aug: list[list[LaurentPoly]] | None = None):
    """Row-reduce ``a`` in place to echelon form with Euclidean steps.

    Returns ``(pivot_columns, sign)``.  ``aug`` receives the same row operations.
    """
    n = len(a)
    m = len(a[0]) if n else 0
    r = 0
    sign = 1
    pivots = []
    for c in range(m):
        if r == n:
            break
        found = False
        while True:
            cand = [i for i in range(r, n) if a[i][c]]
            if not cand:
                break
            found = True
            piv = min(cand, key=lambda i: (a[i][c].span(), i))
            if piv != r:
                a[r], a[piv] = a[piv], a[r]
                if aug is not None:
                    aug[r], aug[piv] = aug[piv], aug[r]
                sign = -sign
            clean = True
            for i in range(r + 1, n):
                if not a[i][c]:
                    continue
                q, rem = a[i][c].laurent_divmod(a[r][c])
                a[i] = [x - q * y for x, y in zip(a[i], a[r])]
                if aug is not None:
                    aug[i] = [x - q * y for x, y in zip(aug[i], aug[r])]
                if rem:
                    clean = False
            if clean:
                break
        if found:
            pivots.append(c)
            r += 1
    return pivots, sign


def det(mat: Matrix) -> LaurentPoly:
    n, m = mat.shape
    if n != m:
        raise ValueError("determinant of a non-square matrix")
    a = [list(r) for r in mat.rows]
    pivots, sign = _euclid_rows(a)
    if len(pivots) < n:
        return LaurentPoly.zero(mat.p)
    out = LaurentPoly.const(sign, mat.p)
    for i in range(n):
        out = out * a[i][i]
    return out


def inverse(mat: Matrix) -> Matrix:
    """Inverse over F_p[x, 1/x]; raises NotInvertible unless det is a monomial."""
    n, m = mat.shape
    if n != m:
        raise NotInvertible("non-square matrix")
    p = mat.p
    a = [list(r) for r in mat.rows]
    aug = [list(r) for r in Matrix.identity(n, p).rows]
    pivots, _ = _euclid_rows(a, aug)
    if pivots != list(range(n)):
        raise NotInvertible("matrix is singular")
    for i in range(n - 1, -1, -1):
        d = a[i][i]
        if not d.is_monomial():
            raise NotInvertible(f"pivot {d} is not a unit of the Laurent ring")
        u = d.unit_inverse()
        a[i] = [x * u for x in a[i]]
        aug[i] = [x * u for x in aug[i]]
        for k in range(i):
            f = a[k][i]
            if f:
                a[k] = [x - f * y for x, y in zip(a[k], a[i])]
                aug[k] = [x - f * y for x, y in zip(aug[k], aug[i])]
    return Matrix(aug, p)


# ---------------------------------------------------------------------------
# Hermite normal form over F_p[x]


def hnf_columns(cols: Sequence[Sequence[LaurentPoly]], rank: int, p: int) -> list[list[LaurentPoly]]:
    """Column HNF of polynomial generators of a full-rank submodule of F_p[x]^rank.

    The result is lower triangular with monic pivots on the diagonal and the
    entries left of each pivot reduced modulo it.  Raises RankMismatch if the
    generators span less than full rank.
    """
    active = [list(c) for c in cols if any(c)]
    basis: list[list[LaurentPoly]] = []
    for i in range(rank):
        while True:
            nz = [k for k, c in enumerate(active) if c[i]]
            if not nz:
                raise RankMismatch(f"generators have rank < {rank}")
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
        pc = active.pop(piv)
        lead = pc[i].coeff(int(pc[i].deg))
        inv = pow(lead, -1, p)
        basis.append([x * inv for x in pc])
        active = [c for c in active if any(c)]
    for i in range(rank):
        piv = basis[i][i]
        for j in range(i):
            if basis[j][i]:
                q, _ = basis[j][i].poly_divmod(piv)
                if q:
                    basis[j] = [x - q * y for x, y in zip(basis[j], basis[i])]
    return basis


class PolyLattice:
    """Free F_p[x]-submodule of F_p[x, 1/x]^r spanned by ``x^(-N) * H``."""

    __slots__ = ("rank", "pole_order", "hermite", "p")

    def __init__(self, rank: int, pole_order: int, hermite: Matrix, p: int):
        self.rank = rank
        self.pole_order = pole_order
        self.hermite = hermite
        self.p = p

    @classmethod
    def from_generators(cls, gens: Sequence[Sequence[LaurentPoly]], rank: int, p: int) -> "PolyLattice":
        gens = [tuple(g) for g in gens]
        if any(len(g) != rank for g in gens):
            raise RankMismatch("generator length differs from rank")
        low = min((e.val for g in gens for e in g), default=0)
        n = int(max(0, -low)) if low != float("inf") else 0
        cols = [[e.shift(n) for e in g] for g in gens]
        h = hnf_columns(cols, rank, p)
        while n > 0 and all(e.is_zero() or e.val >= 1 for c in h for e in c):
            h = [[e.shift(-1) for e in c] for c in h]
            n -= 1
        return cls(rank, n, Matrix.from_columns(h, p), p)

    @classmethod
    def standard(cls, rank: int, p: int) -> "PolyLattice":
        return cls(rank, 0, Matrix.identity(rank, p), p)

    def basis(self) -> Matrix:
        return self.hermite.shift(-self.pole_order)

    def generators(self) -> list[tuple[LaurentPoly, ...]]:
        return self.basis().columns()

    def scaled(self, k: int) -> "PolyLattice":
        """``x^k`` times this lattice."""
        return PolyLattice.from_generators([[e.shift(k) for e in g] for g in self.generators()], self.rank, self.p)

    def _check(self, other: "PolyLattice"):
        if other.rank != self.rank:
            raise RankMismatch(f"ranks {self.rank} and {other.rank}")
        if other.p != self.p:
            raise ContextMismatch("lattices over different primes")

    def __eq__(self, other):
        if not isinstance(other, PolyLattice):
            return NotImplemented
        return (self.rank, self.pole_order, self.p, self.hermite) == (
            other.rank, other.pole_order, other.p, other.hermite)

    def __hash__(self):
        return hash((self.rank, self.pole_order, self.p, self.hermite))

    def __repr__(self):
        return f"PolyLattice(rank={self.rank}, pole_order={self.pole_order}, H={self.hermite!r})"


def lattice_sum(l1: PolyLattice, l2: PolyLattice) -> PolyLattice:
    l1._check(l2)
    return PolyLattice.from_generators(l1.generators() + l2.generators(), l1.rank, l1.p)


def lattice_equal(l1: PolyLattice, l2: PolyLattice) -> bool:
    l1._check(l2)
    return l1 == l2


def lattice_contains(l1: PolyLattice, l2: PolyLattice) -> bool:
    """True iff ``l2`` is a submodule of ``l1``."""
    return lattice_sum(l1, l2) == l1


# ---------------------------------------------------------------------------
# Linear algebra over F_p (numpy backed)


def rref_mod(a: np.ndarray, p: int) -> tuple[np.ndarray, list[int]]:
    a = np.array(a, dtype=np.int64) % p
    rows, cols = a.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(a[r:, c])[0]
        if nz.size == 0:
            continue
        i = r + int(nz[0])
        if i != r:
            a[[r, i]] = a[[i, r]]
        a[r] = a[r] * pow(int(a[r, c]), -1, p) % p
        others = np.nonzero(a[:, c])[0]
        others = others[others != r]
        if others.size:
            a[others] = (a[others] - np.outer(a[others, c], a[r])) % p
        pivots.append(c)
        r += 1
    return a[:r], pivots


def nullspace_mod(a: np.ndarray, p: int) -> list[np.ndarray]:
    """Basis of ``{v : a v = 0}`` over F_p, one vector per free column."""
    a = np.asarray(a, dtype=np.int64)
    cols = a.shape[1]
    if a.shape[0] == 0:
        return [np.eye(cols, dtype=np.int64)[i] for i in range(cols)]
    r, pivots = rref_mod(a, p)
    free = [c for c in range(cols) if c not in set(pivots)]
    out = []
    for f in free:
        v = np.zeros(cols, dtype=np.int64)
        v[f] = 1
        for i, pc in enumerate(pivots):
            v[pc] = (-r[i, f]) % p
        out.append(v)
    return out


def rank_mod(a: np.ndarray, p: int) -> int:
    if np.asarray(a).size == 0:
        return 0
    return len(rref_mod(a, p)[1])
