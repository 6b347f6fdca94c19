"""Finite-field arithmetic and invertible-kernel utilities.

Everything downstream works over GF(q) with q = p^m.  A field element is a
plain integer index in [0, q): the base-p digits of the index are the
coefficients of the residue polynomial, constant term least significant.
For m = 1 this is ordinary arithmetic mod p.  For m > 1 the field is
F_p[x]/(f) where f is the lexicographically smallest monic irreducible
polynomial of degree m, coefficient tuples compared from the constant term
upward — a deterministic choice, so element indices mean the same thing on
every machine.

Multiplication uses discrete log/exp tables over a primitive element, so no
q-by-q tables are ever materialised and fields up to q = 2^16 stay cheap.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

#: largest supported field size (beyond this the dense tables stop being fun)
MAX_Q = 1 << 16

__all__ = [
    "FieldSpec",
    "Kernel",
    "field_make",
    "field_arith",
    "field_trace",
    "character",
    "field_matmul",
    "mat_invert",
    "sample_invertible",
    "arikan_kernel",
]


# ---------------------------------------------------------------- primality

def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


# ------------------------------------------- polynomial helpers over F_p
# Coefficient lists are little-endian (constant term first) with no implied
# leading coefficient; used only while constructing a field, never in hot
# paths.

def _poly_trim(a: list[int]) -> list[int]:
    while a and a[-1] == 0:
        a.pop()
    return a


def _poly_mul(a: list[int], b: list[int], p: int) -> list[int]:
    out = [0] * (len(a) + len(b) - 1) if a and b else []
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                out[i + j] = (out[i + j] + ai * bj) % p
    return _poly_trim(out)


def _poly_mod(a: list[int], f: list[int], p: int) -> list[int]:
    a = _poly_trim(list(a))
    df = len(f) - 1
    inv_lead = pow(f[-1], p - 2, p)
    while len(a) - 1 >= df and _poly_trim(a):
        shift = len(a) - 1 - df
        factor = (a[-1] * inv_lead) % p
        for i, fi in enumerate(f):
            a[shift + i] = (a[shift + i] - factor * fi) % p
        _poly_trim(a)
    return a


def _poly_is_irreducible(f: list[int], p: int) -> bool:
    """Trial division by every monic polynomial of degree 1..deg(f)//2."""
    deg = len(f) - 1
    for d in range(1, deg // 2 + 1):
        for low in product(range(p), repeat=d):
            g = list(low) + [1]
            if not _poly_mod(f, g, p):
                return False
    return True


def _canonical_modulus(p: int, m: int) -> tuple[int, ...]:
    """Smallest monic irreducible of degree m, constant-term-first order."""
    for low in product(range(p), repeat=m):
        f = list(low) + [1]
        if _poly_is_irreducible(f, p):
            return tuple(f)
    raise RuntimeError(f"no irreducible polynomial of degree {m} over F_{p}")


# ------------------------------------------------------------------ fields

@dataclass(frozen=True)
class FieldSpec:
    """GF(p^m) with integer-indexed elements and cached op tables."""

    p: int
    m: int
    q: int
    modulus: tuple[int, ...] | None

    def __post_init__(self) -> None:
        p, m, q = self.p, self.m, self.q
        pows = p ** np.arange(m, dtype=np.int64)
        if m == 1:
            digits = None
        else:
            idx = np.arange(q, dtype=np.int64)
            digits = (idx[:, None] // pows[None, :]) % p
        object.__setattr__(self, "_pows", pows)
        object.__setattr__(self, "_digits", digits)
        object.__setattr__(self, "_neg_t", self._build_neg())
        log_t, exp_t = self._build_log_exp()
        object.__setattr__(self, "_log_t", log_t)
        object.__setattr__(self, "_exp_t", exp_t)
        object.__setattr__(self, "_inv_t", self._build_inv())
        object.__setattr__(self, "_trace_t", self._build_trace())
        angles = 2.0j * np.pi * self._trace_t / p
        object.__setattr__(self, "_char_t", np.exp(angles))

    # -- table construction ------------------------------------------------

    def _build_neg(self) -> np.ndarray:
        if self.m == 1:
            return (-np.arange(self.q, dtype=np.int64)) % self.p
        d = (-self._digits) % self.p
        return d @ self._pows

    def _scalar_mul(self, a: int, b: int) -> int:
        """Reference product, used only while bootstrapping the log table."""
        if self.m == 1:
            return (a * b) % self.p
        pa = [int(self._digits[a, j]) for j in range(self.m)]
        pb = [int(self._digits[b, j]) for j in range(self.m)]
        prod = _poly_mod(_poly_mul(pa, pb, self.p), list(self.modulus), self.p)
        prod += [0] * (self.m - len(prod))
        return int(np.dot(prod[: self.m], self._pows))

    def _build_log_exp(self) -> tuple[np.ndarray, np.ndarray]:
        q = self.q
        if self.m == 1 and q == 2:
            return np.array([-1, 0], dtype=np.int64), np.array([1], dtype=np.int64)
        for g in range(2, q):
            seen = np.full(q, -1, dtype=np.int64)
            exp_t = np.empty(q - 1, dtype=np.int64)
            x, k = 1, 0
            while k < q - 1:
                exp_t[k] = x
                if seen[x] >= 0:
                    break
                seen[x] = k
                x = self._scalar_mul(x, g)
                k += 1
            if k == q - 1 and x == 1:
                return seen, exp_t
        raise RuntimeError("no primitive element found")  # pragma: no cover

    def _build_inv(self) -> np.ndarray:
        inv = np.zeros(self.q, dtype=np.int64)
        order = self.q - 1
        nz = np.arange(1, self.q)
        inv[nz] = self._exp_t[(order - self._log_t[nz]) % order]
        return inv

    def _build_trace(self) -> np.ndarray:
        if self.m == 1:
            return np.arange(self.q, dtype=np.int64)
        tr = np.zeros(self.q, dtype=np.int64)
        for a in range(1, self.q):
            acc, term = 0, a
            for _ in range(self.m):
                acc = self._add_scalar(acc, term)
                term = self._pow_scalar(term, self.p)
            if acc >= self.p:  # pragma: no cover - algebra guarantees this
                raise RuntimeError("trace left the prime subfield")
            tr[a] = acc
        return tr

    def _add_scalar(self, a: int, b: int) -> int:
        if self.m == 1:
            return (a + b) % self.p
        d = (self._digits[a] + self._digits[b]) % self.p
        return int(d @ self._pows)

    def _pow_scalar(self, a: int, e: int) -> int:
        out = 1
        for _ in range(e):
            out = self._scalar_mul(out, a)
        return out

    # -- vectorised element ops --------------------------------------------
    # Every op accepts ints or integer ndarrays and broadcasts like numpy.

    def add(self, a, b):
        if self.m == 1:
            return (np.asarray(a) + np.asarray(b)) % self.p
        if self.p == 2:
            return np.bitwise_xor(a, b)
        d = (self._digits[a] + self._digits[b]) % self.p
        return d @ self._pows

    def neg(self, a):
        return self._neg_t[a]

    def sub(self, a, b):
        return self.add(a, self._neg_t[b])

    def mul(self, a, b):
        if self.m == 1:
            return (np.asarray(a, dtype=np.int64) * np.asarray(b, dtype=np.int64)) % self.p
        a = np.asarray(a)
        b = np.asarray(b)
        nz = (a != 0) & (b != 0)
        logs = (self._log_t[a * nz] + self._log_t[b * nz]) % (self.q - 1)
        return np.where(nz, self._exp_t[logs], 0)

    def inv(self, a):
        if np.any(np.asarray(a) == 0):
            raise ValueError("zero element has no multiplicative inverse")
        return self._inv_t[a]

    def trace(self, a):
        return self._trace_t[a]

    def char(self, a):
        return self._char_t[a]

    @property
    def elements(self) -> np.ndarray:
        return np.arange(self.q, dtype=np.int64)


_FIELD_CACHE: dict[tuple[int, int], FieldSpec] = {}


def field_make(p: int, m: int = 1) -> FieldSpec:
    """Construct (and cache) GF(p^m).

    Parameters
    ----------
    p : prime characteristic.
    m : extension degree; m == 1 gives the prime field.
    """
    key = (int(p), int(m))
    if key in _FIELD_CACHE:
        return _FIELD_CACHE[key]
    p, m = key
    if not _is_prime(p):
        raise ValueError(f"characteristic {p} is not prime")
    if m < 1:
        raise ValueError(f"extension degree must be >= 1, got {m}")
    q = p**m
    if q > MAX_Q:
        raise ValueError(f"field size {q} exceeds supported limit {MAX_Q}")
    modulus = _canonical_modulus(p, m) if m > 1 else None
    spec = FieldSpec(p=p, m=m, q=q, modulus=modulus)
    _FIELD_CACHE[key] = spec
    return spec


_ARITH_OPS = ("add", "sub", "mul", "neg", "inv", "div")


def field_arith(spec: FieldSpec, op: str, a, b=None):
    """Dispatch a field operation by name; `neg`/`inv` are unary."""
    if op not in _ARITH_OPS:
        raise ValueError(f"unknown field op {op!r}, expected one of {_ARITH_OPS}")
    if op == "neg":
        return spec.neg(a)
    if op == "inv":
        return spec.inv(a)
    if b is None:
        raise ValueError(f"op {op!r} needs two operands")
    if op == "div":
        return spec.mul(a, spec.inv(b))
    return getattr(spec, op)(a, b)


def field_trace(spec: FieldSpec, a):
    """Trace down to the prime subfield, returned as an integer in [0, p)."""
    return spec.trace(a)


def character(spec: FieldSpec, a):
    """Canonical additive character exp(2*pi*i*trace(a)/p)."""
    return spec.char(a)


# -------------------------------------------------------------- matrices

def field_matmul(spec: FieldSpec, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Matrix product over GF(q); A is (..., L), B is (L, R)."""
    A = np.asarray(A, dtype=np.int64)
    B = np.asarray(B, dtype=np.int64)
    if spec.m == 1:
        return (A @ B) % spec.p
    was_vec = A.ndim == 1
    if was_vec:
        A = A[None, :]
    L = B.shape[0]
    out = np.zeros(A.shape[:-1] + (B.shape[1],), dtype=np.int64)
    for k in range(L):
        out = spec.add(out, spec.mul(A[..., k, None], B[None, k, :]))
    return out[0] if was_vec else out


@dataclass(frozen=True, eq=False)
class Kernel:
    """An invertible ell x ell transform matrix with cached inverses."""

    field: FieldSpec
    ell: int
    entries: np.ndarray
    inverse: np.ndarray
    inv_transpose: np.ndarray

    def apply_rows(self, rows: np.ndarray) -> np.ndarray:
        """Map row vectors u -> u @ entries (the source-to-channel map)."""
        return field_matmul(self.field, rows, self.entries)


def mat_invert(spec: FieldSpec, entries) -> Kernel:
    """Invert a square matrix over GF(q) by Gaussian elimination.

    Returns a :class:`Kernel` carrying the matrix, its inverse and the
    transpose of the inverse.  Raises ``ValueError`` when the matrix is
    singular.
    """
    A = np.array(entries, dtype=np.int64)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise ValueError(f"kernel must be square and non-empty, got shape {A.shape}")
    if A.min() < 0 or A.max() >= spec.q:
        raise ValueError("matrix entries outside [0, q)")
    ell = A.shape[0]
    work = A.copy()
    inv = np.eye(ell, dtype=np.int64)
    for col in range(ell):
        piv_rows = np.nonzero(work[col:, col])[0]
        if piv_rows.size == 0:
            raise ValueError("matrix is singular over GF(q)")
        piv = col + int(piv_rows[0])
        if piv != col:
            work[[col, piv]] = work[[piv, col]]
            inv[[col, piv]] = inv[[piv, col]]
        scale = spec.inv(int(work[col, col]))
        work[col] = spec.mul(scale, work[col])
        inv[col] = spec.mul(scale, inv[col])
        for r in range(ell):
            f = int(work[r, col])
            if r != col and f:
                work[r] = spec.sub(work[r], spec.mul(f, work[col]))
                inv[r] = spec.sub(inv[r], spec.mul(f, inv[col]))
    for arr in (A, inv):
        arr.setflags(write=False)
    inv_t = np.ascontiguousarray(inv.T)
    inv_t.setflags(write=False)
    return Kernel(field=spec, ell=ell, entries=A, inverse=inv, inv_transpose=inv_t)


def sample_invertible(spec: FieldSpec, ell: int, rng: np.random.Generator) -> Kernel:
    """Rejection-sample a uniform element of GL(ell, q).

    Each attempt draws all entries i.i.d. uniform and keeps the matrix iff
    it inverts, so accepted draws are exactly uniform over the invertible
    matrices.  Deterministic given the generator state.
    """
    if ell < 1:
        raise ValueError("kernel size must be positive")
    while True:
        cand = rng.integers(0, spec.q, size=(ell, ell))
        try:
            return mat_invert(spec, cand)
        except ValueError:
            continue


def arikan_kernel(spec: FieldSpec) -> Kernel:
    """The classic [[1,0],[1,1]] kernel over any field."""
    return mat_invert(spec, [[1, 0], [1, 1]])
