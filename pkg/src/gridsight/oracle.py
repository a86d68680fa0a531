"""Exact linear-algebra cross-checks for the graph results.

Everything that decides a rank or a null space runs on ``fractions.Fraction``
(or on integer-scaled rows); floats only appear in
:func:`residual_invariance`, which exercises the WLS residual identity
numerically.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import gcd
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .model import Case, GridSightError, checked

DEFAULT_SEED = 0xC0FFEE
MAX_ENUMERATION = 6


class MissingSusceptance(GridSightError):
    pass


class BudgetExceeded(GridSightError):
    pass


class SingularNormalMatrix(GridSightError):
    pass


@dataclass(frozen=True)
class FromCase:
    """Use the susceptances stored in the case file."""


@dataclass(frozen=True)
class RandomGeneric:
    """Distinct random nonzero rationals, reproducible from ``seed``."""
    seed: int = DEFAULT_SEED


def susceptances(case: Case, policy=FromCase()) -> dict[int, Fraction]:
    if isinstance(policy, FromCase):
        missing = [ln.id for ln in case.lines if ln.susceptance is None]
        if missing:
            raise MissingSusceptance(f"lines without susceptance: {sorted(missing)}")
        return {ln.id: ln.susceptance for ln in case.lines}
    rng = random.Random(policy.seed)
    out: dict[int, Fraction] = {}
    seen: set[Fraction] = set()
    for lid in case.line_ids:
        while True:
            b = Fraction(rng.randint(1, 10**6), rng.randint(1, 10**3))
            if b not in seen:
                break
        seen.add(b)
        out[lid] = b
    return out


@dataclass(frozen=True)
class JacobianMatrix:
    rows: tuple[int, ...]          # measurement ids
    cols: tuple[int, ...]          # non-reference bus ids
    entries: tuple[tuple[Fraction, ...], ...]
    lines: Mapping[int, tuple[int, int, Fraction]] = field(default_factory=dict)

    def row(self, mid: int) -> tuple[Fraction, ...]:
        return self.entries[self.rows.index(mid)]

    @property
    def n_states(self) -> int:
        return len(self.cols)

    def flow_row(self, line_id: int) -> tuple[Fraction, ...]:
        """Row of a (possibly hypothetical) flow measurement on a line."""
        f, t, b = self.lines[line_id]
        vec = [Fraction(0)] * len(self.cols)
        index = {bus: j for j, bus in enumerate(self.cols)}
        if f in index:
            vec[index[f]] += b
        if t in index:
            vec[index[t]] -= b
        return tuple(vec)

    def submatrix(self, keep: Iterable[int]) -> list[tuple[Fraction, ...]]:
        keep = set(keep)
        return [r for mid, r in zip(self.rows, self.entries) if mid in keep]

    def to_numpy(self) -> np.ndarray:
        return np.array([[float(x) for x in r] for r in self.entries], dtype=float)


def build_jacobian(case: Case, susceptance_policy=FromCase()) -> JacobianMatrix:
    """DC measurement Jacobian; flows are oriented from-bus positive."""
    checked(case)
    b = susceptances(case, susceptance_policy)
    lines = {ln.id: (ln.from_bus, ln.to_bus, b[ln.id]) for ln in case.lines}
    cols = tuple(x for x in case.bus_ids if x != case.reference_bus)
    index = {bus: j for j, bus in enumerate(cols)}
    rows, entries = [], []
    for mid in case.measurement_ids:
        m = case.measurement(mid)
        vec = [Fraction(0)] * len(cols)
        if m.is_flow:
            f, t, bl = lines[m.target]
            terms = [(f, t, bl)]
        else:
            # injection: every incident flow oriented out of the bus
            terms = [(m.target, case.line(l).other(m.target), lines[l][2])
                     for l in case.incident[m.target]]
        for here, there, bl in terms:
            if here in index:
                vec[index[here]] += bl
            if there in index:
                vec[index[there]] -= bl
        rows.append(mid)
        entries.append(tuple(vec))
    return JacobianMatrix(tuple(rows), cols, tuple(entries), lines)


# ---- exact elimination ---------------------------------------------------

def _integer_rows(rows: Sequence[Sequence[Fraction]]) -> list[list[int]]:
    out = []
    for r in rows:
        den = 1
        for x in r:
            den = den * x.denominator // gcd(den, x.denominator)
        out.append([int(x * den) for x in r])
    return out


def rank_of_rows(rows: Sequence[Sequence[Fraction]]) -> int:
    """Exact rank by fraction-free elimination on integer-scaled rows."""
    mat = [r for r in _integer_rows(rows) if any(r)]
    if not mat:
        return 0
    ncols = len(mat[0])
    rank = 0
    for col in range(ncols):
        pivot = next((i for i in range(rank, len(mat)) if mat[i][col]), None)
        if pivot is None:
            continue
        mat[rank], mat[pivot] = mat[pivot], mat[rank]
        p = mat[rank]
        for i in range(rank + 1, len(mat)):
            a = mat[i][col]
            if a:
                r = [p[col] * x - a * y for x, y in zip(mat[i], p)]
                g = 0
                for x in r:
                    g = gcd(g, x)
                mat[i] = [x // g for x in r] if g > 1 else r
        rank += 1
        if rank == len(mat):
            break
    return rank


_PRIME = (1 << 61) - 1


def _rank_mod_p(rows: Sequence[Sequence[int]], p: int = _PRIME) -> int:
    """Rank over GF(p); never exceeds the rational rank."""
    mat = [[x % p for x in r] for r in rows]
    mat = [r for r in mat if any(r)]
    rank = 0
    ncols = len(mat[0]) if mat else 0
    for col in range(ncols):
        pivot = next((i for i in range(rank, len(mat)) if mat[i][col]), None)
        if pivot is None:
            continue
        mat[rank], mat[pivot] = mat[pivot], mat[rank]
        inv = pow(mat[rank][col], p - 2, p)
        prow = [x * inv % p for x in mat[rank]]
        mat[rank] = prow
        for i in range(rank + 1, len(mat)):
            a = mat[i][col]
            if a:
                mat[i] = [(x - a * y) % p for x, y in zip(mat[i], prow)]
        rank += 1
        if rank == len(mat):
            break
    return rank


def rank_of(H: JacobianMatrix, keep_rows: Optional[Iterable[int]] = None) -> int:
    keep = H.rows if keep_rows is None else keep_rows
    return rank_of_rows(H.submatrix(keep))


def nullspace(rows: Sequence[Sequence[Fraction]], ncols: int) -> list[tuple[Fraction, ...]]:
    """Rational basis of {c : row . c = 0 for every row}, from the RREF."""
    mat = [list(map(Fraction, r)) for r in rows]
    pivots: list[int] = []
    r = 0
    for col in range(ncols):
        pivot = next((i for i in range(r, len(mat)) if mat[i][col] != 0), None)
        if pivot is None:
            continue
        mat[r], mat[pivot] = mat[pivot], mat[r]
        pv = mat[r][col]
        mat[r] = [x / pv for x in mat[r]]
        for i in range(len(mat)):
            if i != r and mat[i][col] != 0:
                f = mat[i][col]
                mat[i] = [x - f * y for x, y in zip(mat[i], mat[r])]
        pivots.append(col)
        r += 1
        if r == len(mat):
            break
    basis = []
    for free in (c for c in range(ncols) if c not in pivots):
        vec = [Fraction(0)] * ncols
        vec[free] = Fraction(1)
        for i, pc in enumerate(pivots):
            vec[pc] = -mat[i][free]
        basis.append(tuple(vec))
    return basis


def _dot(u, v) -> Fraction:
    return sum((a * b for a, b in zip(u, v)), Fraction(0))


# ---- stealth vectors -----------------------------------------------------

@dataclass(frozen=True)
class AttackVector:
    c: tuple[Fraction, ...]
    a: Mapping[int, Fraction]
    support: frozenset[int]


@dataclass(frozen=True)
class Infeasible:
    reason: str
    row: Optional[int] = None

    def __bool__(self) -> bool:
        return False


def attack_from_state(H: JacobianMatrix, c: Sequence) -> AttackVector:
    c = tuple(Fraction(x) for x in c)
    a = {mid: _dot(r, c) for mid, r in zip(H.rows, H.entries)}
    return AttackVector(c, a, frozenset(m for m, v in a.items() if v != 0))


def support_realizable(H: JacobianMatrix, A: Iterable[int]):
    """An attack ``a = Hc`` whose support is exactly ``A``, or :class:`Infeasible`.

    Feasible iff the complement rows leave a nontrivial null space and no row
    of ``A`` vanishes on all of it.  The witness is a unit state or a single
    null basis vector when one works, else the first combination
    ``sum t**i n_i`` (t = 1, 2, ...) that misses every vanishing hyperplane.
    """
    A = set(A)
    if not A:
        raise ValueError("attack support must be nonempty")
    unknown = A - set(H.rows)
    if unknown:
        raise KeyError(f"unknown measurements {sorted(unknown)}")
    rest = H.submatrix(set(H.rows) - A)
    basis = nullspace(rest, H.n_states)
    if not basis:
        return Infeasible("complement keeps full rank")
    attacked = sorted(A)
    images = {}
    for mid in attacked:
        img = [_dot(H.row(mid), k) for k in basis]
        if not any(img):
            return Infeasible(f"row {mid} is spanned by the complement", mid)
        images[mid] = img
    # simplest witnesses first: a single bus angle, then one basis vector
    for j in range(H.n_states):
        unit = tuple(Fraction(int(i == j)) for i in range(H.n_states))
        vec = attack_from_state(H, unit)
        if vec.support == frozenset(A):
            return vec
    for k in basis:
        vec = attack_from_state(H, k)
        if vec.support == frozenset(A):
            return vec
    t = 1
    while True:
        coeffs = [Fraction(t) ** i for i in range(len(basis))]
        if all(_dot(img, coeffs) != 0 for img in images.values()):
            break
        t += 1
    c = tuple(sum((w * k[j] for w, k in zip(coeffs, basis)), Fraction(0))
              for j in range(H.n_states))
    vec = attack_from_state(H, c)
    assert vec.support == frozenset(A)
    return vec


def is_realizable(H: JacobianMatrix, A: Iterable[int]) -> bool:
    """Rank form of :func:`support_realizable`, without building a witness."""
    A = set(A)
    keep = [m for m in H.rows if m not in A]
    base = rank_of(H, keep)
    if base == H.n_states:
        return False
    return all(rank_of(H, keep + [a]) == base + 1 for a in A)


@dataclass(frozen=True)
class NoneFound:
    max_card: int

    def __bool__(self) -> bool:
        return False


def brute_force_sparsest(H: JacobianMatrix, max_card: int, containing: Optional[int] = None,
                         protected: Iterable[int] = ()):
    """Smallest realizable support by exhaustive enumeration.

    Supports are visited by ascending size, then lexicographically by
    measurement id; the first realizable one is returned as ``(set, size)``.
    """
    if max_card > MAX_ENUMERATION:
        raise BudgetExceeded(f"max_card {max_card} exceeds the enumeration guard "
                             f"of {MAX_ENUMERATION}")
    protected = set(protected)
    if containing is not None and containing in protected:
        return NoneFound(max_card)
    pool = [m for m in H.rows if m not in protected and m != containing]
    scaled = dict(zip(H.rows, _integer_rows(H.entries)))
    for k in range(1, max_card + 1):
        if containing is None:
            supports = combinations(pool, k)
        else:
            supports = (tuple(sorted((containing,) + rest))
                        for rest in combinations(pool, k - 1))
        for support in supports:
            chosen = set(support)
            rest = [scaled[m] for m in H.rows if m not in chosen]
            if _rank_mod_p(rest) == H.n_states:
                continue  # full rank mod p implies full rank over Q
            if isinstance(support_realizable(H, support), AttackVector):
                return frozenset(support), k
    return NoneFound(max_card)


# ---- residuals -----------------------------------------------------------

@dataclass(frozen=True)
class NoiseModel:
    covariance: tuple[Fraction, ...]
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if any(Fraction(v) <= 0 for v in self.covariance):
            raise ValueError("noise covariance must be strictly positive")

    @classmethod
    def uniform(cls, n: int, variance=Fraction(1, 10**4), seed: int = DEFAULT_SEED):
        return cls(tuple(Fraction(variance) for _ in range(n)), seed)


def residual_matrix(H: JacobianMatrix, R: NoiseModel) -> np.ndarray:
    if rank_of(H) < H.n_states:
        raise SingularNormalMatrix("H^T R^-1 H is singular: H lacks full column rank")
    Hf = H.to_numpy()
    Rinv = np.diag([1.0 / float(v) for v in R.covariance])
    G = Hf.T @ Rinv @ Hf
    S = Hf @ np.linalg.solve(G, Hf.T @ Rinv)
    return np.eye(len(H.rows)) - S


def residual_invariance(H: JacobianMatrix, R: NoiseModel, c: Sequence, trials: int = 100) -> float:
    """Largest change of the WLS residual caused by adding ``a = Hc`` to ``z``."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    W = residual_matrix(H, R)
    Hf = H.to_numpy()
    a = Hf @ np.array([float(x) for x in c], dtype=float)
    sigma = np.sqrt([float(v) for v in R.covariance])
    rng = np.random.default_rng(R.seed)
    worst = 0.0
    for _ in range(trials):
        x = rng.uniform(-0.5, 0.5, size=H.n_states)
        z = Hf @ x + rng.normal(0.0, sigma)
        r = W @ z
        ra = W @ (z + a)
        worst = max(worst, float(np.max(np.abs(ra - r))))
    return worst


# ---- critical-set checks -------------------------------------------------

@dataclass(frozen=True)
class CheckResult:
    passed: bool
    detail: str = ""
    counterexamples: tuple = ()


@dataclass(frozen=True)
class CriticalSetReport:
    owner: int
    rank_drop: CheckResult
    restoration: CheckResult
    hypothetical_flow: CheckResult

    @property
    def passed(self) -> bool:
        return self.rank_drop.passed and self.restoration.passed and self.hypothetical_flow.passed


def verify_critical_set(H: JacobianMatrix, cs, cert=None) -> CriticalSetReport:
    """Rank checks for one critical set.

    (i) removing the members leaves rank n-1; (ii) putting any single member
    back restores rank n; (iii) with ``cert`` given, swapping each assigned
    injection row for a flow row on its assigned line keeps the full rank.
    """
    n = H.n_states
    members = set(cs.members)
    rest = [m for m in H.rows if m not in members]
    r = rank_of(H, rest)
    drop = CheckResult(r == n - 1, f"rank after removal {r}, expected {n - 1}")
    bad = tuple(w for w in sorted(members) if rank_of(H, rest + [w]) != n)
    restore = CheckResult(not bad, "every member restores full rank" if not bad
                          else "members not restoring full rank", bad)
    swap_bad = []
    if cert is not None:
        full = rank_of(H)
        for mid, line in sorted(cert.assignment.items()):
            if mid not in H.rows or H.lines[line] is None:
                continue
            if cert_kind(H, mid, line):
                continue
            rows = [row for k, row in zip(H.rows, H.entries) if k != mid]
            rows.append(H.flow_row(line))
            if rank_of_rows(rows) != full:
                swap_bad.append(mid)
    swap = CheckResult(not swap_bad, "hypothetical flow rows keep the rank"
                        if not swap_bad else "rank changed", tuple(swap_bad))
    return CriticalSetReport(cs.owner, drop, restore, swap)


def cert_kind(H: JacobianMatrix, mid: int, line: int) -> bool:
    """True when ``mid``'s row already is the flow row of ``line`` (a flow)."""
    return H.row(mid) == H.flow_row(line)
