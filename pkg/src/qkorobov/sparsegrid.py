"""Hierarchical hat basis, sparse grids, and surplus coefficients.

The level-l grid on [0,1] keeps the odd multiples of 2^{-l}; the hat centred
at node i*2^{-l} is phi((x - i*2^{-l}) * 2^l) with phi(u) = max(0, 1 - |u|).
A d-dimensional basis function is the product of one hat per coordinate, and
the sparse approximation space of level n keeps every level vector l >= 1
with ||l||_1 <= n + d - 1.

Surplus coefficients are computed with the hierarchical stencil: the tensor
product of the one-dimensional stencil [-1/2, 1, -1/2] applied at the node
with the level's own spacing.  This is exact for interpolation and O(3^d) per
node; the equivalent integral representation of the coefficients (hat-kernel
against the order-2d mixed derivative) is kept in ``integral_coefficient``
purely as an independent check.

For a point inside the supports, each per-coordinate hat splits into
Chebyshev polynomials of degree 0 and 1, 1 -/+ u = P0(u) -/+ P1(u), which is
what ``chebyshev_expansion`` emits for the circuit pipeline.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

Level = tuple[int, ...]

# 1D hierarchical surplus stencil weights for offsets -1, 0, +1
_STENCIL = {-1: -0.5, 0: 1.0, 1: -0.5}


@dataclass(frozen=True)
class GridIndex:
    """One hierarchical node: level vector l and odd index vector i."""

    level: Level
    index: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "level", tuple(int(l) for l in self.level))
        object.__setattr__(self, "index", tuple(int(i) for i in self.index))
        if len(self.level) != len(self.index):
            raise ValueError("level and index dimensions differ")
        for l, i in zip(self.level, self.index):
            if l < 1:
                raise ValueError(f"level component {l} < 1")
            if not (1 <= i <= 2 ** l - 1) or i % 2 == 0:
                raise ValueError(f"index {i} invalid for level {l} (odd, in [1, 2^l-1])")

    @property
    def d(self) -> int:
        return len(self.level)

    def spacing(self) -> tuple[float, ...]:
        return tuple(2.0 ** -l for l in self.level)

    def node(self) -> tuple[float, ...]:
        return tuple(i * h for i, h in zip(self.index, self.spacing()))

    def support(self) -> tuple[tuple[float, float], ...]:
        return tuple(
            (max(0.0, (i - 1) * h), min(1.0, (i + 1) * h))
            for i, h in zip(self.index, self.spacing())
        )


def hat(u):
    """The reference hat max(0, 1 - |u|); accepts scalars or arrays."""
    out = np.maximum(0.0, 1.0 - np.abs(np.asarray(u, dtype=float)))
    return out if out.ndim else float(out)


def scaled_hat(g: GridIndex, x) -> float:
    """Product of per-coordinate hats of ``g`` at the point ``x``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (g.d,):
        raise ValueError(f"point of dimension {x.shape} does not match d={g.d}")
    value = 1.0
    for j, (l, i) in enumerate(zip(g.level, g.index)):
        value *= hat(x[j] * 2.0 ** l - i)
    return value


def enumerate_levels(n: int, d: int) -> list[Level]:
    """All level vectors l >= 1 with ||l||_1 <= n + d - 1, lexicographic."""
    if n < 1 or d < 1:
        raise ValueError("n and d must be >= 1")
    out: list[Level] = []

    def rec(prefix: list[int], remaining: int, budget: int):
        if remaining == 0:
            out.append(tuple(prefix))
            return
        for l in range(1, budget - (remaining - 1) + 1):
            prefix.append(l)
            rec(prefix, remaining - 1, budget - l)
            prefix.pop()

    rec([], d, n + d - 1)
    return out


def index_set(level: Sequence[int]) -> list[GridIndex]:
    """All odd index vectors of one level, lexicographic."""
    level = tuple(int(l) for l in level)
    ranges = [range(1, 2 ** l, 2) for l in level]
    return [GridIndex(level, idx) for idx in itertools.product(*ranges)]


def grid_count(n: int, d: int) -> int:
    """Exact number of sparse-grid nodes at truncation level n."""
    return sum(
        int(np.prod([2 ** (l - 1) for l in level])) for level in enumerate_levels(n, d)
    )


class SurplusMap:
    """Hierarchical surplus coefficients of one function at truncation n.

    ``entries`` maps every GridIndex of the truncated index set to its
    coefficient (zeros included), in lexicographic (level, index) order.
    """

    def __init__(self, d: int, n: int, entries: dict[GridIndex, float]):
        self.d = int(d)
        self.n = int(n)
        self.entries = dict(entries)
        self._level_arrays: dict[Level, np.ndarray] | None = None
        expected = grid_count(self.n, self.d)
        if len(self.entries) != expected:
            raise ValueError(
                f"{len(self.entries)} entries, but the level-{self.n} index set "
                f"holds {expected}"
            )
        self._arrays()  # also verifies every required key is present

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, g: GridIndex) -> float:
        return self.entries[g]

    def levels(self) -> list[Level]:
        return enumerate_levels(self.n, self.d)

    def items(self):
        return self.entries.items()

    def _arrays(self) -> dict[Level, np.ndarray]:
        # per-level dense coefficient array, axis j indexed by (i_j - 1) / 2
        if self._level_arrays is None:
            arrays = {}
            for level in self.levels():
                shape = [2 ** (l - 1) for l in level]
                arr = np.empty(shape, dtype=float)
                for g in index_set(level):
                    arr[tuple((i - 1) // 2 for i in g.index)] = self.entries[g]
                arrays[level] = arr
            self._level_arrays = arrays
        return self._level_arrays

    def evaluate(self, x) -> float:
        """Value of the interpolant at one point of [0,1]^d."""
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.size != self.d:
            raise ValueError(f"point of dimension {x.size} does not match d={self.d}")
        total = 0.0
        for level in self.levels():
            g = locate_support(level, x)
            if g is not None:
                total += self.entries[g] * scaled_hat(g, x)
        return total

    def evaluate_batch(self, points: np.ndarray) -> np.ndarray:
        """Vectorised interpolant values for an (m, d) array of points."""
        points = np.asarray(points, dtype=float)
        if points.ndim != 2 or points.shape[1] != self.d:
            raise ValueError("points must have shape (m, d)")
        arrays = self._arrays()
        total = np.zeros(points.shape[0])
        for level, coeffs in arrays.items():
            phi = np.ones(points.shape[0])
            ok = np.ones(points.shape[0], dtype=bool)
            cell = []
            for j, l in enumerate(level):
                t = points[:, j] * (2.0 ** l)
                i = 2 * np.floor(t / 2.0).astype(np.int64) + 1
                ok &= (1 <= i) & (i <= 2 ** l - 1)
                i = np.clip(i, 1, 2 ** l - 1)
                phi *= np.maximum(0.0, 1.0 - np.abs(t - i))
                cell.append((i - 1) // 2)
            total += np.where(ok, coeffs[tuple(cell)] * phi, 0.0)
        return total

    def evaluate_grid(self, axes: Sequence[np.ndarray]) -> np.ndarray:
        """Interpolant on the tensor grid axes[0] x ... x axes[d-1].

        Factorises the per-level work along axes, which is much faster than
        ``evaluate_batch`` on full product grids.
        """
        if len(axes) != self.d:
            raise ValueError(f"need {self.d} axes")
        axes = [np.asarray(a, dtype=float).reshape(-1) for a in axes]
        total = np.zeros(tuple(len(a) for a in axes))
        for level, coeffs in self._arrays().items():
            cells, phis = [], []
            for j, l in enumerate(level):
                t = axes[j] * (2.0 ** l)
                i = 2 * np.floor(t / 2.0).astype(np.int64) + 1
                ok = (1 <= i) & (i <= 2 ** l - 1)
                i = np.clip(i, 1, 2 ** l - 1)
                phis.append(np.maximum(0.0, 1.0 - np.abs(t - i)) * ok)
                cells.append((i - 1) // 2)
            contrib = coeffs[np.ix_(*cells)]
            for j, phi in enumerate(phis):
                shape = [1] * self.d
                shape[j] = -1
                contrib = contrib * phi.reshape(shape)
            total += contrib
        return total

    # -- JSON round trip ----------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "d": self.d,
            "n": self.n,
            "entries": [
                {"level": list(g.level), "index": list(g.index), "value": v}
                for g, v in self.entries.items()
            ],
        }

    def dumps(self, **kwargs) -> str:
        return json.dumps(self.to_json_dict(), **kwargs)

    @classmethod
    def from_json_dict(cls, doc: dict) -> "SurplusMap":
        entries = {
            GridIndex(tuple(e["level"]), tuple(e["index"])): float(e["value"])
            for e in doc["entries"]
        }
        return cls(int(doc["d"]), int(doc["n"]), entries)

    @classmethod
    def loads(cls, text: str) -> "SurplusMap":
        return cls.from_json_dict(json.loads(text))


def surplus_coefficients(f: Callable, n: int, d: int) -> SurplusMap:
    """Hierarchical surpluses of ``f`` over the sparse index set.

    ``f`` must accept an (m, d) array and return m values.  The interpolant
    induced by the result reproduces f at every node of the truncated grid.
    """
    nodes: list[GridIndex] = []
    for level in enumerate_levels(n, d):
        nodes.extend(index_set(level))
    offsets = list(itertools.product((-1, 0, 1), repeat=d))
    weights = np.array([np.prod([_STENCIL[e] for e in off]) for off in offsets])

    pts = np.empty((len(nodes), len(offsets), d))
    for a, g in enumerate(nodes):
        node = np.array(g.node())
        h = np.array(g.spacing())
        for b, off in enumerate(offsets):
            pts[a, b] = node + np.array(off) * h
    values = np.asarray(f(pts.reshape(-1, d)), dtype=float).reshape(len(nodes), -1)
    if not np.isfinite(values).all():
        a, b = np.argwhere(~np.isfinite(values))[0]
        raise ValueError(f"function returned a non-finite value near node {pts[a, b]}")

    surpluses = values @ weights
    return SurplusMap(d, n, dict(zip(nodes, surpluses)))


def locate_support(level: Sequence[int], x) -> GridIndex | None:
    """The unique level-``level`` node whose open support contains ``x``.

    Returns None when some coordinate sits exactly on an even node of the
    level (all hats of the level vanish there, boundary included).
    """
    level = tuple(int(l) for l in level)
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != len(level):
        raise ValueError("point dimension does not match level vector")
    index = []
    for l, xj in zip(level, x):
        t = xj * 2.0 ** l
        i = 2 * int(np.floor(t / 2.0)) + 1
        if abs(t - i) >= 1.0 or i > 2 ** l - 1:
            return None
        index.append(i)
    return GridIndex(level, tuple(index))


@dataclass(frozen=True)
class ChebyshevTerm:
    """One signed product term weight * prod_j P_{k_j}(u_j) of the expansion.

    ``arguments`` are the rescaled local coordinates u_j = (x_j - node_j) /
    spacing_j, each in (-1, 1); ``weight`` is the surplus with the sign rule
    (-1)^{sum_j k_j (sgn(u_j)+1)/2} applied (sgn(0) := +1, which is value-
    irrelevant because P_1(0) = 0).
    """

    weight: float
    degrees: tuple[int, ...]
    arguments: tuple[float, ...]
    source: GridIndex


def chebyshev_expansion(s: SurplusMap, x) -> list[ChebyshevTerm]:
    """Signed degree-(0,1) Chebyshev product terms reproducing s at ``x``.

    Summing weight * prod_j T_{k_j}(u_j) over the result equals
    ``s.evaluate(x)``; only levels whose support contains x contribute, each
    with 2^d terms.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != s.d:
        raise ValueError(f"point of dimension {x.size} does not match d={s.d}")
    terms: list[ChebyshevTerm] = []
    for level in s.levels():
        g = locate_support(level, x)
        if g is None:
            continue
        v = s.entries[g]
        u = tuple(
            float(xj * 2.0 ** l - i) for xj, l, i in zip(x, g.level, g.index)
        )
        positive = [uj >= 0.0 for uj in u]  # sgn(0) := +1
        for k in itertools.product((0, 1), repeat=s.d):
            flips = sum(kj for kj, pos in zip(k, positive) if pos)
            terms.append(
                ChebyshevTerm(
                    weight=(-1.0) ** flips * v,
                    degrees=k,
                    arguments=u,
                    source=g,
                )
            )
    return terms


def evaluate_interpolant(s: SurplusMap, x) -> float:
    """Module-level alias for ``SurplusMap.evaluate``."""
    return s.evaluate(x)


def integral_coefficient(mixed_derivative: Callable, g: GridIndex,
                         nodes_per_cell: int = 32) -> float:
    """Surplus of ``g`` via the integral representation (check oracle).

    Integrates prod_j(-2^{-(l_j+1)} phi_{l_j,i_j}(x_j)) times the order-2d
    mixed derivative over the support, with composite Gauss-Legendre on the
    two cells per coordinate (the hat kernel has a kink at the node).
    ``mixed_derivative`` must accept an (m, d) array.
    """
    base, base_w = np.polynomial.legendre.leggauss(nodes_per_cell)
    pts_1d, wts_1d = [], []
    for l, i in zip(g.level, g.index):
        h = 2.0 ** -l
        node = i * h
        cells = [(node - h, node), (node, node + h)]
        p = np.concatenate([(b - a) / 2 * base + (a + b) / 2 for a, b in cells])
        w = np.concatenate([(b - a) / 2 * base_w for a, b in cells])
        kern = -(2.0 ** -(l + 1)) * hat(p / h - i)
        pts_1d.append(p)
        wts_1d.append(w * kern)
    grids = np.meshgrid(*pts_1d, indexing="ij")
    pts = np.stack([gr.ravel() for gr in grids], axis=1)
    wgrid = np.meshgrid(*wts_1d, indexing="ij")
    w = np.prod(np.stack([gr.ravel() for gr in wgrid], axis=0), axis=0)
    vals = np.asarray(mixed_derivative(pts), dtype=float).reshape(-1)
    return float(np.sum(w * vals))
