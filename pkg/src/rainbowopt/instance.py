"""Weighted instances (Euclidean point sets, uniform cost matrices) and
random edge colorings, generated with fully seeded determinism.

Edges of the complete graph on [n] are addressed by a canonical integer id:
id(i, j) = j*(j-1)//2 + i for i < j, enumerating pairs (0,1), (0,2), (1,2),
(0,3), ...  All cost/color arrays are stored in this order.

Randomness comes from numpy's PCG64 generator seeded through SeedSequence
spawn keys, so a (master seed, stream label) pair always yields the same
stream regardless of what other streams were consumed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Fixed label -> spawn-key table. Never reorder: serialized seeds depend on it.
_STREAMS = {"geometry": 0, "costs": 1, "colors": 2, "tiebreak": 3}


class ParseError(ValueError):
    """Raised on malformed instance files; names the offending line and field."""

    def __init__(self, line_no, field_name, message):
        self.line_no = line_no
        self.field_name = field_name
        super().__init__(f"line {line_no}, field '{field_name}': {message}")


class InvalidPaletteError(ValueError):
    pass


@dataclass(frozen=True)
class SeedSpec:
    """Master seed plus named derived substreams.

    Identical SeedSpec => bit-identical instances, colorings and algorithmic
    tie-breaks. Changing the stream consumed for one purpose never perturbs
    the others.
    """

    master: int

    def rng(self, stream: str, *extra: int) -> np.random.Generator:
        if stream not in _STREAMS:
            raise KeyError(f"unknown stream label {stream!r}")
        key = (_STREAMS[stream],) + tuple(int(e) for e in extra)
        return np.random.default_rng(np.random.SeedSequence(self.master, spawn_key=key))


def edge_count(n: int) -> int:
    return n * (n - 1) // 2


def edge_id(i: int, j: int) -> int:
    """Canonical id of the unordered pair {i, j}."""
    if i == j:
        raise ValueError("self-loops have no edge id")
    if i > j:
        i, j = j, i
    return j * (j - 1) // 2 + i


def edge_endpoints(eid: int) -> tuple[int, int]:
    """Inverse of edge_id."""
    j = (1 + math.isqrt(1 + 8 * eid)) // 2
    if j * (j - 1) // 2 > eid:
        j -= 1
    i = eid - j * (j - 1) // 2
    return i, j


def all_edge_endpoints(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Arrays (us, vs) with us[e] < vs[e] for every edge id e of K_n."""
    m = edge_count(n)
    us = np.empty(m, dtype=np.int64)
    vs = np.empty(m, dtype=np.int64)
    pos = 0
    for j in range(1, n):
        us[pos:pos + j] = np.arange(j)
        vs[pos:pos + j] = j
        pos += j
    return us, vs


@dataclass
class EuclideanInstance:
    """n points in [0, scale]^2; the cost of {i, j} is the Euclidean distance.

    Treat as immutable after construction.
    """

    n: int
    points: np.ndarray  # (n, 2) float64
    scale: float = 1.0
    master_seed: int = 0
    kind: str = field(default="euclid", init=False)

    def edge_cost(self, i: int, j: int) -> float:
        d = self.points[i] - self.points[j]
        return float(math.hypot(d[0], d[1]))

    def cost_array(self) -> np.ndarray:
        """All edge costs in edge-id order."""
        us, vs = all_edge_endpoints(self.n)
        d = self.points[us] - self.points[vs]
        return np.hypot(d[:, 0], d[:, 1])

    def cost_matrix(self) -> np.ndarray:
        d = self.points[:, None, :] - self.points[None, :, :]
        return np.hypot(d[..., 0], d[..., 1])


@dataclass
class UniformCostInstance:
    """Symmetric n x n cost matrix with zero diagonal, entries in [0, 1]."""

    n: int
    costs: np.ndarray  # (n, n) float64
    master_seed: int = 0
    kind: str = field(default="uniform", init=False)

    def edge_cost(self, i: int, j: int) -> float:
        return float(self.costs[i, j])

    def cost_array(self) -> np.ndarray:
        us, vs = all_edge_endpoints(self.n)
        return self.costs[us, vs]

    def cost_matrix(self) -> np.ndarray:
        return self.costs


@dataclass
class Coloring:
    """Map edge id -> color in {0, ..., q-1}."""

    q: int
    colors: np.ndarray  # (m,) int64

    def __post_init__(self):
        self.colors = np.asarray(self.colors, dtype=np.int64)
        if len(self.colors) and self.q < 1:
            raise InvalidPaletteError("palette size q must be >= 1 for a nonempty edge set")
        if len(self.colors) and (self.colors.min() < 0 or self.colors.max() >= self.q):
            raise ValueError("color entries must lie in [0, q)")


def gen_euclidean(n: int, scale: float = 1.0, seed: SeedSpec | int = 0) -> EuclideanInstance:
    """n i.i.d. uniform points in [0, scale]^2, deterministic given the seed."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    seed = _as_seed(seed)
    pts = seed.rng("geometry").random((n, 2)) * scale
    return EuclideanInstance(n=n, points=pts, scale=scale, master_seed=seed.master)


def gen_uniform_costs(n: int, seed: SeedSpec | int = 0) -> UniformCostInstance:
    """Symmetric matrix of i.i.d. U[0,1] costs above the diagonal."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    seed = _as_seed(seed)
    vals = seed.rng("costs").random(edge_count(n))
    mat = np.zeros((n, n))
    us, vs = all_edge_endpoints(n)
    mat[us, vs] = vals
    mat[vs, us] = vals
    return UniformCostInstance(n=n, costs=mat, master_seed=seed.master)


def color_edges(edge_count_: int, q: int, seed: SeedSpec | int = 0) -> Coloring:
    """Independently uniform color from {0, ..., q-1} per edge."""
    if q < 1 and edge_count_ > 0:
        raise InvalidPaletteError(f"q={q} with {edge_count_} edges")
    seed = _as_seed(seed)
    if edge_count_ == 0:
        return Coloring(q=max(q, 0), colors=np.empty(0, dtype=np.int64))
    cols = seed.rng("colors").integers(0, q, size=edge_count_)
    return Coloring(q=q, colors=cols)


def _as_seed(seed) -> SeedSpec:
    return seed if isinstance(seed, SeedSpec) else SeedSpec(int(seed))


# ---------------------------------------------------------------------------
# File format (line oriented):
#   line 1: `kind n q master_seed`
#   kind=euclid : n lines `x y` (17 significant digits)
#   kind=uniform: n(n-1)/2 lines of costs in edge-id order
#   then n(n-1)/2 lines of colors in edge-id order.
# ---------------------------------------------------------------------------

def save(instance, coloring: Coloring, path) -> None:
    m = edge_count(instance.n)
    if len(coloring.colors) != m:
        raise ValueError(f"coloring has {len(coloring.colors)} entries, instance has {m} edges")
    lines = [f"{instance.kind} {instance.n} {coloring.q} {instance.master_seed}"]
    if instance.kind == "euclid":
        for x, y in instance.points:
            lines.append(f"{x:.17g} {y:.17g}")
    elif instance.kind == "uniform":
        for c in instance.cost_array():
            lines.append(f"{c:.17g}")
    else:
        raise ValueError(f"unknown instance kind {instance.kind!r}")
    for c in coloring.colors:
        lines.append(str(int(c)))
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def load(path):
    """Load (instance, coloring) saved by `save`; bit-exact round trip."""
    with open(path) as f:
        raw = f.read().splitlines()
    if not raw:
        raise ParseError(1, "header", "empty file")
    head = raw[0].split()
    if len(head) != 4:
        raise ParseError(1, "header", f"expected 'kind n q master_seed', got {raw[0]!r}")
    kind = head[0]
    try:
        n = int(head[1])
        q = int(head[2])
        master_seed = int(head[3])
    except ValueError as e:
        raise ParseError(1, "header", str(e)) from None
    if kind not in ("euclid", "uniform"):
        raise ParseError(1, "kind", f"unknown kind {kind!r}")
    if n < 0:
        raise ParseError(1, "n", "negative vertex count")
    m = edge_count(n)
    body = n if kind == "euclid" else m
    if len(raw) - 1 < body + m:
        raise ParseError(len(raw), "body", f"expected {body + m} data lines, found {len(raw) - 1}")

    if kind == "euclid":
        pts = np.empty((n, 2))
        for i in range(n):
            parts = raw[1 + i].split()
            if len(parts) != 2:
                raise ParseError(2 + i, "point", f"expected 'x y', got {raw[1 + i]!r}")
            try:
                pts[i, 0] = float(parts[0])
                pts[i, 1] = float(parts[1])
            except ValueError:
                raise ParseError(2 + i, "point", f"bad float in {raw[1 + i]!r}") from None
        scale = max(1.0, float(pts.max())) if n else 1.0
        inst = EuclideanInstance(n=n, points=pts, scale=scale, master_seed=master_seed)
    else:
        vals = np.empty(m)
        for e in range(m):
            try:
                vals[e] = float(raw[1 + e])
            except ValueError:
                raise ParseError(2 + e, "cost", f"bad float {raw[1 + e]!r}") from None
        mat = np.zeros((n, n))
        us, vs = all_edge_endpoints(n)
        mat[us, vs] = vals
        mat[vs, us] = vals
        inst = UniformCostInstance(n=n, costs=mat, master_seed=master_seed)

    cols = np.empty(m, dtype=np.int64)
    off = 1 + body
    for e in range(m):
        line_no = off + e + 1
        try:
            c = int(raw[off + e])
        except ValueError:
            raise ParseError(line_no, "color", f"bad integer {raw[off + e]!r}") from None
        if not (0 <= c < q):
            raise ParseError(line_no, "color", f"color {c} outside palette [0, {q})")
        cols[e] = c
    return inst, Coloring(q=q, colors=cols)
