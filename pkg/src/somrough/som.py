"""Self-organizing map training and per-attribute ordinal discretization.

A map is a small grid of weight vectors competing for input rows; the
winning node (best-matching unit) is the one at minimum squared Euclidean
distance, and it drags its grid neighborhood toward the input by a
linearly decaying learning rate.

One-dimensional G x 1 maps double as value quantizers: their trained
centers split an attribute's range into G ordered granules, labelled
1 (highest values) through G (lowest), with cut points at the midpoints
between adjacent centers mapped back into raw units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError, UsageError
from .table import inverse_scale, scale_minmax, transform_scale

# Box-seeded attempts before falling back to quantile-seeded centers.
# Columns dominated by long runs of one value can starve a node no matter
# the draw, so the fallback retrains winner-only from centers placed on
# quantiles of the distinct values.
_FIT_RETRIES = 6


@dataclass(frozen=True)
class SomConfig:
    """Training knobs. ``radius0 = None`` means half the grid span."""

    grid: tuple[int, int]
    epochs: int = 120
    eta0: float = 0.8
    radius0: float | None = None
    seed: int = 0

    def __post_init__(self):
        nx, ny = self.grid
        if nx < 1 or ny < 1:
            raise UsageError("grid dimensions must be positive")
        if not 0.0 < self.eta0 <= 1.0:
            raise UsageError("eta0 must be in (0, 1]")
        if self.epochs < 1:
            raise UsageError("epochs must be positive")
        if self.radius0 is not None and self.radius0 < 0:
            raise UsageError("radius0 must be >= 0")

    @property
    def nodes(self) -> int:
        return self.grid[0] * self.grid[1]

    @property
    def start_radius(self) -> float:
        if self.radius0 is not None:
            return float(self.radius0)
        return (max(self.grid) - 1) / 2.0


@dataclass(frozen=True)
class SomMap:
    """A trained map: grid dims, one weight vector per node, error trace."""

    grid: tuple[int, int]
    weights: np.ndarray  # shape (nodes, dim)
    qe_log: tuple[float, ...] = ()  # error before training, then per epoch

    @property
    def nodes(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.weights.shape[1]

    def coords(self, i: int) -> tuple[int, int]:
        nx = self.grid[0]
        return (i % nx, i // nx)


def _as_matrix(data, dim: int | None = None) -> np.ndarray:
    x = np.asarray(data, dtype=float)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    if x.size == 0:
        raise DataError("empty data")
    if dim is not None and x.shape[1] != dim:
        raise UsageError(f"vectors have dimension {x.shape[1]}, map expects {dim}")
    return x


def _sq_distances(weights: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Squared Euclidean distance from x to every node, missing-aware.

    NaN components of x are excluded from the sum for every node alike.
    """
    diff = weights - x
    diff = np.where(np.isnan(x), 0.0, diff)
    return np.sum(diff * diff, axis=1)


def winner(som: SomMap, x) -> int:
    """Index of the best-matching unit; ties go to the lowest index."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != som.dim:
        raise UsageError(f"input has dimension {x.shape[0]}, map expects {som.dim}")
    return int(np.argmin(_sq_distances(som.weights, x)))


def quantization_error(som: SomMap, data) -> float:
    """Mean squared distance from each datum to its winning node."""
    x = _as_matrix(data, som.dim)
    return _qe(som.weights, x)


def _qe(weights: np.ndarray, x: np.ndarray) -> float:
    total = 0.0
    for row in x:
        total += float(np.min(_sq_distances(weights, row)))
    return total / x.shape[0]


def neighborhood(grid: tuple[int, int], center: int, radius: float) -> np.ndarray:
    """Node indices within Chebyshev grid distance <= radius of center."""
    nx, ny = grid
    cx, cy = center % nx, center // nx
    idx = np.arange(nx * ny)
    dx = np.abs(idx % nx - cx)
    dy = np.abs(idx // nx - cy)
    return idx[np.maximum(dx, dy) <= radius]


def update_step(
    weights: np.ndarray, x: np.ndarray, grid: tuple[int, int], eta: float, radius: float
) -> np.ndarray:
    """One presentation: move the winner's neighborhood toward x.

    Each updated component obeys w' = w + eta * (x - w); missing (NaN)
    components of x leave the corresponding weights untouched. Returns a
    new array; the input is not modified.
    """
    out = weights.copy()
    win = int(np.argmin(_sq_distances(out, x)))
    nodes = neighborhood(grid, win, radius)
    # Blended form keeps the eta = 1 step exact: w' = (1 - eta) w + eta x.
    moved = (1.0 - eta) * out[nodes] + eta * x
    out[nodes] = np.where(np.isnan(x), out[nodes], moved)
    return out


def train(data, config: SomConfig, init_weights: np.ndarray | None = None) -> SomMap:
    """Train a map over the data's bounding box.

    Weights start as seeded uniform draws inside the per-component data
    range (or from ``init_weights`` when given); each epoch presents the
    rows in order, and both the learning rate and the neighborhood radius
    decay linearly to zero over the total number of presentations.
    """
    x = _as_matrix(data)
    n, dim = x.shape
    if init_weights is None:
        rng = np.random.default_rng(config.seed)
        lo = np.nanmin(x, axis=0)
        hi = np.nanmax(x, axis=0)
        weights = rng.uniform(size=(config.nodes, dim)) * (hi - lo) + lo
    else:
        if init_weights.shape != (config.nodes, dim):
            raise UsageError("init_weights shape does not match grid and data dimension")
        weights = init_weights.astype(float).copy()

    if dim == 1 and config.grid[1] == 1 and not np.isnan(x).any():
        return _train_line(x, config, weights)

    total = config.epochs * n
    t = 0
    qe_log = [_qe(weights, x)]
    for _ in range(config.epochs):
        for row in x:
            frac = 1.0 - t / total
            weights = update_step(
                weights, row, config.grid, config.eta0 * frac, config.start_radius * frac
            )
            t += 1
        qe_log.append(_qe(weights, x))
    return SomMap(grid=config.grid, weights=weights, qe_log=tuple(qe_log))


def _train_line(x: np.ndarray, config: SomConfig, init: np.ndarray) -> SomMap:
    """Plain-float training for G x 1 maps on complete 1-D data.

    Same arithmetic as the general path, presentation for presentation
    (the blended update keeps it bit-identical); quantizer fitting calls
    this thousands of times, and array dispatch would dominate the cost.
    """
    values = [float(v) for v in x[:, 0]]
    n = len(values)
    m = config.nodes
    w = [float(v) for v in init[:, 0]]
    eta0 = config.eta0
    radius0 = config.start_radius
    total = config.epochs * n

    def qe() -> float:
        s = 0.0
        for v in values:
            s += min((wi - v) * (wi - v) for wi in w)
        return s / n

    qe_log = [qe()]
    t = 0
    for _ in range(config.epochs):
        for v in values:
            frac = 1.0 - t / total
            eta = eta0 * frac
            radius = radius0 * frac
            best, best_d = 0, None
            for i in range(m):
                d = (v - w[i]) * (v - w[i])
                if best_d is None or d < best_d:
                    best, best_d = i, d
            lo = max(0, best - int(radius))
            hi = min(m - 1, best + int(radius))
            one_m_eta = 1.0 - eta
            for i in range(lo, hi + 1):
                w[i] = one_m_eta * w[i] + eta * v
            t += 1
        qe_log.append(qe())
    weights = np.array([[wi] for wi in w])
    return SomMap(grid=config.grid, weights=weights, qe_log=tuple(qe_log))


def reduce_prototypes(som: SomMap, data) -> list[tuple[np.ndarray, list[int]]]:
    """Collapse the data onto the map: one (weight, member ids) entry per
    node that wins at least one row."""
    x = _as_matrix(data, som.dim)
    members: dict[int, list[int]] = {}
    for i, row in enumerate(x):
        members.setdefault(int(np.argmin(_sq_distances(som.weights, row))), []).append(i)
    return [(som.weights[node].copy(), ids) for node, ids in sorted(members.items())]


@dataclass(frozen=True)
class Discretizer:
    """Ordinal quantizer for one attribute.

    ``centers`` and ``cuts`` are in raw units, strictly descending; label
    1 belongs to the highest center. A value lands in granule g when it
    sits at or below cut g-1 and strictly above cut g (cut 0 = +inf,
    cut G = -inf), so larger values never get larger labels.
    """

    name: str
    scale: str
    centers: tuple[float, ...]
    cuts: tuple[float, ...]

    def __post_init__(self):
        if len(self.cuts) != len(self.centers) - 1:
            raise UsageError("need exactly G - 1 cuts for G centers")
        if any(b >= a for a, b in zip(self.centers, self.centers[1:])):
            raise UsageError("centers must be strictly decreasing")
        if any(b >= a for a, b in zip(self.cuts, self.cuts[1:])):
            raise UsageError("cuts must be strictly decreasing")

    @property
    def granules(self) -> int:
        return len(self.centers)


def assign_granule(d: Discretizer, v) -> int | None:
    """Label for a raw value; missing stays missing.

    Boundary values (v exactly at a cut) take the lower-value side, i.e.
    the larger label, matching a "<= cut" reading of the cut points.
    """
    if v is None:
        return None
    if isinstance(v, float) and math.isnan(v):
        return None
    for g, cut in enumerate(d.cuts, start=1):
        if v > cut:
            return g
    return d.granules


def fit_discretizer(
    values,
    granules: int,
    scale: str = "linear",
    seed: int = 0,
    epochs: int = 200,
    eta0: float = 0.8,
    name: str = "",
) -> Discretizer:
    """Quantize one attribute into ordered granules with a G x 1 map.

    The values pass through the attribute scale, are min-max conditioned,
    and train a 1-D map whose sorted centers define the granules. Cut
    points are midpoints between adjacent centers, computed in the
    transformed space and mapped back to raw units. Draws that leave two
    centers collapsed or a granule empty are retried with derived seeds,
    then with quantile-seeded winner-only training.
    """
    if granules < 2:
        raise UsageError("granule count must be at least 2")
    present = [v for v in values if v is not None]
    if not present:
        raise DataError("cannot discretize a column with no present values")
    transformed = transform_scale(present, scale)
    distinct = sorted(set(transformed))
    if len(distinct) < granules:
        raise DataError(
            f"column has {len(distinct)} distinct values, fewer than {granules} granules"
        )
    scaled, (lo, hi) = scale_minmax(transformed)
    data = [[v] for v in scaled]

    def build(som: SomMap) -> Discretizer | None:
        centers01 = sorted((float(w[0]) for w in som.weights), reverse=True)
        # Back out of the min-max conditioning into the transformed space.
        centers_t = [c * (hi - lo) + lo for c in centers01]
        if any(a <= b for a, b in zip(centers_t, centers_t[1:])):
            return None
        cuts_t = [(a + b) / 2.0 for a, b in zip(centers_t, centers_t[1:])]
        d = Discretizer(
            name=name,
            scale=scale,
            centers=tuple(inverse_scale(c, scale) for c in centers_t),
            cuts=tuple(inverse_scale(c, scale) for c in cuts_t),
        )
        got = {assign_granule(d, v) for v in present}
        return d if len(got) == granules else None

    for attempt in range(_FIT_RETRIES):
        cfg = SomConfig(
            grid=(granules, 1), epochs=epochs, eta0=eta0, seed=seed + 1000003 * attempt
        )
        d = build(train(data, cfg))
        if d is not None:
            return d

    # Fallback: centers seeded on quantiles of the distinct values and no
    # neighborhood coupling, which cannot starve a node.
    positions = np.linspace(0, len(distinct) - 1, granules)
    init = np.array([[distinct_scaled] for distinct_scaled in _pick(scaled, positions)])
    cfg = SomConfig(grid=(granules, 1), epochs=epochs, eta0=eta0, radius0=0.0, seed=seed)
    d = build(train(data, cfg, init_weights=init))
    if d is None:
        raise DataError(f"could not separate {granules} quantizer centers")
    return d


def _pick(scaled_values, positions) -> list[float]:
    distinct = sorted(set(scaled_values))
    return [distinct[int(round(p))] for p in positions]


def fit_table_discretizer(table, name: str, granules: int, seed: int) -> Discretizer:
    """Fit a named discretizer for one table column using its schema scale."""
    spec = table.spec(name)
    return fit_discretizer(table.column(name), granules, scale=spec.scale, seed=seed, name=name)


# --- text records ---------------------------------------------------------
#
# One line per attribute, fixed 6-decimal values in the transformed space
# (log10 attributes would lose everything in raw fixed-point):
#
#   name=<attr> scale=<scale> centers=<v1>,<v2>,... cuts=<w1>,...


def discretizer_record(d: Discretizer) -> str:
    centers_t = transform_scale(list(d.centers), d.scale)
    cuts_t = transform_scale(list(d.cuts), d.scale)
    return (
        f"name={d.name} scale={d.scale} "
        f"centers={','.join(f'{c:.6f}' for c in centers_t)} "
        f"cuts={','.join(f'{c:.6f}' for c in cuts_t)}"
    )


def parse_discretizer_record(line: str) -> Discretizer:
    fields = {}
    for token in line.split():
        if "=" not in token:
            raise DataError(f"malformed discretizer record field {token!r}")
        key, _, value = token.partition("=")
        fields[key] = value
    try:
        scale = fields["scale"]
        centers = tuple(inverse_scale(float(v), scale) for v in fields["centers"].split(","))
        cuts_field = fields.get("cuts", "")
        cuts = tuple(inverse_scale(float(v), scale) for v in cuts_field.split(",") if v)
        return Discretizer(name=fields["name"], scale=scale, centers=centers, cuts=cuts)
    except (KeyError, ValueError) as exc:
        raise DataError(f"malformed discretizer record: {exc}") from None
