"""Ordered observation sequences from raw matched points.

Raw points carry the two best stereo-matching candidate costs; ambiguous
matches (second-best cost close to the best) are dropped by a sigmoid
peak-similarity test, survivors are clustered in pixel space, and cluster
centroids are chained into an ordered sequence along the thread.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree
from scipy.special import expit

from .errors import AmbiguousOrdering, DegenerateDenominator, TooFewObservations

# Branch detection: along an open chain a centroid sees two neighbours at
# the local spacing and the next only at twice that, so a third neighbour
# nearly as close as the second marks a junction.
_BRANCH_RATIO = 1.35


@dataclass(frozen=True)
class RawPoint:
    """A stereo-matched 3D point with its matching-cost metadata.

    ``cost_best`` and ``cost_second`` are the best and second-best candidate
    costs for the pixel; a confident match has a clearly larger second cost.
    """

    position: np.ndarray
    cost_best: float
    cost_second: float
    pixel: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        object.__setattr__(self, "pixel", np.asarray(self.pixel, dtype=float))
        if self.cost_best < 0 or self.cost_second < self.cost_best:
            raise ValueError("costs must satisfy 0 <= cost_best <= cost_second")


@dataclass(frozen=True)
class Observation:
    """An ordered point along the thread: 3D position, chain index, pixel."""

    position: np.ndarray
    index: int
    pixel: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        object.__setattr__(self, "pixel", np.asarray(self.pixel, dtype=float))


@dataclass(frozen=True)
class OutlierParams:
    """Tuning values for the peak-similarity filter.

    Defaults keep a point exactly when its second-best cost exceeds the best
    (sigmoid argument positive), a strict-peak criterion.
    """

    eps1: float = 1.0
    eps2: float = 1.0
    eps3: float = 0.0
    eps4: float = 0.5

    def __post_init__(self):
        if self.eps1 <= 0:
            raise ValueError("eps1 must be positive")
        if not 0.0 < self.eps4 < 1.0:
            raise ValueError("eps4 must lie in (0, 1)")


def peak_similarity(point: RawPoint, params: OutlierParams) -> float:
    """Sigmoid confidence that a match is unambiguous."""
    denom = params.eps2 * point.cost_best - params.eps3
    return float(expit(params.eps1 * (point.cost_second - point.cost_best) / denom))


def peak_similarity_filter(
    points: list[RawPoint], params: OutlierParams | None = None
) -> list[RawPoint]:
    """Keep points whose peak-similarity score exceeds the eps4 threshold.

    Order is preserved and inputs are not mutated. Raises
    :class:`DegenerateDenominator` if eps2*cost_best - eps3 is not positive
    for some point; the sign convention of the score is undefined there.
    """
    params = params or OutlierParams()
    kept = []
    for i, p in enumerate(points):
        denom = params.eps2 * p.cost_best - params.eps3
        if denom <= 0.0:
            raise DegenerateDenominator(i, denom)
        if peak_similarity(p, params) > params.eps4:
            kept.append(p)
    return kept


def _cluster_labels(pixels: np.ndarray, radius: float) -> np.ndarray:
    """Single-linkage clusters at a distance threshold.

    Equivalent to cutting a single-linkage dendrogram at ``radius``: clusters
    are the connected components of the graph joining pixel pairs closer
    than the radius. Independent of input order.
    """
    tree = cKDTree(pixels)
    pairs = tree.query_pairs(radius, output_type="ndarray")
    n = len(pixels)
    if len(pairs) == 0:
        return np.arange(n)
    rows = np.concatenate([pairs[:, 0], pairs[:, 1]])
    cols = np.concatenate([pairs[:, 1], pairs[:, 0]])
    graph = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    _, labels = connected_components(graph, directed=False)
    return labels


def cluster_and_order(
    points: list[RawPoint], cluster_radius_px: float = 4.0
) -> list[Observation]:
    """Cluster filtered points in pixel space and chain the centroids.

    Each cluster contributes one observation at the 3D centroid of its
    members. Chaining starts from the centroid farthest from the overall
    pixel centroid (an endpoint for a non-self-intersecting open curve) and
    greedily walks to the nearest unvisited centroid.

    Raises :class:`TooFewObservations` below 2 clusters and
    :class:`AmbiguousOrdering` when the centroid graph branches, the proxy
    for a self-intersecting thread.
    """
    if len(points) < 2:
        raise TooFewObservations(f"need at least 2 points, got {len(points)}")
    if cluster_radius_px <= 0:
        raise ValueError("cluster_radius_px must be positive")

    pixels = np.array([p.pixel for p in points])
    positions = np.array([p.position for p in points])
    labels = _cluster_labels(pixels, cluster_radius_px)

    centroids_px = []
    centroids_3d = []
    for lab in np.unique(labels):
        members = np.flatnonzero(labels == lab)
        # Fixed reduction order: sort members spatially so the centroid is
        # identical under any permutation of the input list.
        order = np.lexsort(
            (positions[members, 2], pixels[members, 1], pixels[members, 0])
        )
        members = members[order]
        centroids_px.append(pixels[members].mean(axis=0))
        centroids_3d.append(positions[members].mean(axis=0))
    centroids_px = np.array(centroids_px)
    centroids_3d = np.array(centroids_3d)

    n = len(centroids_px)
    if n < 2:
        raise TooFewObservations(f"only {n} cluster(s) at radius {cluster_radius_px}")

    _check_branching(centroids_px)

    overall = centroids_px.mean(axis=0)
    dists = np.linalg.norm(centroids_px - overall, axis=1)
    # Deterministic start: farthest from the centroid, pixel-lexicographic
    # tie-break so reversed input yields the identical chain.
    start_order = np.lexsort((centroids_px[:, 1], centroids_px[:, 0], -dists))
    start = int(start_order[0])

    chain = [start]
    remaining = set(range(n)) - {start}
    while remaining:
        cur = centroids_px[chain[-1]]
        rem = sorted(remaining)
        d = np.linalg.norm(centroids_px[rem] - cur, axis=1)
        nxt = rem[int(np.argmin(d))]
        chain.append(nxt)
        remaining.remove(nxt)

    obs = [
        Observation(position=centroids_3d[c], index=i, pixel=centroids_px[c])
        for i, c in enumerate(chain)
    ]
    for a, b in zip(obs[:-1], obs[1:]):
        if np.array_equal(a.position, b.position):
            raise AmbiguousOrdering("consecutive centroids coincide in 3D")
    return obs


def _check_branching(centroids_px: np.ndarray) -> None:
    n = len(centroids_px)
    if n < 4:
        return
    tree = cKDTree(centroids_px)
    nn_dist, _ = tree.query(centroids_px, k=4)
    d2, d3 = nn_dist[:, 2], nn_dist[:, 3]
    branched = d3 < _BRANCH_RATIO * d2
    if np.any(branched):
        worst = int(np.flatnonzero(branched)[0])
        raise AmbiguousOrdering(
            f"centroid {worst} has 3 neighbours within {d3[worst]:.2f} px "
            f"(local chain spacing {d2[worst]:.2f} px); thread appears to "
            "self-intersect"
        )


def observations_from_positions(
    positions: np.ndarray, pixels: np.ndarray
) -> list[Observation]:
    """Wrap pre-ordered positions/pixels as an observation sequence."""
    positions = np.asarray(positions, dtype=float)
    pixels = np.asarray(pixels, dtype=float)
    if len(positions) != len(pixels):
        raise ValueError("positions and pixels must have equal length")
    if len(positions) < 2:
        raise TooFewObservations("need at least 2 observations")
    return [
        Observation(position=p, index=i, pixel=q)
        for i, (p, q) in enumerate(zip(positions, pixels))
    ]
