"""Hierarchical nets and cluster graphs.

A geometric net hierarchy with parent links, the cross-edge spanner it
induces, approximate-edge lookup, net-point queries for the waist
regions of a segment, and the bounded-hop cluster-graph distance oracle
used by the fast pruning path.
"""

from __future__ import annotations

import heapq
import math

import numpy as np

from .geom import (
    A_HI,
    A_LO,
    B_HI,
    B_LO,
    BAND_TOL,
    GEOM_RTOL,
    GeomError,
    PointSet,
)
from .graph import GraphError, SpannerGraph

# Cross-edge radius multiplier at level i is CROSS_RADIUS(eps) * 2^i.
def cross_radius_const(eps: float) -> float:
    return 4.0 / eps + 32.0


DEFAULT_HOP_CAP = 20


class NetHierarchy:
    """Nested nets N_0 >= N_1 >= ... with parent links.

    Level i is a (2^i)-net of level i-1; the top level is a single
    point.  ``parent[(u, i)]`` is the closest level-(i+1) net point to
    u (ties to the smallest index).
    """

    def __init__(self, X: PointSet, levels, parent, spread: float):
        self.points = X
        self.levels = levels
        self.parent = parent
        self.spread = spread

    @property
    def top(self) -> int:
        return len(self.levels) - 1

    def radius(self, i: int) -> float:
        return float(2.0**i)

    def ancestor(self, u: int, level: int) -> int:
        """Net point of N_level on u's parent chain."""
        a = u
        for i in range(level):
            a = self.parent[(a, i)]
        return a

    def ancestors(self, u: int) -> list:
        """Parent chain of u from level 0 to the top."""
        chain = [u]
        for i in range(self.top):
            chain.append(self.parent[(chain[-1], i)])
        return chain

    def check_invariants(self, rtol: float = GEOM_RTOL) -> None:
        """Separation and covering at every level (O(n^2) per level)."""
        c = self.points.coords
        for i, members in enumerate(self.levels):
            r = self.radius(i)
            pts = c[members]
            if len(members) > 1:
                d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
                np.fill_diagonal(d, np.inf)
                if d.min() <= r * (1.0 - rtol):
                    raise GeomError(f"separation violated at level {i}")
            if i > 0:
                prev = c[self.levels[i - 1]]
                d = np.linalg.norm(prev[:, None, :] - pts[None, :, :], axis=2)
                if d.min(axis=1).max() > r * (1.0 + rtol):
                    raise GeomError(f"covering violated at level {i}")
        if len(self.levels[-1]) != 1:
            raise GeomError("top level must be a single point")


def dump_levels(H: NetHierarchy) -> str:
    """Debug dump of the hierarchy, one "level: indices" line per level."""
    return "\n".join(
        f"{i}: {' '.join(str(int(u)) for u in members)}"
        for i, members in enumerate(H.levels)
    )


def build_hierarchy(X: PointSet) -> NetHierarchy:
    """Greedy nested nets over a normalized point set.

    Points are scanned in index order at every level, which makes the
    construction deterministic; the parent of (u, i) is its closest
    point of N_{i+1}, ties to the smallest index.
    """
    if X.n < 1:
        raise GeomError("empty point set")
    if X.n == 1:
        return NetHierarchy(X, [np.array([0])], {}, 1.0)
    if not X.is_normalized(rtol=1e-6):
        raise GeomError("hierarchy requires a normalized point set")
    c = X.coords
    spread = X.spread()
    levels = [np.arange(X.n, dtype=np.int64)]
    parent: dict = {}
    level = 0
    max_levels = math.ceil(math.log2(max(spread, 2.0))) + 2
    while len(levels[-1]) > 1:
        level += 1
        r = 2.0**level
        prev = levels[-1]
        chosen: list = []
        for u in prev:
            if not chosen:
                chosen.append(int(u))
                continue
            d = np.linalg.norm(c[chosen] - c[u], axis=1)
            if float(d.min()) > r:
                chosen.append(int(u))
        net = np.array(chosen, dtype=np.int64)
        for u in prev:
            d = np.linalg.norm(c[net] - c[u], axis=1)
            parent[(int(u), level - 1)] = int(net[int(np.argmin(d))])
        levels.append(net)
        if level > max_levels:  # pragma: no cover - safety net
            raise GeomError("hierarchy failed to converge")
    return NetHierarchy(X, levels, parent, spread)


def build_net_tree_spanner(
    H: NetHierarchy, eps: float, radius_const: float | None = None
) -> SpannerGraph:
    """Union over levels of all cross edges, deduplicated.

    A cross edge at level i joins two level-i net points at distance at
    most (4/eps + 32) * 2^i (the multiplier can be overridden for
    experiments).
    """
    if not 0.0 < eps < 1.0:
        raise GeomError("eps must lie in (0, 1)")
    R = radius_const if radius_const is not None else cross_radius_const(eps)
    c = H.points.coords
    pairs = set()
    for i, members in enumerate(H.levels):
        if len(members) < 2:
            continue
        limit = R * H.radius(i)
        pts = c[members]
        d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
        ii, jj = np.nonzero(np.triu(d <= limit, k=1))
        for a, b in zip(members[ii], members[jj]):
            u, v = (int(a), int(b)) if a < b else (int(b), int(a))
            pairs.add((u, v))
    return SpannerGraph.from_pairs(
        H.points, sorted(pairs), meta={"builder": "net_tree", "eps": eps, "radius_const": R}
    )


def _approx_level(H: NetHierarchy, u: int, v: int, eps: float) -> int:
    """Lowest level whose ancestors of u and v are distinct and within
    cross-edge range of each other."""
    R = cross_radius_const(eps)
    c = H.points.coords
    au, av = u, v
    for i in range(H.top + 1):
        if au != av and np.linalg.norm(c[au] - c[av]) <= R * H.radius(i):
            return i
        if i < H.top:
            au = H.parent[(au, i)]
            av = H.parent[(av, i)]
    raise GraphError(f"no approximate level for pair ({u},{v})")


def approximate_edge(H: NetHierarchy, spanner: SpannerGraph, u: int, v: int):
    """Cross edge between the lowest-level distinct ancestors of u, v.

    Returns (u', v', level).  Both returned endpoints lie within
    eps*|uv| of the respective query points.
    """
    if u == v:
        raise GraphError("u and v must differ")
    edge_set = spanner.edge_set()
    au, av = u, v
    for i in range(H.top + 1):
        if au != av:
            key = (au, av) if au < av else (av, au)
            if key in edge_set:
                return au, av, i
        if i < H.top:
            au = H.parent[(au, i)]
            av = H.parent[(av, i)]
    raise GraphError(f"no approximate edge for pair ({u},{v})")


def region_net_points(
    H: NetHierarchy, s: int, t: int, eps: float, which: str
) -> list:
    """Net points whose covering balls can reach region A or B of (s, t).

    At the approximate level h of the pair, returns every level-h net
    point w within 2|st| of s's ancestor whose covering ball intersects
    the requested waist region (tested via the ellipse sum and the
    projection band, each widened by the ball radius).  The ball radius
    is the level's covering radius 2^{h+1}-2, the farthest any point
    sits from its level-h ancestor; at level 0 this is 0 and the test
    is exact, so a two-point instance yields empty regions.  An empty
    list means the approximate region is empty.
    """
    if s == t:
        raise GraphError("s and t must differ")
    if which not in ("A", "B"):
        raise GeomError("which must be 'A' or 'B'")
    c = H.points.coords
    ps, pt = c[s], c[t]
    D = float(np.linalg.norm(pt - ps))
    h = _approx_level(H, s, t, eps)
    rho = 2.0 ** (h + 1) - 2.0
    anc_s = H.ancestor(s, h)
    members = H.levels[h]
    pts = c[members]
    near = np.linalg.norm(pts - c[anc_s], axis=1) <= 2.0 * D * (1.0 + GEOM_RTOL)
    ds = np.linalg.norm(pts - ps, axis=1)
    dt = np.linalg.norm(pts - pt, axis=1)
    in_ellipse = ds + dt <= (1.0 + eps) * D + 2.0 * rho
    st = pt - ps
    f = (pts - ps) @ st / (D * D)
    widen = rho / D
    lo, hi = (A_LO, A_HI) if which == "A" else (B_LO, B_HI)
    in_band = (f >= lo - widen - BAND_TOL) & (f <= hi + widen + BAND_TOL)
    keep = near & in_ellipse & in_band
    return sorted(int(w) for w in members[keep])


# ---------------------------------------------------------------------------
# cluster graphs


class ClusterGraph:
    """Cluster-graph distance proxy at a single scale.

    Built from a source graph whose edges are all shorter than 2^level.
    Points are covered by radius eps*2^level balls in the graph metric;
    intra edges join members to their centers, inter edges join nearby
    centers.  With contraction, ultra-short edges are collapsed first
    and all distances live on the quotient.
    """

    def __init__(self, level, eps, centers, membership, inter, rep, radius):
        self.level = level
        self.eps = eps
        self.centers = centers
        self.membership = membership  # rep point -> list of (center, dist)
        self.inter = inter  # (c1, c2) with c1 < c2 -> weight
        self.rep = rep  # original point -> representative
        self.radius = radius

    def covers(self, u: int) -> bool:
        return self.rep[u] in self.membership

    def add_bridge(self, s: int, t: int, w: float) -> None:
        """Register a new source-graph edge (s, t) of weight w as
        inter-cluster edges between every pair of containing clusters."""
        rs, rt = self.rep[s], self.rep[t]
        for c1, d1 in self.membership.get(rs, ()):
            for c2, d2 in self.membership.get(rt, ()):
                if c1 == c2:
                    continue
                key = (c1, c2) if c1 < c2 else (c2, c1)
                cand = d1 + w + d2
                if cand < self.inter.get(key, math.inf):
                    self.inter[key] = cand


def _truncated_dijkstra(adj, src: int, limit: float) -> dict:
    dist = {src: 0.0}
    heap = [(0.0, src)]
    done = set()
    out = {}
    while heap:
        d, u = heapq.heappop(heap)
        if d > limit:
            break
        if u in done:
            continue
        done.add(u)
        out[u] = d
        for v, w in adj.get(u, ()):
            nd = d + w
            if nd <= limit and nd < dist.get(v, math.inf):
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return out


class _UnionFind:
    def __init__(self, n):
        self.p = list(range(n))

    def find(self, x):
        while self.p[x] != x:
            self.p[x] = self.p[self.p[x]]
            x = self.p[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            if rb < ra:
                ra, rb = rb, ra
            self.p[rb] = ra


def build_cluster_graph(
    G_below: SpannerGraph,
    i: int,
    eps: float,
    contract: bool = False,
    n: int | None = None,
) -> ClusterGraph:
    """Cluster graph at scale 2^i over a graph of shorter edges.

    Greedy cover by radius eps*2^i balls in the graph metric, scanning
    points in index order; inter edges join centers at graph distance at
    most 2^i, plus bridges through existing edges between clusters.
    With ``contract``, edges of weight at most 2^i * eps^2 / n are
    collapsed first and the cover is built on the quotient, whose
    source distances undercut the uncontracted ones by at most
    2^i * eps^2 along any simple path.
    """
    scale = 2.0**i
    for _, _, w in G_below.edges:
        if w >= scale * (1.0 + GEOM_RTOL):
            raise GraphError(f"edge of weight {w} >= scale {scale}")
    npts = n if n is not None else G_below.n
    rep = list(range(G_below.n))
    if contract:
        thr = scale * eps * eps / npts
        uf = _UnionFind(G_below.n)
        for u, v, w in G_below.edges:
            if w <= thr * (1.0 + GEOM_RTOL):
                uf.union(u, v)
        rep = [uf.find(x) for x in range(G_below.n)]
    # quotient adjacency (identity when not contracting)
    adj: dict = {}
    for u, v, w in G_below.edges:
        ru, rv = rep[u], rep[v]
        if ru == rv:
            continue
        adj.setdefault(ru, []).append((rv, w))
        adj.setdefault(rv, []).append((ru, w))
    nodes = sorted(set(rep))
    radius = eps * scale
    centers: list = []
    membership: dict = {u: [] for u in nodes}
    nearest = {u: math.inf for u in nodes}
    for u in nodes:
        if nearest[u] <= radius * (1.0 + GEOM_RTOL):
            continue
        centers.append(u)
        ball = _truncated_dijkstra(adj, u, radius * (1.0 + GEOM_RTOL))
        for v, d in ball.items():
            membership[v].append((u, d))
            if d < nearest[v]:
                nearest[v] = d
    inter: dict = {}
    cset = set(centers)
    for cpt in centers:
        ball = _truncated_dijkstra(adj, cpt, scale * (1.0 + GEOM_RTOL))
        for v, d in ball.items():
            if v != cpt and v in cset:
                key = (cpt, v) if cpt < v else (v, cpt)
                if d < inter.get(key, math.inf):
                    inter[key] = d
    # bridge inter edges through existing edges between clusters
    F = ClusterGraph(i, eps, centers, membership, inter, rep, radius)
    for u, v, w in G_below.edges:
        if rep[u] != rep[v]:
            F.add_bridge(u, v, w)
    return F


def cluster_dist(F: ClusterGraph, s: int, t: int, hop_cap: int = DEFAULT_HOP_CAP) -> float:
    """Bounded-hop distance through the cluster graph.

    Minimum weight of a path of at most ``hop_cap`` edges whose only
    intra-cluster edges are the first and the last; +inf when no such
    path exists.
    """
    rs, rt = F.rep[s], F.rep[t]
    if rs == rt:
        return 0.0
    start = F.membership.get(rs, ())
    goal = F.membership.get(rt, ())
    if not start or not goal:
        return math.inf
    idx = {c: k for k, c in enumerate(F.centers)}
    dist = np.full(len(F.centers), np.inf)
    for c, d in start:
        dist[idx[c]] = min(dist[idx[c]], d)
    if F.inter:
        e_a = np.fromiter((idx[a] for a, _ in F.inter), dtype=np.int64, count=len(F.inter))
        e_b = np.fromiter((idx[b] for _, b in F.inter), dtype=np.int64, count=len(F.inter))
        e_w = np.fromiter(F.inter.values(), dtype=np.float64, count=len(F.inter))
        for _ in range(max(0, hop_cap - 2)):
            nd = dist.copy()
            np.minimum.at(nd, e_b, dist[e_a] + e_w)
            np.minimum.at(nd, e_a, dist[e_b] + e_w)
            if not (nd < dist).any():
                break
            dist = nd
    best = math.inf
    for c, d in goal:
        best = min(best, dist[idx[c]] + d)
    return float(best)
