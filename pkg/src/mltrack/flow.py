"""Temporal association of features into feature tracks via min-cost flow.

Every feature is a split node pair (u_i, v_i). A unit of flow enters at a
source arc (cost ``c_in``), passes the feature arc (cost ``c_d``), optionally
follows transition arcs v_i -> u_j to later features (cost ``c_t``) and exits
at a sink arc (cost ``c_out``). Tracklet nodes must carry flow; detection
nodes may be skipped. The constraint matrix is totally unimodular, so the
integral optimum found by successive shortest paths is the LP optimum.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .model import Category, Detection, DptTracklet, FeatureTrack, TrackerConfig, feature_span

# transitions whose motion term exceeds this are never added to the graph
GATE = 2.0
# objective tolerance when deciding whether another path still pays off
_EPS = 1e-12
ORACLE_MAX_NODES = 10


class InadmissibleLink(ValueError):
    pass


def _endpoints(a, b):
    """Positions/appearances/frames used to compare feature a (earlier) with b (later)."""
    if isinstance(a, Detection):
        return (np.asarray(a.center, float), None, a.frame,
                np.asarray(b.center, float), None, b.frame)
    pa, pb = a.points[-1], b.points[0]
    return (np.asarray(pa.position, float), np.asarray(pa.appearance, float), pa.frame,
            np.asarray(pb.position, float), np.asarray(pb.appearance, float), pb.frame)


def motion_term(a, b, config: TrackerConfig) -> float:
    pa, _, fa, pb, _, fb = _endpoints(a, b)
    dt = fb - fa
    if dt <= 0 or dt > config.f_max:
        raise InadmissibleLink(f"time gap {dt} outside [1, {config.f_max}]")
    return float(np.linalg.norm(pb - pa)) / (config.v_max * dt)


def link_cost(a, b, config: TrackerConfig) -> float:
    """Transition cost from feature ``a`` to the later feature ``b``.

    Tracklets are compared between the last point of ``a`` and the first
    point of ``b`` and include the appearance term; detections do not.
    """
    if type(a) is not type(b):
        raise InadmissibleLink("features of different categories")
    pa, aa, fa, pb, ab, fb = _endpoints(a, b)
    dt = fb - fa
    if dt <= 0 or dt > config.f_max:
        raise InadmissibleLink(f"time gap {dt} outside [1, {config.f_max}]")
    cost = float(np.linalg.norm(pb - pa)) / (config.v_max * dt) + dt / config.f_max
    if aa is not None:
        cost += float(np.linalg.norm(ab - aa)) / config.a_max
    return cost


def squash_confidence(score: float, lo: float, hi: float, eps: float) -> float:
    q = 0.5 if hi <= lo else (score - lo) / (hi - lo)
    return min(max(q, eps), 1.0 - eps)


def detection_cost(feature, config: TrackerConfig, score_range=None) -> float:
    """Cost of using a feature; log-odds of its squashed detector score.

    ``score_range`` is the (min, max) raw confidence over the sequence; without
    it the raw score is taken as a probability. Tracklets always cost 0.
    """
    if isinstance(feature, DptTracklet):
        return 0.0
    lo, hi = score_range if score_range is not None else (0.0, 1.0)
    q = squash_confidence(feature.confidence, lo, hi, config.confidence_epsilon)
    return math.log((1.0 - q) / q)


@dataclass
class FlowGraph:
    category: Category
    features: list
    c_in: list[float]
    c_out: list[float]
    c_d: list[float]
    arcs: list[tuple[int, int, float]] = field(default_factory=list)  # (i, j, c_t)

    @property
    def n(self) -> int:
        return len(self.features)

    @property
    def mandatory(self) -> bool:
        return self.category is Category.LOW


@dataclass
class FlowSolution:
    starts: tuple[int, ...] = ()
    ends: tuple[int, ...] = ()
    used: tuple[int, ...] = ()
    links: tuple[tuple[int, int], ...] = ()
    objective: float = 0.0


def _sort_key(feature):
    first, last = feature_span(feature)
    return (first, last)


def build_graph(features, category: Category, config: TrackerConfig, score_range=None) -> FlowGraph:
    """Split-node graph over ``features``; ``score_range`` defaults to their own min/max confidence."""
    category = Category(category)
    want = DptTracklet if category is Category.LOW else Detection
    if any(not isinstance(f, want) for f in features):
        raise TypeError(f"all features must be {want.__name__} for category {category.value}")
    feats = sorted(features, key=_sort_key)  # stable: input order breaks ties
    n = len(feats)
    if category is Category.MID and n:
        if score_range is None:
            scores = [d.confidence for d in feats]
            score_range = (min(scores), max(scores))
        c_d = [detection_cost(d, config, score_range) for d in feats]
    else:
        c_d = [0.0] * n
    arcs = []
    spans = [feature_span(f) for f in feats]
    for i in range(n):
        end_i = spans[i][1]
        for j in range(i + 1, n):
            dt = spans[j][0] - end_i
            if dt < 1 or dt > config.f_max:
                continue
            if motion_term(feats[i], feats[j], config) > GATE:
                continue
            arcs.append((i, j, link_cost(feats[i], feats[j], config)))
    return FlowGraph(category, feats, [config.c_in] * n, [config.c_out] * n, c_d, arcs)


def solution_cost(g: FlowGraph, sol: FlowSolution) -> float:
    arc_cost = {(i, j): c for i, j, c in g.arcs}
    return (sum(g.c_in[i] for i in sol.starts) + sum(g.c_out[i] for i in sol.ends)
            + sum(g.c_d[i] for i in sol.used) + sum(arc_cost[a] for a in sol.links))


def check_conservation(g: FlowGraph, sol: FlowSolution) -> list[int]:
    """Nodes violating in-flow == f_d == out-flow (empty when feasible)."""
    used = set(sol.used)
    inflow = [0] * g.n
    outflow = [0] * g.n
    for i in sol.starts:
        inflow[i] += 1
    for i in sol.ends:
        outflow[i] += 1
    for i, j in sol.links:
        outflow[i] += 1
        inflow[j] += 1
    bad = []
    for i in range(g.n):
        fd = 1 if i in used else 0
        if inflow[i] != fd or outflow[i] != fd or (g.mandatory and fd != 1):
            bad.append(i)
    return bad


def solve_min_cost_flow(g: FlowGraph) -> FlowSolution:
    """Exact integral min-cost flow by successive shortest paths.

    Paths are added while the cheapest augmenting path has negative cost; the
    cost of the k-path optimum is convex in k, so stopping there is optimal.
    Mandatory tracklet arcs get a bonus large enough that covering a node is
    always worth it, and the bonus is removed when reporting the objective.
    """
    n = g.n
    if n == 0:
        return FlowSolution()
    bonus = 0.0
    if g.mandatory:
        bonus = max(ci + co for ci, co in zip(g.c_in, g.c_out)) + 1.0

    # node ids: 0 source, 1 sink, u_i = 2 + 2i, v_i = 3 + 2i
    S, T = 0, 1
    nn = 2 + 2 * n
    head, cost, cap, adj = [], [], [], [[] for _ in range(nn)]

    def add(a, b, c):
        adj[a].append(len(head)); head.append(b); cost.append(c); cap.append(1)
        adj[b].append(len(head)); head.append(a); cost.append(-c); cap.append(0)

    for i in range(n):
        add(S, 2 + 2 * i, g.c_in[i])
    for i in range(n):
        add(2 + 2 * i, 3 + 2 * i, g.c_d[i] - bonus)
    for i, j, c in g.arcs:
        add(3 + 2 * i, 2 + 2 * j, c)
    for i in range(n):
        add(3 + 2 * i, T, g.c_out[i])

    # initial potentials: shortest distances in the DAG (features are in time order)
    inf = math.inf
    pot = [inf] * nn
    pot[S] = 0.0
    order = [S] + [x for i in range(n) for x in (2 + 2 * i, 3 + 2 * i)] + [T]
    for x in order:
        if pot[x] == inf:
            continue
        for e in adj[x]:
            if cap[e] and pot[x] + cost[e] < pot[head[e]]:
                pot[head[e]] = pot[x] + cost[e]

    while True:
        dist = [inf] * nn
        prev = [-1] * nn
        dist[S] = 0.0
        heap = [(0.0, S)]
        while heap:
            d, x = heapq.heappop(heap)
            if d > dist[x]:
                continue
            px = pot[x]
            for e in adj[x]:
                if not cap[e]:
                    continue
                y = head[e]
                if pot[y] == inf:
                    continue
                nd = d + max(cost[e] + px - pot[y], 0.0)
                if nd < dist[y]:
                    dist[y] = nd
                    prev[y] = e
                    heapq.heappush(heap, (nd, y))
        if dist[T] == inf:
            break
        # true path cost, summed from arc costs to avoid potential round-off
        path, y = [], T
        while y != S:
            e = prev[y]
            path.append(e)
            y = head[e ^ 1]
        if sum(cost[e] for e in path) >= -_EPS:
            break
        for e in path:
            cap[e] -= 1
            cap[e ^ 1] += 1
        for x in range(nn):
            if dist[x] < inf:
                pot[x] += dist[x]

    starts, ends, used, links = [], [], [], []
    for i in range(n):
        u, v = 2 + 2 * i, 3 + 2 * i
        for e in adj[u]:
            if e % 2 == 0 and head[e] == v and cap[e] == 0:
                used.append(i)
    for e in adj[S]:
        if cap[e] == 0:
            starts.append((head[e] - 2) // 2)
    for i in range(n):
        for e in adj[3 + 2 * i]:
            if e % 2 or cap[e]:
                continue
            if head[e] == T:
                ends.append(i)
            else:
                links.append((i, (head[e] - 2) // 2))
    sol = FlowSolution(tuple(sorted(starts)), tuple(sorted(ends)), tuple(used),
                       tuple(sorted(links)))
    sol.objective = solution_cost(g, sol)
    if g.mandatory:
        assert len(used) == n, "mandatory tracklet arcs unsatisfied"
    return sol


def iter_feasible_flows(g: FlowGraph):
    """Yield every integral flow satisfying conservation and capacities.

    Nodes are visited in time order; each used node either starts a path or
    was claimed as the successor of an earlier node, and picks one successor
    (a later node or the sink).
    """
    n = g.n
    succ = [[] for _ in range(n)]
    for i, j, _ in g.arcs:
        succ[i].append(j)
    has_pred = [False] * n
    starts, ends, used, links = [], [], [], []

    def rec(i):
        if i == n:
            yield FlowSolution(tuple(starts), tuple(ends), tuple(used), tuple(sorted(links)))
            return
        if not has_pred[i] and not g.mandatory:
            yield from rec(i + 1)  # node skipped
        used.append(i)
        opened = not has_pred[i]
        if opened:
            starts.append(i)
        ends.append(i)
        yield from rec(i + 1)
        ends.pop()
        for j in succ[i]:
            if has_pred[j]:
                continue
            has_pred[j] = True
            links.append((i, j))
            yield from rec(i + 1)
            links.pop()
            has_pred[j] = False
        if opened:
            starts.pop()
        used.pop()

    yield from rec(0)


def oracle_enumerate(g: FlowGraph) -> FlowSolution:
    """Exhaustive minimum over all feasible integral flows (test oracle)."""
    if g.n > ORACLE_MAX_NODES:
        raise ValueError(f"oracle refuses graphs with more than {ORACLE_MAX_NODES} nodes")
    n = g.n
    succ = [[] for _ in range(n)]
    for i, j, c in g.arcs:
        succ[i].append((j, c))
    has_pred = [False] * n
    nxt = [-1] * n  # -1 unused, -2 sink, else successor
    best = [math.inf, None]

    # same traversal as iter_feasible_flows, carrying the partial cost
    def rec(i, acc):
        if i == n:
            if acc < best[0] - _EPS:
                best[0], best[1] = acc, (list(nxt), list(has_pred))
            return
        if not has_pred[i] and not g.mandatory:
            rec(i + 1, acc)
        base = acc + g.c_d[i] + (0.0 if has_pred[i] else g.c_in[i])
        nxt[i] = -2
        rec(i + 1, base + g.c_out[i])
        for j, c in succ[i]:
            if has_pred[j]:
                continue
            has_pred[j] = True
            nxt[i] = j
            rec(i + 1, base + c)
            has_pred[j] = False
        nxt[i] = -1

    rec(0, 0.0)
    chosen, preds = best[1]
    used = tuple(i for i in range(n) if chosen[i] != -1)
    sol = FlowSolution(
        starts=tuple(i for i in used if not preds[i]),
        ends=tuple(i for i in used if chosen[i] == -2),
        used=used,
        links=tuple((i, chosen[i]) for i in used if chosen[i] >= 0),
    )
    sol.objective = solution_cost(g, sol)
    return sol


def extract_tracks(sol: FlowSolution, g: FlowGraph, first_id: int = 0) -> list[FeatureTrack]:
    nxt = dict(sol.links)
    tracks = []
    for k, s in enumerate(sorted(sol.starts)):
        members, i = [g.features[s]], s
        while i in nxt:
            i = nxt[i]
            members.append(g.features[i])
        tracks.append(FeatureTrack(g.category, tuple(members), first_id + k))
    return tracks


def link_features(features, category, config: TrackerConfig, first_id: int = 0,
                  score_range=None) -> list[FeatureTrack]:
    g = build_graph(features, category, config, score_range)
    return extract_tracks(solve_min_cost_flow(g), g, first_id)
