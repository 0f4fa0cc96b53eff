"""Minimum-weight perfect matching via Edmonds' blossom algorithm.

The core is a maximum-weight matching solver over general graphs with the
usual dual-variable / blossom-shrinking machinery (O(n^3)).  Minimum-weight
perfect matching is obtained by negating weights against a constant and
asking for maximum cardinality.  Boundary nodes that may absorb any number
of detection events are handled by the mirror-graph construction in
:func:`match_with_boundary`.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class MatchingError(RuntimeError):
    """Raised when no perfect matching exists on the given graph."""


def max_weight_matching(
    n: int, edges: list[tuple[int, int, float]], maxcardinality: bool = False
) -> list[int]:
    """Maximum-weight matching on a general graph.

    ``edges`` holds ``(i, j, weight)`` with ``0 <= i, j < n`` and ``i != j``.
    Returns ``mate`` with ``mate[v]`` the partner of ``v`` or ``-1``.
    """
    if n == 0 or not edges:
        return [-1] * n

    nedge = len(edges)
    maxweight = max(max(0, w) for (_, _, w) in edges)

    # Endpoint p of edge k is 2k (side i) or 2k+1 (side j).
    endpoint = []
    for (i, j, _) in edges:
        endpoint.append(i)
        endpoint.append(j)
    neighbend: list[list[int]] = [[] for _ in range(n)]
    for k, (i, j, _) in enumerate(edges):
        neighbend[i].append(2 * k + 1)
        neighbend[j].append(2 * k)

    mate = [-1] * n  # mate[v] = remote endpoint of matched edge
    # label per top-level blossom: 0 free, 1 = S, 2 = T ((5 = breadcrumb)
    label = [0] * (2 * n)
    labelend = [-1] * (2 * n)
    inblossom = list(range(n))
    blossomparent = [-1] * (2 * n)
    blossomchilds: list[list[int] | None] = [None] * (2 * n)
    blossombase = list(range(n)) + [-1] * n
    blossomendps: list[list[int] | None] = [None] * (2 * n)
    bestedge = [-1] * (2 * n)
    blossombestedges: list[list[int] | None] = [None] * (2 * n)
    unusedblossoms = list(range(n, 2 * n))
    dualvar = [maxweight] * n + [0] * n
    allowedge = [False] * nedge
    queue: list[int] = []

    def slack(k: int) -> float:
        (i, j, wt) = edges[k]
        return dualvar[i] + dualvar[j] - 2 * wt

    def blossom_leaves(b: int):
        if b < n:
            yield b
        else:
            for t in blossomchilds[b]:
                if t < n:
                    yield t
                else:
                    yield from blossom_leaves(t)

    def assign_label(w: int, t: int, p: int):
        b = inblossom[w]
        label[w] = label[b] = t
        labelend[w] = labelend[b] = p
        bestedge[w] = bestedge[b] = -1
        if t == 1:
            queue.extend(blossom_leaves(b))
        else:
            base = blossombase[b]
            assign_label(endpoint[mate[base]], 1, mate[base] ^ 1)

    def scan_blossom(v: int, w: int) -> int:
        # Trace back from both endpoints, dropping breadcrumbs, to find the
        # lowest common S-ancestor (new blossom base) or -1 (augmenting).
        path = []
        base = -1
        while v != -1 or w != -1:
            b = inblossom[v]
            if label[b] & 4:
                base = blossombase[b]
                break
            path.append(b)
            label[b] = 5
            if labelend[b] == -1:
                v = -1
            else:
                v = endpoint[labelend[b]]
                b = inblossom[v]
                v = endpoint[labelend[b]]
            if w != -1:
                v, w = w, v
        for b in path:
            label[b] = 1
        return base

    def add_blossom(base: int, k: int):
        (v, w, _) = edges[k]
        bb = inblossom[base]
        bv = inblossom[v]
        bw = inblossom[w]
        b = unusedblossoms.pop()
        blossombase[b] = base
        blossomparent[b] = -1
        blossomparent[bb] = b
        blossomchilds[b] = path = []
        blossomendps[b] = endps = []
        while bv != bb:
            blossomparent[bv] = b
            path.append(bv)
            endps.append(labelend[bv])
            v = endpoint[labelend[bv]]
            bv = inblossom[v]
        path.append(bb)
        path.reverse()
        endps.reverse()
        endps.append(2 * k)
        while bw != bb:
            blossomparent[bw] = b
            path.append(bw)
            endps.append(labelend[bw] ^ 1)
            w = endpoint[labelend[bw]]
            bw = inblossom[w]
        label[b] = 1
        labelend[b] = labelend[bb]
        dualvar[b] = 0
        for v in blossom_leaves(b):
            if label[inblossom[v]] == 2:
                queue.append(v)
            inblossom[v] = b
        # Combine least-slack edge lists of the sub-blossoms.
        bestedgeto = [-1] * (2 * n)
        for bv in path:
            if blossombestedges[bv] is None:
                nblists = [
                    [p // 2 for p in neighbend[leaf]] for leaf in blossom_leaves(bv)
                ]
            else:
                nblists = [blossombestedges[bv]]
            for nblist in nblists:
                for k2 in nblist:
                    (i, j, _) = edges[k2]
                    if inblossom[j] == b:
                        i, j = j, i
                    bj = inblossom[j]
                    if (
                        bj != b
                        and label[bj] == 1
                        and (bestedgeto[bj] == -1 or slack(k2) < slack(bestedgeto[bj]))
                    ):
                        bestedgeto[bj] = k2
            blossombestedges[bv] = None
            bestedge[bv] = -1
        blossombestedges[b] = [k2 for k2 in bestedgeto if k2 != -1]
        bestedge[b] = -1
        for k2 in blossombestedges[b]:
            if bestedge[b] == -1 or slack(k2) < slack(bestedge[b]):
                bestedge[b] = k2

    def expand_blossom(b: int, endstage: bool):
        for s in blossomchilds[b]:
            blossomparent[s] = -1
            if s < n:
                inblossom[s] = s
            elif endstage and dualvar[s] == 0:
                expand_blossom(s, endstage)
            else:
                for v in blossom_leaves(s):
                    inblossom[v] = s
        if (not endstage) and label[b] == 2:
            entrychild = inblossom[endpoint[labelend[b] ^ 1]]
            j = blossomchilds[b].index(entrychild)
            if j & 1:
                j -= len(blossomchilds[b])
                jstep = 1
                endptrick = 0
            else:
                jstep = -1
                endptrick = 1
            p = labelend[b]
            while j != 0:
                label[endpoint[p ^ 1]] = 0
                label[endpoint[blossomendps[b][j - endptrick] ^ endptrick ^ 1]] = 0
                assign_label(endpoint[p ^ 1], 2, p)
                allowedge[blossomendps[b][j - endptrick] // 2] = True
                j += jstep
                p = blossomendps[b][j - endptrick] ^ endptrick
                allowedge[p // 2] = True
                j += jstep
            bv = blossomchilds[b][j]
            label[endpoint[p ^ 1]] = label[bv] = 2
            labelend[endpoint[p ^ 1]] = labelend[bv] = p
            bestedge[bv] = -1
            j += jstep
            while blossomchilds[b][j] != entrychild:
                bv = blossomchilds[b][j]
                if label[bv] == 1:
                    j += jstep
                    continue
                for v in blossom_leaves(bv):
                    if label[v] != 0:
                        break
                if label[v] != 0:
                    label[v] = 0
                    label[endpoint[mate[blossombase[bv]]]] = 0
                    assign_label(v, 2, labelend[v])
                j += jstep
        label[b] = labelend[b] = -1
        blossomchilds[b] = blossomendps[b] = None
        blossombase[b] = -1
        blossombestedges[b] = None
        bestedge[b] = -1
        unusedblossoms.append(b)

    def augment_blossom(b: int, v: int):
        t = v
        while blossomparent[t] != b:
            t = blossomparent[t]
        if t >= n:
            augment_blossom(t, v)
        i = j = blossomchilds[b].index(t)
        if i & 1:
            j -= len(blossomchilds[b])
            jstep = 1
            endptrick = 0
        else:
            jstep = -1
            endptrick = 1
        while j != 0:
            j += jstep
            t = blossomchilds[b][j]
            p = blossomendps[b][j - endptrick] ^ endptrick
            if t >= n:
                augment_blossom(t, endpoint[p])
            j += jstep
            t = blossomchilds[b][j]
            if t >= n:
                augment_blossom(t, endpoint[p ^ 1])
            mate[endpoint[p]] = p ^ 1
            mate[endpoint[p ^ 1]] = p
        blossomchilds[b] = blossomchilds[b][i:] + blossomchilds[b][:i]
        blossomendps[b] = blossomendps[b][i:] + blossomendps[b][:i]
        blossombase[b] = blossombase[blossomchilds[b][0]]

    def augment_matching(k: int):
        (v, w, _) = edges[k]
        for (s, p) in ((v, 2 * k + 1), (w, 2 * k)):
            while True:
                bs = inblossom[s]
                if bs >= n:
                    augment_blossom(bs, s)
                mate[s] = p
                if labelend[bs] == -1:
                    break
                t = endpoint[labelend[bs]]
                bt = inblossom[t]
                s = endpoint[labelend[bt]]
                j = endpoint[labelend[bt] ^ 1]
                if bt >= n:
                    augment_blossom(bt, j)
                mate[j] = labelend[bt]
                p = labelend[bt] ^ 1

    for _ in range(n):
        label[:] = [0] * (2 * n)
        bestedge[:] = [-1] * (2 * n)
        for b in range(n, 2 * n):
            blossombestedges[b] = None
        allowedge[:] = [False] * nedge
        queue[:] = []
        for v in range(n):
            if mate[v] == -1 and label[inblossom[v]] == 0:
                assign_label(v, 1, -1)
        augmented = False
        while True:
            while queue and not augmented:
                v = queue.pop()
                for p in neighbend[v]:
                    k = p // 2
                    w = endpoint[p]
                    if inblossom[v] == inblossom[w]:
                        continue
                    if not allowedge[k]:
                        kslack = slack(k)
                        if kslack <= 0:
                            allowedge[k] = True
                    if allowedge[k]:
                        if label[inblossom[w]] == 0:
                            assign_label(w, 2, p ^ 1)
                        elif label[inblossom[w]] == 1:
                            base = scan_blossom(v, w)
                            if base >= 0:
                                add_blossom(base, k)
                            else:
                                augment_matching(k)
                                augmented = True
                                break
                        elif label[w] == 0:
                            label[w] = 2
                            labelend[w] = p ^ 1
                    elif label[inblossom[w]] == 1:
                        b = inblossom[v]
                        if bestedge[b] == -1 or kslack < slack(bestedge[b]):
                            bestedge[b] = k
                    elif label[w] == 0:
                        if bestedge[w] == -1 or kslack < slack(bestedge[w]):
                            bestedge[w] = k
            if augmented:
                break

            deltatype = -1
            delta = deltaedge = deltablossom = None
            if not maxcardinality:
                deltatype = 1
                delta = max(0, min(dualvar[:n]))
            for v in range(n):
                if label[inblossom[v]] == 0 and bestedge[v] != -1:
                    d = slack(bestedge[v])
                    if deltatype == -1 or d < delta:
                        delta = d
                        deltatype = 2
                        deltaedge = bestedge[v]
            for b in range(2 * n):
                if blossomparent[b] == -1 and label[b] == 1 and bestedge[b] != -1:
                    d = slack(bestedge[b]) / 2.0
                    if deltatype == -1 or d < delta:
                        delta = d
                        deltatype = 3
                        deltaedge = bestedge[b]
            for b in range(n, 2 * n):
                if (
                    blossombase[b] >= 0
                    and blossomparent[b] == -1
                    and label[b] == 2
                    and (deltatype == -1 or dualvar[b] < delta)
                ):
                    delta = dualvar[b]
                    deltatype = 4
                    deltablossom = b
            if deltatype == -1:
                # No further progress possible (maxcardinality mode).
                deltatype = 1
                delta = max(0, min(dualvar[:n]))

            for v in range(n):
                lab = label[inblossom[v]]
                if lab == 1:
                    dualvar[v] -= delta
                elif lab == 2:
                    dualvar[v] += delta
            for b in range(n, 2 * n):
                if blossombase[b] >= 0 and blossomparent[b] == -1:
                    if label[b] == 1:
                        dualvar[b] += delta
                    elif label[b] == 2:
                        dualvar[b] -= delta

            if deltatype == 1:
                break
            elif deltatype == 2:
                allowedge[deltaedge] = True
                (i, j, _) = edges[deltaedge]
                if label[inblossom[i]] == 0:
                    i = j
                queue.append(i)
            elif deltatype == 3:
                allowedge[deltaedge] = True
                queue.append(edges[deltaedge][0])
            else:
                expand_blossom(deltablossom, False)

        if not augmented:
            break
        for b in range(n, 2 * n):
            if (
                blossomparent[b] == -1
                and blossombase[b] >= 0
                and label[b] == 1
                and dualvar[b] == 0
            ):
                expand_blossom(b, True)

    out = [-1] * n
    for v in range(n):
        if mate[v] >= 0:
            out[v] = endpoint[mate[v]]
    return out


def min_weight_perfect_matching(
    n: int, edges: list[tuple[int, int, float]]
) -> list[tuple[int, int]]:
    """Perfect matching of minimum total weight; raises if infeasible."""
    if n % 2:
        raise MatchingError("odd number of nodes admits no perfect matching")
    if n == 0:
        return []
    shift = max(w for (_, _, w) in edges) + 1.0 if edges else 1.0
    flipped = [(i, j, shift - w) for (i, j, w) in edges]
    mate = max_weight_matching(n, flipped, maxcardinality=True)
    if any(m == -1 for m in mate):
        raise MatchingError("graph admits no perfect matching")
    return sorted((v, m) for v, m in enumerate(mate) if v < m)


def brute_force_min_weight_perfect(
    n: int, edges: list[tuple[int, int, float]]
) -> tuple[float, list[tuple[int, int]]]:
    """Exhaustive minimum-weight perfect matching (oracle, n <= ~12)."""
    if n % 2:
        raise MatchingError("odd number of nodes admits no perfect matching")
    wt: dict[tuple[int, int], float] = {}
    for (i, j, w) in edges:
        key = (min(i, j), max(i, j))
        if key not in wt or w < wt[key]:
            wt[key] = w
    best: list[float | None] = [None]
    best_pairs: list[list[tuple[int, int]]] = [[]]

    def recurse(remaining: list[int], acc: float, pairs: list[tuple[int, int]]):
        if not remaining:
            if best[0] is None or acc < best[0]:
                best[0] = acc
                best_pairs[0] = list(pairs)
            return
        u = remaining[0]
        rest = remaining[1:]
        for idx, v in enumerate(rest):
            key = (min(u, v), max(u, v))
            if key not in wt:
                continue
            pairs.append(key)
            recurse(rest[:idx] + rest[idx + 1 :], acc + wt[key], pairs)
            pairs.pop()

    recurse(list(range(n)), 0.0, [])
    if best[0] is None:
        raise MatchingError("graph admits no perfect matching")
    return best[0], best_pairs[0]


BOUNDARY = -1


@dataclass
class MatchingProblem:
    """Weighted space-time matching graph handed to the decoder.

    ``edges`` connect node ids; an endpoint equal to :data:`BOUNDARY`
    denotes the open boundary, which can absorb any number of nodes.
    """

    n_nodes: int
    edges: list[tuple[int, int, float]] = field(default_factory=list)

    def boundary_weight(self, v: int) -> float | None:
        best = None
        for (i, j, w) in self.edges:
            if (i == v and j == BOUNDARY) or (j == v and i == BOUNDARY):
                if best is None or w < best:
                    best = w
        return best


def mwpm(problem: MatchingProblem) -> tuple[list[tuple[int, int]], float]:
    """Solve a matching problem, pairing nodes with each other or the boundary.

    Returns the pairs (boundary partner encoded as :data:`BOUNDARY`) and the
    total weight.  Raises :class:`MatchingError` if infeasible.
    """
    n = problem.n_nodes
    pair_edges = []
    bweight = {}
    for (i, j, w) in problem.edges:
        if i == BOUNDARY or j == BOUNDARY:
            v = j if i == BOUNDARY else i
            if v not in bweight or w < bweight[v]:
                bweight[v] = w
        else:
            pair_edges.append((i, j, w))
    # Mirror construction: real node v may match its mirror v+n at the
    # boundary weight; mirrors of candidate pairs connect at zero weight.
    edges = []
    for (i, j, w) in pair_edges:
        edges.append((i, j, w))
        edges.append((i + n, j + n, 0.0))
    for v, w in bweight.items():
        edges.append((v, v + n, w))
    pairs = min_weight_perfect_matching(2 * n, edges)
    out = []
    total = 0.0
    pair_w = {}
    for (i, j, w) in pair_edges:
        key = (min(i, j), max(i, j))
        if key not in pair_w or w < pair_w[key]:
            pair_w[key] = w
    for (u, v) in pairs:
        if u < n and v < n:
            out.append((u, v))
            total += pair_w[(min(u, v), max(u, v))]
        elif u < n and v == u + n:
            out.append((u, BOUNDARY))
            total += bweight[u]
        # mirror-mirror pairs carry no weight and are not reported
    return sorted(out), total
