"""Compiled max-flow kernels on a CSR residual graph.

Arcs of node ``u`` are ``start[u]:start[u+1]``; ``head[a]`` is the arc's
target and ``rev[a]`` its paired reverse arc. Capacities are int64 and are
returned as residuals; the input array is not modified.
"""
import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def _bfs_heights(start, head, rev, cap, root, base, height, seen, queue):
    seen[root] = True
    height[root] = base
    qh = 0
    qt = 0
    queue[qt] = root
    qt += 1
    while qh < qt:
        x = queue[qh]
        qh += 1
        for b in range(start[x], start[x + 1]):
            y = head[b]
            if not seen[y] and cap[rev[b]] > 0:
                seen[y] = True
                height[y] = height[x] + 1
                queue[qt] = y
                qt += 1


@njit(cache=True, nogil=True)
def _global_relabel(start, head, rev, cap, s, t, height, queue):
    N = start.size - 1
    seen = np.zeros(N, np.bool_)
    seen[s] = True
    _bfs_heights(start, head, rev, cap, t, 0, height, seen, queue)
    seen[s] = False
    _bfs_heights(start, head, rev, cap, s, N, height, seen, queue)
    for v in range(N):
        if not seen[v]:
            height[v] = 2 * N


@njit(cache=True, nogil=True)
def _rebuild(start, height, excess, count, bhead, bnext, cur, s, t):
    N = start.size - 1
    count[:] = 0
    bhead[:] = -1
    top = -1
    for v in range(N):
        cur[v] = start[v]
        if v == s or v == t:
            continue
        count[height[v]] += 1
        if excess[v] > 0 and height[v] < 2 * N:
            h = height[v]
            bnext[v] = bhead[h]
            bhead[h] = v
            if h > top:
                top = h
    return top


@njit(cache=True, nogil=True)
def push_relabel(start, head, rev, cap0, s, t):
    """Highest-label push-relabel with gap relabeling and periodic global relabels.

    Returns ``(value, residual)`` where ``residual`` holds a maximum flow.
    """
    N = start.size - 1
    cap = cap0.copy()
    excess = np.zeros(N, np.int64)
    height = np.zeros(N, np.int64)
    cur = np.empty(N, np.int64)
    count = np.zeros(2 * N + 2, np.int64)
    bhead = np.full(2 * N + 2, -1, np.int64)
    bnext = np.full(N, -1, np.int64)
    queue = np.empty(N, np.int64)

    for a in range(start[s], start[s + 1]):
        d = cap[a]
        if d > 0:
            cap[a] = 0
            cap[rev[a]] += d
            excess[head[a]] += d
            excess[s] -= d
    _global_relabel(start, head, rev, cap, s, t, height, queue)
    height[s] = N
    height[t] = 0
    top = _rebuild(start, height, excess, count, bhead, bnext, cur, s, t)
    work = 0
    while top >= 0:
        u = bhead[top]
        if u == -1:
            top -= 1
            continue
        bhead[top] = bnext[u]
        while excess[u] > 0:
            a = cur[u]
            if a == start[u + 1]:
                old = height[u]
                newh = 2 * N
                for b in range(start[u], start[u + 1]):
                    if cap[b] > 0:
                        hv = height[head[b]] + 1
                        if hv < newh:
                            newh = hv
                count[old] -= 1
                if old < N and count[old] == 0:
                    # nobody above the gap can reach the sink any more
                    for w in range(N):
                        if w != s and w != t and old < height[w] < N:
                            count[height[w]] -= 1
                            height[w] = N + 1
                            count[N + 1] += 1
                            cur[w] = start[w]
                    if newh < N + 1:
                        newh = N + 1
                height[u] = newh
                count[newh] += 1
                cur[u] = start[u]
                work += 1
                if newh >= 2 * N:
                    break
            else:
                v = head[a]
                if cap[a] > 0 and height[u] == height[v] + 1:
                    d = excess[u] if excess[u] < cap[a] else cap[a]
                    cap[a] -= d
                    cap[rev[a]] += d
                    excess[u] -= d
                    if excess[v] == 0 and v != s and v != t:
                        hv = height[v]
                        bnext[v] = bhead[hv]
                        bhead[hv] = v
                        if hv > top:
                            top = hv
                    excess[v] += d
                    if cap[a] == 0:
                        cur[u] += 1
                else:
                    cur[u] += 1
        if work > N:
            work = 0
            _global_relabel(start, head, rev, cap, s, t, height, queue)
            height[s] = N
            height[t] = 0
            top = _rebuild(start, height, excess, count, bhead, bnext, cur, s, t)
    return excess[t], cap


@njit(cache=True, nogil=True)
def dinic(start, head, rev, cap0, s, t):
    """Blocking-flow augmentation along BFS level graphs. Same contract as push_relabel."""
    N = start.size - 1
    cap = cap0.copy()
    level = np.empty(N, np.int64)
    it = np.empty(N, np.int64)
    queue = np.empty(N, np.int64)
    path = np.empty(N, np.int64)
    total = 0
    while True:
        level[:] = -1
        level[s] = 0
        qh = 0
        qt = 1
        queue[0] = s
        while qh < qt:
            x = queue[qh]
            qh += 1
            for a in range(start[x], start[x + 1]):
                y = head[a]
                if cap[a] > 0 and level[y] < 0:
                    level[y] = level[x] + 1
                    queue[qt] = y
                    qt += 1
        if level[t] < 0:
            break
        for v in range(N):
            it[v] = start[v]
        while True:
            depth = 0
            u = s
            while u != t:
                advanced = False
                while it[u] < start[u + 1]:
                    a = it[u]
                    v = head[a]
                    if cap[a] > 0 and level[v] == level[u] + 1:
                        path[depth] = a
                        depth += 1
                        u = v
                        advanced = True
                        break
                    it[u] += 1
                if not advanced:
                    if u == s:
                        break
                    level[u] = -1
                    depth -= 1
                    u = head[rev[path[depth]]]
                    it[u] += 1
            if u != t:
                break
            f = cap[path[0]]
            for i in range(1, depth):
                if cap[path[i]] < f:
                    f = cap[path[i]]
            for i in range(depth):
                cap[path[i]] -= f
                cap[rev[path[i]]] += f
            total += f
    return total, cap


@njit(cache=True, nogil=True)
def residual_reachable(start, head, cap, s):
    """Nodes reachable from ``s`` through arcs with positive residual capacity."""
    N = start.size - 1
    seen = np.zeros(N, np.bool_)
    queue = np.empty(N, np.int64)
    seen[s] = True
    queue[0] = s
    qh = 0
    qt = 1
    while qh < qt:
        x = queue[qh]
        qh += 1
        for a in range(start[x], start[x + 1]):
            y = head[a]
            if cap[a] > 0 and not seen[y]:
                seen[y] = True
                queue[qt] = y
                qt += 1
    return seen
