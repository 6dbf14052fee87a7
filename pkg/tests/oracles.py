"""Slow reference implementations used only by the tests.

None of these share code with the package: the cubical complex is built cell
by cell and reduced as a Z/2 boundary matrix, and Betti numbers come from a
plain breadth-first search.
"""

from collections import deque

import numpy as np


def cubical_cells(img):
    """All cells of the vertex-based cubical complex as (value, dim, vertices)."""
    h, w = img.shape
    cells = []
    for y in range(h):
        for x in range(w):
            cells.append((img[y, x], 0, ((y, x),)))
    for y in range(h):
        for x in range(w - 1):
            vs = ((y, x), (y, x + 1))
            cells.append((max(img[v] for v in vs), 1, vs))
    for y in range(h - 1):
        for x in range(w):
            vs = ((y, x), (y + 1, x))
            cells.append((max(img[v] for v in vs), 1, vs))
    for y in range(h - 1):
        for x in range(w - 1):
            vs = ((y, x), (y, x + 1), (y + 1, x), (y + 1, x + 1))
            cells.append((max(img[v] for v in vs), 2, vs))
    return cells


def _faces(dim, vs):
    if dim == 1:
        return [(v,) for v in vs]
    a, b, c, d = vs
    return [(a, b), (c, d), (a, c), (b, d)]


def reduction_diagram(img, superlevel=False):
    """Sorted list of nonzero-length (dim, birth, death) by matrix reduction.

    Essential classes have death ``inf``. Superlevel runs on ``-img``.
    """
    img = np.asarray(img, dtype=float)
    work = -img if superlevel else img
    cells = cubical_cells(work)
    order = sorted(range(len(cells)), key=lambda i: (cells[i][0], cells[i][1], i))
    index = {}
    for pos, i in enumerate(order):
        index[(cells[i][1], cells[i][2])] = pos
    columns = []
    for i in order:
        val, dim, vs = cells[i]
        if dim == 0:
            columns.append(set())
        else:
            columns.append({index[(dim - 1, f)] for f in _faces(dim, vs)})
    low_owner = {}
    paired = set()
    points = []
    for j, col in enumerate(columns):
        while col:
            low = max(col)
            if low not in low_owner:
                break
            col ^= columns[low_owner[low]]
        if col:
            low = max(col)
            low_owner[low] = j
            paired.update((low, j))
            b = cells[order[low]][0]
            d = cells[order[j]][0]
            if b != d:
                points.append((cells[order[low]][1], b, d))
    for j in range(len(columns)):
        if j not in paired and not columns[j]:
            points.append((cells[order[j]][1], cells[order[j]][0], float("inf")))
    if superlevel:
        points = [(k, -b, d if d == float("inf") else -d) for k, b, d in points]
    return sorted(points)


def _components(mask, neighbors):
    h, w = mask.shape
    seen = np.zeros_like(mask, dtype=bool)
    comps = []
    for y in range(h):
        for x in range(w):
            if not mask[y, x] or seen[y, x]:
                continue
            seen[y, x] = True
            queue = deque([(y, x)])
            comp = []
            while queue:
                cy, cx = queue.popleft()
                comp.append((cy, cx))
                for dy, dx in neighbors:
                    ny, nx = cy + dy, cx + dx
                    if 0 <= ny < h and 0 <= nx < w and mask[ny, nx] and not seen[ny, nx]:
                        seen[ny, nx] = True
                        queue.append((ny, nx))
            comps.append(comp)
    return comps


N4 = [(-1, 0), (1, 0), (0, -1), (0, 1)]
N8 = [(dy, dx) for dy in (-1, 0, 1) for dx in (-1, 0, 1) if (dy, dx) != (0, 0)]


def bfs_betti(mask):
    """beta0 by 4-connected BFS; beta1 as 8-connected complement components
    that never reach the border."""
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    b0 = len(_components(mask, N4))
    b1 = 0
    for comp in _components(~mask, N8):
        if not any(y in (0, h - 1) or x in (0, w - 1) for y, x in comp):
            b1 += 1
    return b0, b1


def cell_count_euler(mask):
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    v = e = f = 0
    for y in range(h):
        for x in range(w):
            if not mask[y, x]:
                continue
            v += 1
            if x + 1 < w and mask[y, x + 1]:
                e += 1
            if y + 1 < h and mask[y + 1, x]:
                e += 1
            if x + 1 < w and y + 1 < h and mask[y, x + 1] and mask[y + 1, x] and mask[y + 1, x + 1]:
                f += 1
    return v - e + f


def sweep_counts(img, superlevel=False):
    """{threshold: (beta0, beta1)} at every distinct value of ``img``."""
    img = np.asarray(img, dtype=float)
    out = {}
    for t in np.unique(img):
        mask = img >= t if superlevel else img <= t
        out[float(t)] = bfs_betti(mask)
    return out
