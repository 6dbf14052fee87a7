"""Persistent homology of 2D images on the vertex-based cubical complex.

Pixels are vertices, 4-adjacent pixels span edges and every 2x2 block spans a
square; a cell enters the filtration at the max of its vertex values
(lower-star). Under this construction foreground connectivity is 4 and holes
are the bounded 8-connected components of the complement, so:

* dimension 0 is paired by union-find over pixels in filtration order
  (elder rule: the component with the earlier root survives a merge);
* dimension 1 is paired by the same union-find run backwards over the
  complement with 8-connectivity and a virtual "outside" node that is
  older than every pixel.

Ties between equal pixel values are broken row-major (smaller y, then x).
"""

import csv
import io
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

import numba
import numpy as np
from scipy import ndimage

from toposeg.image import as_gray

_FOUR = ndimage.generate_binary_structure(2, 1)
_EIGHT = np.ones((3, 3), dtype=bool)

CSV_HEADER = ["dim", "birth", "death", "birth_x", "birth_y", "death_x", "death_y"]


class Filtration(str, Enum):
    SUBLEVEL = "sublevel"
    SUPERLEVEL = "superlevel"


@dataclass(frozen=True)
class PersistencePoint:
    """One (birth, death) pair with the pixels that created and killed it.

    ``death`` is ``math.inf`` for an uncapped essential class, in which case
    ``death_pixel`` is None. Coordinates are in the filtration's own values,
    so for superlevel diagrams ``birth >= death``.
    """

    dim: int
    birth: float
    death: float
    birth_pixel: tuple
    death_pixel: tuple = None
    essential: bool = False

    @property
    def lifetime(self):
        return abs(self.death - self.birth)


@dataclass
class PersistenceDiagram:
    points: list
    filtration: Filtration = Filtration.SUBLEVEL
    essential_cap: float = None
    shape: tuple = field(default=None, compare=False)

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def in_dim(self, dim):
        return [p for p in self.points if p.dim == dim]

    def finite(self, dim=None):
        """Points that are not essential classes, optionally of one dimension."""
        return [p for p in self.points if not p.essential and (dim is None or p.dim == dim)]

    def is_capped(self):
        return all(math.isfinite(p.death) for p in self.points)

    def sorted_points(self):
        return sorted(self.points, key=_row_key)

    def alive_count(self, dim, t):
        """Number of dim-``dim`` classes alive at threshold ``t``."""
        if self.filtration is Filtration.SUBLEVEL:
            return sum(1 for p in self.in_dim(dim) if p.birth <= t < p.death)
        return sum(1 for p in self.in_dim(dim) if (math.isinf(p.death) or p.death < t) and t <= p.birth)

    def to_csv(self, path=None):
        """Render the diagram CSV; write it to ``path`` when given.

        Values use ``repr`` so a parse reproduces the exact floats.
        """
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for p in self.sorted_points():
            if math.isinf(p.death):
                row = [p.dim, repr(p.birth), "inf", *p.birth_pixel, "", ""]
            else:
                row = [p.dim, repr(p.birth), repr(p.death), *p.birth_pixel, *p.death_pixel]
            writer.writerow(row)
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


def _row_key(p):
    return (p.dim, p.birth, p.death, p.birth_pixel[1], p.birth_pixel[0])


def read_diagram_csv(source, filtration=Filtration.SUBLEVEL, essential_cap=None):
    """Parse a diagram CSV produced by :meth:`PersistenceDiagram.to_csv`.

    ``source`` is a path or the CSV text itself. With ``essential_cap`` the
    essential class is recovered as the dim-0 point at the capped death whose
    birth comes first in filtration order; it is unique because that point
    is born at the very first pixel of the sweep.
    """
    filtration = Filtration(filtration)
    if isinstance(source, str) and source.startswith("dim,"):
        text = source
    else:
        text = Path(source).read_text()
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != CSV_HEADER:
        raise ValueError("not a persistence diagram CSV (bad header)")
    points = []
    for row in rows[1:]:
        if not row:
            continue
        dim, birth, death = int(row[0]), float(row[1]), float(row[2])
        bpix = (int(row[3]), int(row[4]))
        dpix = None if row[5] == "" else (int(row[5]), int(row[6]))
        points.append(PersistencePoint(dim, birth, death, bpix, dpix, essential=math.isinf(death)))
    if essential_cap is not None:
        capped = _capped_death(essential_cap, filtration)
        candidates = [i for i, p in enumerate(points) if p.dim == 0 and p.death == capped]
        if candidates:
            sign = 1.0 if filtration is Filtration.SUBLEVEL else -1.0
            first = min(
                candidates,
                key=lambda i: (sign * points[i].birth, points[i].birth_pixel[1], points[i].birth_pixel[0]),
            )
            points[first] = replace(points[first], essential=True)
    return PersistenceDiagram(points, filtration, essential_cap)


def _capped_death(cap, filtration):
    # the cap lives in sublevel coordinates; superlevel is sublevel of 1 - img
    return cap if filtration is Filtration.SUBLEVEL else 1.0 - cap


@numba.njit(cache=True)
def _find(parent, i):
    root = i
    while parent[root] != root:
        root = parent[root]
    while parent[i] != root:
        nxt = parent[i]
        parent[i] = root
        i = nxt
    return root


@numba.njit(cache=True)
def _pairs_dim0(order, h, w):
    """Union-find sweep in filtration order; returns (birth, death) pixel indices."""
    n = h * w
    rank = np.empty(n, np.int64)
    for i in range(n):
        rank[order[i]] = i
    parent = np.full(n, -1, np.int64)
    births = np.empty(n, np.int64)
    deaths = np.empty(n, np.int64)
    npairs = 0
    roots = np.empty(4, np.int64)
    dy = (-1, 0, 0, 1)
    dx = (0, -1, 1, 0)
    for i in range(n):
        p = order[i]
        y = p // w
        x = p % w
        parent[p] = p
        nr = 0
        for k in range(4):
            yy = y + dy[k]
            xx = x + dx[k]
            if yy < 0 or yy >= h or xx < 0 or xx >= w:
                continue
            q = yy * w + xx
            if parent[q] < 0 or q == p:
                continue
            r = _find(parent, q)
            seen = False
            for j in range(nr):
                if roots[j] == r:
                    seen = True
            if not seen:
                roots[nr] = r
                nr += 1
        if nr == 0:
            continue
        oldest = roots[0]
        for j in range(1, nr):
            if rank[roots[j]] < rank[oldest]:
                oldest = roots[j]
        for j in range(nr):
            r = roots[j]
            if r != oldest:
                births[npairs] = r
                deaths[npairs] = p
                npairs += 1
                parent[r] = oldest
        parent[p] = oldest
    return births[:npairs], deaths[:npairs]


@numba.njit(cache=True)
def _pairs_dim1(order, h, w):
    """Reverse sweep over the complement with 8-connectivity.

    A dual component is rooted at its first pixel in the reverse sweep (the
    hole's death); the pixel that merges two dual components is the birth of
    the younger hole. Index ``n`` is the outside of the image.
    """
    n = h * w
    rank = np.empty(n + 1, np.int64)
    for i in range(n):
        rank[order[i]] = i
    rank[n] = n
    parent = np.full(n + 1, -1, np.int64)
    parent[n] = n
    births = np.empty(n, np.int64)
    deaths = np.empty(n, np.int64)
    npairs = 0
    roots = np.empty(9, np.int64)
    for i in range(n - 1, -1, -1):
        p = order[i]
        y = p // w
        x = p % w
        parent[p] = p
        nr = 0
        if y == 0 or x == 0 or y == h - 1 or x == w - 1:
            roots[0] = _find(parent, n)
            nr = 1
        for yy in range(y - 1, y + 2):
            for xx in range(x - 1, x + 2):
                if yy < 0 or yy >= h or xx < 0 or xx >= w:
                    continue
                q = yy * w + xx
                if q == p or parent[q] < 0:
                    continue
                r = _find(parent, q)
                seen = False
                for j in range(nr):
                    if roots[j] == r:
                        seen = True
                if not seen:
                    roots[nr] = r
                    nr += 1
        if nr == 0:
            continue
        oldest = roots[0]
        for j in range(1, nr):
            if rank[roots[j]] > rank[oldest]:
                oldest = roots[j]
        for j in range(nr):
            r = roots[j]
            if r != oldest:
                births[npairs] = p
                deaths[npairs] = r
                npairs += 1
                parent[r] = oldest
        parent[p] = oldest
    return births[:npairs], deaths[:npairs]


def filtration_order(img, kind=Filtration.SUBLEVEL):
    """Flat pixel indices in the order they enter the filtration."""
    flat = np.asarray(img, dtype=np.float64).ravel()
    key = flat if Filtration(kind) is Filtration.SUBLEVEL else -flat
    return np.argsort(key, kind="stable")


def compute_persistence(img, kind=Filtration.SUBLEVEL, essential_cap=None, dims=(0, 1)):
    """Persistence diagram of the sublevel or superlevel filtration of ``img``.

    Zero-length pairs (birth == death) are not reported. The single essential
    class keeps ``death = inf`` unless ``essential_cap`` is given; the cap is
    a sublevel coordinate, so a superlevel diagram's essential class dies at
    ``1 - essential_cap``, at the arg-min pixel.
    """
    kind = Filtration(kind)
    img = as_gray(img, normalized=False)
    h, w = img.shape
    flat = img.ravel()
    order = filtration_order(img, kind)

    def pix(i):
        return (int(i % w), int(i // w))

    points = []
    if 0 in dims:
        births, deaths = _pairs_dim0(order, h, w)
        for b, d in zip(births, deaths):
            if flat[b] != flat[d]:
                points.append(PersistencePoint(0, float(flat[b]), float(flat[d]), pix(b), pix(d)))
        first = order[0]
        if essential_cap is None:
            points.append(PersistencePoint(0, float(flat[first]), math.inf, pix(first), None, essential=True))
        else:
            last = np.argmax(flat) if kind is Filtration.SUBLEVEL else np.argmin(flat)
            death = _capped_death(float(essential_cap), kind)
            points.append(PersistencePoint(0, float(flat[first]), death, pix(first), pix(last), essential=True))
    if 1 in dims and h > 1 and w > 1:
        births, deaths = _pairs_dim1(order, h, w)
        for b, d in zip(births, deaths):
            if flat[b] != flat[d]:
                points.append(PersistencePoint(1, float(flat[b]), float(flat[d]), pix(b), pix(d)))
    return PersistenceDiagram(points, kind, essential_cap, shape=(h, w))


def betti_numbers(mask):
    """(beta0, beta1) of a binary image: 4-connected foreground components and
    8-connected background components that do not touch the image border."""
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2:
        raise ValueError("betti_numbers expects a 2D mask")
    if mask.size == 0:
        return 0, 0
    _, beta0 = ndimage.label(mask, structure=_FOUR)
    labels, ncomp = ndimage.label(~mask, structure=_EIGHT)
    border = np.concatenate([labels[0], labels[-1], labels[:, 0], labels[:, -1]])
    touching = np.unique(border[border > 0])
    return int(beta0), int(ncomp - touching.size)


def euler_characteristic(mask):
    """V - E + F of the cubical complex spanned by the true pixels."""
    a = np.asarray(mask, dtype=bool)
    v = int(a.sum())
    e = int((a[:, :-1] & a[:, 1:]).sum() + (a[:-1, :] & a[1:, :]).sum())
    f = int((a[:-1, :-1] & a[:-1, 1:] & a[1:, :-1] & a[1:, 1:]).sum())
    return v - e + f


def level_set(img, t, kind=Filtration.SUBLEVEL):
    img = np.asarray(img, dtype=np.float64)
    return img <= t if Filtration(kind) is Filtration.SUBLEVEL else img >= t


def betti_curve(img, kind=Filtration.SUBLEVEL, thresholds=()):
    """Betti numbers of the level set at each threshold (ascending)."""
    thresholds = np.asarray(thresholds, dtype=np.float64)
    if np.any(np.diff(thresholds) < 0):
        raise ValueError("thresholds must be sorted ascending")
    img = as_gray(img, normalized=False)
    return [betti_numbers(level_set(img, t, kind)) for t in thresholds]
