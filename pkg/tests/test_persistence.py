import itertools
import math

import numpy as np
import pytest

from oracles import bfs_betti, cell_count_euler, reduction_diagram, sweep_counts
from toposeg.persistence import (
    Filtration,
    betti_curve,
    betti_numbers,
    compute_persistence,
    euler_characteristic,
    read_diagram_csv,
)

SUB, SUP = Filtration.SUBLEVEL, Filtration.SUPERLEVEL


def values(diagram, dim=None):
    return sorted((p.dim, p.birth, p.death) for p in diagram if dim is None or p.dim == dim)


def test_line_example():
    d = compute_persistence(np.array([[0.2, 0.8, 0.3]]), SUB, 1.0)
    assert values(d) == [(0, 0.2, 1.0), (0, 0.3, 0.8)]
    young = next(p for p in d if not p.essential)
    assert young.birth_pixel == (2, 0) and young.death_pixel == (1, 0)


def test_ring_example():
    img = np.full((3, 3), 0.1)
    img[1, 1] = 0.9
    d = compute_persistence(img, SUB, 1.0)
    assert values(d, 0) == [(0, 0.1, 1.0)]
    assert values(d, 1) == [(1, 0.1, 0.9)]
    (hole,) = d.in_dim(1)
    assert hole.death_pixel == (1, 1)


@pytest.mark.parametrize("c", [0.0, 0.4, 1.0])
def test_constant_image(c):
    d = compute_persistence(np.full((4, 5), c), SUB, 1.0)
    assert values(d) == [(0, c, 1.0)]


def test_uncapped_essential():
    d = compute_persistence(np.array([[0.5, 0.1], [0.3, 0.9]]))
    (ess,) = [p for p in d if p.essential]
    assert ess.death == math.inf and ess.death_pixel is None and ess.birth_pixel == (1, 0)


def test_superlevel_cap_maps_to_zero():
    img = np.array([[0.2, 0.9], [0.2, 0.4]])
    d = compute_persistence(img, SUP, 1.0)
    (ess,) = [p for p in d if p.essential]
    assert (ess.birth, ess.death, ess.birth_pixel, ess.death_pixel) == (0.9, 0.0, (1, 0), (0, 0))


def test_empty_image_rejected():
    with pytest.raises(ValueError):
        compute_persistence(np.zeros((0, 3)))


def test_critical_pixels_carry_values(rng):
    for _ in range(50):
        img = rng.random((6, 7))
        for kind in (SUB, SUP):
            for p in compute_persistence(img, kind, 1.0):
                assert img[p.birth_pixel[1], p.birth_pixel[0]] == p.birth
                if not p.essential:
                    assert img[p.death_pixel[1], p.death_pixel[0]] == p.death


def test_matches_boundary_matrix_reduction(rng):
    for trial in range(150):
        h, w = rng.integers(1, 7, size=2)
        img = rng.choice([0.0, 0.25, 0.5, 0.75, 1.0], size=(h, w)) if trial % 2 else rng.random((h, w))
        for kind in (SUB, SUP):
            assert values(compute_persistence(img, kind)) == reduction_diagram(img, kind is SUP)


def test_elder_rule_tie_row_major():
    # both minima at 0.1: the first in row-major order survives
    img = np.array([[0.1, 0.8, 0.1]])
    d = compute_persistence(img, SUB, 1.0)
    young = next(p for p in d if not p.essential)
    assert young.birth_pixel == (2, 0)
    img = np.array([[0.2, 0.8, 0.1]])
    young = next(p for p in compute_persistence(img, SUB, 1.0) if not p.essential)
    assert young.birth_pixel == (0, 0)


def test_curve_consistency_exhaustive_3x3():
    for bits in itertools.product([0.0, 1.0], repeat=9):
        img = np.array(bits).reshape(3, 3)
        d = compute_persistence(img, SUB)
        for t, (b0, b1) in sweep_counts(img).items():
            assert (d.alive_count(0, t), d.alive_count(1, t)) == (b0, b1)


def test_superlevel_curve(rng):
    for _ in range(30):
        img = rng.choice([0.0, 0.25, 0.5, 0.75, 1.0], size=(5, 5))
        d = compute_persistence(img, SUP)
        for t, b in sweep_counts(img, superlevel=True).items():
            assert (d.alive_count(0, t), d.alive_count(1, t)) == b


def test_duality_with_inverted_image(rng):
    for _ in range(30):
        img = rng.integers(0, 5, size=(6, 6)) / 4.0
        sup = compute_persistence(img, SUP, 1.0)
        sub = compute_persistence(1.0 - img, SUB, 1.0)
        mapped = sorted((p.dim, 1 - p.birth, 1 - p.death, p.birth_pixel) for p in sub)
        assert sorted((p.dim, p.birth, p.death, p.birth_pixel) for p in sup) == mapped


def test_monotone_functoriality(rng):
    for _ in range(20):
        img = rng.random((7, 7))
        d1 = compute_persistence(img, SUB)
        cubed = img**3
        d2 = compute_persistence(cubed, SUB)
        key = lambda p: (p.dim, p.birth_pixel, p.death_pixel)
        assert len(d1) == len(d2)
        for p, q in zip(sorted(d1, key=key), sorted(d2, key=key)):
            assert key(p) == key(q)
            assert q.birth == cubed[p.birth_pixel[1], p.birth_pixel[0]]
            assert q.birth == pytest.approx(p.birth**3, rel=1e-12)
            if not p.essential:
                assert q.death == cubed[p.death_pixel[1], p.death_pixel[0]]


def test_betti_examples():
    assert betti_numbers(np.ones((3, 3), bool)) == (1, 0)
    ring = np.ones((3, 3), bool)
    ring[1, 1] = False
    assert betti_numbers(ring) == (1, 1)
    assert betti_numbers(np.zeros((3, 3), bool)) == (0, 0)
    # diagonal gap leaks under complement 8-connectivity
    leaky = np.ones((4, 4), bool)
    leaky[1, 1] = leaky[2, 2] = False
    assert betti_numbers(leaky) == (1, 1)


def test_betti_against_bfs(rng):
    for _ in range(200):
        mask = rng.random((7, 8)) < rng.uniform(0.2, 0.8)
        assert betti_numbers(mask) == bfs_betti(mask)


def test_euler_examples():
    assert euler_characteristic(np.ones((3, 3), bool)) == 1
    single = np.zeros((3, 3), bool)
    single[1, 1] = True
    assert euler_characteristic(single) == 1
    assert euler_characteristic(np.eye(2, dtype=bool)) == 2


def test_euler_matches_cell_count_and_betti(rng):
    for _ in range(100):
        mask = rng.random((6, 6)) < 0.6
        chi = euler_characteristic(mask)
        b0, b1 = betti_numbers(mask)
        assert chi == cell_count_euler(mask) == b0 - b1


def test_betti_curve_examples():
    assert betti_curve(np.full((2, 2), 0.5), SUB, [0.4, 0.6]) == [(0, 0), (1, 0)]
    line = np.array([[0.2, 0.8, 0.3]])
    assert betti_curve(line, SUB, [0.25, 0.5, 0.9]) == [(1, 0), (2, 0), (1, 0)]
    with pytest.raises(ValueError):
        betti_curve(line, SUB, [0.5, 0.1])


def test_betti_curve_agrees_with_diagram(rng):
    img = rng.random((10, 10))
    ts = np.linspace(0, 1, 41)
    for kind in (SUB, SUP):
        d = compute_persistence(img, kind)
        curve = betti_curve(img, kind, ts)
        assert curve == [(d.alive_count(0, t), d.alive_count(1, t)) for t in ts]


@pytest.mark.parametrize("cap", [None, 1.0])
@pytest.mark.parametrize("kind", [SUB, SUP])
def test_csv_roundtrip(rng, tmp_path, cap, kind):
    img = rng.random((9, 9))
    d = compute_persistence(img, kind, cap)
    path = tmp_path / "d.csv"
    d.to_csv(path)
    back = read_diagram_csv(path, kind, cap)
    assert sorted(back.points, key=repr) == sorted(d.points, key=repr)
    lines = path.read_text().splitlines()
    assert lines[0] == "dim,birth,death,birth_x,birth_y,death_x,death_y"


def test_csv_inf_literal():
    text = compute_persistence(np.full((2, 2), 0.5)).to_csv()
    assert text.splitlines()[1] == "0,0.5,inf,0,0,,"
