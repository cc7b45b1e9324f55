import math
import random

import numpy as np
import pytest

from quickvis.kernels import get_backend

nb = pytest.importorskip("quickvis.kernels.numba_impl")
npy = get_backend("numpy")

SQ = np.array([[0, 0, 10, 0], [10, 0, 10, 10], [10, 10, 0, 10], [0, 10, 0, 0],
               [4, 4, 6, 4], [6, 4, 6, 6], [6, 6, 4, 6], [4, 6, 4, 4]], dtype=np.float64)
RINGS = np.array([0, 0, 0, 0, 1, 1, 1, 1], dtype=np.int64)


def test_visible_codes_fixture():
    assert nb.visible_code(1, 1, 9, 1, SQ, RINGS, 2) == 0
    # diagonal passes exactly through hole corners: grazing -> escalate
    assert nb.visible_code(1, 1, 9, 9, SQ, RINGS, 2) == 2
    assert nb.visible_code(1, 1, 9.5, 9, SQ, RINGS, 2) == 1
    assert nb.visible_code(1, 1, 6, 4, SQ, RINGS, 2) in (0, 2)
    for q in ((9, 9), (9.5, 9), (6, 4)):
        assert (nb.visible_code(1, 1, q[0], q[1], SQ, RINGS, 2)
                == npy.visible_code(1, 1, q[0], q[1], SQ, RINGS, 2))


def test_backends_agree_random():
    rng = random.Random(3)
    for _ in range(400):
        p = (rng.uniform(-1, 11), rng.uniform(-1, 11))
        q = (rng.uniform(-1, 11), rng.uniform(-1, 11))
        a = nb.visible_code(p[0], p[1], q[0], q[1], SQ, RINGS, 2)
        b = npy.visible_code(p[0], p[1], q[0], q[1], SQ, RINGS, 2)
        assert a == b
        ca = nb.point_free_code(p[0], p[1], SQ, RINGS, 2)
        cb = npy.point_free_code(p[0], p[1], SQ, RINGS, 2)
        assert ca == cb


def test_ray_scan_agrees():
    rng = random.Random(5)
    for _ in range(300):
        o = (rng.uniform(0.5, 9.5), rng.uniform(0.5, 3.5))
        ang = rng.uniform(0, 2 * math.pi)
        d = (math.cos(ang), math.sin(ang))
        t1, i1, c1 = nb.ray_scan(o[0], o[1], d[0], d[1], SQ, 0.0)
        t2, i2, c2 = npy.ray_scan(o[0], o[1], d[0], d[1], SQ, 0.0)
        assert (t1, i1, c1) == (t2, i2, c2)


def test_dmin_agrees():
    sx = np.array([1.0, 6.0, 4.0])
    sy = np.array([1.0, 4.0, 6.0])
    w = np.array([0.0, math.sqrt(34), math.sqrt(34)])
    ids = np.array([0, 1, 2], dtype=np.int64)
    rng = random.Random(11)
    for _ in range(200):
        t = (rng.uniform(0.2, 9.8), rng.uniform(0.2, 9.8))
        if 4 <= t[0] <= 6 and 4 <= t[1] <= 6:
            continue
        a = nb.dmin_scan(t[0], t[1], sx, sy, w, ids, SQ, RINGS, 2, -1, -1)
        b = npy.dmin_scan(t[0], t[1], sx, sy, w, ids, SQ, RINGS, 2, -1, -1)
        assert a == b


def test_seg_hit_params_agree():
    rng = random.Random(13)
    for _ in range(200):
        p = (rng.uniform(-1, 11), rng.uniform(-1, 11))
        q = (rng.uniform(-1, 11), rng.uniform(-1, 11))
        t1, e1, c1 = nb.seg_hit_params(p[0], p[1], q[0], q[1], SQ)
        t2, e2, c2 = npy.seg_hit_params(p[0], p[1], q[0], q[1], SQ)
        assert np.array_equal(e1, e2)
        assert np.array_equal(t1, t2)
        assert np.array_equal(c1, c2)
