"""Shared test helpers."""

import functools

from torocomb.complexes import import_fan
from torocomb.intlinalg import primitive_vector


def _half(v):
    x, y = v
    return 0 if (y > 0 or (y == 0 and x > 0)) else 1


def _ray_cmp(a, b):
    if _half(a) != _half(b):
        return _half(a) - _half(b)
    cross = a[0] * b[1] - a[1] * b[0]
    return -1 if cross > 0 else (1 if cross < 0 else 0)


def fan_from_directions(vectors):
    """A valid two-dimensional fan: sort primitive rays by angle, take
    consecutive pairs spanning less than a half turn as top cones, and
    keep uncovered rays as lone cones."""
    rays = []
    for v in vectors:
        if v == (0, 0):
            continue
        p = primitive_vector(v)
        if p not in rays:
            rays.append(p)
    if not rays:
        return None
    rays.sort(key=functools.cmp_to_key(_ray_cmp))
    n = len(rays)
    cones = []
    covered = set()
    if n > 1:
        for i in range(n):
            j = (i + 1) % n
            if i == j:
                continue
            a, b = rays[i], rays[j]
            if a[0] * b[1] - a[1] * b[0] > 0:
                cones.append([i, j])
                covered.update([i, j])
    for i in range(n):
        if i not in covered:
            cones.append([i])
    return import_fan(2, rays, cones)
