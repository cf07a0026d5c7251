"""Random near-identity maps of a prescribed type."""
import numpy as np

from affarc.affine import AffineMap, dist_to_identity
from affarc.flows import MapClass


def _unit(rng):
    v = rng.normal(size=2)
    return v / np.hypot(*v)


def _frame(rng, min_sin=0.3):
    while True:
        e1, e2 = _unit(rng), _unit(rng)
        if abs(e1[0] * e2[1] - e1[1] * e2[0]) >= min_sin:
            return e1, e2


def _candidate(rng, cls):
    if cls is MapClass.TRANSLATION:
        return np.eye(2), rng.uniform(-0.2, 0.2, 2)
    if cls is MapClass.TYPE1:
        m = rng.normal(size=(2, 2))
        a = np.eye(2) + m * rng.uniform(0.02, 0.3) / np.linalg.norm(m, 2)
        return a, rng.uniform(-0.2, 0.2, 2)
    if cls in (MapClass.TYPE2, MapClass.TYPE3):
        e1, e2 = _frame(rng)
        p = np.column_stack([e1, e2])
        lam = 1 + rng.choice([-1, 1]) * rng.uniform(0.02, 0.12)
        a = p @ np.diag([lam, 1.0]) @ np.linalg.inv(p)
        u = rng.uniform(-0.15, 0.15)
        v = 0.0 if cls is MapClass.TYPE2 else rng.choice([-1, 1]) * rng.uniform(0.02, 0.15)
        return a, u * e1 + v * e2
    e1 = _unit(rng)
    e2 = np.array([-e1[1], e1[0]])
    c = rng.uniform(0.02, 0.3)
    a = np.eye(2) + c * np.outer(e1, e2)
    u = rng.uniform(-0.2, 0.2)
    v = 0.0 if cls is MapClass.TYPE4 else rng.choice([-1, 1]) * rng.uniform(0.02, 0.2)
    return a, u * e1 + v * e2


def random_map(rng, cls, max_dist=0.3) -> AffineMap:
    while True:
        a, b = _candidate(rng, cls)
        f = AffineMap(a, b)
        if dist_to_identity(f) <= max_dist:
            return f


FLOW_TYPES = [MapClass.TRANSLATION, MapClass.TYPE1, MapClass.TYPE2, MapClass.TYPE3,
              MapClass.TYPE4, MapClass.TYPE5]
