"""Brute-force exact optima for tiny instances.

Enumerate every deterministic encoder map; the optimal decoder for a fixed
encoder is a per-output argmax, so each map is scored in closed form.  The
minimum error over maps is the exact operational optimum the LP relaxations
are validated against.  Guarded by a cap on the number of maps.
"""

from __future__ import annotations

from itertools import product

import numpy as np

from .relaxations import ScInstance, SwInstance

DEFAULT_MAP_CAP = 10_000_000


class EnumerationTooLarge(ValueError):
    """Encoder map count exceeds the enumeration cap."""


def _guard(count: int, cap: int) -> None:
    if count > cap:
        raise EnumerationTooLarge(f"{count} encoder maps exceed the cap of {cap}")


def exact_opt_sc(inst: ScInstance, cap: int = DEFAULT_MAP_CAP) -> float:
    """Exact minimum error of the point-to-point problem."""
    n, M = inst.n, inst.M
    _guard(M ** n, cap)
    gain = inst.source.mass[:, None] * inst.distortion.within()  # (s, sh)
    nh = gain.shape[1]
    best = -1.0
    for f in product(range(M), repeat=n):
        agg = np.zeros((M, nh))
        np.add.at(agg, np.asarray(f), gain)
        best = max(best, float(agg.max(axis=1).sum()))
    return 1.0 - best


def exact_opt_sid(inst: SwInstance, which: int = 1,
                  cap: int = DEFAULT_MAP_CAP) -> float:
    """Exact minimum error of recovering one source with the other known at
    the decoder."""
    n1, n2, m1, m2 = inst.dims
    P = inst.joint.mass if which == 1 else inst.joint.mass.T
    ne = P.shape[0]
    M = m1 if which == 1 else m2
    _guard(M ** ne, cap)
    best = -1.0
    for f in product(range(M), repeat=ne):
        farr = np.asarray(f)
        got = 0.0
        for y in range(M):
            block = P[farr == y, :]
            if block.size:
                got += float(block.max(axis=0).sum())
        best = max(best, got)
    return 1.0 - best


def exact_opt_sw(inst: SwInstance, cap: int = DEFAULT_MAP_CAP) -> float:
    """Exact minimum error of the two-encoder problem: the decoder maps each
    output pair to the heaviest source pair in the product preimage."""
    n1, n2, m1, m2 = inst.dims
    _guard((m1 ** n1) * (m2 ** n2), cap)
    P = inst.joint.mass
    best = -1.0
    for f1 in product(range(m1), repeat=n1):
        i1 = np.broadcast_to(np.asarray(f1)[:, None], (n1, n2))
        for f2 in product(range(m2), repeat=n2):
            i2 = np.broadcast_to(np.asarray(f2)[None, :], (n1, n2))
            agg = np.zeros((m1, m2))
            np.maximum.at(agg, (i1, i2), P)
            best = max(best, float(agg.sum()))
    return 1.0 - best
