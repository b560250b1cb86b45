"""Exact LP relaxations of optimal fixed-length source codes, and their duals.

The minimum error probability of a code with given codebook sizes is a
bilinear program over encoder/decoder conditional pmfs.  Lifting products of
decision variables into joint variables and keeping only the marginal
consistency constraints gives an LP lower bound.  This module builds those
LPs densely for

  * the point-to-point (possibly lossy) problem:        build_lp_sc
  * coding with decoder side information, either side:  build_lpsi
  * the jointly-encoded pair problem:                   build_lp_je
  * the two-encoder distributed (Slepian-Wolf) problem: build_lp_sw

and owns the dual-side machinery: typed dual points, feasibility checkers
that report per-constraint residuals, dual objectives in penalty (min) form,
and the closed-form dual points generated by a single nonnegative flow phi.

Primal variable and constraint layouts are fixed here once, in the index
orders the dual-point containers document, and everything else (builders,
checkers, solution slicing) reads them from the same indexer objects.

Dual constraint identifiers:

  P1-P3  point-to-point        A1-A3  jointly encoded pair
  B1-B3  side information 1|2  C1-C3  side information 2|1
  D1-D7  distributed pair

For the distributed problem the multiplier families are, with rows stated as
"sum over the first index of the lifted variable equals the smaller one":

  gamma_a(s1), gamma_b(s2), gamma_c(y1,y2)      normalization rows
  mu_c_21(x2,s1,s2)   sum_{x1} T  = Q_{X2|S2}   mu_c_12(x1,s1,s2)  sum_{x2} T = Q_{X1|S1}
  mu_s_1(s1,sh1,sh2,y1,y2)  sum_{x1} U = Q_dec  mu_s_2(s2,...)     sum_{x2} V = Q_dec
  mu_c_1(s1,x1,y1,y2)  sum_{sh} U = Q_{X1|S1}   mu_c_2(s2,x2,...)  sum_{sh} V = Q_{X2|S2}
  lam_s_12(s1,s2,x2,y1,y2,sh1,sh2)  sum_{x1} W = V
  lam_s_21(s1,s2,x1,y1,y2,sh1,sh2)  sum_{x2} W = U
  lam_c(s1,s2,x1,x2,y1,y2)          sum_{sh1,sh2} W = T
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .lp_core import LpModel, LpSolution
from .probability import CodeSizes, DistortionSpec, JointPmf, PmfError, SinglePmf

DEFAULT_VAR_CAP = 200_000


class InstanceTooLarge(ValueError):
    """LP variable count exceeds the configured cap."""


@dataclass(frozen=True)
class ScInstance:
    """Point-to-point problem: encode S through M messages, decode under a
    distortion spec (DistortionSpec.lossless(|S|) for the lossless case)."""

    source: SinglePmf
    M: int
    distortion: DistortionSpec

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 1:
            raise PmfError(f"M must be a positive integer, got {self.M!r}")
        if self.distortion.d_matrix.shape[0] != self.source.alphabet_size:
            raise PmfError("distortion rows must match the source alphabet")

    @property
    def n(self) -> int:
        return self.source.alphabet_size

    @property
    def n_hat(self) -> int:
        return self.distortion.d_matrix.shape[1]


@dataclass(frozen=True)
class SwInstance:
    """Distributed lossless problem: separate encoders for S1 and S2."""

    joint: JointPmf
    sizes: CodeSizes

    def __post_init__(self):
        if self.sizes.M2 is None:
            raise PmfError("SwInstance needs both codebook sizes")

    @property
    def dims(self) -> Tuple[int, int, int, int]:
        n1, n2 = self.joint.sizes
        return n1, n2, self.sizes.M1, self.sizes.M2


def sw_je_instance(inst: SwInstance) -> ScInstance:
    """The jointly-encoded relaxation of a distributed instance: one encoder
    sees the pair, alphabet flattened in row-major order, M = M1*M2."""
    n1, n2, m1, m2 = inst.dims
    flat = SinglePmf(inst.joint.mass.reshape(-1))
    return ScInstance(flat, m1 * m2, DistortionSpec.lossless(n1 * n2))


# ---------------------------------------------------------------------------
# block indexers


class TensorIndex:
    """Named blocks of tensor-shaped variables (or rows) in one flat vector."""

    def __init__(self, blocks: List[Tuple[str, Tuple[int, ...]]]):
        self.shapes: Dict[str, Tuple[int, ...]] = {}
        self.offsets: Dict[str, int] = {}
        off = 0
        for name, shape in blocks:
            self.shapes[name] = tuple(shape)
            self.offsets[name] = off
            off += int(np.prod(shape))
        self.total = off

    def flat(self, name: str, *idx: int) -> int:
        return self.offsets[name] + int(np.ravel_multi_index(idx, self.shapes[name]))

    def slice_of(self, name: str) -> slice:
        off = self.offsets[name]
        return slice(off, off + int(np.prod(self.shapes[name])))

    def extract(self, vec: np.ndarray, name: str) -> np.ndarray:
        return vec[self.slice_of(name)].reshape(self.shapes[name])


def sc_indexer(inst: ScInstance) -> Tuple[TensorIndex, TensorIndex]:
    n, M, nh = inst.n, inst.M, inst.n_hat
    cols = TensorIndex([("Q1", (n, M)), ("Qd", (M, nh)), ("W", (n, M, M, nh))])
    rows = TensorIndex([("gamma_a", (n,)), ("gamma_b", (M,)),
                        ("lam_s", (n, nh, M)), ("lam_c", (M, n, M))])
    return cols, rows


def si_indexer(inst: SwInstance, which: int) -> Tuple[TensorIndex, TensorIndex]:
    n1, n2, m1, m2 = inst.dims
    ne, ns, M = (n1, n2, m1) if which == 1 else (n2, n1, m2)
    cols = TensorIndex([("Q1", (ne, M)), ("Qd", (ns, M, ne)),
                        ("W", (ne, ns, M, M, ne))])
    rows = TensorIndex([("gamma_a", (ne,)), ("gamma_b", (ns, M)),
                        ("lam_s", (ne, ns, ne, M)), ("lam_c", (ne, ns, M, M))])
    return cols, rows


def je_indexer(inst: SwInstance) -> Tuple[TensorIndex, TensorIndex]:
    n1, n2, m1, m2 = inst.dims
    cols = TensorIndex([("Q1", (n1, n2, m1, m2)), ("Qd", (m1, m2, n1, n2)),
                        ("W", (n1, n2, m1, m2, m1, m2, n1, n2))])
    rows = TensorIndex([("gamma_a", (n1, n2)), ("gamma_b", (m1, m2)),
                        ("lam_s", (n1, n2, n1, n2, m1, m2)),
                        ("lam_c", (n1, n2, m1, m2, m1, m2))])
    return cols, rows


def sw_indexer(inst: SwInstance) -> Tuple[TensorIndex, TensorIndex]:
    n1, n2, m1, m2 = inst.dims
    cols = TensorIndex([
        ("Q1", (n1, m1)), ("Q2", (n2, m2)), ("Qd", (m1, m2, n1, n2)),
        ("T", (n1, n2, m1, m2)),
        ("U", (n1, m1, m1, m2, n1, n2)),
        ("V", (n2, m2, m1, m2, n1, n2)),
        ("W", (n1, n2, m1, m2, m1, m2, n1, n2)),
    ])
    rows = TensorIndex([
        ("gamma_a", (n1,)), ("gamma_b", (n2,)), ("gamma_c", (m1, m2)),
        ("mu_c_21", (m2, n1, n2)), ("mu_c_12", (m1, n1, n2)),
        ("mu_s_1", (n1, n1, n2, m1, m2)), ("mu_s_2", (n2, n1, n2, m1, m2)),
        ("mu_c_1", (n1, m1, m1, m2)), ("mu_c_2", (n2, m2, m1, m2)),
        ("lam_s_12", (n1, n2, m2, m1, m2, n1, n2)),
        ("lam_s_21", (n1, n2, m1, m1, m2, n1, n2)),
        ("lam_c", (n1, n2, m1, m2, m1, m2)),
    ])
    return cols, rows


def _cap_check(n_vars: int, cap: int, what: str) -> None:
    if n_vars > cap:
        raise InstanceTooLarge(f"{what} needs {n_vars} LP variables, cap is {cap}")


# ---------------------------------------------------------------------------
# primal builders


def build_lp_sc(inst: ScInstance, cap: int = DEFAULT_VAR_CAP) -> LpModel:
    """Exact LP relaxation of the point-to-point error minimization."""
    n, M, nh = inst.n, inst.M, inst.n_hat
    cols, rows = sc_indexer(inst)
    _cap_check(cols.total, cap, "point-to-point LP")
    A = np.zeros((rows.total, cols.total))
    b = np.zeros(rows.total)
    for s in range(n):
        r = rows.flat("gamma_a", s)
        b[r] = 1.0
        for x in range(M):
            A[r, cols.flat("Q1", s, x)] = 1.0
    for y in range(M):
        r = rows.flat("gamma_b", y)
        b[r] = 1.0
        for sh in range(nh):
            A[r, cols.flat("Qd", y, sh)] = 1.0
    for s in range(n):
        for sh in range(nh):
            for y in range(M):
                r = rows.flat("lam_s", s, sh, y)
                for x in range(M):
                    A[r, cols.flat("W", s, x, y, sh)] = 1.0
                A[r, cols.flat("Qd", y, sh)] = -1.0
    for x in range(M):
        for s in range(n):
            for y in range(M):
                r = rows.flat("lam_c", x, s, y)
                for sh in range(nh):
                    A[r, cols.flat("W", s, x, y, sh)] = 1.0
                A[r, cols.flat("Q1", s, x)] = -1.0
    c = np.zeros(cols.total)
    P = inst.source.mass
    exc = inst.distortion.excess().astype(float)
    cw = np.einsum("sh, xy -> sxyh", P[:, None] * exc, np.eye(M))
    c[cols.slice_of("W")] = cw.reshape(-1)
    assert rows.total == n + M + n * nh * M + M * n * M
    assert cols.total == n * M + M * nh + n * M * M * nh
    return LpModel("min", c, A, ("=",) * rows.total, b)


def build_lpsi(inst: SwInstance, which: int = 1, cap: int = DEFAULT_VAR_CAP) -> LpModel:
    """LP relaxation of coding S_which with the other source at the decoder."""
    if which not in (1, 2):
        raise PmfError(f"which must be 1 or 2, got {which!r}")
    n1, n2, m1, m2 = inst.dims
    P = inst.joint.mass if which == 1 else inst.joint.mass.T
    ne, ns = P.shape
    M = m1 if which == 1 else m2
    cols, rows = si_indexer(inst, which)
    _cap_check(cols.total, cap, "side-information LP")
    A = np.zeros((rows.total, cols.total))
    b = np.zeros(rows.total)
    for se in range(ne):
        r = rows.flat("gamma_a", se)
        b[r] = 1.0
        for x in range(M):
            A[r, cols.flat("Q1", se, x)] = 1.0
    for ss in range(ns):
        for y in range(M):
            r = rows.flat("gamma_b", ss, y)
            b[r] = 1.0
            for sh in range(ne):
                A[r, cols.flat("Qd", ss, y, sh)] = 1.0
    for se in range(ne):
        for ss in range(ns):
            for sh in range(ne):
                for y in range(M):
                    r = rows.flat("lam_s", se, ss, sh, y)
                    for x in range(M):
                        A[r, cols.flat("W", se, ss, x, y, sh)] = 1.0
                    A[r, cols.flat("Qd", ss, y, sh)] = -1.0
    for se in range(ne):
        for ss in range(ns):
            for x in range(M):
                for y in range(M):
                    r = rows.flat("lam_c", se, ss, x, y)
                    for sh in range(ne):
                        A[r, cols.flat("W", se, ss, x, y, sh)] = 1.0
                    A[r, cols.flat("Q1", se, x)] = -1.0
    c = np.zeros(cols.total)
    cw = np.einsum("es, eh, xy -> esxyh", P,
                   1.0 - np.eye(ne), np.eye(M))
    c[cols.slice_of("W")] = cw.reshape(-1)
    return LpModel("min", c, A, ("=",) * rows.total, b)


def build_lp_je(inst: SwInstance, cap: int = DEFAULT_VAR_CAP) -> LpModel:
    """LP relaxation of the jointly-encoded pair problem in pair indices.

    Value equals build_lp_sc on sw_je_instance(inst); the two are built from
    independent index bookkeeping, which the tests exploit.
    """
    n1, n2, m1, m2 = inst.dims
    cols, rows = je_indexer(inst)
    _cap_check(cols.total, cap, "jointly-encoded LP")
    A = np.zeros((rows.total, cols.total))
    b = np.zeros(rows.total)
    for s1 in range(n1):
        for s2 in range(n2):
            r = rows.flat("gamma_a", s1, s2)
            b[r] = 1.0
            for x1 in range(m1):
                for x2 in range(m2):
                    A[r, cols.flat("Q1", s1, s2, x1, x2)] = 1.0
    for y1 in range(m1):
        for y2 in range(m2):
            r = rows.flat("gamma_b", y1, y2)
            b[r] = 1.0
            for t1 in range(n1):
                for t2 in range(n2):
                    A[r, cols.flat("Qd", y1, y2, t1, t2)] = 1.0
    for s1 in range(n1):
        for s2 in range(n2):
            for t1 in range(n1):
                for t2 in range(n2):
                    for y1 in range(m1):
                        for y2 in range(m2):
                            r = rows.flat("lam_s", s1, s2, t1, t2, y1, y2)
                            for x1 in range(m1):
                                for x2 in range(m2):
                                    A[r, cols.flat("W", s1, s2, x1, x2, y1, y2, t1, t2)] = 1.0
                            A[r, cols.flat("Qd", y1, y2, t1, t2)] = -1.0
    for s1 in range(n1):
        for s2 in range(n2):
            for x1 in range(m1):
                for x2 in range(m2):
                    for y1 in range(m1):
                        for y2 in range(m2):
                            r = rows.flat("lam_c", s1, s2, x1, x2, y1, y2)
                            for t1 in range(n1):
                                for t2 in range(n2):
                                    A[r, cols.flat("W", s1, s2, x1, x2, y1, y2, t1, t2)] = 1.0
                            A[r, cols.flat("Q1", s1, s2, x1, x2)] = -1.0
    P = inst.joint.mass
    mism = 1.0 - np.einsum("ac, bd -> abcd", np.eye(n1), np.eye(n2))
    cw = np.einsum("ab, abcd, xu, yv -> abxyuvcd", P, mism, np.eye(m1), np.eye(m2))
    c = np.zeros(cols.total)
    c[cols.slice_of("W")] = cw.reshape(-1)
    return LpModel("min", c, A, ("=",) * rows.total, b)


def build_lp_sw(inst: SwInstance, cap: int = DEFAULT_VAR_CAP) -> LpModel:
    """LP relaxation of the two-encoder problem with all twelve row families."""
    n1, n2, m1, m2 = inst.dims
    cols, rows = sw_indexer(inst)
    _cap_check(cols.total, cap, "distributed LP")
    A = np.zeros((rows.total, cols.total))
    b = np.zeros(rows.total)

    for s1 in range(n1):
        r = rows.flat("gamma_a", s1)
        b[r] = 1.0
        for x1 in range(m1):
            A[r, cols.flat("Q1", s1, x1)] = 1.0
    for s2 in range(n2):
        r = rows.flat("gamma_b", s2)
        b[r] = 1.0
        for x2 in range(m2):
            A[r, cols.flat("Q2", s2, x2)] = 1.0
    for y1 in range(m1):
        for y2 in range(m2):
            r = rows.flat("gamma_c", y1, y2)
            b[r] = 1.0
            for t1 in range(n1):
                for t2 in range(n2):
                    A[r, cols.flat("Qd", y1, y2, t1, t2)] = 1.0

    for x2 in range(m2):
        for s1 in range(n1):
            for s2 in range(n2):
                r = rows.flat("mu_c_21", x2, s1, s2)
                for x1 in range(m1):
                    A[r, cols.flat("T", s1, s2, x1, x2)] = 1.0
                A[r, cols.flat("Q2", s2, x2)] = -1.0
    for x1 in range(m1):
        for s1 in range(n1):
            for s2 in range(n2):
                r = rows.flat("mu_c_12", x1, s1, s2)
                for x2 in range(m2):
                    A[r, cols.flat("T", s1, s2, x1, x2)] = 1.0
                A[r, cols.flat("Q1", s1, x1)] = -1.0

    for s1 in range(n1):
        for t1 in range(n1):
            for t2 in range(n2):
                for y1 in range(m1):
                    for y2 in range(m2):
                        r = rows.flat("mu_s_1", s1, t1, t2, y1, y2)
                        for x1 in range(m1):
                            A[r, cols.flat("U", s1, x1, y1, y2, t1, t2)] = 1.0
                        A[r, cols.flat("Qd", y1, y2, t1, t2)] = -1.0
    for s2 in range(n2):
        for t1 in range(n1):
            for t2 in range(n2):
                for y1 in range(m1):
                    for y2 in range(m2):
                        r = rows.flat("mu_s_2", s2, t1, t2, y1, y2)
                        for x2 in range(m2):
                            A[r, cols.flat("V", s2, x2, y1, y2, t1, t2)] = 1.0
                        A[r, cols.flat("Qd", y1, y2, t1, t2)] = -1.0

    for s1 in range(n1):
        for x1 in range(m1):
            for y1 in range(m1):
                for y2 in range(m2):
                    r = rows.flat("mu_c_1", s1, x1, y1, y2)
                    for t1 in range(n1):
                        for t2 in range(n2):
                            A[r, cols.flat("U", s1, x1, y1, y2, t1, t2)] = 1.0
                    A[r, cols.flat("Q1", s1, x1)] = -1.0
    for s2 in range(n2):
        for x2 in range(m2):
            for y1 in range(m1):
                for y2 in range(m2):
                    r = rows.flat("mu_c_2", s2, x2, y1, y2)
                    for t1 in range(n1):
                        for t2 in range(n2):
                            A[r, cols.flat("V", s2, x2, y1, y2, t1, t2)] = 1.0
                    A[r, cols.flat("Q2", s2, x2)] = -1.0

    for s1 in range(n1):
        for s2 in range(n2):
            for x2 in range(m2):
                for y1 in range(m1):
                    for y2 in range(m2):
                        for t1 in range(n1):
                            for t2 in range(n2):
                                r = rows.flat("lam_s_12", s1, s2, x2, y1, y2, t1, t2)
                                for x1 in range(m1):
                                    A[r, cols.flat("W", s1, s2, x1, x2, y1, y2, t1, t2)] = 1.0
                                A[r, cols.flat("V", s2, x2, y1, y2, t1, t2)] = -1.0
    for s1 in range(n1):
        for s2 in range(n2):
            for x1 in range(m1):
                for y1 in range(m1):
                    for y2 in range(m2):
                        for t1 in range(n1):
                            for t2 in range(n2):
                                r = rows.flat("lam_s_21", s1, s2, x1, y1, y2, t1, t2)
                                for x2 in range(m2):
                                    A[r, cols.flat("W", s1, s2, x1, x2, y1, y2, t1, t2)] = 1.0
                                A[r, cols.flat("U", s1, x1, y1, y2, t1, t2)] = -1.0
    for s1 in range(n1):
        for s2 in range(n2):
            for x1 in range(m1):
                for x2 in range(m2):
                    for y1 in range(m1):
                        for y2 in range(m2):
                            r = rows.flat("lam_c", s1, s2, x1, x2, y1, y2)
                            for t1 in range(n1):
                                for t2 in range(n2):
                                    A[r, cols.flat("W", s1, s2, x1, x2, y1, y2, t1, t2)] = 1.0
                            A[r, cols.flat("T", s1, s2, x1, x2)] = -1.0

    P = inst.joint.mass
    mism = 1.0 - np.einsum("ac, bd -> abcd", np.eye(n1), np.eye(n2))
    cw = np.einsum("ab, abcd, xu, yv -> abxyuvcd", P, mism, np.eye(m1), np.eye(m2))
    c = np.zeros(cols.total)
    c[cols.slice_of("W")] = cw.reshape(-1)

    n_rows_expected = (n1 + n2 + m1 * m2
                       + m2 * n1 * n2 + m1 * n1 * n2
                       + n1 * n1 * n2 * m1 * m2 + n2 * n1 * n2 * m1 * m2
                       + n1 * m1 * m1 * m2 + n2 * m2 * m1 * m2
                       + n1 * n2 * m2 * m1 * m2 * n1 * n2
                       + n1 * n2 * m1 * m1 * m2 * n1 * n2
                       + n1 * n2 * m1 * m2 * m1 * m2)
    assert rows.total == n_rows_expected
    return LpModel("min", c, A, ("=",) * rows.total, b)


# ---------------------------------------------------------------------------
# dual point containers


def _arr(a) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


def _opt(a) -> Optional[np.ndarray]:
    return None if a is None else _arr(a)


@dataclass(frozen=True)
class DualPointSC:
    """Multipliers for the point-to-point LP; see sc_indexer for row orders."""

    lam_s: np.ndarray            # (s, sh, y)
    lam_c: np.ndarray            # (x, s, y)
    gamma_a: Optional[np.ndarray] = None   # (s,)
    gamma_b: Optional[np.ndarray] = None   # (y,)

    def __post_init__(self):
        object.__setattr__(self, "lam_s", _arr(self.lam_s))
        object.__setattr__(self, "lam_c", _arr(self.lam_c))
        object.__setattr__(self, "gamma_a", _opt(self.gamma_a))
        object.__setattr__(self, "gamma_b", _opt(self.gamma_b))


@dataclass(frozen=True)
class DualPointSI:
    """Multipliers for a side-information LP; `which` names the encoded source."""

    which: int
    lam_s: np.ndarray            # (s1, s2, sh_enc, y_enc)
    lam_c: np.ndarray            # (s1, s2, x_enc, y_enc)
    gamma_a: Optional[np.ndarray] = None   # (s_enc,)
    gamma_b: Optional[np.ndarray] = None   # (s_side, y_enc)

    def __post_init__(self):
        if self.which not in (1, 2):
            raise PmfError(f"which must be 1 or 2, got {self.which!r}")
        object.__setattr__(self, "lam_s", _arr(self.lam_s))
        object.__setattr__(self, "lam_c", _arr(self.lam_c))
        object.__setattr__(self, "gamma_a", _opt(self.gamma_a))
        object.__setattr__(self, "gamma_b", _opt(self.gamma_b))


@dataclass(frozen=True)
class DualPointJE:
    """Multipliers for the jointly-encoded LP in pair indices."""

    lam_s: np.ndarray            # (s1, s2, sh1, sh2, y1, y2)
    lam_c: np.ndarray            # (s1, s2, x1, x2, y1, y2)
    gamma_a: Optional[np.ndarray] = None   # (s1, s2)
    gamma_b: Optional[np.ndarray] = None   # (y1, y2)

    def __post_init__(self):
        object.__setattr__(self, "lam_s", _arr(self.lam_s))
        object.__setattr__(self, "lam_c", _arr(self.lam_c))
        object.__setattr__(self, "gamma_a", _opt(self.gamma_a))
        object.__setattr__(self, "gamma_b", _opt(self.gamma_b))


@dataclass(frozen=True)
class DualPointSW:
    """Multipliers for the distributed LP, index orders as documented above."""

    lam_s_12: np.ndarray         # (s1, s2, x2, y1, y2, sh1, sh2)
    lam_s_21: np.ndarray         # (s1, s2, x1, y1, y2, sh1, sh2)
    lam_c: np.ndarray            # (s1, s2, x1, x2, y1, y2)
    mu_s_1: np.ndarray           # (s1, sh1, sh2, y1, y2)
    mu_s_2: np.ndarray           # (s2, sh1, sh2, y1, y2)
    mu_c_1: np.ndarray           # (s1, x1, y1, y2)
    mu_c_2: np.ndarray           # (s2, x2, y1, y2)
    mu_c_12: np.ndarray          # (x1, s1, s2)
    mu_c_21: np.ndarray          # (x2, s1, s2)
    gamma_a: Optional[np.ndarray] = None   # (s1,)
    gamma_b: Optional[np.ndarray] = None   # (s2,)
    gamma_c: Optional[np.ndarray] = None   # (y1, y2)

    def __post_init__(self):
        for f in ("lam_s_12", "lam_s_21", "lam_c", "mu_s_1", "mu_s_2",
                  "mu_c_1", "mu_c_2", "mu_c_12", "mu_c_21"):
            object.__setattr__(self, f, _arr(getattr(self, f)))
        for f in ("gamma_a", "gamma_b", "gamma_c"):
            object.__setattr__(self, f, _opt(getattr(self, f)))


@dataclass(frozen=True)
class ConstraintViolation:
    constraint_id: str
    index: Tuple[int, ...]
    residual: float


def _collect(out: List[ConstraintViolation], cid: str, resid: np.ndarray, tol: float) -> None:
    bad = np.argwhere(resid > tol)
    for idx in bad:
        out.append(ConstraintViolation(cid, tuple(int(i) for i in idx),
                                       float(resid[tuple(idx)])))


# ---------------------------------------------------------------------------
# feasibility checkers


def check_dp_feasible(inst: ScInstance, pt: DualPointSC,
                      tol: float = 1e-12) -> List[ConstraintViolation]:
    n, M, nh = inst.n, inst.M, inst.n_hat
    if pt.lam_s.shape != (n, nh, M) or pt.lam_c.shape != (M, n, M):
        raise PmfError("dual point shapes do not match the instance")
    P = inst.source.mass
    exc = inst.distortion.excess().astype(float)
    out: List[ConstraintViolation] = []
    if pt.gamma_a is not None:
        # (P1): gamma_a(s) <= sum_y lam_c(x, s, y), for all (x, s)
        resid = pt.gamma_a[None, :] - pt.lam_c.sum(axis=2)
        _collect(out, "P1", resid, tol)
    if pt.gamma_b is not None:
        # (P2): gamma_b(y) <= sum_s lam_s(s, sh, y), for all (y, sh)
        resid = pt.gamma_b[:, None] - pt.lam_s.sum(axis=0).T
        _collect(out, "P2", resid, tol)
    # (P3): lam_s(s,sh,y) + lam_c(x,s,y) <= P(s) 1{d(s,sh) > level} 1{y=x}
    rhs = np.einsum("s, sh, xy -> sxyh", P, exc, np.eye(M))
    lhs = pt.lam_s.transpose(0, 2, 1)[:, None, :, :] + \
        pt.lam_c.transpose(1, 0, 2)[:, :, :, None]
    _collect(out, "P3", lhs - rhs, tol)
    return out


def check_dpje_feasible(inst: SwInstance, pt: DualPointJE,
                        tol: float = 1e-12) -> List[ConstraintViolation]:
    n1, n2, m1, m2 = inst.dims
    if pt.lam_s.shape != (n1, n2, n1, n2, m1, m2) or \
            pt.lam_c.shape != (n1, n2, m1, m2, m1, m2):
        raise PmfError("dual point shapes do not match the instance")
    P = inst.joint.mass
    out: List[ConstraintViolation] = []
    if pt.gamma_a is not None:
        # (A1): gamma_a(s1,s2) <= sum_{y1,y2} lam_c(s1,s2,x1,x2,y1,y2)
        resid = pt.gamma_a[:, :, None, None] - pt.lam_c.sum(axis=(4, 5))
        _collect(out, "A1", resid, tol)
    if pt.gamma_b is not None:
        # (A2): gamma_b(y1,y2) <= sum_{s1,s2} lam_s(.., sh1, sh2, y1, y2)
        resid = pt.gamma_b[None, None, :, :] - pt.lam_s.sum(axis=(0, 1))
        _collect(out, "A2", resid, tol)
    # (A3) over (s1,s2,sh1,sh2,x1,x2,y1,y2)
    mism = 1.0 - np.einsum("ac, bd -> abcd", np.eye(n1), np.eye(n2))
    rhs = np.einsum("ab, abcd, xu, yv -> abcdxyuv", P, mism, np.eye(m1), np.eye(m2))
    lhs = pt.lam_s[:, :, :, :, None, None, :, :] + \
        pt.lam_c[:, :, None, None, :, :, :, :]
    _collect(out, "A3", lhs - rhs, tol)
    return out


def check_dpsi_feasible(inst: SwInstance, pt: DualPointSI,
                        tol: float = 1e-12) -> List[ConstraintViolation]:
    n1, n2, m1, m2 = inst.dims
    if pt.which == 1:
        P, ne, ns, M = inst.joint.mass, n1, n2, m1
        lam_s, lam_c = pt.lam_s, pt.lam_c
        ids = ("B1", "B2", "B3")
    else:
        P, ne, ns, M = inst.joint.mass.T, n2, n1, m2
        lam_s, lam_c = pt.lam_s.swapaxes(0, 1), pt.lam_c.swapaxes(0, 1)
        ids = ("C1", "C2", "C3")
    if lam_s.shape != (ne, ns, ne, M) or lam_c.shape != (ne, ns, M, M):
        raise PmfError("dual point shapes do not match the instance")
    out: List[ConstraintViolation] = []
    if pt.gamma_a is not None:
        # (B1): gamma_a(se) <= sum_{ss, y} lam_c(se, ss, x, y)
        resid = pt.gamma_a[:, None] - lam_c.sum(axis=(1, 3))
        _collect(out, ids[0], resid, tol)
    if pt.gamma_b is not None:
        # (B2) over (ss, sh, y): lam_s.sum(0) has axes (ss, sh, y)
        resid = pt.gamma_b[:, None, :] - lam_s.sum(axis=0)
        _collect(out, ids[1], resid, tol)
    # (B3): lam_s(se,ss,sh,y) + lam_c(se,ss,x,y) <= P(se,ss) 1{se != sh} 1{y=x}
    rhs = np.einsum("es, eh, xy -> eshxy", P, 1.0 - np.eye(ne), np.eye(M))
    lhs = lam_s[:, :, :, None, :] + lam_c[:, :, None, :, :]
    _collect(out, ids[2], lhs - rhs, tol)
    return out


def check_dpsw_feasible(inst: SwInstance, pt: DualPointSW,
                        tol: float = 1e-12) -> List[ConstraintViolation]:
    """Residual check of (D1)-(D7); returns one record per violated entry."""
    n1, n2, m1, m2 = inst.dims
    shapes = {
        "lam_s_12": (n1, n2, m2, m1, m2, n1, n2),
        "lam_s_21": (n1, n2, m1, m1, m2, n1, n2),
        "lam_c": (n1, n2, m1, m2, m1, m2),
        "mu_s_1": (n1, n1, n2, m1, m2), "mu_s_2": (n2, n1, n2, m1, m2),
        "mu_c_1": (n1, m1, m1, m2), "mu_c_2": (n2, m2, m1, m2),
        "mu_c_12": (m1, n1, n2), "mu_c_21": (m2, n1, n2),
    }
    for f, sh in shapes.items():
        if getattr(pt, f).shape != sh:
            raise PmfError(f"dual point field {f} has shape "
                           f"{getattr(pt, f).shape}, expected {sh}")
    P = inst.joint.mass
    out: List[ConstraintViolation] = []

    if pt.gamma_a is not None:
        # (D1) over (s1, x1)
        resid = pt.gamma_a[:, None] - pt.mu_c_1.sum(axis=(2, 3)) \
            - pt.mu_c_12.sum(axis=2).T
        _collect(out, "D1", resid, tol)
    if pt.gamma_b is not None:
        # (D2) over (s2, x2); mu_c_21 axes are (x2, s1, s2)
        resid = pt.gamma_b[:, None] - pt.mu_c_2.sum(axis=(2, 3)) \
            - pt.mu_c_21.sum(axis=1).T
        _collect(out, "D2", resid, tol)
    if pt.gamma_c is not None:
        # (D3) over (y1, y2, sh1, sh2)
        dec = pt.mu_s_1.sum(axis=0) + pt.mu_s_2.sum(axis=0)  # (sh1, sh2, y1, y2)
        resid = pt.gamma_c[:, :, None, None] - dec.transpose(2, 3, 0, 1)
        _collect(out, "D3", resid, tol)

    # (D4) over (s1, s2, x1, x2, y1, y2, sh1, sh2)
    mism = 1.0 - np.einsum("ac, bd -> abcd", np.eye(n1), np.eye(n2))
    rhs = np.einsum("ab, abcd, xu, yv -> abxyuvcd", P, mism, np.eye(m1), np.eye(m2))
    lhs = pt.lam_s_12[:, :, None, :, :, :, :, :] \
        + pt.lam_s_21[:, :, :, None, :, :, :, :] \
        + pt.lam_c[:, :, :, :, :, :, None, None]
    _collect(out, "D4", lhs - rhs, tol)

    # (D5) over (s2, x2, y1, y2, sh1, sh2)
    lhs = pt.mu_s_2.transpose(0, 3, 4, 1, 2)[:, None, :, :, :, :] \
        + pt.mu_c_2[:, :, :, :, None, None]
    _collect(out, "D5", lhs - pt.lam_s_12.sum(axis=0), tol)

    # (D6) over (s1, x1, y1, y2, sh1, sh2)
    lhs = pt.mu_s_1.transpose(0, 3, 4, 1, 2)[:, None, :, :, :, :] \
        + pt.mu_c_1[:, :, :, :, None, None]
    _collect(out, "D6", lhs - pt.lam_s_21.sum(axis=1), tol)

    # (D7) over (s1, s2, x1, x2)
    lhs = pt.mu_c_12.transpose(1, 2, 0)[:, :, :, None] \
        + pt.mu_c_21.transpose(1, 2, 0)[:, :, None, :]
    _collect(out, "D7", lhs - pt.lam_c.sum(axis=(4, 5)), tol)
    return out


# ---------------------------------------------------------------------------
# dual objectives (penalty / min form)


def dp_objective(inst: ScInstance, pt: DualPointSC) -> float:
    ga = pt.gamma_a if pt.gamma_a is not None else pt.lam_c.sum(axis=2).min(axis=0)
    gb = pt.gamma_b if pt.gamma_b is not None else pt.lam_s.sum(axis=0).T.min(axis=1)
    return float(ga.sum() + gb.sum())


def dpje_objective(inst: SwInstance, pt: DualPointJE) -> float:
    ga = pt.gamma_a if pt.gamma_a is not None else pt.lam_c.sum(axis=(4, 5)).min(axis=(2, 3))
    gb = pt.gamma_b if pt.gamma_b is not None else pt.lam_s.sum(axis=(0, 1)).min(axis=(0, 1))
    return float(ga.sum() + gb.sum())


def dpsi_objective(inst: SwInstance, pt: DualPointSI) -> float:
    lam_s = pt.lam_s if pt.which == 1 else pt.lam_s.swapaxes(0, 1)
    lam_c = pt.lam_c if pt.which == 1 else pt.lam_c.swapaxes(0, 1)
    ga = pt.gamma_a if pt.gamma_a is not None else lam_c.sum(axis=(1, 3)).min(axis=1)
    gb = pt.gamma_b if pt.gamma_b is not None else lam_s.sum(axis=0).min(axis=1)
    return float(ga.sum() + gb.sum())


def dpsw_objective(inst: SwInstance, pt: DualPointSW) -> float:
    """Dual objective of the distributed LP in the per-symbol penalty form:
    the three normalization multipliers evaluated at their binding minima
    (gamma fields, when stored, must agree up to feasibility slack)."""
    term1 = (pt.mu_c_1.sum(axis=(2, 3)) + pt.mu_c_12.sum(axis=2).T).min(axis=1).sum()
    term2 = (pt.mu_c_2.sum(axis=(2, 3)) + pt.mu_c_21.sum(axis=1).T).min(axis=1).sum()
    dec = pt.mu_s_1.sum(axis=0) + pt.mu_s_2.sum(axis=0)  # (sh1, sh2, y1, y2)
    term3 = dec.min(axis=(0, 1)).sum()
    return float(term1 + term2 + term3)


# ---------------------------------------------------------------------------
# dual points generated by a nonnegative flow phi


def dp_flows_sc(inst: ScInstance, phi: np.ndarray) -> DualPointSC:
    """Dual point of the point-to-point LP generated by 0 <= phi <= P:
    lam_c routes phi along the y = x diagonal, lam_s pays it back on
    within-distortion reconstructions."""
    n, M, nh = inst.n, inst.M, inst.n_hat
    phi = np.asarray(phi, dtype=float)
    win = inst.distortion.within().astype(float)
    lam_c = np.einsum("xy, s -> xsy", np.eye(M), phi)
    lam_s = np.broadcast_to(-(phi[:, None] * win)[:, :, None], (n, nh, M)).copy()
    gamma_a = phi.copy()
    gamma_b = np.full(M, -float((phi[:, None] * win).sum(axis=0).max()))
    return DualPointSC(lam_s, lam_c, gamma_a, gamma_b)


def dpsi_flows(inst: SwInstance, which: int, phi: np.ndarray) -> DualPointSI:
    """Side-information dual point from 0 <= phi <= P (joint-shaped)."""
    n1, n2, m1, m2 = inst.dims
    phi = np.asarray(phi, dtype=float)
    if which == 1:
        pe, ne, ns, M = phi, n1, n2, m1
    else:
        pe, ne, ns, M = phi.T, n2, n1, m2
    # axes below are (s_enc, s_side, sh_enc, y_enc)
    lam_s = -np.einsum("es, eh -> esh", pe, np.eye(ne))[:, :, :, None]
    lam_s = np.broadcast_to(lam_s, (ne, ns, ne, M)).copy()
    lam_c = np.broadcast_to(pe[:, :, None, None] * np.eye(M)[None, None, :, :],
                            (ne, ns, M, M)).copy()
    gamma_a = pe.sum(axis=1)
    gamma_b = np.broadcast_to(-pe.max(axis=0)[:, None], (ns, M)).copy()
    if which == 2:
        lam_s = lam_s.swapaxes(0, 1)
        lam_c = lam_c.swapaxes(0, 1)
    return DualPointSI(which, lam_s, lam_c, gamma_a, gamma_b)


def dpje_flows(inst: SwInstance, phi_hat: np.ndarray) -> DualPointJE:
    """Jointly-encoded dual point from 0 <= phi_hat <= P (joint-shaped)."""
    n1, n2, m1, m2 = inst.dims
    ph = np.asarray(phi_hat, dtype=float)
    same = np.einsum("ac, bd -> abcd", np.eye(n1), np.eye(n2))
    lam_s = -np.einsum("ab, abcd -> abcd", ph, same)[:, :, :, :, None, None]
    lam_s = np.broadcast_to(lam_s, (n1, n2, n1, n2, m1, m2)).copy()
    diag = np.einsum("xu, yv -> xyuv", np.eye(m1), np.eye(m2))
    lam_c = np.broadcast_to(ph[:, :, None, None, None, None] *
                            diag[None, None, :, :, :, :],
                            (n1, n2, m1, m2, m1, m2)).copy()
    gamma_a = ph.copy()
    gamma_b = np.full((m1, m2), -float(ph.max()))
    return DualPointJE(lam_s, lam_c, gamma_a, gamma_b)


# ---------------------------------------------------------------------------
# slicing solver output back into typed dual points


def dual_point_sc_from_solution(inst: ScInstance, sol: LpSolution) -> DualPointSC:
    _, rows = sc_indexer(inst)
    y = sol.dual
    return DualPointSC(rows.extract(y, "lam_s"), rows.extract(y, "lam_c"),
                       rows.extract(y, "gamma_a"), rows.extract(y, "gamma_b"))


def dual_point_je_from_solution(inst: SwInstance, sol: LpSolution) -> DualPointJE:
    _, rows = je_indexer(inst)
    y = sol.dual
    return DualPointJE(rows.extract(y, "lam_s"), rows.extract(y, "lam_c"),
                       rows.extract(y, "gamma_a"), rows.extract(y, "gamma_b"))


def dual_point_si_from_solution(inst: SwInstance, which: int,
                                sol: LpSolution) -> DualPointSI:
    _, rows = si_indexer(inst, which)
    y = sol.dual
    lam_s = rows.extract(y, "lam_s")   # (se, ss, sh, y)
    lam_c = rows.extract(y, "lam_c")   # (se, ss, x, y)
    if which == 2:
        lam_s = lam_s.swapaxes(0, 1)
        lam_c = lam_c.swapaxes(0, 1)
    return DualPointSI(which, lam_s, lam_c,
                       rows.extract(y, "gamma_a"), rows.extract(y, "gamma_b"))


def dual_point_sw_from_solution(inst: SwInstance, sol: LpSolution) -> DualPointSW:
    _, rows = sw_indexer(inst)
    y = sol.dual
    lam_s_12 = rows.extract(y, "lam_s_12")
    lam_s_21 = rows.extract(y, "lam_s_21")
    lam_c = rows.extract(y, "lam_c")
    mu = {f: rows.extract(y, f) for f in
          ("mu_s_1", "mu_s_2", "mu_c_1", "mu_c_2", "mu_c_12", "mu_c_21")}
    return DualPointSW(lam_s_12, lam_s_21, lam_c,
                       mu["mu_s_1"], mu["mu_s_2"], mu["mu_c_1"], mu["mu_c_2"],
                       mu["mu_c_12"], mu["mu_c_21"],
                       rows.extract(y, "gamma_a"), rows.extract(y, "gamma_b"),
                       rows.extract(y, "gamma_c"))
