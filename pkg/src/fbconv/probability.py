"""Finite-alphabet pmf containers and entropy densities.

Everything downstream works with explicit probability vectors/matrices over
small alphabets.  This module owns validation (no silent renormalization),
marginalization, pointwise entropy densities in nats, distortion measures,
and the plain-text pmf file format used by the CLI:

    pmf1 <|S|>            pmf2 <|S1|> <|S2|>
    <i> <p>               <i> <j> <p>
    ...                   ...

Indices are 0-based; omitted entries are zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np

MASS_TOL = 1e-12


class PmfError(ValueError):
    pass


class NegativeMass(PmfError):
    pass


class MassSumMismatch(PmfError):
    pass


class ZeroProbability(PmfError):
    """Entropy density requested at a zero-mass point without the +inf opt-in."""


class PmfFormatError(PmfError):
    """Malformed pmf text file."""


def _frozen_array(a) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


def _check_mass(mass: np.ndarray) -> None:
    if mass.size == 0:
        raise PmfError("empty alphabet")
    if np.any(mass < 0):
        i = int(np.argmin(mass))
        raise NegativeMass(f"negative mass {mass.flat[i]!r} at flat index {i}")
    s = float(mass.sum())
    if abs(s - 1.0) > MASS_TOL:
        raise MassSumMismatch(f"total mass {s!r} differs from 1 by more than {MASS_TOL}")


@dataclass(frozen=True)
class SinglePmf:
    """Distribution of one source letter; mass is a 1-D array summing to 1."""

    mass: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mass", _frozen_array(self.mass))
        if self.mass.ndim != 1:
            raise PmfError(f"SinglePmf needs a 1-D mass array, got ndim={self.mass.ndim}")
        _check_mass(self.mass)

    @property
    def alphabet_size(self) -> int:
        return self.mass.shape[0]


@dataclass(frozen=True)
class JointPmf:
    """Distribution of a source pair; mass is |S1| x |S2|, rows indexed by s1."""

    mass: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mass", _frozen_array(self.mass))
        if self.mass.ndim != 2:
            raise PmfError(f"JointPmf needs a 2-D mass array, got ndim={self.mass.ndim}")
        _check_mass(self.mass)

    @property
    def sizes(self) -> Tuple[int, int]:
        return self.mass.shape


Pmf = Union[SinglePmf, JointPmf]


def validate(mass) -> Pmf:
    """Wrap a raw array as SinglePmf or JointPmf after checking it really is a pmf."""
    arr = np.asarray(mass, dtype=float)
    if arr.ndim == 1:
        return SinglePmf(arr)
    if arr.ndim == 2:
        return JointPmf(arr)
    raise PmfError(f"expected 1-D or 2-D mass, got ndim={arr.ndim}")


@dataclass(frozen=True)
class CodeSizes:
    """Codebook sizes; M2 is None for single-encoder problems."""

    M1: int
    M2: Optional[int] = None

    def __post_init__(self):
        if int(self.M1) != self.M1 or self.M1 < 1:
            raise PmfError(f"M1 must be a positive integer, got {self.M1!r}")
        if self.M2 is not None and (int(self.M2) != self.M2 or self.M2 < 1):
            raise PmfError(f"M2 must be a positive integer, got {self.M2!r}")


@dataclass(frozen=True)
class DistortionSpec:
    """Single-letter distortion d(s, shat) >= 0 (may be +inf) with excess level."""

    d_matrix: np.ndarray
    level: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "d_matrix", _frozen_array(self.d_matrix))
        if self.d_matrix.ndim != 2:
            raise PmfError("d_matrix must be 2-D (|S| x |Shat|)")
        if np.any(np.isnan(self.d_matrix)) or np.any(self.d_matrix < 0):
            raise PmfError("distortion entries must lie in [0, +inf]")
        if not (self.level >= 0):
            raise PmfError(f"distortion level must be >= 0, got {self.level!r}")

    @classmethod
    def lossless(cls, n: int) -> "DistortionSpec":
        return cls(1.0 - np.eye(n), 0.0)

    def within(self) -> np.ndarray:
        """Boolean |S| x |Shat| table of d(s,shat) <= level."""
        return self.d_matrix <= self.level

    def excess(self) -> np.ndarray:
        return self.d_matrix > self.level


def marginal(pmf: JointPmf, axis: int) -> SinglePmf:
    """Marginal of coordinate `axis` (1 or 2) of a joint pmf."""
    if axis == 1:
        return SinglePmf(pmf.mass.sum(axis=1))
    if axis == 2:
        return SinglePmf(pmf.mass.sum(axis=0))
    raise PmfError(f"axis must be 1 or 2, got {axis!r}")


def _neglog(p: float, zero_to_inf: bool) -> float:
    if p <= 0.0:
        if zero_to_inf:
            return math.inf
        raise ZeroProbability("entropy density at a zero-probability point")
    return -math.log(p)


def entropy_density(pmf: Pmf, indices, given: Optional[int] = None,
                    zero_to_inf: bool = False) -> float:
    """Pointwise entropy density in nats.

    For a SinglePmf, ``indices`` is a symbol index s and the value is -ln P(s).
    For a JointPmf, ``indices`` is (s1, s2); with ``given=None`` the joint
    density -ln P(s1,s2), with ``given=2`` the conditional -ln P(s1|s2), with
    ``given=1`` the conditional -ln P(s2|s1).

    Zero-probability points raise ZeroProbability unless ``zero_to_inf`` opts
    into a +inf sentinel.
    """
    if isinstance(pmf, SinglePmf):
        if given is not None:
            raise PmfError("conditioning needs a joint pmf")
        return _neglog(float(pmf.mass[indices]), zero_to_inf)
    s1, s2 = indices
    p12 = float(pmf.mass[s1, s2])
    if given is None:
        return _neglog(p12, zero_to_inf)
    if given == 2:
        pg = float(pmf.mass[:, s2].sum())
    elif given == 1:
        pg = float(pmf.mass[s1, :].sum())
    else:
        raise PmfError(f"given must be 1, 2 or None, got {given!r}")
    # h(a|b) = h(a,b) - h(b); at pg == 0 the point itself has zero mass too
    if pg <= 0.0:
        return _neglog(0.0, zero_to_inf)
    return _neglog(p12 / pg, zero_to_inf)


def average_entropy(pmf: Pmf, given: Optional[int] = None) -> float:
    """Shannon entropy in nats (conditional entropy for a joint pmf with `given`)."""
    if isinstance(pmf, SinglePmf):
        m = pmf.mass[pmf.mass > 0]
        return float(-(m * np.log(m)).sum())
    m = pmf.mass
    pos = m > 0
    h12 = float(-(m[pos] * np.log(m[pos])).sum())
    if given is None:
        return h12
    g = marginal(pmf, given).mass
    gpos = g > 0
    hg = float(-(g[gpos] * np.log(g[gpos])).sum())
    return h12 - hg


# ---------------------------------------------------------------------------
# pmf text format


def parse_pmf_text(text: str) -> Pmf:
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise PmfFormatError("empty pmf file")
    head = lines[0].split()
    try:
        if head[0] == "pmf1":
            if len(head) != 2:
                raise PmfFormatError(f"bad header {lines[0]!r}")
            n = int(head[1])
            if n < 1:
                raise PmfFormatError("alphabet size must be >= 1")
            mass = np.zeros(n)
            for ln in lines[1:]:
                parts = ln.split()
                if len(parts) != 2:
                    raise PmfFormatError(f"bad pmf1 entry {ln!r}")
                i, p = int(parts[0]), float(parts[1])
                if not 0 <= i < n:
                    raise PmfFormatError(f"index {i} out of range [0, {n})")
                mass[i] = p
            return SinglePmf(mass)
        if head[0] == "pmf2":
            if len(head) != 3:
                raise PmfFormatError(f"bad header {lines[0]!r}")
            n1, n2 = int(head[1]), int(head[2])
            if n1 < 1 or n2 < 1:
                raise PmfFormatError("alphabet sizes must be >= 1")
            mass = np.zeros((n1, n2))
            for ln in lines[1:]:
                parts = ln.split()
                if len(parts) != 3:
                    raise PmfFormatError(f"bad pmf2 entry {ln!r}")
                i, j, p = int(parts[0]), int(parts[1]), float(parts[2])
                if not (0 <= i < n1 and 0 <= j < n2):
                    raise PmfFormatError(f"index ({i},{j}) out of range")
                mass[i, j] = p
            return JointPmf(mass)
    except PmfError:
        raise
    except ValueError as e:
        raise PmfFormatError(f"unparsable pmf line: {e}") from e
    raise PmfFormatError(f"unknown pmf header {lines[0]!r}")


def format_pmf_text(pmf: Pmf) -> str:
    out = []
    if isinstance(pmf, SinglePmf):
        out.append(f"pmf1 {pmf.alphabet_size}")
        for i, p in enumerate(pmf.mass):
            if p != 0.0:
                out.append(f"{i} {float(p)!r}")
    else:
        n1, n2 = pmf.sizes
        out.append(f"pmf2 {n1} {n2}")
        for i in range(n1):
            for j in range(n2):
                if pmf.mass[i, j] != 0.0:
                    out.append(f"{i} {j} {float(pmf.mass[i, j])!r}")
    return "\n".join(out) + "\n"
