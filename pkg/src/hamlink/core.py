"""Periodic sequences, difference operators and the norms of E_M.

Indices are 1-based at every public entry point: ``u[1]`` is the first
entry and ``u[n]`` wraps with period M for any integer ``n``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

MIN_PERIOD = 5


class PeriodicSequence:
    """An element of E_M: M reals extended periodically to all integer indices."""

    __slots__ = ("_values",)

    def __init__(self, values: Iterable[float]):
        arr = np.array(values, dtype=float).reshape(-1)
        if arr.size < MIN_PERIOD:
            raise ValueError(f"period must be >= {MIN_PERIOD}, got {arr.size}")
        arr.flags.writeable = False
        self._values = arr

    @classmethod
    def zeros(cls, m: int) -> "PeriodicSequence":
        return cls(np.zeros(m))

    @classmethod
    def constant(cls, m: int, c: float) -> "PeriodicSequence":
        return cls(np.full(m, float(c)))

    @classmethod
    def unit(cls, m: int, j: int) -> "PeriodicSequence":
        """Unit vector e_j (1-based, wrapped)."""
        e = np.zeros(m)
        e[(j - 1) % m] = 1.0
        return cls(e)

    @property
    def period(self) -> int:
        return self._values.size

    @property
    def values(self) -> np.ndarray:
        """Read-only view of the M stored values (entry 0 holds u_1)."""
        return self._values

    def __len__(self) -> int:
        return self._values.size

    def __getitem__(self, n: int) -> float:
        return float(self._values[(n - 1) % self._values.size])

    def __iter__(self):
        return iter(self._values.tolist())

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._values
        return self._values.astype(dtype)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PeriodicSequence):
            return NotImplemented
        return np.array_equal(self._values, other._values)

    def __hash__(self) -> int:
        return hash(self._values.tobytes())

    def __neg__(self) -> "PeriodicSequence":
        return PeriodicSequence(-self._values)

    def __add__(self, other: "PeriodicSequence") -> "PeriodicSequence":
        return PeriodicSequence(self._values + as_array(other, self.period))

    def __sub__(self, other: "PeriodicSequence") -> "PeriodicSequence":
        return PeriodicSequence(self._values - as_array(other, self.period))

    def __mul__(self, c: float) -> "PeriodicSequence":
        return PeriodicSequence(self._values * float(c))

    __rmul__ = __mul__

    def shift(self, k: int) -> "PeriodicSequence":
        """Return the sequence n -> u[n + k]."""
        return PeriodicSequence(np.roll(self._values, -k))

    def __repr__(self) -> str:
        return f"PeriodicSequence({self._values.tolist()!r})"


SequenceLike = Union[PeriodicSequence, Sequence[float], np.ndarray]


def as_array(u: SequenceLike, m: int | None = None) -> np.ndarray:
    arr = u.values if isinstance(u, PeriodicSequence) else np.asarray(u, dtype=float)
    if m is not None and arr.shape[-1] != m:
        raise ValueError(f"expected period {m}, got {arr.shape[-1]}")
    return arr


def forward_difference(u: SequenceLike) -> PeriodicSequence:
    """(Δu)_n = u_{n+1} - u_n, wrapping at n = M."""
    x = as_array(u)
    return PeriodicSequence(np.roll(x, -1) - x)


def second_difference(u: SequenceLike) -> PeriodicSequence:
    """Entry n holds u_{n+1} - 2u_n + u_{n-1}, i.e. Δ²u_{n-1}."""
    x = as_array(u)
    return PeriodicSequence(np.roll(x, -1) - 2.0 * x + np.roll(x, 1))


@dataclass(frozen=True)
class NormPair:
    """Equivalence constants with c1·‖u‖ <= ‖u‖_β <= c2·‖u‖ on E_M."""

    c1: float
    c2: float
    beta: float

    def __post_init__(self):
        if not (0 < self.c1 <= self.c2):
            raise ValueError("need 0 < c1 <= c2")

    @classmethod
    def sharp(cls, m: int, beta: float) -> "NormPair":
        # power-mean bound is attained at constants, the upper one at unit spikes;
        # for beta < 2 the roles swap.
        if beta >= 2:
            return cls(c1=m ** (1.0 / beta - 0.5), c2=1.0, beta=beta)
        return cls(c1=1.0, c2=m ** (1.0 / beta - 0.5), beta=beta)

    def holds(self, u: SequenceLike, slack: float = 1e-12) -> bool:
        n2, nb = norm2(u), norm_beta(u, self.beta)
        return self.c1 * n2 - nb <= slack and nb - self.c2 * n2 <= slack


def norm2(u: SequenceLike) -> float:
    return float(np.sqrt(np.sum(as_array(u) ** 2)))


def norm_beta(u: SequenceLike, beta: float) -> float:
    x = np.abs(as_array(u))
    scale = x.max(initial=0.0)
    if scale == 0.0:
        return 0.0
    # scaled to dodge overflow of |u|^β for large entries
    return float(scale * np.sum((x / scale) ** beta) ** (1.0 / beta))


def norms(u: SequenceLike, beta: float) -> tuple[float, float, NormPair]:
    """Euclidean norm, β-norm and the sharp equivalence constants for this period."""
    if beta < 1:
        raise ValueError(f"beta must be >= 1, got {beta}")
    x = as_array(u)
    return norm2(x), norm_beta(x, beta), NormPair.sharp(x.size, beta)


def parse_sequence_line(line: str) -> PeriodicSequence:
    """Parse one line of the sequence literal format (comma-separated decimals)."""
    parts = [p.strip() for p in line.strip().split(",")]
    if not parts or any(p == "" for p in parts):
        raise ValueError(f"malformed sequence line: {line!r}")
    return PeriodicSequence([float(p) for p in parts])


def format_sequence_line(u: SequenceLike) -> str:
    return ",".join(format_real(v) for v in as_array(u))


def format_real(x: float) -> str:
    """17 significant digits: round-trips every double exactly."""
    return format(float(x), ".17g")
