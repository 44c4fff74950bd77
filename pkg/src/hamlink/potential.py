"""Potentials F(n, x, y, z), the shipped power-law family, and sampled checks of (D1)-(D4).

Every potential here is vectorised: ``eval`` and ``grad`` accept numpy
arrays for ``x, y, z`` (and ``n``) and broadcast.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from hamlink.spectral import lambda_min

EvalFn = Callable[..., np.ndarray]
GradFn = Callable[..., tuple]


@dataclass(frozen=True, eq=False)
class PotentialSpec:
    """F(n, x, y, z) with its gradient in (x, y, z).

    ``x, y, z`` are the arguments fed with u_{n-1}, u_n, u_{n+1}.
    """

    period: int
    eval: EvalFn
    grad: GradFn
    autonomous: bool = False
    even: bool = False
    name: str = "custom"
    definition: Mapping | None = field(default=None, repr=False)

    @property
    def shift_invariant(self) -> bool:
        return self.autonomous

    def __call__(self, n, x, y, z):
        return self.eval(n, x, y, z)


def _abspow(x, p):
    return np.abs(x) ** p


def _abspow_prime(x, p):
    # d/dx |x|^p = p |x|^{p-1} sign(x); zero at 0 for p > 1
    return p * np.abs(x) ** (p - 1.0) * np.sign(x)


def example31_potential(b: float, beta: float, m: int) -> PotentialSpec:
    """F = -2b(1 - cos(2π/m)) (|x|^β + |y|^β + |z|^β), independent of n."""
    if not b > 0:
        raise ValueError("b: must be > 0")
    if not beta > 2:
        raise ValueError("beta: must be > 2")
    if m < 5:
        raise ValueError("m: must be >= 5")
    k = -2.0 * b * (1.0 - math.cos(2.0 * math.pi / m))

    def f(n, x, y, z):
        return k * (_abspow(x, beta) + _abspow(y, beta) + _abspow(z, beta))

    def g(n, x, y, z):
        return k * _abspow_prime(x, beta), k * _abspow_prime(y, beta), k * _abspow_prime(z, beta)

    definition = {
        "period": m,
        "terms": [
            {"arg": a, "kind": "abspow", "coeff": k, "power": beta, "modulation": "none"}
            for a in ("x", "y", "z")
        ],
    }
    return PotentialSpec(m, f, g, autonomous=True, even=True, name="example31", definition=definition)


class PotentialDefinitionError(ValueError):
    pass


_ARGS = {"x": 0, "y": 1, "z": 2}
_CROSS = {"xy": (0, 1), "yz": (1, 2)}
_TERM_KEYS = {"arg", "kind", "coeff", "power", "modulation", "harmonic", "residue"}


@dataclass(frozen=True)
class _Term:
    kind: str
    idx: tuple[int, ...]
    coeff: float
    power: float
    modulation: str
    harmonic: int
    residue: int | None

    def weight(self, n, m):
        n = np.asarray(n)
        if self.modulation == "cos":
            w = np.cos(2.0 * np.pi * self.harmonic * n / m)
        elif self.modulation == "sin":
            w = np.sin(2.0 * np.pi * self.harmonic * n / m)
        else:
            w = np.ones_like(n, dtype=float)
        if self.residue is not None:
            w = w * (np.mod(n, m) == self.residue % m)
        return self.coeff * w


def _parse_term(raw: Mapping, i: int) -> _Term:
    where = f"terms[{i}]"
    if not isinstance(raw, Mapping):
        raise PotentialDefinitionError(f"{where}: must be a mapping")
    unknown = set(raw) - _TERM_KEYS
    if unknown:
        raise PotentialDefinitionError(f"{where}: unknown keys {sorted(unknown)}")
    kind = raw.get("kind")
    arg = raw.get("arg")
    if kind not in ("abspow", "square", "cross"):
        raise PotentialDefinitionError(f"{where}.kind: must be abspow, square or cross")
    if kind == "cross":
        if arg not in _CROSS:
            raise PotentialDefinitionError(f"{where}.arg: cross terms take 'xy' or 'yz'")
        idx = _CROSS[arg]
    else:
        if arg not in _ARGS:
            raise PotentialDefinitionError(f"{where}.arg: must be x, y or z")
        idx = (_ARGS[arg],)
    try:
        coeff = float(raw.get("coeff", 1.0))
    except (TypeError, ValueError):
        raise PotentialDefinitionError(f"{where}.coeff: must be a real number") from None
    power = 2.0
    if kind == "abspow":
        if "power" not in raw:
            raise PotentialDefinitionError(f"{where}.power: required for abspow terms")
        try:
            power = float(raw["power"])
        except (TypeError, ValueError):
            raise PotentialDefinitionError(f"{where}.power: must be a real number") from None
        if not power > 2:
            raise PotentialDefinitionError(f"{where}.power: must be > 2 for abspow terms")
    modulation = raw.get("modulation", "none") or "none"
    if modulation not in ("none", "cos", "sin"):
        raise PotentialDefinitionError(f"{where}.modulation: must be none, cos or sin")
    harmonic = raw.get("harmonic", 1)
    residue = raw.get("residue")
    if not isinstance(harmonic, int) or (residue is not None and not isinstance(residue, int)):
        raise PotentialDefinitionError(f"{where}: harmonic and residue must be integers")
    return _Term(kind, idx, coeff, power, modulation, harmonic, residue)


def table_potential(definition: Mapping) -> PotentialSpec:
    """Build a potential from a small term grammar.

    ``definition`` has keys ``period`` and ``terms``; each term is a mapping
    with ``arg`` (x|y|z, or xy|yz for cross terms), ``kind``
    (abspow|square|cross), ``coeff``, ``power`` (abspow only, > 2),
    ``modulation`` (none|cos|sin of 2π·harmonic·n/M), and optionally
    ``harmonic`` (default 1) and ``residue`` (restricts the term to n ≡ residue mod M).
    """
    if not isinstance(definition, Mapping):
        raise PotentialDefinitionError("potential definition must be a mapping")
    unknown = set(definition) - {"period", "terms", "name"}
    if unknown:
        raise PotentialDefinitionError(f"unknown keys {sorted(unknown)}")
    m = definition.get("period")
    if not isinstance(m, int) or m < 5:
        raise PotentialDefinitionError("period: must be an integer >= 5")
    raw_terms = definition.get("terms", []) or []
    if not isinstance(raw_terms, Sequence) or isinstance(raw_terms, (str, bytes)):
        raise PotentialDefinitionError("terms: must be a list")
    terms = tuple(_parse_term(t, i) for i, t in enumerate(raw_terms))

    def f(n, x, y, z):
        args = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, y, z)))
        total = np.zeros(np.broadcast_shapes(args[0].shape, np.shape(n)))
        for t in terms:
            w = t.weight(n, m)
            if t.kind == "abspow":
                total = total + w * _abspow(args[t.idx[0]], t.power)
            elif t.kind == "square":
                total = total + w * args[t.idx[0]] ** 2
            else:
                total = total + w * args[t.idx[0]] * args[t.idx[1]]
        return total

    def g(n, x, y, z):
        args = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, y, z)))
        shape = np.broadcast_shapes(args[0].shape, np.shape(n))
        out = [np.zeros(shape), np.zeros(shape), np.zeros(shape)]
        for t in terms:
            w = t.weight(n, m)
            i = t.idx[0]
            if t.kind == "abspow":
                out[i] = out[i] + w * _abspow_prime(args[i], t.power)
            elif t.kind == "square":
                out[i] = out[i] + 2.0 * w * args[i]
            else:
                j = t.idx[1]
                out[i] = out[i] + w * args[j]
                out[j] = out[j] + w * args[i]
        return tuple(out)

    autonomous = all(t.modulation == "none" and t.residue is None for t in terms)
    # every grammar term is invariant under (x, y, z) -> -(x, y, z)
    return PotentialSpec(
        m,
        f,
        g,
        autonomous=autonomous,
        even=True,
        name=str(definition.get("name", "table")),
        definition=dict(definition),
    )


def zero_potential(m: int) -> PotentialSpec:
    return table_potential({"period": m, "terms": [], "name": "zero"})


# ---------------------------------------------------------------------------
# hypothesis checks


@dataclass(frozen=True)
class Violation:
    n: int
    point: tuple[float, float, float]
    lhs: float
    rhs: float


@dataclass(frozen=True)
class HypothesisReport:
    hypothesis: str
    constants: dict
    sample_count: int
    violations: tuple[Violation, ...]
    note: str = ""

    @property
    def verdict(self) -> str:
        return "fail" if self.violations else "pass"

    @property
    def passed(self) -> bool:
        return not self.violations


@dataclass(frozen=True)
class Sampling:
    """Sample grids for the hypothesis checks (all counts are per residue class)."""

    d1_points: int = 64
    d2_grid: int = 9  # points per axis of the cube grid clipped to the ball
    d2_random: int = 256
    d3_points: int = 512
    norm_range: tuple[float, float] = (1e-3, 1e3)
    seed: int = 0


def _sides(f: PotentialSpec, hyp: str, n, pts, constants) -> tuple[np.ndarray, np.ndarray]:
    """Left/right sides of a hypothesis inequality (lhs <= rhs must hold, except D2 flips)."""
    x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
    m = f.period
    if hyp == "D1":
        return f.eval(n + m, x, y, z), f.eval(n, x, y, z)
    fv = f.eval(n, x, y, z)
    beta, d1, d2, b = constants["beta"], constants["d1"], constants["d2"], constants["b"]
    pow_sum = np.abs(x) ** beta + np.abs(y) ** beta + np.abs(z) ** beta
    sq_sum = x * x + y * y + z * z
    if hyp == "D2":
        return fv, -b * lambda_min(m) * sq_sum
    if hyp == "D3":
        return fv, -d1 * pow_sum + d2 * sq_sum
    if hyp == "D4":
        return fv, -d1 * pow_sum
    raise ValueError(f"unknown hypothesis {hyp!r}")


def _violated(hyp: str, lhs, rhs) -> np.ndarray:
    if hyp == "D1":
        return np.abs(lhs - rhs) > 1e-12 * (1.0 + np.abs(rhs))
    tol = 1e-12 * (1.0 + np.abs(lhs) + np.abs(rhs))
    if hyp == "D2":
        return lhs < rhs - tol
    return lhs > rhs + tol


def replay(f: PotentialSpec, report: HypothesisReport, v: Violation) -> tuple[float, float]:
    """Re-evaluate a stored witness; returns (lhs, rhs)."""
    lhs, rhs = _sides(f, report.hypothesis, v.n, np.array([v.point]), report.constants)
    return float(lhs[0]), float(rhs[0])


def _random_directions(rng, k):
    d = rng.standard_normal((k, 3))
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def _samples(hyp: str, sampling: Sampling, delta: float, rng) -> np.ndarray:
    if hyp == "D1":
        return rng.uniform(-10.0, 10.0, size=(sampling.d1_points, 3))
    if hyp == "D2":
        r = math.sqrt(delta)
        axis = np.linspace(-r, r, sampling.d2_grid)
        cube = np.stack(np.meshgrid(axis, axis, axis, indexing="ij"), axis=-1).reshape(-1, 3)
        cube = cube[np.sum(cube**2, axis=1) <= delta]
        radii = r * rng.uniform(0.0, 1.0, sampling.d2_random) ** (1.0 / 3.0)
        ball = _random_directions(rng, sampling.d2_random) * radii[:, None]
        # sphere of radius sqrt(delta) itself, where the bound is tightest
        shell = _random_directions(rng, sampling.d2_random) * r
        return np.vstack([cube, ball, shell])
    lo, hi = sampling.norm_range
    radii = np.exp(rng.uniform(math.log(lo), math.log(hi), sampling.d3_points))
    pts = _random_directions(rng, sampling.d3_points) * radii[:, None]
    # axis-aligned rays expose single-argument growth
    ax = np.geomspace(lo, hi, 13)
    rays = [s * ax[:, None] * e[None, :] for e in np.eye(3) for s in (1.0, -1.0)]
    return np.vstack([pts, *rays])


def check_hypotheses(
    f: PotentialSpec,
    constants: Mapping[str, float],
    sampling: Sampling | None = None,
    which: Sequence[str] = ("D1", "D2", "D3", "D4"),
) -> list[HypothesisReport]:
    """Sampled certification of (D1)-(D4) for ``f``.

    ``constants`` needs ``b``, ``delta``, ``d1``, ``d2`` and ``beta``.  Each
    residue class n = 1..M gets its own sample, drawn from a stream keyed
    by (seed, hypothesis, n), so reports are reproducible.
    """
    sampling = sampling or Sampling()
    consts = {k: float(constants[k]) for k in ("b", "delta", "d1", "d2", "beta")}
    if consts["beta"] <= 2:
        raise ValueError("beta: must be > 2")
    for k in ("b", "delta", "d1", "d2"):
        if consts[k] <= 0:
            raise ValueError(f"{k}: must be > 0")
    reports = []
    for h_i, hyp in enumerate(which):
        violations = []
        count = 0
        for n in range(1, f.period + 1):
            rng = np.random.default_rng([sampling.seed, h_i, n])
            pts = _samples(hyp, sampling, consts["delta"], rng)
            lhs, rhs = _sides(f, hyp, n, pts, consts)
            bad = np.flatnonzero(_violated(hyp, lhs, rhs))
            count += len(pts)
            violations.extend(
                Violation(n, tuple(float(c) for c in pts[i]), float(lhs[i]), float(rhs[i])) for i in bad
            )
        reports.append(HypothesisReport(hyp, consts, count, tuple(violations)))
    return reports
