"""The functional I on E_M, its derivatives, the upper bound, and system residuals.

With a = (b+1)/γ_min and p = n0 - 1, q = n0 (1-based difference indices):

    I(u) = a Σ_s (Δu_s)² + (2a + 1) Δu_p Δu_q + F(n0, u_{n0-1}, u_{n0}, u_{n0+1}) - G(u)
    G(u) = b λ_min Σ_{s ∉ {n0-1, n0, n0+1}} |u_s|^β

Batch helpers take arrays of shape (..., M) and are what the solver uses;
the public single-point functions wrap them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from hamlink.core import PeriodicSequence, SequenceLike, as_array, norm2, second_difference
from hamlink.potential import PotentialSpec, check_hypotheses, example31_potential
from hamlink.spectral import SpectralData, decompose

HESSIAN_STEP = 1e-5


@dataclass(frozen=True, eq=False)
class FunctionalContext:
    m: int
    n0: int
    b: float
    beta: float
    d1: float
    d2: float
    delta: float
    potential: PotentialSpec
    spectral: SpectralData = field(repr=False)

    @property
    def lambda_min(self) -> float:
        return self.spectral.lambda_min

    @property
    def lambda_max(self) -> float:
        return self.spectral.lambda_max

    @property
    def gamma_min(self) -> float:
        # verified against the numeric eigensolve in decompose(); the block
        # structure of L makes it exactly 1
        return 1.0

    @property
    def coeff_a(self) -> float:
        return (self.b + 1.0) / self.gamma_min

    @property
    def cross_coeff(self) -> float:
        return 2.0 * (self.b + 1.0) / self.gamma_min + 1.0

    @property
    def c1(self) -> float:
        return self.m ** (1.0 / self.beta - 0.5)

    @property
    def rho(self) -> float:
        """Radius of the small sphere in Y: min(√δ, δ)."""
        return min(math.sqrt(self.delta), self.delta)

    @property
    def sigma(self) -> float:
        return 0.5 * self.lambda_min * self.rho**2

    @cached_property
    def g_mask(self) -> np.ndarray:
        """0-based mask of the indices summed in G."""
        mask = np.ones(self.m, dtype=bool)
        mask[self.n0 - 2 : self.n0 + 1] = False
        mask.setflags(write=False)
        return mask


def make_context(
    m: int,
    b: float,
    beta: float,
    potential: PotentialSpec | None = None,
    *,
    n0: int = 3,
    d1: float | None = None,
    d2: float = 0.01,
    delta: float = 0.25,
) -> FunctionalContext:
    """Validate the scalars and assemble a context.

    ``potential`` defaults to the power-law example (``example31_potential``) with the same ``b`` and ``beta``;
    ``d1`` defaults to b·λ_min, the sharp constant for that potential.
    """
    if int(m) != m or m < 5:
        raise ValueError("m: must be >= 5")
    if int(n0) != n0 or not 3 <= n0 <= m - 2:
        raise ValueError(f"n0: must satisfy 3 <= n0 <= m-2 (m={m})")
    if not b > 0:
        raise ValueError("b: must be > 0")
    if not beta > 2:
        raise ValueError("beta: must be > 2")
    if not 0 < delta <= 1:
        raise ValueError("delta: must be in (0, 1]")
    if not d2 > 0:
        raise ValueError("d2: must be > 0")
    spectral = decompose(int(m), int(n0))
    if d1 is None:
        d1 = b * spectral.lambda_min
    if not d1 > 0:
        raise ValueError("d1: must be > 0")
    if potential is None:
        potential = example31_potential(b, beta, m)
    if potential.period != m:
        raise ValueError(f"potential period {potential.period} does not match m={m}")
    return FunctionalContext(int(m), int(n0), float(b), float(beta), float(d1), float(d2), float(delta), potential, spectral)


# ---------------------------------------------------------------------------
# batch kernels


# np.roll is general but slow for the tiny arrays the solver hammers on
def _next(u: np.ndarray) -> np.ndarray:
    return np.concatenate((u[..., 1:], u[..., :1]), axis=-1)


def _prev(u: np.ndarray) -> np.ndarray:
    return np.concatenate((u[..., -1:], u[..., :-1]), axis=-1)


def _diffs(u: np.ndarray) -> np.ndarray:
    return _next(u) - u


def g_batch(u: np.ndarray, ctx: FunctionalContext) -> np.ndarray:
    return ctx.b * ctx.lambda_min * np.sum(np.abs(u[..., ctx.g_mask]) ** ctx.beta, axis=-1)


def i_batch(u: np.ndarray, ctx: FunctionalContext) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    d = _diffs(u)
    k = ctx.n0 - 1
    quad = ctx.coeff_a * np.sum(d * d, axis=-1) + ctx.cross_coeff * d[..., k - 1] * d[..., k]
    f = ctx.potential.eval(ctx.n0, u[..., k - 1], u[..., k], u[..., k + 1])
    return quad + f - g_batch(u, ctx)


def grad_batch(u: np.ndarray, ctx: FunctionalContext) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    nxt = _next(u)
    d = nxt - u
    k = ctx.n0 - 1  # 0-based position of u_{n0}
    g = -2.0 * ctx.coeff_a * (nxt - 2.0 * u + _prev(u))
    c = ctx.cross_coeff
    dp, dq = d[..., k - 1], d[..., k]
    g[..., k - 1] -= c * dq
    g[..., k] += c * (dq - dp)
    g[..., k + 1] += c * dp
    fx, fy, fz = ctx.potential.grad(ctx.n0, u[..., k - 1], u[..., k], u[..., k + 1])
    g[..., k - 1] += fx
    g[..., k] += fy
    g[..., k + 1] += fz
    mask = ctx.g_mask
    ug = u[..., mask]
    g[..., mask] -= ctx.b * ctx.lambda_min * ctx.beta * np.abs(ug) ** (ctx.beta - 1.0) * np.sign(ug)
    return g


def _central_hessian(u: np.ndarray, ctx: FunctionalContext, step: float) -> np.ndarray:
    shifts = step * np.eye(u.size)
    gp = grad_batch(u[None, :] + shifts, ctx)
    gm = grad_batch(u[None, :] - shifts, ctx)
    return (gp - gm) / (2.0 * step)


def hessian_array(u: np.ndarray, ctx: FunctionalContext, step: float = HESSIAN_STEP) -> np.ndarray:
    """Central differences of the gradient at ``step`` and ``step/2``, Richardson-combined.

    The combination cancels the O(step) error a plain central difference
    picks up across the kink of |u_s|^β at u_s = 0 (exact for β = 3), and
    leaves O(step²) elsewhere.
    """
    u = np.asarray(u, dtype=float)
    h = 2.0 * _central_hessian(u, ctx, 0.5 * step) - _central_hessian(u, ctx, step)
    return 0.5 * (h + h.T)


# ---------------------------------------------------------------------------
# public single-point operations


def g_value(u: SequenceLike, ctx: FunctionalContext) -> float:
    return float(g_batch(as_array(u, ctx.m), ctx))


def i_value(u: SequenceLike, ctx: FunctionalContext) -> float:
    return float(i_batch(as_array(u, ctx.m), ctx))


def i_gradient(u: SequenceLike, ctx: FunctionalContext) -> PeriodicSequence:
    """Analytic gradient of I (entry n is ∂I/∂u_n)."""
    return PeriodicSequence(grad_batch(as_array(u, ctx.m), ctx))


def hessian_accuracy_flags(u: SequenceLike, ctx: FunctionalContext) -> list[int]:
    """1-based coordinates where the finite-difference curvature of |·|^β is unreliable."""
    if ctx.beta >= 3:
        return []
    x = as_array(u, ctx.m)
    return [int(i) + 1 for i in np.flatnonzero(np.abs(x) < 1e-8)]


def i_hessian(u: SequenceLike, ctx: FunctionalContext) -> np.ndarray:
    """Central finite differences of the analytic gradient, symmetrised.

    See :func:`hessian_accuracy_flags` for the coordinates where this is
    inaccurate (β < 3 near zero).
    """
    return hessian_array(as_array(u, ctx.m), ctx)


def quadratic_part_matrix(ctx: FunctionalContext) -> np.ndarray:
    """Symmetric Q with uᵀQu = a·Σ(Δu)² + (2a+1)·Δu_{n0-1}Δu_{n0}."""
    m, k = ctx.m, ctx.n0 - 1
    diff = np.roll(np.eye(m), -1, axis=0) - np.eye(m)  # rows give Δu_s
    cross = np.outer(diff[k - 1], diff[k])
    return ctx.coeff_a * ctx.spectral.a_matrix + 0.5 * ctx.cross_coeff * (cross + cross.T)


def lemma21_bound(u: SequenceLike, ctx: FunctionalContext) -> float:
    r = norm2(as_array(u, ctx.m))
    return float(lemma21_bound_radial(r, ctx))


def lemma21_bound_radial(r, ctx: FunctionalContext):
    """Upper bound for I as a function of ‖u‖ alone."""
    r = np.asarray(r, dtype=float)
    quad = (ctx.cross_coeff + ctx.d2) * ctx.lambda_max * r**2
    return quad - min(ctx.d1, ctx.b * ctx.lambda_min) * ctx.c1**ctx.beta * r**ctx.beta


@dataclass(frozen=True, eq=False)
class CoercivityReport:
    radii: np.ndarray
    directions: np.ndarray  # (k, M) unit vectors
    values: np.ndarray  # (k, len(radii))
    bounds: np.ndarray  # (len(radii),) -- the bound depends only on ‖u‖
    bound_asserted: bool
    bound_ok: bool | None
    decay_ok: bool

    @property
    def empirical_sup(self) -> float:
        return float(self.values.max())

    @property
    def worst_bound_gap(self) -> float:
        """max over samples of I(u) - bound(u); <= 0 means the bound held."""
        return float(np.max(self.values - self.bounds[None, :]))


def coercivity_probe(
    ctx: FunctionalContext,
    directions: int = 100,
    radii=None,
    *,
    seed: int = 0,
    assert_bound: bool | None = None,
) -> CoercivityReport:
    """Evaluate I along random rays and compare against the radial upper bound.

    The bound comparison counts as an assertion only when the potential has
    the (D4) shape F <= -d1 Σ|·|^β; by default that is decided by a sampled
    (D4) check with the context's constants.
    """
    radii = np.geomspace(1.0, 1e3, 13) if radii is None else np.asarray(radii, dtype=float)
    if np.any(np.diff(radii) <= 0):
        raise ValueError("radii must be strictly increasing")
    rng = np.random.default_rng([seed, 0xC0E])
    dirs = rng.standard_normal((directions, ctx.m))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    pts = dirs[:, None, :] * radii[None, :, None]
    vals = i_batch(pts, ctx)
    bounds = lemma21_bound_radial(radii, ctx)
    if assert_bound is None:
        consts = dict(b=ctx.b, delta=ctx.delta, d1=ctx.d1, d2=ctx.d2, beta=ctx.beta)
        assert_bound = check_hypotheses(ctx.potential, consts, which=("D4",))[0].passed
    tol = 1e-9 * (1.0 + np.abs(vals))
    bound_ok = bool(np.all(vals <= bounds[None, :] + tol)) if assert_bound else None
    decay_ok = bool(np.all(vals[:, -1] < vals[:, 0]))
    return CoercivityReport(radii, dirs, vals, bounds, bool(assert_bound), bound_ok, decay_ok)


# ---------------------------------------------------------------------------
# residual of the difference system


@dataclass(frozen=True, eq=False)
class ResidualReport:
    per_index: np.ndarray  # entry n-1 holds r_n
    n0: int
    convention: str

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.per_index)))

    @property
    def at_n0(self) -> float:
        return float(self.per_index[self.n0 - 1])


def system_residual(
    u: SequenceLike, f: PotentialSpec, convention: str = "pointwise", n0: int = 3
) -> ResidualReport:
    """Residual r_n of Δ²u_{n-1} + ∇_{u_n}F(n, u_{n-1}, u_n, u_{n+1}) for n = 1..M.

    ``pointwise`` differentiates F(n, ·) in its middle argument only;
    ``summed-action`` also adds ∂_z F(n-1, ·) and ∂_x F(n+1, ·), the terms in
    which u_n appears as a neighbour.
    """
    if convention not in ("pointwise", "summed-action"):
        raise ValueError(f"unknown convention {convention!r}")
    x = as_array(u, f.period)
    n = np.arange(1, x.size + 1)
    prev, nxt = np.roll(x, 1), np.roll(x, -1)
    r = second_difference(x).values.copy()
    _, fy, _ = f.grad(n, prev, x, nxt)
    r += fy
    if convention == "summed-action":
        # triple at index n-1 is (u_{n-2}, u_{n-1}, u_n); at n+1 it is (u_n, u_{n+1}, u_{n+2})
        _, _, fz = f.grad(n - 1, np.roll(x, 2), prev, x)
        fx, _, _ = f.grad(n + 1, x, nxt, np.roll(x, -2))
        r += fz + fx
    return ResidualReport(r, n0, convention)
