"""Critical points of I: multistart ascent, deflated Newton, orbit grouping,
linking-geometry sampling and the two-solution certificate.

Random streams are keyed by (seed, stream tag, index), so adding restarts
never changes the starting points of earlier ones.  Independent runs go
through a thread pool and are reduced in index order, which keeps results
identical for any worker count.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from hamlink.core import PeriodicSequence
from hamlink.functional import (
    FunctionalContext,
    ResidualReport,
    grad_batch,
    hessian_accuracy_flags,
    hessian_array,
    i_batch,
    system_residual,
)
from hamlink.potential import HypothesisReport, PotentialSpec, Sampling, check_hypotheses
from hamlink.spectral import jacobi_eigh

log = logging.getLogger(__name__)

# stream tags
_RESTART, _Y_SEED, _Z_SEED, _E_DIR, _LINK = 1, 2, 3, 4, 5

NULL_EIG_TOL = 1e-7
CONSTANT_TOL = 1e-6
BLOWUP_NORM = 1e8


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    restarts: int = 64
    seed: int = 42
    grad_tol: float = 1e-8
    max_iters: int = 500
    merge_tol: float = 1e-4
    init_radius: float | None = None  # None -> 2·rho
    shrink: float = 0.5
    sufficient_increase: float = 1e-4
    y_seeds: int = 8
    z_seeds: int = 8
    workers: int | None = None  # None -> HAMLINK_THREADS or cpu count

    def __post_init__(self):
        if self.restarts < 2:
            raise ValueError("restarts: must be >= 2")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed: must be a 64-bit unsigned integer")
        for name in ("grad_tol", "merge_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name}: must be > 0")
        if self.max_iters < 1:
            raise ValueError("max_iters: must be >= 1")
        if self.init_radius is not None and not self.init_radius > 0:
            raise ValueError("init_radius: must be > 0")
        if not 0 < self.shrink < 1 or not 0 < self.sufficient_increase < 1:
            raise ValueError("line search parameters must lie in (0, 1)")

    def radius(self, ctx: FunctionalContext) -> float:
        return self.init_radius if self.init_radius is not None else 2.0 * ctx.rho

    def n_workers(self) -> int:
        if self.workers is not None:
            return max(1, int(self.workers))
        env = os.environ.get("HAMLINK_THREADS")
        if env:
            try:
                return max(1, int(env))
            except ValueError:
                log.warning("ignoring non-integer HAMLINK_THREADS=%r", env)
        return os.cpu_count() or 1


def _rng(seed: int, tag: int, index: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(tag, index)))


def _ordered_map(fn: Callable, items: Sequence, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _random_unit(rng, basis: np.ndarray) -> np.ndarray:
    c = rng.standard_normal(basis.shape[0])
    v = c @ basis
    return v / np.linalg.norm(v)


def linking_direction(ctx: FunctionalContext, seed: int) -> np.ndarray:
    """The unit vector e ∈ Y used for the ±ρe starts and the cylinders Q, Q₁."""
    return _random_unit(_rng(seed, _E_DIR), ctx.spectral.basis_y)


# ---------------------------------------------------------------------------
# Morse index


@dataclass(frozen=True)
class MorseInfo:
    index: int
    near_null: int
    caveat: bool = False


def morse_of_matrix(h: np.ndarray, tol: float = NULL_EIG_TOL) -> MorseInfo:
    w, _ = jacobi_eigh(h)
    return MorseInfo(int(np.sum(w < -tol)), int(np.sum(np.abs(w) <= tol)))


def morse_info(u, ctx: FunctionalContext) -> MorseInfo:
    x = np.asarray(u, dtype=float)
    info = morse_of_matrix(hessian_array(x, ctx))
    return replace(info, caveat=bool(hessian_accuracy_flags(x, ctx)))


def morse_index(u, ctx: FunctionalContext) -> int:
    """Number of Hessian eigenvalues below -1e-7 (see :func:`morse_info` for the rest)."""
    return morse_info(u, ctx).index


# ---------------------------------------------------------------------------
# records


@dataclass(frozen=True, eq=False)
class CriticalPointRecord:
    point: PeriodicSequence
    value: float
    grad_norm: float
    morse: MorseInfo
    residual: ResidualReport
    classification: str
    orbit_id: int = -1
    source: str = ""

    @property
    def morse_index(self) -> int:
        return self.morse.index


def classify(x: np.ndarray, tol: float = CONSTANT_TOL) -> str:
    if np.linalg.norm(x) <= tol:
        return "trivial"
    if np.max(np.abs(x - x.mean())) <= tol:
        return "constant-nonzero"
    return "nonconstant"


def make_record(x: np.ndarray, ctx: FunctionalContext, source: str = "") -> CriticalPointRecord:
    x = np.asarray(x, dtype=float)
    return CriticalPointRecord(
        point=PeriodicSequence(x),
        value=float(i_batch(x, ctx)),
        grad_norm=float(np.linalg.norm(grad_batch(x, ctx))),
        morse=morse_info(x, ctx),
        residual=system_residual(x, ctx.potential, "pointwise", ctx.n0),
        classification=classify(x),
        source=source,
    )


# ---------------------------------------------------------------------------
# ascent


@dataclass(frozen=True, eq=False)
class AscentRun:
    start: np.ndarray
    x: np.ndarray
    value: float
    grad_norm: float
    converged: bool
    diverged: bool
    iterations: int
    history: np.ndarray  # I at every accepted ascent iterate
    label: str


def _ascent(x0: np.ndarray, ctx: FunctionalContext, cfg: SolverConfig, label: str) -> AscentRun:
    x = np.array(x0, dtype=float)
    f = float(i_batch(x, ctx))
    g = grad_batch(x, ctx)
    history = [f]
    step = 1.0
    diverged = False
    it = 0
    noise = lambda v: 64.0 * np.finfo(float).eps * (1.0 + abs(v))  # noqa: E731
    for it in range(1, cfg.max_iters + 1):
        gn = float(np.linalg.norm(g))
        if gn <= cfg.grad_tol:
            break
        if not np.all(np.isfinite(x)) or np.linalg.norm(x) > BLOWUP_NORM:
            diverged = True
            break
        h = hessian_array(x, ctx)
        newton = False
        try:
            chol = np.linalg.cholesky(-h)
            d = np.linalg.solve(chol.T, np.linalg.solve(chol, g))
            newton = True
            t = 1.0
        except np.linalg.LinAlgError:
            d = g
            t = min(2.0 * step, max(1.0, np.linalg.norm(x)) / gn)
        slope = float(g @ d)
        accepted = False
        while t * np.linalg.norm(d) > 1e-14 * (1.0 + np.linalg.norm(x)):
            xn = x + t * d
            fn = float(i_batch(xn, ctx))
            if fn >= f + cfg.sufficient_increase * t * slope:
                accepted = True
                break
            if newton and t == 1.0 and 0.5 * slope <= noise(f) and fn >= f:
                # predicted gain is below rounding: take the Newton step if I did not drop
                accepted = True
                break
            t *= cfg.shrink
        if not accepted:
            break
        if not newton:
            step = t
        x, f = xn, fn
        g = grad_batch(x, ctx)
        history.append(f)
    gn = float(np.linalg.norm(g))
    if cfg.grad_tol < gn <= math.sqrt(cfg.grad_tol) * (1.0 + abs(f)) and not diverged:
        # close to a critical point but stalled by rounding in the line search
        x, g = _newton_polish(x, ctx, cfg.grad_tol)
        f = float(i_batch(x, ctx))
        gn = float(np.linalg.norm(g))
    return AscentRun(
        start=np.asarray(x0, dtype=float),
        x=x,
        value=f,
        grad_norm=gn,
        converged=gn <= cfg.grad_tol and not diverged,
        diverged=diverged,
        iterations=it,
        history=np.array(history),
        label=label,
    )


def _newton_polish(x, ctx, tol: float, steps: int = 8):
    """Plain Newton on ∇I = 0 while it keeps shrinking the gradient (rounding-level finish)."""
    g = grad_batch(x, ctx)
    for _ in range(steps):
        if np.linalg.norm(g) <= tol:
            break
        try:
            xn = x - np.linalg.solve(hessian_array(x, ctx), g)
        except np.linalg.LinAlgError:
            break
        gnew = grad_batch(xn, ctx)
        if not np.linalg.norm(gnew) < np.linalg.norm(g):
            break
        x, g = xn, gnew
    return x, g


def ascent_starts(ctx: FunctionalContext, cfg: SolverConfig) -> list[tuple[str, np.ndarray]]:
    """Deterministic starts {0, ρe, -ρe} followed by one uniform draw per restart."""
    e = linking_direction(ctx, cfg.seed)
    starts = [("zero", np.zeros(ctx.m)), ("+rho*e", ctx.rho * e), ("-rho*e", -ctx.rho * e)]
    r = cfg.radius(ctx)
    for i in range(cfg.restarts):
        rng = _rng(cfg.seed, _RESTART, i)
        d = rng.standard_normal(ctx.m)
        d /= np.linalg.norm(d)
        starts.append((f"restart-{i}", d * r * rng.uniform() ** (1.0 / ctx.m)))
    return starts


def ascent_runs(ctx: FunctionalContext, cfg: SolverConfig) -> list[AscentRun]:
    starts = ascent_starts(ctx, cfg)
    return _ordered_map(lambda s: _ascent(s[1], ctx, cfg, s[0]), starts, cfg.n_workers())


def maximize_I(ctx: FunctionalContext, cfg: SolverConfig | None = None, runs: list[AscentRun] | None = None) -> CriticalPointRecord:
    """Empirical global maximiser of I (its value is the empirical c₀).

    Raises:
        SolverError: if no ascent run converged; names the best gradient norm reached.
    """
    cfg = cfg or SolverConfig()
    runs = ascent_runs(ctx, cfg) if runs is None else runs
    good = [r for r in runs if r.converged]
    if not good:
        finite = [r.grad_norm for r in runs if np.isfinite(r.grad_norm) and not r.diverged]
        best = min(finite) if finite else float("nan")
        n_div = sum(r.diverged for r in runs)
        raise SolverError(
            f"no ascent run converged within {cfg.max_iters} iterations "
            f"(best grad_norm {best:.3e}, {n_div}/{len(runs)} runs diverged)"
        )
    best = max(good, key=lambda r: (r.value, tuple(-r.x)))
    escaped = [r for r in runs if not r.converged and r.value > best.value + 1e-9 * (1.0 + abs(best.value))]
    if escaped:
        top = max(escaped, key=lambda r: r.value)
        raise SolverError(
            f"maximum not attained: {len(escaped)} unconverged run(s) climbed past the best converged value "
            f"{best.value:.6g} (reached I = {top.value:.3e} at |u| = {np.linalg.norm(top.x):.3e}); "
            "I may be unbounded above"
        )
    return make_record(best.x, ctx, source=best.label)


# ---------------------------------------------------------------------------
# deflated Newton


def _solve_damped(h: np.ndarray, rhs: np.ndarray, cond_max: float = 1e12) -> np.ndarray:
    mu = 0.0
    eye = np.eye(h.shape[0])
    while True:
        mat = h + mu * eye
        if np.linalg.cond(mat) <= cond_max:
            return np.linalg.solve(mat, rhs)
        mu = 1e-8 if mu == 0.0 else 2.0 * mu
        if mu > 1e8:
            raise np.linalg.LinAlgError("damping failed to regularise the Newton system")


def _deflated_newton(
    x0: np.ndarray,
    ctx: FunctionalContext,
    cfg: SolverConfig,
    roots: Sequence[np.ndarray],
    power: float = 2.0,
    shift: float = 1.0,
) -> np.ndarray | None:
    """Damped Newton on ∇I = 0 with the known ``roots`` deflated out.

    The deflated residual is m(x)∇I(x), m(x) = Π(‖x - r‖^{-p} + shift); its
    Newton step is the undeflated step scaled by 1 / (1 - ∇log m · d).
    """
    x = np.array(x0, dtype=float)

    def merit(v, grad):
        mval = 1.0
        for r in roots:
            dist = np.linalg.norm(v - r)
            if dist == 0.0:
                return math.inf
            mval *= dist**-power + shift
        return mval * np.linalg.norm(grad)

    g = grad_batch(x, ctx)
    phi = merit(x, g)
    best, since_best = phi, 0
    for _ in range(cfg.max_iters):
        if np.linalg.norm(g) <= cfg.grad_tol:
            return x
        if since_best >= 25:
            return None  # stalled at a nonzero local minimum of the merit
        if not np.all(np.isfinite(x)) or np.linalg.norm(x) > BLOWUP_NORM:
            return None
        try:
            d = -_solve_damped(hessian_array(x, ctx), g)
        except np.linalg.LinAlgError:
            return None
        dlog = np.zeros_like(x)
        for r in roots:
            diff = x - r
            dist = np.linalg.norm(diff)
            term = dist**-power
            dlog += -power * dist ** (-power - 2.0) * diff / (term + shift)
        denom = 1.0 - float(dlog @ d)
        if abs(denom) > 1e-12:
            d = d / denom
        cap = 2.0 * max(1.0, np.linalg.norm(x))
        dn = np.linalg.norm(d)
        if dn > cap:
            d *= cap / dn
        t = 1.0
        while True:
            xn = x + t * d
            gn = grad_batch(xn, ctx)
            phin = merit(xn, gn)
            if phin < phi or t < 1e-4:
                break
            t *= cfg.shrink
        x, g, phi = xn, gn, phin
        if phi < 0.99 * best:
            best, since_best = phi, 0
        else:
            since_best += 1
    return x if np.linalg.norm(g) <= cfg.grad_tol else None


def newton_seeds(ctx: FunctionalContext, cfg: SolverConfig, runs: Iterable[AscentRun]) -> list[tuple[str, np.ndarray]]:
    seeds = [(f"ascent:{r.label}", r.x) for r in runs if not r.diverged and np.all(np.isfinite(r.x))]
    for i in range(cfg.y_seeds):
        e = _random_unit(_rng(cfg.seed, _Y_SEED, i), ctx.spectral.basis_y)
        seeds.append((f"y-seed-{i}:+", ctx.rho * e))
        seeds.append((f"y-seed-{i}:-", -ctx.rho * e))
    for i in range(cfg.z_seeds):
        rng = _rng(cfg.seed, _Z_SEED, i)
        z = _random_unit(rng, ctx.spectral.basis_z) * cfg.radius(ctx) * 4.0 * rng.uniform()
        seeds.append((f"z-seed-{i}", z))
    seeds.append(("zero", np.zeros(ctx.m)))
    return seeds


def find_critical_points(ctx: FunctionalContext, cfg: SolverConfig | None = None, runs: list[AscentRun] | None = None) -> list[CriticalPointRecord]:
    """Multistart deflated Newton on ∇I = 0.

    Seeds are every ascent endpoint, ±ρe for random e ∈ Y, random points of
    Z and the origin.  Each seed deflates only the origin, so seeds are
    independent of one another.  Points closer than ``merge_tol`` are merged
    (first seed wins), orbits are grouped, and the list is sorted by
    descending I.
    """
    cfg = cfg or SolverConfig()
    runs = ascent_runs(ctx, cfg) if runs is None else runs
    seeds = newton_seeds(ctx, cfg, runs)
    origin = np.zeros(ctx.m)
    trivial_ok = np.linalg.norm(grad_batch(origin, ctx)) <= cfg.grad_tol

    def solve(seed):
        label, x0 = seed
        if label == "zero":
            return origin if trivial_ok else _deflated_newton(x0, ctx, cfg, [])
        if np.linalg.norm(x0) == 0.0:
            return None
        x = _deflated_newton(x0, ctx, cfg, [origin] if trivial_ok else [])
        return None if x is None else _newton_polish(x, ctx, 0.0, steps=3)[0]

    found = _ordered_map(solve, seeds, cfg.n_workers())
    # the origin goes first so near-origin endpoints merge into it
    order = sorted(range(len(seeds)), key=lambda i: seeds[i][0] != "zero")
    points: list[tuple[str, np.ndarray]] = []
    for label, x in ((seeds[i][0], found[i]) for i in order):
        if x is None:
            continue
        if any(np.linalg.norm(x - p) < cfg.merge_tol for _, p in points):
            continue
        points.append((label, x))
    records = _ordered_map(lambda p: make_record(p[1], ctx, p[0]), points, cfg.n_workers())
    records = [r for r in records if r.grad_norm <= cfg.grad_tol]
    if not records:
        log.warning("find_critical_points: no seed converged")
    records.sort(key=lambda r: (-r.value, tuple(r.point.values)))
    return dedupe_orbits(records, ctx.potential, cfg.merge_tol)


# ---------------------------------------------------------------------------
# orbits


def _candidate_images(x: np.ndarray, shifts: bool, negate: bool) -> list[np.ndarray]:
    ks = range(x.size) if shifts else [0]
    out = []
    for k in ks:
        s = np.roll(x, -k)
        out.append(s)
        if negate:
            out.append(-s)
    return out


def dedupe_orbits(
    records: Sequence[CriticalPointRecord],
    potential: PotentialSpec | None = None,
    merge_tol: float = 1e-4,
    residual_tol: float = 1e-6,
    *,
    autonomous: bool | None = None,
    even: bool | None = None,
) -> list[CriticalPointRecord]:
    """Assign orbit ids under negation and (for system solutions) cyclic shifts.

    Negation is a symmetry of I itself when F is even, so it applies to
    every record.  I is not shift invariant, so shifts only identify records
    whose pointwise system residual is below ``residual_tol`` everywhere.
    Orbit ids are numbered in order of first appearance.
    """
    autonomous = potential.autonomous if autonomous is None else autonomous
    even = potential.even if even is None else even
    n = len(records)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    pts = [r.point.values for r in records]
    certified = [r.residual.max_abs <= residual_tol for r in records]
    for i in range(n):
        for j in range(i + 1, n):
            use_shift = autonomous and certified[i] and certified[j]
            if any(np.linalg.norm(pts[j] - img) < merge_tol for img in _candidate_images(pts[i], use_shift, even)):
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
    ids: dict[int, int] = {}
    out = []
    for i, r in enumerate(records):
        root = find(i)
        ids.setdefault(root, len(ids))
        out.append(replace(r, orbit_id=ids[root]))
    return out


def orbit_representatives(records: Sequence[CriticalPointRecord]) -> list[CriticalPointRecord]:
    """Lexicographically smallest member of each orbit, in orbit-id order."""
    reps: dict[int, CriticalPointRecord] = {}
    for r in records:
        cur = reps.get(r.orbit_id)
        if cur is None or tuple(r.point.values) < tuple(cur.point.values):
            reps[r.orbit_id] = r
    return [reps[k] for k in sorted(reps)]


# ---------------------------------------------------------------------------
# linking geometry


@dataclass(frozen=True, eq=False)
class LinkingReport:
    sigma: float
    rho: float
    e_direction: np.ndarray
    a1_values: np.ndarray  # I on sampled points of ∂B_ρ ∩ Y
    a2_values_plus: np.ndarray  # I on ∂Q at the accepted radius (built on +e)
    a2_values_minus: np.ndarray  # same for Q₁ (built on -e)
    r_outer_plus: float | None
    r_outer_minus: float | None
    z_values: np.ndarray  # I on sampled points of Z
    tol: float = 1e-9
    message: str = ""

    @property
    def r_outer(self) -> float | None:
        if self.r_outer_plus is None or self.r_outer_minus is None:
            return None
        return max(self.r_outer_plus, self.r_outer_minus)

    @property
    def a1_min_on_sphere(self) -> float:
        return float(np.min(self.a1_values))

    @property
    def a2_max_on_boundary(self) -> float:
        return float(max(self.a2_values_plus.max(), self.a2_values_minus.max()))

    @property
    def z_max(self) -> float:
        return float(self.z_values.max())

    @property
    def a1_ok(self) -> bool:
        return bool(self.a1_min_on_sphere >= self.sigma - self.tol)

    @property
    def a2_ok(self) -> bool:
        return bool(self.r_outer is not None and self.a2_max_on_boundary <= self.tol)

    @property
    def ok(self) -> bool:
        return self.a1_ok and self.a2_ok


def sigma_for(lambda_min: float, rho: float) -> float:
    return 0.5 * lambda_min * rho**2


def _disk(rng, basis_z, radius, k):
    """k points uniform in the disk {z ∈ Z : ‖z‖ <= radius}."""
    ang = rng.uniform(0.0, 2.0 * np.pi, k)
    rad = radius * np.sqrt(rng.uniform(0.0, 1.0, k))
    return (rad * np.cos(ang))[:, None] * basis_z[0] + (rad * np.sin(ang))[:, None] * basis_z[1]


def cylinder_boundary(ctx: FunctionalContext, e: np.ndarray, radius: float, samples: int, rng) -> np.ndarray:
    """Sample ∂Q for Q = (B̄_R ∩ Z) ⊕ {re : 0 < r < R}: bottom disk, top cap and side."""
    bz = ctx.spectral.basis_z
    k = max(samples // 3, 8)
    bottom = _disk(rng, bz, radius, k)
    top = radius * e + _disk(rng, bz, radius, k)
    ang = rng.uniform(0.0, 2.0 * np.pi, k)
    r = radius * rng.uniform(0.0, 1.0, k)
    side = radius * (np.cos(ang)[:, None] * bz[0] + np.sin(ang)[:, None] * bz[1]) + r[:, None] * e
    # rims and the axis endpoints
    t = np.linspace(0.0, 2.0 * np.pi, 16, endpoint=False)
    ring = radius * (np.cos(t)[:, None] * bz[0] + np.sin(t)[:, None] * bz[1])
    extra = np.vstack([ring, ring + radius * e, np.zeros((1, ctx.m)), radius * e[None, :]])
    return np.vstack([bottom, top, side, extra])


def verify_linking_geometry(ctx: FunctionalContext, cfg: SolverConfig | None = None, samples: int = 1000) -> LinkingReport:
    """Sampled check of the two linking conditions with X₁ = Z, X₂ = Y.

    (A1): I >= σ = ½λ_min ρ² on ∂B_ρ ∩ Y.  (A2): for e and -e, doubling R from
    2ρ until the sampled max of I over ∂Q is <= tol; gives up past 2¹⁶ρ.
    """
    cfg = cfg or SolverConfig()
    if samples < 1000:
        raise ValueError("samples: must be >= 1000")
    rho = ctx.rho
    e = linking_direction(ctx, cfg.seed)
    rng = _rng(cfg.seed, _LINK, 0)
    by = ctx.spectral.basis_y
    c = rng.standard_normal((samples, by.shape[0]))
    sphere = (c @ by) / np.linalg.norm(c, axis=1, keepdims=True) * rho
    sphere = np.vstack([sphere, rho * e, -rho * e])
    a1 = i_batch(sphere, ctx)

    zrng = _rng(cfg.seed, _LINK, 1)
    zr = np.exp(zrng.uniform(np.log(1e-3), np.log(1e3), samples))
    zpts = _random_unit_rows(zrng, ctx.spectral.basis_z, samples) * zr[:, None]
    zvals = i_batch(zpts, ctx)

    out = {}
    msgs = []
    for sign, idx in ((1.0, 2), (-1.0, 3)):
        srng = _rng(cfg.seed, _LINK, idx)
        radius = 2.0 * rho
        vals = None
        found = None
        while radius <= 2.0**16 * rho:
            vals = i_batch(cylinder_boundary(ctx, sign * e, radius, samples, srng), ctx)
            if vals.max() <= 1e-9:
                found = radius
                break
            radius *= 2.0
        if found is None:
            msgs.append(f"{'+e' if sign > 0 else '-e'}: no R <= 2^16*rho with I <= 0 on the sampled boundary")
        out[sign] = (vals, found)
    return LinkingReport(
        sigma=sigma_for(ctx.lambda_min, rho),
        rho=rho,
        e_direction=e,
        a1_values=a1,
        a2_values_plus=out[1.0][0],
        a2_values_minus=out[-1.0][0],
        r_outer_plus=out[1.0][1],
        r_outer_minus=out[-1.0][1],
        z_values=zvals,
        message="; ".join(msgs),
    )


def _random_unit_rows(rng, basis, k):
    c = rng.standard_normal((k, basis.shape[0]))
    v = c @ basis
    return v / np.linalg.norm(v, axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# certificate


@dataclass(frozen=True, eq=False)
class Certificate:
    hypotheses: list[HypothesisReport]
    linking: LinkingReport
    records: list[CriticalPointRecord]
    qualifying: list[CriticalPointRecord]  # one representative per qualifying orbit
    residuals: dict[int, dict[str, ResidualReport]]  # orbit id -> convention -> report
    c0: float | None
    case: str
    failures: list[str] = field(default_factory=list)
    solver_error: str = ""

    @property
    def verdict(self) -> str:
        return "fail" if self.failures else "certified"


THEOREM_HYPOTHESES = ("D1", "D2", "D3")


def two_solution_certificate(
    ctx: FunctionalContext,
    cfg: SolverConfig | None = None,
    sampling: Sampling | None = None,
    *,
    linking_samples: int = 1000,
) -> Certificate:
    """Bundle hypothesis checks, linking geometry and >= 2 positive nonconstant orbits."""
    cfg = cfg or SolverConfig()
    consts = dict(b=ctx.b, delta=ctx.delta, d1=ctx.d1, d2=ctx.d2, beta=ctx.beta)
    hyps = check_hypotheses(ctx.potential, consts, sampling)
    failures = [f"hypotheses:{h.hypothesis}" for h in hyps if h.hypothesis in THEOREM_HYPOTHESES and not h.passed]

    linking = verify_linking_geometry(ctx, cfg, linking_samples)
    if not linking.a1_ok:
        failures.append("linking:A1")
    if not linking.a2_ok:
        failures.append("linking:A2")

    runs = ascent_runs(ctx, cfg)
    solver_error = ""
    c0 = None
    try:
        c0 = maximize_I(ctx, cfg, runs).value
    except SolverError as exc:
        solver_error = str(exc)
        failures.append("solver:maximize")
    records = find_critical_points(ctx, cfg, runs)

    def qualifies(r):
        return r.classification == "nonconstant" and (r.value > 0 or r.value >= linking.sigma - 1e-9)

    qualifying = [r for r in orbit_representatives(records) if qualifies(r)]
    if len(qualifying) < 2:
        failures.append("solutions:fewer-than-two-orbits")
    residuals = {
        r.orbit_id: {
            conv: system_residual(r.point, ctx.potential, conv, ctx.n0) for conv in ("pointwise", "summed-action")
        }
        for r in qualifying
    }
    case = "undetermined"
    if c0 is not None and qualifying:
        below = [r for r in qualifying if r.value < c0 - 1e-9 * (1.0 + abs(c0))]
        case = "c != c0" if below else "c = c0"
    return Certificate(hyps, linking, list(records), qualifying, residuals, c0, case, failures, solver_error)
