"""Command-line driver: ``hamlink <spectra|check|solve|verify|report> --config FILE``.

Exit status: 0 all verdicts pass, 1 a verdict failed, 2 usage or config
error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import datetime as _dt
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import yaml

from hamlink import io
from hamlink.core import format_real
from hamlink.functional import FunctionalContext, grad_batch, i_batch, make_context, system_residual
from hamlink.potential import (
    PotentialDefinitionError,
    PotentialSpec,
    Sampling,
    check_hypotheses,
    example31_potential,
    table_potential,
    zero_potential,
)
from hamlink.solver import SolverConfig, linking_direction, two_solution_certificate
from hamlink.spectral import decompose, jacobi_eigh

log = logging.getLogger("hamlink")

EXIT_OK, EXIT_VERDICT, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3
DRIFT_TOL = 1e-9


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ReportOptions:
    ray_points: int = 201
    ray_max: float = 10.0
    section_points: int = 41
    section_max: float = 6.0


@dataclass(frozen=True)
class RunConfig:
    m: int
    b: float
    beta: float
    potential: Any  # "example31" | "zero" | file path | inline mapping
    n0: int = 3
    delta: float = 0.25
    d1: float | None = None  # None -> b·λ_min
    d2: float = 0.01
    solver: SolverConfig = field(default_factory=SolverConfig)
    sampling: Sampling = field(default_factory=Sampling)
    linking_samples: int = 1000
    report: ReportOptions = field(default_factory=ReportOptions)
    output_dir: str = "hamlink-out"
    base_dir: Path = field(default=Path("."), compare=False, repr=False)

    def load_potential(self) -> PotentialSpec:
        src = self.potential
        if src == "example31":
            return example31_potential(self.b, self.beta, self.m)
        if src == "zero":
            return zero_potential(self.m)
        if isinstance(src, Mapping):
            definition = dict(src)
        else:
            path = Path(src)
            if not path.is_absolute():
                path = self.base_dir / path
            definition = yaml.safe_load(path.read_text(encoding="utf-8"))
        definition.setdefault("period", self.m)
        try:
            spec = table_potential(definition)
        except PotentialDefinitionError as exc:
            raise ConfigError(f"potential: {exc}") from None
        if spec.period != self.m:
            raise ConfigError(f"potential: period {spec.period} does not match m={self.m}")
        return spec

    def context(self) -> FunctionalContext:
        return make_context(
            self.m, self.b, self.beta, self.load_potential(), n0=self.n0, d1=self.d1, d2=self.d2, delta=self.delta
        )

    def echo(self) -> dict:
        ctx_d1 = self.d1 if self.d1 is not None else self.b * 2.0 * (1.0 - math.cos(2.0 * math.pi / self.m))
        return {
            "m": self.m,
            "n0": self.n0,
            "b": format_real(self.b),
            "beta": format_real(self.beta),
            "delta": format_real(self.delta),
            "d1": format_real(ctx_d1),
            "d2": format_real(self.d2),
            "potential": self.potential if isinstance(self.potential, (str, dict)) else str(self.potential),
            "solver": {
                k: (format_real(v) if isinstance(v, float) else v)
                for k, v in dataclasses.asdict(self.solver).items()
                if k != "workers"
            },
            "linking_samples": self.linking_samples,
        }


_TOP_KEYS = {
    "m", "n0", "b", "beta", "delta", "d1", "d2", "potential",
    "solver", "sampling", "linking_samples", "report", "output_dir",
}


def _number(doc, key, kind=float):
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {type(v).__name__}")
    if kind is int:
        if int(v) != v:
            raise ConfigError(f"{key}: expected an integer")
        return int(v)
    return float(v)


def _sub(doc, key, cls, ints=(), prefix=None):
    raw = doc.get(key) or {}
    if not isinstance(raw, Mapping):
        raise ConfigError(f"{key}: expected a mapping")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(raw) - names
    if unknown:
        raise ConfigError(f"{key}.{sorted(unknown)[0]}: unknown key")
    vals = {}
    for k in raw:
        if raw[k] is None:
            vals[k] = None
            continue
        vals[k] = _number(raw, k, int if k in ints else float) if not isinstance(raw[k], (list, tuple)) else tuple(raw[k])
    try:
        return cls(**vals)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}.{exc}") from None


def parse_config(text: str, base_dir: Path | str = ".") -> RunConfig:
    """Parse and fully validate a YAML run configuration."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from None
    if not isinstance(doc, Mapping):
        raise ConfigError("config must be a mapping of keys to values")
    unknown = sorted(set(doc) - _TOP_KEYS)
    if unknown:
        raise ConfigError(f"{unknown[0]}: unknown key")
    for key in ("m", "b", "beta", "potential"):
        if key not in doc:
            raise ConfigError(f"{key}: required")
    m = _number(doc, "m", int)
    if m < 5:
        raise ConfigError("m: must be >= 5")
    n0 = _number(doc, "n0", int) if "n0" in doc else 3
    if not 3 <= n0 <= m - 2:
        raise ConfigError(f"n0: must satisfy 3 <= n0 <= m-2 = {m - 2}")
    b = _number(doc, "b")
    if not b > 0:
        raise ConfigError("b: must be > 0")
    beta = _number(doc, "beta")
    if not beta > 2:
        raise ConfigError("beta: must be > 2")
    delta = _number(doc, "delta") if "delta" in doc else 0.25
    if not 0 < delta <= 1:
        raise ConfigError("delta: must be in (0, 1]")
    d1 = _number(doc, "d1") if doc.get("d1") is not None else None
    if d1 is not None and not d1 > 0:
        raise ConfigError("d1: must be > 0")
    d2 = _number(doc, "d2") if "d2" in doc else 0.01
    if not d2 > 0:
        raise ConfigError("d2: must be > 0")
    potential = doc["potential"]
    if not isinstance(potential, (str, Mapping)):
        raise ConfigError("potential: expected 'example31', 'zero', a file path or an inline definition")
    solver = _sub(doc, "solver", SolverConfig, ints=("restarts", "seed", "max_iters", "y_seeds", "z_seeds", "workers"))
    sampling = _sub(doc, "sampling", Sampling, ints=("d1_points", "d2_grid", "d2_random", "d3_points", "seed"))
    report = _sub(doc, "report", ReportOptions, ints=("ray_points", "section_points"))
    linking_samples = _number(doc, "linking_samples", int) if "linking_samples" in doc else 1000
    if linking_samples < 1000:
        raise ConfigError("linking_samples: must be >= 1000")
    output_dir = doc.get("output_dir", "hamlink-out")
    if not isinstance(output_dir, str):
        raise ConfigError("output_dir: expected a path string")
    return RunConfig(
        m=m, b=b, beta=beta, potential=potential, n0=n0, delta=delta, d1=d1, d2=d2,
        solver=solver, sampling=sampling, linking_samples=linking_samples, report=report,
        output_dir=output_dir, base_dir=Path(base_dir),
    )


# ---------------------------------------------------------------------------
# commands


def _spectral_doc(ctx: FunctionalContext) -> dict:
    sp = ctx.spectral
    return {
        "lambda_min": format_real(sp.lambda_min),
        "lambda_max": format_real(sp.lambda_max),
        "gamma_min": format_real(sp.gamma_min),
        "eigenvalues_A": io.reals(sp.eigs_a),
    }


def _hypotheses(cfg: RunConfig, ctx: FunctionalContext):
    consts = dict(b=ctx.b, delta=ctx.delta, d1=ctx.d1, d2=ctx.d2, beta=ctx.beta)
    return check_hypotheses(ctx.potential, consts, cfg.sampling)


def cmd_spectra(cfg: RunConfig, ctx: FunctionalContext, out: Path) -> int:
    sp = ctx.spectral
    wa, va = jacobi_eigh(sp.a_matrix)
    wl, vl = jacobi_eigh(sp.l_matrix)
    io.write_eigen_csv(out / "spectra_A.csv", wa, va)
    io.write_eigen_csv(out / "spectra_L.csv", wl, vl)
    rows = [[0.0, *v] for v in sp.basis_z] + [[1.0, *v] for v in sp.basis_y]
    io.write_rows_csv(out / "basis_YZ.csv", ["in_Y"] + [f"v{i}" for i in range(1, ctx.m + 1)], rows)
    io.write_json(out / io.RESULTS, {"config": cfg.echo(), "spectral": _spectral_doc(ctx)})
    return EXIT_OK


def cmd_check(cfg: RunConfig, ctx: FunctionalContext, out: Path) -> int:
    reports = _hypotheses(cfg, ctx)
    io.write_json(out / io.RESULTS, {"config": cfg.echo(), "hypotheses": [io.hypothesis_doc(r) for r in reports]})
    for r in reports:
        log.info("%s: %s (%d samples, %d violations)", r.hypothesis, r.verdict, r.sample_count, len(r.violations))
    # (D4) is a stronger sufficient condition; only (D1)-(D3) gate the exit status
    return EXIT_OK if all(r.passed for r in reports if r.hypothesis != "D4") else EXIT_VERDICT


def cmd_solve(cfg: RunConfig, ctx: FunctionalContext, out: Path) -> int:
    cert = two_solution_certificate(ctx, cfg.solver, cfg.sampling, linking_samples=cfg.linking_samples)
    doc = {
        "config": cfg.echo(),
        "spectral": _spectral_doc(ctx),
        "hypotheses": [io.hypothesis_doc(r) for r in cert.hypotheses],
        "solutions": [io.record_doc(r) for r in cert.records],
        "linking": io.linking_doc(cert.linking),
        "certificate": io.certificate_doc(cert),
    }
    io.write_json(out / io.RESULTS, doc)
    io.write_solutions(out, cert.records)
    log.info("certificate: %s%s", cert.verdict, f" ({', '.join(cert.failures)})" if cert.failures else "")
    return EXIT_OK if cert.verdict == "certified" else EXIT_VERDICT


def cmd_verify(cfg: RunConfig, ctx: FunctionalContext, out: Path) -> int:
    points, meta = io.read_solutions(out)
    checks = []
    worst = 0.0
    for i, (u, m) in enumerate(zip(points, meta)):
        x = u.values
        res = system_residual(x, ctx.potential, "pointwise", ctx.n0)
        fresh = {
            "value": float(i_batch(x, ctx)),
            "grad_norm": float(np.linalg.norm(grad_batch(x, ctx))),
            "residual_max_abs": res.max_abs,
            "residual_at_n0": res.at_n0,
        }
        drift = {k: abs(fresh[k] - float(m[k])) for k in fresh}
        worst = max(worst, *drift.values())
        checks.append({"index": i, "drift": {k: format_real(v) for k, v in drift.items()}})
    ok = worst <= DRIFT_TOL
    io.write_json(out / "verify.json", {"records": len(points), "max_drift": format_real(worst), "ok": ok, "checks": checks})
    log.info("verify: %d records, max drift %.3e", len(points), worst)
    return EXIT_OK if ok else EXIT_VERDICT


def cmd_report(cfg: RunConfig, ctx: FunctionalContext, out: Path) -> int:
    opts = cfg.report
    e = linking_direction(ctx, cfg.solver.seed)
    ones = np.ones(ctx.m) / math.sqrt(ctx.m)
    rays = {"+e": e, "-e": -e, "constant": ones}
    top = None
    if (out / io.SOLUTIONS_CSV).exists():
        points, meta = io.read_solutions(out)
        if points:
            top = points[0].values
            rays["best"] = top / np.linalg.norm(top) if np.linalg.norm(top) > 0 else ones
    r = np.linspace(0.0, opts.ray_max, opts.ray_points)
    cols = [r] + [i_batch(r[:, None] * d[None, :], ctx) for d in rays.values()]
    io.write_rows_csv(out / "rays.csv", ["r"] + [f"I_{k}" for k in rays], np.column_stack(cols))
    s = np.linspace(-opts.section_max, opts.section_max, opts.section_points)
    for k, z in enumerate(ctx.spectral.basis_z, start=1):
        ss, tt = np.meshgrid(s, s, indexing="ij")
        pts = ss[..., None] * z + tt[..., None] * e
        vals = i_batch(pts, ctx)
        io.write_rows_csv(
            out / f"section_z{k}_e.csv", [f"z{k}", "e", "I"], np.column_stack([ss.ravel(), tt.ravel(), vals.ravel()])
        )
    lines = [
        f"period M = {ctx.m}, n0 = {ctx.n0}, b = {ctx.b:g}, beta = {ctx.beta:g}, delta = {ctx.delta:g}",
        f"lambda_min = {ctx.lambda_min:.12g}, lambda_max = {ctx.lambda_max:.12g}, gamma_min = {ctx.gamma_min:g}",
        f"rho = {ctx.rho:g}, sigma = {ctx.sigma:.6g}",
        f"e = [{', '.join(f'{v:.6f}' for v in e)}]",
    ]
    if (out / io.SOLUTIONS_CSV).exists():
        lines.append("")
        lines.append(f"{'orbit':>5} {'class':<17} {'I':>14} {'|grad I|':>10} {'morse':>5}  point")
        for u, m in zip(points, meta):
            lines.append(
                f"{m['orbit_id']:>5} {m['classification']:<17} {float(m['value']):>14.8f} "
                f"{float(m['grad_norm']):>10.2e} {m['morse_index']:>5}  [{', '.join(f'{v:.5f}' for v in u.values)}]"
            )
    if (out / io.RESULTS).exists():
        doc = io.read_json(out / io.RESULTS)
        cert = doc.get("certificate")
        if cert:
            lines.append("")
            lines.append(f"certificate: {cert['verdict']}  case: {cert['case']}  failures: {cert['failures'] or 'none'}")
    text = "\n".join(lines) + "\n"
    (out / "summary.txt").write_text(text, encoding="utf-8", newline="\n")
    log.info("\n%s", text)
    return EXIT_OK


COMMANDS = {"spectra": cmd_spectra, "check": cmd_check, "solve": cmd_solve, "verify": cmd_verify, "report": cmd_report}


def execute(command: str, cfg: RunConfig, out: Path | None = None) -> int:
    out = Path(out or cfg.output_dir)
    try:
        ctx = cfg.context()
    except (ValueError, ConfigError) as exc:
        log.error("config: %s", exc)
        return EXIT_USAGE
    except OSError as exc:
        log.error("I/O: %s", exc)
        return EXIT_IO
    try:
        out.mkdir(parents=True, exist_ok=True)
        status = COMMANDS[command](cfg, ctx, out)
        io.write_json(
            out / io.RUN_INFO,
            {"command": command, "status": status, "finished": _dt.datetime.now(_dt.timezone.utc).isoformat()},
        )
    except OSError as exc:
        log.error("I/O: %s", exc)
        return EXIT_IO
    except (ValueError, KeyError, TypeError) as exc:
        # persisted artifacts that do not parse
        log.error("I/O: malformed input: %s", exc)
        return EXIT_IO
    return status


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="hamlink", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, type=Path)
    parser.add_argument("--out", type=Path, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--quiet", action="store_true")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    try:
        text = args.config.read_text(encoding="utf-8")
    except OSError as exc:
        log.error("I/O: cannot read config: %s", exc)
        return EXIT_IO
    try:
        cfg = parse_config(text, base_dir=args.config.parent)
        if args.seed is not None:
            cfg = dataclasses.replace(cfg, solver=dataclasses.replace(cfg.solver, seed=args.seed))
    except (ConfigError, ValueError) as exc:
        log.error("config: %s", exc)
        return EXIT_USAGE
    return execute(args.command, cfg, args.out)


if __name__ == "__main__":
    sys.exit(main())
