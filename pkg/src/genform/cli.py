"""Command-line entry point: identity suites, structure analysis and deformation runs."""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from importlib import resources
from typing import Any

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_OBSTRUCTED = 2
EXIT_TRUNCATION = 3
EXIT_TOLERANCE = 4

COMMANDS = ("verify", "analyze", "deform", "decompose", "ddj")
SAMPLE_JOB = "sl2_t4_job.json"


class ConfigError(ValueError):
    pass


@dataclass
class JobConfig:
    command: str
    structure: dict | None = None
    tol: float | None = None
    trunc: int | None = None
    order: int | None = None
    seed: int = 0
    fmt: str = "json"
    suites: list[str] = field(default_factory=list)
    job: dict | None = None
    timing: bool = False
    samples: int = 20

    def __post_init__(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        for name in ("tol", "trunc", "order"):
            val = getattr(self, name)
            if val is not None and val <= 0:
                raise ConfigError(f"--{name} must be positive")
        if self.seed < 0:
            raise ConfigError("--seed must be non-negative")
        if self.samples <= 0:
            raise ConfigError("--samples must be positive")
        if self.fmt not in ("json", "text"):
            raise ConfigError("--format must be json or text")


def _limit_threads() -> None:
    cap = os.environ.get("GENFORM_THREADS")
    if not cap:
        return
    if not cap.isdigit() or int(cap) < 1:
        raise ConfigError("GENFORM_THREADS must be a positive integer")
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, cap)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=None, help="tolerance override")
    common.add_argument("--trunc", type=int, default=None, help="Fourier truncation |m|_inf <= N")
    common.add_argument("--order", type=int, default=None, help="deformation order K")
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--format", choices=("json", "text"), default="json", dest="fmt")
    common.add_argument("--timing", action="store_true", help="include wall times (breaks byte-identical output)")
    parser = argparse.ArgumentParser(prog="genform", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    v = sub.add_parser("verify", parents=[common], help="run the identity suites")
    v.add_argument("--suite", action="append", default=[], help="restrict to a suite (repeatable)")
    v.add_argument("--samples", type=int, default=50, help="random cases per suite")
    a = sub.add_parser("analyze", parents=[common], help="isotropy, fibers, ellipticity and topological checks")
    a.add_argument("structure", help='structure spec JSON, e.g. \'{"kind": "spin7"}\', or a path to one')
    a.add_argument("--samples", type=int, default=20, help="random covectors in the ellipticity scan")
    d = sub.add_parser("deform", parents=[common], help="run a deformation job")
    d.add_argument("job", nargs="?", help="job JSON path (default: the shipped SL2 sample)")
    sub.add_parser("decompose", parents=[common], help="Spin(7) two-form and even-form decompositions")
    j = sub.add_parser("ddj", parents=[common], help="dd^J property and the SL exact sequence")
    j.add_argument("structure", nargs="?", default='{"kind": "sl", "n": 2}', help="SL structure spec JSON")
    return parser


def _load_json(text: str) -> Any:
    try:
        if os.path.exists(text):
            with open(text, encoding="utf-8") as fh:
                return json.load(fh)
        return json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"invalid JSON: {exc}") from exc


def load_sample_job() -> dict:
    return json.loads(resources.files("genform.fixtures").joinpath(SAMPLE_JOB).read_text(encoding="utf-8"))


def config_from_args(args: argparse.Namespace) -> JobConfig:
    structure = None
    job = None
    if args.command in ("analyze", "ddj"):
        structure = _load_json(args.structure)
        if not isinstance(structure, dict) or "kind" not in structure:
            raise ConfigError("structure spec needs a 'kind'")
    if args.command == "deform":
        job = _load_json(args.job) if args.job else load_sample_job()
        if not isinstance(job, dict) or "structure" not in job:
            raise ConfigError("job needs a 'structure'")
    return JobConfig(
        args.command,
        structure,
        args.tol,
        args.trunc,
        args.order,
        args.seed,
        args.fmt,
        getattr(args, "suite", []) or [],
        job,
        args.timing,
        getattr(args, "samples", 20),
    )


# commands ------------------------------------------------------------------------


def cmd_verify(cfg: JobConfig) -> tuple[int, dict]:
    from .verify import DEFAULT_TOL, run_suites

    try:
        results = run_suites(cfg.suites or None, cases=cfg.samples, seed=cfg.seed, tol=cfg.tol or DEFAULT_TOL)
    except KeyError as exc:
        raise ConfigError(str(exc.args[0])) from exc
    report = {"suites": {r.name: r.to_json(cfg.timing) for r in results}}
    failed = [r for r in results if not r.ok]
    report["pass"] = not failed
    if failed:
        key, val = failed[0].worst()
        report["first_failure"] = {"suite": failed[0].name, "check": key, "residual": val}
        return EXIT_TOLERANCE, report
    return EXIT_OK, report


def _spec(data: dict):
    from .structures import StructureSpec

    try:
        return StructureSpec.from_json(data)
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"invalid structure spec: {exc}") from exc


def _analysis_frequencies(dim: int, trunc: int, rng, cap: int = 4000):
    import numpy as np

    from .torus_solver.fourier import frequency_grid

    if (2 * trunc + 1) ** dim <= cap:
        return frequency_grid(dim, trunc), "grid"
    picks = rng.integers(-trunc, trunc + 1, size=(200, dim))
    picks = picks[np.any(picks != 0, axis=1)]
    return [tuple(int(x) for x in m) for m in picks], "sample"


def cmd_analyze(cfg: JobConfig) -> tuple[int, dict]:
    import numpy as np

    from .orbit_analysis import asd_even_check, ellipticity_scan, fiber_complex, isotropy_algebra, real_view
    from .structures import cy_check, hk_relations
    from .torus_solver.hodge import real_structure, topological_check

    spec = _spec(cfg.structure)
    phi = spec.build()
    rng = np.random.default_rng(cfg.seed)
    report: dict[str, Any] = {"structure": spec.to_json()}
    checks = []
    if spec.kind == "hk":
        hk = hk_relations(phi, cfg.tol or 1e-10)
        report["hk_relations"] = hk.to_json()
        checks.append(hk.ok)
        phi = phi.split()
    if spec.kind == "cy":
        omega = (phi[1].grade_part(2) * -1j).real  # e^{i omega} has degree-2 part i omega
        cy = cy_check(phi[0], omega, cfg.tol or 1e-10)
        report["cy_conditions"] = cy.to_json()
        checks.append(cy.ok)
    real = real_structure(phi)
    iso = isotropy_algebra(real, closure_pairs=50, seed=cfg.seed)
    report["isotropy"] = iso.to_json()
    fc = fiber_complex(real, 3)
    report["fibers"] = {str(k): d for k, d in zip(range(-1, 4), fc.dims)}
    report["fiber_nesting_residual"] = fc.nesting_residual()
    xs = rng.normal(size=(cfg.samples, real.n))
    xs /= np.linalg.norm(xs, axis=1, keepdims=True)
    scan = ellipticity_scan(real, xs, (1, 2), fc=fc)
    report["ellipticity_scan"] = scan.to_json()
    trunc = cfg.trunc or 1
    freqs, mode = _analysis_frequencies(real.n, trunc, rng)
    topo = topological_check(real, trunc, (1, 2), frequencies=freqs)
    report["topological_check"] = dict(topo.to_json(), frequency_set=mode)
    if spec.kind == "spin7":
        asd = asd_even_check(cfg.tol or 1e-9)
        report["asd_even"] = asd.to_json()
        checks.append(asd.ok)
    report["pass"] = bool(all(checks))
    return (EXIT_OK if report["pass"] else EXIT_TOLERANCE), report


def cmd_decompose(cfg: JobConfig) -> tuple[int, dict]:
    from .orbit_analysis import asd_even_check, lambda2_decompose

    lam = lambda2_decompose()
    asd = asd_even_check(cfg.tol or 1e-9)
    report = {"lambda2": lam.to_json(), "asd_even": asd.to_json(), "pass": bool(lam.ok and asd.ok)}
    return (EXIT_OK if report["pass"] else EXIT_TOLERANCE), report


def cmd_ddj(cfg: JobConfig) -> tuple[int, dict]:
    from .torus_solver.ddj import ddJ_check, sl_sequence_check

    spec = _spec(cfg.structure)
    if spec.kind != "sl":
        raise ConfigError("ddj needs an SL structure")
    phi = spec.build()
    ddj = ddJ_check(phi, cfg.trunc or 2, cfg.tol or 1e-9)
    seq = sl_sequence_check(phi)
    report = {"structure": spec.to_json(), "ddJ": ddj.to_json(), "sequence": seq.to_json()}
    report["pass"] = bool(ddj.ok and seq.ok)
    return (EXIT_OK if report["pass"] else EXIT_TOLERANCE), report


def cmd_deform(cfg: JobConfig) -> tuple[int, dict]:
    from .torus_solver.deform import RESIDUAL_TOL, NotClosedPerturbation, Obstructed, deform
    from .torus_solver.fourier import FourierCL2Field, TruncationTooSmall

    job = cfg.job
    spec = _spec(job["structure"])
    order = cfg.order or int(job.get("order", 1))
    trunc = cfg.trunc or int(job.get("trunc", 1))
    tol = cfg.tol or float(job.get("tolerances", {}).get("residual", RESIDUAL_TOL))
    route = job.get("route", "spin7" if spec.kind == "spin7" else "hodge")
    if order <= 0 or trunc <= 0:
        raise ConfigError("order and trunc must be positive")
    phi = spec.build()
    a1_data = job.get("a1", {"trunc": trunc, "modes": []})
    try:
        a1 = FourierCL2Field.from_json(dict(a1_data, trunc=max(trunc, int(a1_data.get("trunc", trunc)))), spec.dim)
    except (ValueError, KeyError, TypeError) as exc:
        if isinstance(exc, TruncationTooSmall):
            return EXIT_TRUNCATION, {"error": "truncation", "detail": str(exc), "pass": False}
        raise ConfigError(f"invalid a1 field: {exc}") from exc
    report: dict[str, Any] = {"structure": spec.to_json(), "order": order, "trunc": trunc, "route": route}
    try:
        series = deform(phi, a1, order, trunc, route=route)
    except Obstructed as exc:
        report.update({"error": "obstructed", "k": exc.k, "norm": exc.norm, "pass": False})
        return EXIT_OBSTRUCTED, report
    except TruncationTooSmall as exc:
        report.update({"error": "truncation", "detail": str(exc), "pass": False})
        return EXIT_TRUNCATION, report
    except NotClosedPerturbation as exc:
        raise ConfigError(str(exc)) from exc
    body = series.to_json()
    if cfg.timing:
        body["wall_time"] = series.wall_time
    body["pass"] = series.ok(tol)
    body["tolerance"] = tol
    report["series"] = body
    report["pass"] = body["pass"]
    return (EXIT_OK if body["pass"] else EXIT_TOLERANCE), report


HANDLERS = {
    "verify": cmd_verify,
    "analyze": cmd_analyze,
    "deform": cmd_deform,
    "decompose": cmd_decompose,
    "ddj": cmd_ddj,
}


def _jsonable(obj):
    import numpy as np

    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _text(report: dict, prefix: str = "") -> list[str]:
    lines = []
    for key, val in report.items():
        name = f"{prefix}{key}"
        if isinstance(val, dict):
            lines.extend(_text(val, name + "."))
        else:
            lines.append(f"{name}: {val}")
    return lines


def render(report: dict, fmt: str) -> str:
    report = _jsonable(report)
    if fmt == "text":
        return "\n".join(_text(report))
    return json.dumps(report, sort_keys=True, indent=2)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    fmt = getattr(args, "fmt", "json")
    try:
        _limit_threads()
        cfg = config_from_args(args)
        code, report = HANDLERS[cfg.command](cfg)
    except ConfigError as exc:
        code, report = EXIT_CONFIG, {"error": "config", "detail": str(exc), "pass": False}
    print(render(report, fmt))
    return code


if __name__ == "__main__":
    sys.exit(main())
