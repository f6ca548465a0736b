"""Command-line front end: reproducible, file-based spectrum/verify/converge runs.

Output files are the API; stdout carries only a summary.  Identical
configurations produce bit-identical JSON outputs (fixed iteration orders,
deterministic solver starts, no timestamps).  All options may come from a
JSON config file (--config); explicit flags override file values.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, fields
from fractions import Fraction
from pathlib import Path

from . import analytic, eigensolve, meshing, verify
from .operators import build_operators
from .geometry import (
    HypersurfaceSpec,
    describe,
    make_clifford,
    make_great_sphere,
    product_from_radius_squares,
    spec_to_json,
)
from .report import VerificationReport


@dataclass
class RunConfig:
    """Resolved parameters of one run; round-trips losslessly through JSON."""

    subject_kind: str | None = None  # clifford | great_sphere | product | all_minimal
    p: int | None = None
    q: int | None = None
    n: int | None = None
    r1sq: str | None = None  # exact rational string, e.g. "3/10" or "0.3"
    n_max: int = 12
    path: str | None = None  # analytic | numeric
    cutoff: str | None = None
    grid: int = 64
    levels: int = 4
    segments: int = 128
    count: int = 8
    eig_tol: float = 1e-9
    method: str = "auto"
    bilaplace_method: str = "operator_square"
    tol: float = 0.01
    slack: float = 1e-6
    quantity: str = "lambda1"
    grids: list[int] | None = None
    level_list: list[int] | None = None
    write_vectors: bool = False
    out: str = "."
    deterministic: bool = True

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config field(s): {sorted(unknown)}")
        return cls(**data)


class UsageError(Exception):
    pass


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    base = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            base = json.load(fh)
    cfg = RunConfig.from_dict(base)
    for f in fields(RunConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            setattr(cfg, f.name, value)
    if not cfg.deterministic:
        raise UsageError("deterministic: only 'true' is supported (solvers are seed-free)")
    return cfg


def _subject(cfg: RunConfig) -> HypersurfaceSpec:
    kind = cfg.subject_kind
    if kind == "clifford":
        if cfg.p is None or cfg.q is None:
            raise UsageError("clifford subject needs p and q")
        return make_clifford(cfg.p, cfg.q)
    if kind == "great_sphere":
        if cfg.n is None:
            raise UsageError("great-sphere subject needs n")
        return make_great_sphere(cfg.n)
    if kind == "product":
        if cfg.p is None or cfg.q is None or cfg.r1sq is None:
            raise UsageError("product subject needs p, q and --r1sq")
        r1sq = Fraction(cfg.r1sq)
        return product_from_radius_squares(cfg.p, cfg.q, r1sq, 1 - r1sq)
    raise UsageError("missing subject: use --clifford P Q, --great-sphere N or --product P Q --r1sq X")


def _mesh_for(cfg: RunConfig, spec: HypersurfaceSpec) -> meshing.SimplicialMesh:
    if spec.kind == "great_sphere" and spec.n == 1:
        return meshing.mesh_circle(cfg.segments)
    if spec.kind == "great_sphere" and spec.n == 2:
        return meshing.mesh_great_sphere2(cfg.levels)
    if spec.kind == "product_of_spheres" and spec.n == 2:
        return meshing.mesh_product_torus(spec, cfg.grid)
    raise UsageError(
        f"numeric path supports n <= 2 subjects only; {describe(spec)} is analytic-only"
    )


def _mesh_factory(cfg: RunConfig, spec: HypersurfaceSpec):
    if spec.kind == "great_sphere" and spec.n == 2:
        levels = cfg.level_list
        if not levels:
            raise UsageError("icosphere study needs --levels-list (e.g. 3 4 5)")
        return (lambda lv: meshing.mesh_great_sphere2(lv)), levels
    if spec.kind == "product_of_spheres" and spec.n == 2:
        grids = cfg.grids
        if not grids:
            raise UsageError("torus study needs --grids (e.g. 32 64 128)")
        return (lambda g: meshing.mesh_product_torus(spec, g)), grids
    if spec.kind == "great_sphere" and spec.n == 1:
        grids = cfg.grids
        if not grids:
            raise UsageError("circle study needs --grids (segment counts)")
        return (lambda g: meshing.mesh_circle(g)), grids
    raise UsageError(f"no mesh family for {describe(spec)}")


def _write(outdir: Path, name: str, text: str) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / name).write_text(text)


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _config_echo(cfg: RunConfig, outdir: Path) -> None:
    _write(outdir, "run_config.json", _json_text(cfg.to_dict()))


def cmd_spectrum(cfg: RunConfig) -> int:
    spec = _subject(cfg)
    outdir = Path(cfg.out)
    _config_echo(cfg, outdir)
    if cfg.path == "analytic":
        cutoff = Fraction(cfg.cutoff) if cfg.cutoff is not None else Fraction(4 * spec.n)
        lam = analytic.laplace_spectrum(spec, cutoff)
        spectra = {
            "laplace": lam,
            "bilaplace": analytic.derived_spectrum(lam, analytic.BILAPLACE),
            "buckling": analytic.derived_spectrum(lam, analytic.BUCKLING),
        }
        for name, s in spectra.items():
            payload = {"subject": spec_to_json(spec), **analytic.spectrum_to_json(s)}
            _write(outdir, f"spectrum_{name}.json", _json_text(payload))
            _write(outdir, f"spectrum_{name}.csv", analytic.spectrum_to_csv(s))
        first = lam.first_nonzero()
        print(f"{describe(spec)} analytic: lambda1={first} Lambda1={first * first} Gamma1={first}")
        return 0
    if cfg.path != "numeric":
        raise UsageError("path: choose --analytic or --numeric")
    mesh = _mesh_for(cfg, spec)
    results = {}
    ops_c = build_operators(mesh, "consistent")
    ops_l = build_operators(mesh, "lumped")
    results["laplace"] = eigensolve.laplace_eigs(ops_c, cfg.count, tol=cfg.eig_tol, mode=cfg.method)
    if cfg.bilaplace_method == "mixed":
        results["bilaplace"] = eigensolve.bilaplace_eigs(
            ops_c, cfg.count, tol=cfg.eig_tol, sub_method="mixed", mode=cfg.method
        )
    else:
        results["bilaplace"] = eigensolve.bilaplace_eigs(
            ops_l, cfg.count, tol=cfg.eig_tol, sub_method="operator_square", mode=cfg.method
        )
    results["buckling"] = eigensolve.buckling_eigs(ops_l, cfg.count, tol=cfg.eig_tol, mode=cfg.method)
    for name, r in results.items():
        vec_name = f"eigs_{name}_vectors.bin" if cfg.write_vectors else None
        payload = {
            "subject": spec_to_json(spec),
            "mesh": {"vertices": mesh.n_vertices, "simplices": mesh.n_simplices},
            **eigensolve.eigenresult_to_json(r, vectors_file=vec_name),
        }
        _write(outdir, f"eigs_{name}.json", _json_text(payload))
        csv = "value,residual\n" + "".join(
            f"{float(v)!r},{float(res)!r}\n" for v, res in zip(r.values, r.residuals)
        )
        _write(outdir, f"eigs_{name}.csv", csv)
        if vec_name:
            eigensolve.write_vectors(r, Path(cfg.out) / vec_name)
    print(
        f"{describe(spec)} numeric[{mesh.n_vertices} vertices]: "
        f"lambda1~{results['laplace'].values[1]:.6g} "
        f"Lambda1~{results['bilaplace'].values[1]:.6g} "
        f"Gamma1~{results['buckling'].values[1]:.6g}"
    )
    return 0


def cmd_verify(cfg: RunConfig) -> int:
    outdir = Path(cfg.out)
    _config_echo(cfg, outdir)
    reports: list[VerificationReport] = []
    if cfg.subject_kind == "all_minimal":
        if cfg.path != "analytic":
            raise UsageError("--all-minimal sweeps run on the analytic path")
        cutoff = Fraction(cfg.cutoff) if cfg.cutoff is not None else None
        for spec in verify.minimal_catalog(cfg.n_max):
            reports.append(verify.analytic_report(spec, cutoff))
    else:
        spec = _subject(cfg)
        if cfg.path == "analytic":
            cutoff = Fraction(cfg.cutoff) if cfg.cutoff is not None else None
            reports.append(verify.analytic_report(spec, cutoff))
        elif cfg.path == "numeric":
            mesh = _mesh_for(cfg, spec)
            reports.append(
                verify.numeric_report(
                    spec,
                    mesh,
                    count=cfg.count,
                    eig_tol=cfg.eig_tol,
                    tolerance=cfg.tol,
                    slack=cfg.slack,
                    mode=cfg.method,
                )
            )
        else:
            raise UsageError("path: choose --analytic or --numeric")

    payload = {"reports": [r.to_json() for r in reports]}
    _write(outdir, "report.json", _json_text(payload))
    csv_lines = ["subject,check,measured,expected,tolerance,pass,expected_failure"]
    for r in reports:
        for c in r.checks:
            csv_lines.append(
                f"{r.subject},{c.name},{float(c.measured)!r},{float(c.expected)!r},"
                f"{float(c.tolerance)!r},{c.passed},{c.expected_failure}"
            )
    _write(outdir, "report.csv", "\n".join(csv_lines) + "\n")

    ok = all(r.all_passed for r in reports)
    n_checks = sum(len(r.checks) for r in reports)
    for r in reports:
        status = "ok" if r.all_passed else "FAILED"
        print(f"{status:6s} {r.subject} ({len(r.checks)} checks)")
    print(f"total: {len(reports)} subjects, {n_checks} checks, all_passed={ok}")
    return 0 if ok else 1


def cmd_converge(cfg: RunConfig) -> int:
    spec = _subject(cfg)
    outdir = Path(cfg.out)
    _config_echo(cfg, outdir)
    factory, levels = _mesh_factory(cfg, spec)
    if len(levels) < 3:
        raise UsageError("convergence study needs at least 3 levels")
    record = verify.convergence_study(
        factory, levels, cfg.quantity, count=cfg.count, tol=cfg.eig_tol, mode=cfg.method
    )
    payload = {"subject": spec_to_json(spec), **record.to_json()}
    _write(outdir, "convergence.json", _json_text(payload))
    csv = "level,value\n" + "".join(
        f"{lv},{val!r}\n" for lv, val in zip(record.levels, record.values)
    )
    csv += f"extrapolated,{record.extrapolated!r}\nestimated_rate,{record.estimated_rate!r}\n"
    _write(outdir, "convergence.csv", csv)
    print(
        f"{describe(spec)} {cfg.quantity}: levels={list(record.levels)} "
        f"extrapolated={record.extrapolated:.8g} rate={record.estimated_rate:.3f} "
        f"reliable={record.reliable}"
    )
    return 0


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--clifford", nargs=2, type=int, metavar=("P", "Q"))
    p.add_argument("--great-sphere", dest="great_sphere", type=int, metavar="N")
    p.add_argument("--product", nargs=2, type=int, metavar=("P", "Q"))
    p.add_argument("--r1sq", help="squared first radius, exact rational like 0.3 or 3/10")
    path = p.add_mutually_exclusive_group()
    path.add_argument("--analytic", action="store_true")
    path.add_argument("--numeric", action="store_true")
    p.add_argument("--cutoff", help="analytic spectrum cutoff (rational)")
    p.add_argument("--grid", type=int, help="torus grid size")
    p.add_argument("--levels", type=int, help="icosphere subdivision levels")
    p.add_argument("--segments", type=int, help="circle segment count")
    p.add_argument("--count", type=int, help="number of eigenpairs")
    p.add_argument("--eig-tol", dest="eig_tol", type=float, help="solver residual tolerance")
    p.add_argument("--method", choices=["auto", "dense", "iterative"])
    p.add_argument(
        "--bilaplace-method",
        dest="bilaplace_method",
        choices=["operator_square", "mixed"],
    )
    p.add_argument("--tol", type=float, help="verification tolerance (relative)")
    p.add_argument("--slack", type=float, help="identity slack for numeric spectra")
    p.add_argument("--out", help="output directory")


def _namespace_to_args(ns: argparse.Namespace) -> argparse.Namespace:
    # translate subject flags into config fields
    if getattr(ns, "clifford", None):
        ns.subject_kind = "clifford"
        ns.p, ns.q = ns.clifford
    elif getattr(ns, "great_sphere", None) is not None:
        ns.subject_kind = "great_sphere"
        ns.n = ns.great_sphere
    elif getattr(ns, "product", None):
        ns.subject_kind = "product"
        ns.p, ns.q = ns.product
    elif getattr(ns, "all_minimal", False):
        ns.subject_kind = "all_minimal"
    if getattr(ns, "analytic", False):
        ns.path = "analytic"
    elif getattr(ns, "numeric", False):
        ns.path = "numeric"
    return ns


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bilap",
        description=(
            "Laplace, clamped bi-Laplace and buckling spectra of minimal "
            "hypersurfaces in round spheres: exact catalog values, FEM "
            "verification and refinement studies."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("spectrum", help="compute and write spectra")
    _add_common(sp)
    sp.add_argument("--write-vectors", dest="write_vectors", action="store_true", default=None)

    vp = sub.add_parser("verify", help="run identity checks, write a report")
    _add_common(vp)
    vp.add_argument("--all-minimal", dest="all_minimal", action="store_true")
    vp.add_argument("--n-max", dest="n_max", type=int, help="sweep bound for --all-minimal")

    cp = sub.add_parser("converge", help="refinement study of one quantity")
    _add_common(cp)
    cp.add_argument("--quantity", choices=list(verify.QUANTITIES))
    cp.add_argument("--grids", nargs="+", type=int, help="torus/circle sizes, ascending")
    cp.add_argument(
        "--levels-list", dest="level_list", nargs="+", type=int, help="icosphere levels, ascending"
    )
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    ns = _namespace_to_args(parser.parse_args(argv))
    try:
        cfg = _resolve_config(ns)
        if ns.command == "spectrum":
            return cmd_spectrum(cfg)
        if ns.command == "verify":
            return cmd_verify(cfg)
        if ns.command == "converge":
            return cmd_converge(cfg)
        raise UsageError(f"unknown command {ns.command!r}")
    except UsageError as exc:
        parser.error(str(exc))  # exits with status 2
    except (ValueError, eigensolve.SolverError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
