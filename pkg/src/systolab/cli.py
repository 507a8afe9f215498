"""Command-line entry point.

Exit codes: 0 every requested check passed, 1 a check failed, 2 configuration
error, 3 the factor failed validation (non-positive, or odd where an RP^2
check was requested).
"""
import argparse
import csv
import io
import json
import logging
import os
import sys
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__, kernels
from .conformal import (
    FactorValidationError,
    ProjectiveFactor,
    constant,
    fingerprint,
    harmonic,
    list_presets,
    preset,
    random_even_factor,
    read_spec,
    validate,
)
from .geometry import CircleRule, frame_rule, sphere_rule
from .systole import MAX_LEVEL, build_mesh, compute_systole, weight_edges, write_mesh
from .transforms import funk_values
from .verify import (
    DEFAULT_KAPPA,
    check_submersion,
    verify_projective_chain,
    verify_pu,
    verify_sphere_chain,
)

log = logging.getLogger("systolab")

SCHEMA_VERSION = 1
CHECKS = ("submersion", "sphere", "projective", "pu")
EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_FACTOR = 0, 1, 2, 3
CALIBRATION_LEVELS = (3, 4, 5, 6)

SYMBOLS = {
    "m": "minimum over great circles C of int_C f",
    "m_bar": "minimum over projective lines C of int_C f (= m / 2)",
    "V": "int_S2 f^2 - (int_S2 f)^2 / (4 pi)",
    "V_bar": "int_RP2 f^2 - (int_RP2 f)^2 / (2 pi) (= V / 2)",
    "L": "shortest noncontractible loop length on the mesh",
    "area": "area of f^2 g0 on RP^2, int_RP2 f^2",
    "var": "variance of f for the normalized round measure",
}

# report field renames: internal name -> symbol used in the bundle
_RENAMES = {
    "sphere": {"m": "m", "remainder": "V", "variance": "var", "m_certified": "m_certified"},
    "projective": {"m": "m_bar", "remainder": "V_bar", "variance": "var",
                   "m_certified": "m_bar_certified"},
}


class ConfigError(ValueError):
    pass


class CalibrationError(RuntimeError):
    pass


@dataclass
class RunConfig:
    factor_source: str
    preset: str | None = None
    spec: str | None = None
    seed: int | None = None
    degree: int = 8
    amplitude: float = 0.4
    quad_level: int = 32
    circle_n: int = 256
    mesh_level: int = 5
    edge_samples: int = 5
    kappa: float = DEFAULT_KAPPA
    checks: list = field(default_factory=lambda: list(CHECKS))
    out: str = "-"
    format: str = "json"
    plot_data: bool = False
    threads: int = 1

    def validate(self):
        if self.factor_source == "spec" and not os.path.isfile(self.spec):
            raise ConfigError(f"spec file {self.spec!r} does not exist")
        if not 1 <= self.quad_level <= 512:
            raise ConfigError("--quad-level must be in [1, 512]")
        if not 3 <= self.circle_n <= 1 << 16:
            raise ConfigError("--circle-n must be in [3, 65536]")
        if not 0 <= self.mesh_level <= MAX_LEVEL:
            raise ConfigError(f"--mesh-level must be in [0, {MAX_LEVEL}]")
        if self.edge_samples < 3 or self.edge_samples % 2 == 0:
            raise ConfigError("--edge-samples must be odd and >= 3")
        if not 0.0 < self.amplitude < 1.0:
            raise ConfigError("--amplitude must be in (0, 1)")
        if not 0 <= self.degree <= 16:
            raise ConfigError("--degree must be in [0, 16]")
        if not self.kappa >= 0.0:
            raise ConfigError("--kappa must be >= 0")
        if self.threads < 1:
            raise ConfigError("--threads must be >= 1")
        unknown = [c for c in self.checks if c not in CHECKS]
        if unknown or not self.checks:
            raise ConfigError(f"--checks must be a nonempty subset of {','.join(CHECKS)}")
        if self.format not in ("json", "csv"):
            raise ConfigError("--format must be json or csv")
        if self.plot_data and self.out == "-":
            raise ConfigError("--plot-data needs --out PATH")


def build_factor(cfg):
    if cfg.factor_source == "preset":
        try:
            return preset(cfg.preset)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    if cfg.factor_source == "spec":
        try:
            return harmonic(read_spec(cfg.spec))
        except ValueError as exc:
            raise ConfigError(f"{cfg.spec}: {exc}") from None
    return random_even_factor(cfg.seed, cfg.degree, cfg.amplitude)


def _named(kind, d):
    names = _RENAMES.get(kind, {})
    return {names.get(k, k): v for k, v in d.items()}


def plot_data(f, cfg):
    """``f`` on a 46 x 90 lat-long grid and the great-circle integral on 19 x 36 poles."""

    def latlong(nlat, nlon):
        lat = np.linspace(-90.0, 90.0, nlat)
        lon = np.linspace(0.0, 360.0, nlon, endpoint=False)
        la, lo = np.meshgrid(np.radians(lat), np.radians(lon), indexing="ij")
        pts = np.stack([np.cos(la) * np.cos(lo), np.cos(la) * np.sin(lo), np.sin(la)], -1)
        return lat, lon, pts

    lat, lon, pts = latlong(46, 90)
    flat, flon, fpts = latlong(19, 36)
    funk = funk_values(f, fpts.reshape(-1, 3), CircleRule(cfg.circle_n)).reshape(fpts.shape[:2])
    return {
        "factor": {"lat_deg": lat.tolist(), "lon_deg": lon.tolist(), "values": f(pts).tolist()},
        "funk": {"lat_deg": flat.tolist(), "lon_deg": flon.tolist(), "values": funk.tolist()},
    }


def run(cfg, timings=False, mesh_dump=None):
    """Run the configured checks; return ``(exit_code, bundle)``.

    The bundle is ``None`` only for configuration errors.
    """
    try:
        cfg.validate()
        f = build_factor(cfg)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG, None

    rule = sphere_rule(cfg.quad_level)
    circle = CircleRule(cfg.circle_n)
    bundle = {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "systolab", "version": __version__, "kernel_backend": kernels.BACKEND},
        "config": asdict(cfg),
        "factor": {"kind": f.kind, "fingerprint": fingerprint(f)},
        "symbols": SYMBOLS,
        "checks": {},
    }
    needs_even = any(c in ("projective", "pu") for c in cfg.checks)
    try:
        res = validate(f, rule, require_even=needs_even)
    except FactorValidationError as exc:
        bundle["factor"]["error"] = str(exc)
        bundle["status"] = "INVALID_FACTOR"
        log.error("factor validation failed: %s", exc)
        return EXIT_FACTOR, bundle
    bundle["factor"].update(
        validated_min=res.min_value, evenness_residual=res.evenness_residual
    )

    clock = {}
    for check in CHECKS:
        if check not in cfg.checks:
            continue
        t0 = time.perf_counter()
        log.info("running %s check", check)
        if check == "submersion":
            rep = check_submersion(frame_rule(cfg.quad_level, cfg.circle_n), [f])
        elif check == "sphere":
            rep = verify_sphere_chain(f, rule, circle)
        elif check == "projective":
            rep = verify_projective_chain(ProjectiveFactor(f, rule), rule, circle)
        else:
            rep = verify_pu(ProjectiveFactor(f, rule), cfg.mesh_level, rule, circle,
                            cfg.edge_samples, cfg.kappa, cfg.threads)
        bundle["checks"][check] = _named(check, rep.to_dict())
        clock[check] = time.perf_counter() - t0

    if mesh_dump:
        wm = weight_edges(build_mesh(cfg.mesh_level), f, cfg.edge_samples)
        write_mesh(wm, mesh_dump)
    if cfg.plot_data:
        with open(cfg.out + ".plot.json", "w") as fh:
            json.dump(plot_data(f, cfg), fh, sort_keys=True)
    ok = all(c["passed"] for c in bundle["checks"].values())
    bundle["status"] = "PASS" if ok else "FAIL"
    if timings:
        bundle["timings_s"] = clock
    return (EXIT_OK if ok else EXIT_FAIL), bundle


def to_json(bundle):
    return json.dumps(bundle, indent=2, sort_keys=True) + "\n"


def to_csv(bundle):
    """One row per check; columns are the union of report fields."""
    rows = []
    for name, rep in bundle["checks"].items():
        row = {"check": name, "fingerprint": bundle["factor"]["fingerprint"]}
        for k, v in rep.items():
            row[k] = " ".join(map(str, v)) if isinstance(v, list) else v
        rows.append(row)
    cols = ["check", "fingerprint"] + sorted({k for r in rows for k in r} - {"check", "fingerprint"})
    buf = io.StringIO()
    writer = csv.DictWriter(buf, cols, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def _emit(text, out):
    if out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


# --------------------------------------------------------------------------
# mesh calibration
# --------------------------------------------------------------------------


def calibrate_mesh(levels=CALIBRATION_LEVELS, max_rel_residual=0.25):
    """Fit ``L(level) / pi - 1 ~ kappa h`` for the round metric.

    Raises
    ------
    CalibrationError
        If ``L(level)`` is not strictly decreasing, ``kappa`` falls outside
        ``(0, 1)``, or the fit residual exceeds ``max_rel_residual`` of the
        largest excess. The message carries the measured table.
    """
    one = constant(1.0)
    table = []
    for level in levels:
        mesh = build_mesh(level)
        res = compute_systole(weight_edges(mesh, one))
        table.append((level, mesh.max_edge_angle, res.L / np.pi))
    h = np.array([t[1] for t in table])
    excess = np.array([t[2] - 1.0 for t in table])
    kappa = float(h @ excess / (h @ h))
    resid = float(np.max(np.abs(excess - kappa * h)))
    diag = "\n".join(f"  level {lv}: h = {hh:.6f}, L/pi = {r!r}" for lv, hh, r in table)
    if not np.all(np.diff([t[2] for t in table]) < 0):
        raise CalibrationError(f"L(level)/pi is not strictly decreasing:\n{diag}")
    if not 0.0 < kappa < 1.0:
        raise CalibrationError(f"fitted kappa = {kappa!r} outside (0, 1):\n{diag}")
    if resid > max_rel_residual * np.max(np.abs(excess)):
        raise CalibrationError(f"fit residual {resid:.3e} too large (kappa = {kappa!r}):\n{diag}")
    return {"kappa": kappa, "levels": list(levels), "h": h.tolist(),
            "L_over_pi": [t[2] for t in table], "residual": resid}


def load_kappa(path):
    with open(path) as fh:
        return float(json.load(fh)["kappa"])


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------


def _parser():
    p = argparse.ArgumentParser(prog="systolab", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run checks for one conformal factor")
    src = v.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", metavar="NAME[:PARAM]")
    src.add_argument("--spec", metavar="FILE", help="harmonic spec file")
    src.add_argument("--random", action="store_true", help="seeded random even factor")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--degree", type=int, default=8)
    v.add_argument("--amplitude", type=float, default=0.4)
    v.add_argument("--quad-level", type=int, default=32)
    v.add_argument("--circle-n", type=int, default=256)
    v.add_argument("--mesh-level", type=int, default=5)
    v.add_argument("--edge-samples", type=int, default=5)
    v.add_argument("--checks", default=",".join(CHECKS))
    v.add_argument("--kappa", type=float, default=None)
    v.add_argument("--calibration", metavar="FILE", help="read kappa from a calibration store")
    v.add_argument("--out", default="-")
    v.add_argument("--format", choices=("json", "csv"), default="json")
    v.add_argument("--plot-data", action="store_true")
    v.add_argument("--threads", type=int, default=1)
    v.add_argument("--mesh-dump", metavar="FILE")
    v.add_argument("--timings", action="store_true",
                   help="add wall-clock timings (makes the report non-reproducible)")

    sub.add_parser("presets", help="list factor presets")

    c = sub.add_parser("calibrate", help="fit the mesh constant kappa on the round metric")
    c.add_argument("--levels", type=int, nargs="+", default=list(CALIBRATION_LEVELS))
    c.add_argument("--store", default="systolab_calibration.json")
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    if args.command == "presets":
        rows = list_presets()
        width = max(len(u) for u, _ in rows)
        for usage, desc in rows:
            print(f"{usage:<{width}}  {desc}")
        return EXIT_OK

    if args.command == "calibrate":
        try:
            result = calibrate_mesh(tuple(args.levels))
        except CalibrationError as exc:
            log.error("calibration aborted: %s", exc)
            return EXIT_FAIL
        with open(args.store, "w") as fh:
            json.dump(result, fh, indent=2, sort_keys=True)
        print(f"kappa = {result['kappa']!r} written to {args.store}")
        return EXIT_OK

    kappa = DEFAULT_KAPPA
    try:
        if args.kappa is not None:
            kappa = args.kappa
        elif args.calibration:
            kappa = load_kappa(args.calibration)
    except (OSError, KeyError, ValueError) as exc:
        log.error("configuration error: cannot read kappa: %s", exc)
        return EXIT_CONFIG
    source = "preset" if args.preset else "spec" if args.spec else "random"
    cfg = RunConfig(
        factor_source=source, preset=args.preset, spec=args.spec,
        seed=args.seed if source == "random" else None, degree=args.degree,
        amplitude=args.amplitude, quad_level=args.quad_level, circle_n=args.circle_n,
        mesh_level=args.mesh_level, edge_samples=args.edge_samples, kappa=kappa,
        checks=[c.strip() for c in args.checks.split(",") if c.strip()], out=args.out,
        format=args.format, plot_data=args.plot_data, threads=args.threads,
    )
    log.info("kernel backend: %s", kernels.BACKEND)
    code, bundle = run(cfg, timings=args.timings, mesh_dump=args.mesh_dump)
    if bundle is not None:
        _emit(to_json(bundle) if cfg.format == "json" else to_csv(bundle), cfg.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
