"""``hg-compton`` command-line driver.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.  On
failure a one-line JSON summary is written to stderr.
"""

import argparse
from concurrent.futures import ThreadPoolExecutor
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .config import MODES, UNITS, parse_config
from .core import DEFAULT_CONSTANTS, natural_area_to_barn
from .cross_section import (
    angular_scan,
    count_nodes,
    dcs,
    default_energy_grid,
    energy_spectrum,
    klein_nishina_reference,
)
from .errors import HGComptonError, ParseError, ValidationError
from .kinematics import BeamParams, compton_line_energy
from .oracle import RegularizationParams, dcs_regularized, validation_instances
from .output import write_table
from .quadrature import QuadratureConfig

THREADS_ENV = "HG_COMPTON_THREADS"
EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3
VALIDATION_TOLERANCE = 1e-3


class NumericalFailure(Exception):
    pass


def _barn(x):
    return natural_area_to_barn(x) if np.isfinite(x) else math.nan


def _quad_cfg(cfg):
    return QuadratureConfig(tol=cfg.tol, max_subdivisions=cfg.max_subdivisions, order=cfg.order)


def _beam(cfg):
    return BeamParams(cfg.k_keV, cfg.w0_pm, cfg.nx, cfg.ny)


def run_angular(cfg, threads, c=DEFAULT_CONSTANTS):
    beam = _beam(cfg)
    thetas = sorted(cfg.theta_pi)
    phis = sorted(cfg.phi_pi)
    table = angular_scan(
        beam,
        np.array(thetas) * math.pi,
        np.array(phis) * math.pi,
        list(cfg.deltaE_keV),
        _quad_cfg(cfg),
        c,
        threads,
    )
    columns = ["theta_pi", "phi_pi", "E_q_keV", "deltaE_keV", "value_keV3_sr", "error_keV3_sr"]
    if cfg.units == "barn":
        columns += ["value_barn_keV_sr", "error_barn_keV_sr"]
    columns.append("status")
    rows = []
    for i, t in enumerate(thetas):
        for j, p in enumerate(phis):
            for d, dE in enumerate(cfg.deltaE_keV):
                v = float(table.values[d, i, j])
                e = float(table.errors[d, i, j])
                row = [t, p, float(table.E_q[d, i, j]), dE, v, e]
                if cfg.units == "barn":
                    row += [_barn(v), _barn(e)]
                row.append(table.status[d, i, j])
                rows.append(row)
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    write_table(cfg.out_path, cfg.format, cfg, c, columns, rows)
    failed = sum(1 for r in rows if str(r[-1]).startswith("error"))
    print(f"angular scan: {len(rows)} cells, {failed} failed -> {cfg.out_path}")
    return [cfg.out_path]


def _spectrum_path(cfg, theta, phi, many):
    if not many:
        return cfg.out_path
    p = Path(cfg.out_path)
    return str(p.with_name(f"{p.stem}_theta{theta:g}pi_phi{phi:g}pi{p.suffix}"))


def run_spectrum(cfg, threads, c=DEFAULT_CONSTANTS):
    beam = _beam(cfg)
    pairs = [(t, p) for t in sorted(cfg.theta_pi) for p in sorted(cfg.phi_pi)]
    paths = []
    columns = ["theta_pi", "phi_pi", "E_q_keV", "deltaE_keV", "value_keV3_sr", "error_keV3_sr"]
    if cfg.units == "barn":
        columns += ["value_barn_keV_sr", "error_barn_keV_sr"]
    columns.append("status")
    for t, p in pairs:
        theta, phi = t * math.pi, p * math.pi
        grid = default_energy_grid(beam, theta, c, cfg.E_half_width_keV, cfg.E_step_keV)
        spec = energy_spectrum(beam, theta, phi, grid, _quad_cfg(cfg), c, threads)
        E0 = spec.metadata["E0"]
        rows = []
        for E, v, e, s in zip(spec.E_q, spec.values, spec.errors, spec.status):
            row = [t, p, float(E), float(E - E0), float(v), float(e)]
            if cfg.units == "barn":
                row += [_barn(v), _barn(e)]
            row.append(s)
            rows.append(row)
        try:
            nodes = count_nodes(spec, cfg.rel_floor) if all(s == "ok" for s in spec.status) else "n/a"
        except HGComptonError as exc:
            nodes = f"error:{type(exc).__name__}"
        path = _spectrum_path(cfg, t, p, len(pairs) > 1)
        write_table(
            path,
            cfg.format,
            cfg,
            c,
            columns,
            rows,
            extra={"theta_pi": t, "phi_pi": p, "E0_keV": E0, "node_count": nodes},
        )
        print(f"spectrum theta={t:g}pi phi={p:g}pi: {len(rows)} points, nodes={nodes} -> {path}")
        paths.append(path)
    return paths


def run_validate(cfg, threads, c=DEFAULT_CONSTANTS):
    instances = validation_instances(cfg.instances, cfg.seed, cfg.k_keV, c)
    qcfg = _quad_cfg(cfg)

    def one(item):
        beam, pt = item
        reduced = dcs(beam, pt, qcfg, c).value
        reg = RegularizationParams.scaled_for(beam, pt.theta_q, c, eta_max=cfg.eta_keV)
        try:
            oracle = dcs_regularized(beam, pt, reg, c)
        except HGComptonError as exc:
            return reduced, math.nan, math.nan, math.nan, f"error:{type(exc).__name__}"
        dev = abs(reduced - oracle.value) / oracle.value
        status = "ok" if dev <= VALIDATION_TOLERANCE else "deviation"
        return reduced, oracle.value, oracle.quadrature_error_estimate, dev, status

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, instances))
    else:
        results = [one(item) for item in instances]

    columns = [
        "w0_pm", "nx", "ny", "theta_pi", "phi_pi", "E_q_keV", "deltaE_keV",
        "dcs_keV3_sr", "oracle_keV3_sr", "oracle_error_keV3_sr", "rel_deviation", "status",
    ]
    rows = []
    for (beam, pt), (reduced, oracle, oerr, dev, status) in zip(instances, results):
        E0 = float(compton_line_energy(beam.k, pt.theta_q, c))
        rows.append([
            beam.w0, int(beam.n_x), int(beam.n_y), pt.theta_q / math.pi, pt.phi_q / math.pi,
            pt.E_q, pt.E_q - E0, reduced, oracle, oerr, dev, status,
        ])
    rows.sort(key=lambda r: (r[3], r[4], r[5]))
    devs = [r[10] for r in rows]
    max_dev = max(devs) if not any(math.isnan(d) for d in devs) else math.nan
    write_table(cfg.out_path, cfg.format, cfg, c, columns, rows, extra={"max_rel_deviation": max_dev})
    print(f"validate: {len(rows)} instances, max relative deviation {max_dev:.3e} -> {cfg.out_path}")
    bad = [r for r in rows if r[-1] != "ok"]
    if bad:
        raise NumericalFailure(f"{len(bad)} of {len(rows)} validation instances failed")
    return [cfg.out_path]


def run_kn_reference(cfg, threads, c=DEFAULT_CONSTANTS):
    columns = ["theta_pi", "E0_keV", "value_keV2_sr"]
    if cfg.units == "barn":
        columns.append("value_barn_sr")
    rows = []
    for t in sorted(cfg.theta_pi):
        theta = t * math.pi
        v = float(klein_nishina_reference(cfg.k_keV, theta, c))
        row = [t, float(compton_line_energy(cfg.k_keV, theta, c)), v]
        if cfg.units == "barn":
            row.append(float(natural_area_to_barn(v)))
        rows.append(row)
    write_table(cfg.out_path, cfg.format, cfg, c, columns, rows)
    print(f"kn-reference: {len(rows)} angles -> {cfg.out_path}")
    return [cfg.out_path]


RUNNERS = {
    "angular": run_angular,
    "spectrum": run_spectrum,
    "validate": run_validate,
    "kn-reference": run_kn_reference,
}


def run(cfg, threads=1):
    """Dispatch one configuration; returns the list of files written."""
    return RUNNERS[cfg.mode](cfg, threads)


def _fail(code, exc):
    summary = {"status": "error", "exit_code": code, "type": type(exc).__name__, "message": str(exc)}
    print(json.dumps(summary, sort_keys=True), file=sys.stderr)
    return code


def _threads(args_threads, cfg_threads):
    if args_threads is not None:
        return args_threads
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValidationError(THREADS_ENV, f"invalid thread count {env!r}") from None
    return cfg_threads


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hg-compton",
        description="Compton scattering cross sections of Hermite-Gaussian gamma-ray photons.",
    )
    parser.add_argument("config", help="path to a 'section.key = value' configuration file")
    parser.add_argument("--mode", choices=MODES, help="override scan.mode")
    parser.add_argument("--out", help="override output.path")
    parser.add_argument("--units", choices=UNITS, help="override output.units")
    parser.add_argument("--threads", type=int, help=f"worker threads (env {THREADS_ENV})")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        text = Path(args.config).read_text(encoding="utf-8")
        cfg = parse_config(text)
        cfg = cfg.with_overrides(mode=args.mode, out_path=args.out, units=args.units)
        threads = _threads(args.threads, cfg.threads)
        if threads < 1:
            raise ValidationError("--threads", "must be >= 1")
    except (OSError, ParseError, ValidationError) as exc:
        return _fail(EXIT_CONFIG, exc)
    try:
        run(cfg, threads)
    except (HGComptonError, NumericalFailure, ArithmeticError) as exc:
        return _fail(EXIT_NUMERICAL, exc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
