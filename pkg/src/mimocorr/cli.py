"""Command-line front end.

    mimocorr run CONFIG [--seed N] [--trials N] [--out-dir DIR]
    mimocorr export-psd CONFIG [--variant exact|kronecker] [--resolution N] [--out-dir DIR]

Exit status is 0 on success, 2 for configuration errors and 3 for
numerical failures.
"""
import argparse
import dataclasses
import hashlib
import json
import logging
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .capacity import (BLOCK_SIZE, CLAMP_TOLERANCE, RealizationEngine, average_mi)
from .correlation import ChannelCorrelation, build_r, build_rs, build_rs_kronecker
from .errors import DegenerateDistributionError, NumericalFailure
from .psd import count_local_maxima, density_grid, kronecker_psd, write_grid_csv
from .quadrature import REFINEMENT_LEVELS, TOLERANCE
from .scenario import FORMAT_VERSION, ConfigError, load_scenario
from .smf import Side, configuration_matrix

__all__ = ["main", "run_scenario", "export_psd_grid", "case_correlation"]

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
PEAK_THRESHOLD = 0.01


def case_correlation(scenario, case, variant):
    """Channel correlation of one PSD case under `variant`."""
    tx, rx = scenario.tx_array, scenario.rx_array
    n = tx.n_antennas * rx.n_antennas
    if variant == "iid":
        return ChannelCorrelation(np.eye(n, dtype=complex), tx.n_antennas, rx.n_antennas)
    M_T, M_R = tx.mode_half_width, rx.mode_half_width
    if variant == "exact":
        R_S = build_rs(case.psd, M_T, M_R, method=scenario.method)
    elif variant == "kronecker":
        R_S = build_rs_kronecker(case.psd, M_T, M_R)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    J_T = configuration_matrix(tx, M_T, Side.TRANSMITTER)
    J_R = configuration_matrix(rx, M_R, Side.RECEIVER)
    return build_r(J_T, J_R, R_S)


def _curve_path(out_dir, scenario, case_id, variant):
    return Path(out_dir) / f"{scenario.scenario_id}__{case_id}__{variant}.csv"


def export_psd_grid(scenario, which="exact", resolution=181, out_dir=None):
    """Tabulate every PSD case of `scenario` and write one CSV per case.

    Returns a list of ``(case_id, path, local_maxima)``.
    """
    out_dir = Path(out_dir or scenario.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results = []
    for case in scenario.cases:
        psd = case.psd if which == "exact" else kronecker_psd(case.psd)
        angles, values = density_grid(psd, resolution)
        path = out_dir / f"{scenario.scenario_id}__{case.id}__psd_{which}.csv"
        write_grid_csv(path, angles, values)
        results.append((case.id, path, count_local_maxima(values, PEAK_THRESHOLD)))
    return results


def run_scenario(scenario, out_dir=None):
    """Run every (case, variant) capacity sweep and write the outputs.

    Returns the manifest dictionary (also written as ``manifest.json``).
    """
    out_dir = Path(out_dir or scenario.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    curves, timings, diagnostics = [], {}, {}
    for case in scenario.cases:
        for variant in scenario.variants:
            t0 = time.perf_counter()
            R = case_correlation(scenario, case, variant)
            engine = RealizationEngine.from_correlation(R, seed=scenario.seed)
            curve = average_mi(engine, scenario.snr_db, scenario.trials,
                               scenario_id=f"{scenario.scenario_id}/{case.id}/{variant}")
            path = _curve_path(out_dir, scenario, case.id, variant)
            curve.to_csv(path)
            key = f"{case.id}/{variant}"
            timings[key] = round(time.perf_counter() - t0, 3)
            diagnostics[key] = {"asymmetry": R.asymmetry,
                                "clamped_eigenvalues": engine.clamped_eigenvalues,
                                "trace": float(np.trace(R.entries).real)}
            curves.append(str(path))
            logger.info("wrote %s", path)
    grids = []
    if scenario.psd_grid:
        for which in scenario.psd_grid["variants"]:
            for case_id, path, peaks in export_psd_grid(scenario, which,
                                                        scenario.psd_grid["resolution"], out_dir):
                grids.append({"case": case_id, "variant": which, "path": str(path),
                              "local_maxima": peaks})
    manifest = {
        "format_version": FORMAT_VERSION,
        "scenario": scenario.scenario_id,
        "config": scenario.source,
        "config_sha256": hashlib.sha256(
            json.dumps(scenario.source, sort_keys=True).encode()).hexdigest(),
        "seed": scenario.seed,
        "trials": scenario.trials,
        "snr_db": list(scenario.snr_db),
        "variants": list(scenario.variants),
        "method": scenario.method,
        "mode_half_width": {"tx": scenario.tx_array.mode_half_width,
                            "rx": scenario.rx_array.mode_half_width},
        "numerics": {"quadrature_levels": list(REFINEMENT_LEVELS),
                     "quadrature_tolerance": TOLERANCE,
                     "eigenvalue_clamp_relative": CLAMP_TOLERANCE,
                     "rng": "numpy PCG64, SeedSequence(seed, spawn_key=(block,))",
                     "rng_block_size": BLOCK_SIZE,
                     "peak_threshold_relative": PEAK_THRESHOLD},
        "versions": {"mimocorr": __version__, "numpy": np.__version__,
                     "scipy": scipy.__version__, "python": platform.python_version()},
        "diagnostics": diagnostics,
        "timings_s": dict(timings, total=round(time.perf_counter() - started, 3)),
        "outputs": {"curves": curves, "psd_grids": grids},
    }
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    return manifest


def _build_parser():
    parser = argparse.ArgumentParser(prog="mimocorr", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the capacity sweeps of a scenario")
    run.add_argument("config")
    run.add_argument("--seed", type=int)
    run.add_argument("--trials", type=int)
    run.add_argument("--out-dir")

    export = sub.add_parser("export-psd", help="tabulate the scenario densities")
    export.add_argument("config")
    export.add_argument("--variant", choices=("exact", "kronecker"), default="exact")
    export.add_argument("--resolution", type=int, default=181)
    export.add_argument("--out-dir")
    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        scenario = load_scenario(args.config)
        if args.command == "run":
            overrides = {}
            if args.seed is not None:
                if args.seed < 0:
                    raise ConfigError("--seed", "must be >= 0")
                overrides["seed"] = args.seed
            if args.trials is not None:
                if args.trials < 1:
                    raise ConfigError("--trials", "must be >= 1")
                overrides["trials"] = args.trials
            scenario = dataclasses.replace(scenario, **overrides)
        elif args.resolution < 3:
            raise ConfigError("--resolution", "must be >= 3")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.command == "run":
            manifest = run_scenario(scenario, args.out_dir)
            for path in manifest["outputs"]["curves"]:
                print(path)
        else:
            for case_id, path, peaks in export_psd_grid(scenario, args.variant,
                                                        args.resolution, args.out_dir):
                print(f"{path}\tlocal_maxima={peaks}")
    except (NumericalFailure, DegenerateDistributionError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
