"""Command-line front end: ``qtsqueeze {sensitivity,budget,search,horizon}``."""

from __future__ import annotations

import argparse
import io
import logging
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from .astro import AsdTable, Cosmology, combine_asd, horizon_curve, read_asd
from .budget import (
    COMPONENTS,
    baseline_fds_budget,
    no_squeeze_budget,
    qt_budget,
)
from .config import ConfigError, RunConfig, load_config
from .search import InfeasibleSearch, UnreachableBandwidth, search_lengths

log = logging.getLogger("qtsqueeze")

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_NUMERICAL = 0, 2, 3, 4


def _write_atomic(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _table(path: Path, cfg: RunConfig, units: str, columns, rows):
    buf = io.StringIO()
    buf.write(f"# units: {units}\n")
    buf.write(f"# config_sha256: {cfg.digest}\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    _write_atomic(path, buf.getvalue())
    return path


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return f"{float(v):.10e}"


def _budgets(cfg: RunConfig, seed: int):
    """Strain budgets per requested scheme, keyed by column name."""
    grid = cfg.frequency_grid()
    mc = dict(monte_carlo=cfg.monte_carlo_samples, seed=seed)
    out = {}
    for scheme in cfg.schemes:
        if scheme == "no-squeeze":
            out["no_squeeze"] = no_squeeze_budget(cfg.plant, cfg.losses, grid, cfg.tuning)
        elif scheme == "qt":
            out[f"qt_{cfg.qt_squeeze_db:g}dB"] = qt_budget(
                cfg.plant, cfg.qt_config(), cfg.losses, cfg.phase_noise, grid, **mc
            )
        else:
            for db in cfg.baseline_squeeze_db:
                out[f"baseline_{db:g}dB"] = baseline_fds_budget(
                    cfg.plant, cfg.losses, cfg.phase_noise, db, grid, cfg.targets, cfg.tuning, **mc
                )
    return out


def _check_finite(budgets):
    for name, b in budgets.items():
        if not np.all(np.isfinite(b.total)) or np.any(b.total <= 0):
            raise FloatingPointError(f"non-finite or non-positive spectrum in {name}")


def _plot(path: Path, freq, curves, ylabel, logy=True):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for name, y in curves.items():
        ax.plot(freq, y, label=name)
    ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel("frequency [Hz]")
    ax.set_ylabel(ylabel)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    tmp = path.with_suffix(".tmp.svg")
    fig.savefig(tmp, format="svg")
    plt.close(fig)
    os.replace(tmp, path)


def cmd_sensitivity(cfg: RunConfig, out: Path, seed=0):
    budgets = _budgets(cfg, seed)
    _check_finite(budgets)
    freq = next(iter(budgets.values())).freq
    names = list(budgets)
    files = [
        _table(
            out / "sensitivity.csv",
            cfg,
            "frequency in Hz; strain ASD in 1/sqrt(Hz)",
            ["frequency_Hz"] + [f"{n}_asd" for n in names],
            zip(freq, *(budgets[n].asd for n in names)),
        )
    ]
    squeezed = [n for n in names if n != "no_squeeze"]
    if squeezed:
        files.append(
            _table(
                out / "enhancement.csv",
                cfg,
                "frequency in Hz; noise-power improvement over no squeezing in dB",
                ["frequency_Hz"] + [f"{n}_dB" for n in squeezed],
                zip(freq, *(budgets[n].improvement_db() for n in squeezed)),
            )
        )
    if cfg.plots:
        _plot(out / "sensitivity.svg", freq, {n: b.asd for n, b in budgets.items()}, "strain ASD [1/sqrt(Hz)]")
        files.append(out / "sensitivity.svg")
    return files


def cmd_budget(cfg: RunConfig, out: Path, seed=0):
    budgets = _budgets(cfg, seed)
    _check_finite(budgets)
    files = []
    for name, b in budgets.items():
        comps = [c for c in COMPONENTS if c in b.components]
        files.append(
            _table(
                out / f"budget_{name}.csv",
                cfg,
                "frequency in Hz; strain PSD in 1/Hz",
                ["frequency_Hz", "total"] + comps,
                zip(b.freq, b.total, *(b.components[c] for c in comps)),
            )
        )
        if cfg.plots:
            curves = {"total": np.sqrt(b.total), **{c: np.sqrt(np.abs(b.components[c])) for c in comps}}
            _plot(out / f"budget_{name}.svg", b.freq, curves, "strain ASD [1/sqrt(Hz)]")
    return files


def cmd_search(cfg: RunConfig, out: Path, seed=0):
    res = search_lengths(
        cfg.plant,
        cfg.targets,
        n_a_range=cfg.n_a_range,
        n_v_range=cfg.n_v_range,
        q_range=cfg.q_range,
        p_range=cfg.p_range,
    )
    two_pi = 2 * np.pi
    lam = cfg.plant.wavelength
    rows = [
        ("q_half_waves", res.q),
        ("p_half_waves", res.p),
        ("dL_arm_m", res.dL_arm(lam)),
        ("dL_SEC_m", res.dL_SEC(lam)),
        ("n_a", res.n_a),
        ("n_v", res.n_v),
        ("Delta_a_Hz", res.Delta_a / two_pi),
        ("Delta_v_Hz", res.Delta_v / two_pi),
        ("gamma_a_Hz", res.achieved_a[0] / two_pi),
        ("delta_a_Hz", res.achieved_a[1] / two_pi),
        ("gamma_v_Hz", res.achieved_v[0] / two_pi),
        ("delta_v_Hz", res.achieved_v[1] / two_pi),
        ("target_rel_error", res.target_error),
        ("max_angle_error_rad", res.max_angle_error),
    ]
    files = [_table(out / "search_result.csv", cfg, "see quantity suffix", ["quantity", "value"], rows)]
    files.append(
        _table(
            out / "angle_error.csv",
            cfg,
            "frequency in Hz; compensation angle error in rad",
            ["frequency_Hz", "angle_error_rad"],
            zip(res.omega / two_pi, res.angle_curve),
        )
    )
    if cfg.plots:
        _plot(out / "angle_error.svg", res.omega / two_pi, {"angle error": res.angle_curve}, "rad", logy=False)
    return files


def cmd_horizon(cfg: RunConfig, out: Path, seed=0):
    budgets = _budgets(cfg, seed)
    _check_finite(budgets)
    extra = [read_asd(p) for p in cfg.extra_asd_files]
    cosmo = Cosmology(cfg.H0, cfg.Omega_m)
    lo, hi, n = cfg.mass_range
    masses = np.geomspace(lo, hi, int(n))
    cols, data = ["total_mass_Msun"], [masses]
    for name, b in budgets.items():
        asd = AsdTable(b.freq, b.asd, name)
        if extra:
            asd = combine_asd([asd, *extra], b.freq, name)
        curve = horizon_curve(asd, masses, cfg.snr_threshold, cosmo, cfg.sky_average)
        cols += [f"{name}_distance_Mpc", f"{name}_redshift"]
        data += [curve.distance, curve.redshift]
    files = [_table(out / "horizon.csv", cfg, "mass in solar masses; luminosity distance in Mpc", cols, zip(*data))]
    if cfg.plots:
        curves = {c.replace("_distance_Mpc", ""): d for c, d in zip(cols[1::2], data[1::2])}
        _plot(out / "horizon.svg", masses, curves, "horizon distance [Mpc]")
    return files


COMMANDS = {
    "sensitivity": cmd_sensitivity,
    "budget": cmd_budget,
    "search": cmd_search,
    "horizon": cmd_horizon,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="qtsqueeze", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, default=None, help="config file (default: bundled ETLF)")
        p.add_argument("--scheme", default=None, help="comma list of qt, baseline, no-squeeze")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        p.add_argument("--grid", default=None, help="fmin,fmax,n in Hz")
        p.add_argument("--seed", type=int, default=0, help="seed for Monte-Carlo cross-checks")
        p.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = load_config(args.config).with_overrides(args.scheme, args.grid)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        files = COMMANDS[args.command](cfg, args.out, args.seed)
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except UnreachableBandwidth as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except InfeasibleSearch as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (FloatingPointError, ZeroDivisionError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    for f in files:
        log.info("wrote %s", f)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
