"""Sectioned ``key = value`` run configuration with strict key checking."""

from __future__ import annotations

import configparser
import hashlib
import re
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .budget import LossBudgetParams, PhaseNoiseParams, QTConfig
from .plant import PlantParams
from .search import SearchTargets
from .tp_core import FrequencyGrid

__all__ = ["ConfigError", "RunConfig", "load_config", "default_config_path", "SCHEMES"]

SCHEMES = ("qt", "baseline", "no-squeeze")
TWO_PI = 2 * np.pi


class ConfigError(ValueError):
    pass


def default_config_path() -> Path:
    return Path(str(resources.files("qtsqueeze") / "configs" / "etlf_default.cfg"))


def _floats(text):
    return [float(x) for x in text.split(",") if x.strip()]


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# section -> key -> parser
SCHEMA = {
    "plant": {
        "wavelength": float,
        "T_ITM": float,
        "T_SEM": float,
        "mirror_mass": float,
        "reduced_mass": float,
        "bs_power": float,
        "arm_power": float,
        "phi0": float,
        "L_arm": float,
        "L_SEC": float,
    },
    "squeezing": {"qt_squeeze_db": float, "baseline_squeeze_db": _floats},
    "tuning": {"q": int, "p": int, "n_a": int, "n_v": int, "idler_mode": str},
    "losses": {f.name: float for f in fields(LossBudgetParams)},
    "phase_noise": {
        **{f.name: float for f in fields(PhaseNoiseParams)},
        "monte_carlo_samples": int,
    },
    "search": {
        "gamma_1_hz": float,
        "delta_1_hz": float,
        "gamma_2_hz": float,
        "delta_2_hz": float,
        "angle_tolerance": float,
        "rel_tol": float,
        "band_min_hz": float,
        "band_max_hz": float,
        "q_min": int,
        "q_max": int,
        "p_min": int,
        "p_max": int,
        "n_a_min": int,
        "n_a_max": int,
        "n_v_min": int,
        "n_v_max": int,
    },
    "grid": {"fmin": float, "fmax": float, "n": int},
    "horizon": {
        "mass_min": float,
        "mass_max": float,
        "n_mass": int,
        "snr_threshold": float,
        "sky_average": _bool,
        "extra_asd_files": str,
        "H0": float,
        "Omega_m": float,
    },
    "output": {"schemes": str, "plots": _bool},
}


@dataclass(frozen=True)
class RunConfig:
    plant: PlantParams = field(default_factory=PlantParams)
    qt_squeeze_db: float = 15.0
    baseline_squeeze_db: tuple[float, ...] = (10.0, 15.0)
    tuning: tuple[int, int] = (-30000, 14030)
    branches: tuple[int, int] = (213, 642)
    idler_mode: str = "cavity"
    losses: LossBudgetParams = field(default_factory=LossBudgetParams)
    phase_noise: PhaseNoiseParams = field(default_factory=PhaseNoiseParams)
    monte_carlo_samples: int = 0
    targets: SearchTargets = field(default_factory=lambda: SearchTargets.from_hz(4.27, 19.54, 1.64, -7.62))
    q_range: tuple[int, int] = (-50000, 50000)
    p_range: tuple[int, int] = (-50000, 50000)
    n_a_range: tuple[int, int] = (213, 213)
    n_v_range: tuple[int, int] = (642, 642)
    grid: tuple[float, float, int] = (1.0, 1000.0, 400)
    mass_range: tuple[float, float, int] = (1.0, 1000.0, 40)
    snr_threshold: float = 8.0
    sky_average: bool = False
    extra_asd_files: tuple[str, ...] = ()
    H0: float = 67.9
    Omega_m: float = 0.3065
    schemes: tuple[str, ...] = SCHEMES
    plots: bool = False
    digest: str = ""
    source_dir: Path | None = None

    def frequency_grid(self) -> FrequencyGrid:
        fmin, fmax, n = self.grid
        return FrequencyGrid.logspace_hz(fmin, fmax, int(n))

    def qt_config(self) -> QTConfig:
        return QTConfig(
            squeeze_db=self.qt_squeeze_db,
            tuning=self.tuning,
            branches=self.branches,
            targets=self.targets,
            idler_mode=self.idler_mode,
        )

    def with_overrides(self, schemes=None, grid=None):
        cfg = self
        if schemes is not None:
            cfg = replace(cfg, schemes=_parse_schemes(schemes))
        if grid is not None:
            cfg = replace(cfg, grid=_parse_grid(grid))
        return replace(cfg, digest=_digest(cfg))


def _parse_schemes(text):
    out = tuple(s.strip() for s in text.split(",") if s.strip())
    for s in out:
        if s not in SCHEMES:
            raise ConfigError(f"unknown scheme {s!r}; choose from {', '.join(SCHEMES)}")
    if not out:
        raise ConfigError("no scheme selected")
    return out


def _parse_grid(text):
    parts = text.split(",")
    if len(parts) != 3:
        raise ConfigError("grid must be 'fmin,fmax,n'")
    try:
        fmin, fmax, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise ConfigError(f"bad grid {text!r}: {exc}") from None
    if not 0 < fmin < fmax or n < 2:
        raise ConfigError("grid needs 0 < fmin < fmax and n >= 2")
    return (fmin, fmax, n)


def _line_numbers(text):
    """Map (section, key) to its line number in the file."""
    where, section = {}, None
    for i, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        m = re.match(r"^\[(.+)\]$", s)
        if m:
            section = m.group(1).strip()
            where.setdefault((section, None), i)
        elif s and not s.startswith(("#", ";")) and section is not None:
            key = re.split(r"[=:]", s, maxsplit=1)[0].strip()
            where[(section, key)] = i
    return where


def _digest(cfg: RunConfig):
    skip = {"digest", "source_dir"}
    parts = [f"{f.name}={getattr(cfg, f.name)!r}" for f in fields(cfg) if f.name not in skip]
    return hashlib.sha256("\n".join(parts).encode()).hexdigest()[:16]


def load_config(path=None) -> RunConfig:
    """Parse and validate a config file; defaults fill unspecified keys."""
    path = Path(path) if path is not None else default_config_path()
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    where = _line_numbers(text)
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None

    values = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"{path}:{where.get((section, None), '?')}: unknown section [{section}]")
        for key, raw in parser.items(section):
            line = where.get((section, key), "?")
            if key not in SCHEMA[section]:
                raise ConfigError(f"{path}:{line}: unknown key '{key}' in [{section}]")
            try:
                values[(section, key)] = SCHEMA[section][key](raw)
            except ValueError as exc:
                raise ConfigError(f"{path}:{line}: bad value for '{key}': {exc}") from None

    def get(section, key, default):
        return values.get((section, key), default)

    d = RunConfig()
    try:
        plant_kw = {k: v for (s, k), v in values.items() if s == "plant"}
        plant = PlantParams(**plant_kw)
        losses = LossBudgetParams(**{k: v for (s, k), v in values.items() if s == "losses"})
        pn_kw = {k: v for (s, k), v in values.items() if s == "phase_noise" and k != "monte_carlo_samples"}
        pn = PhaseNoiseParams(**pn_kw)
        t = d.targets
        targets = SearchTargets.from_hz(
            get("search", "gamma_1_hz", t.gamma_1 / TWO_PI),
            get("search", "delta_1_hz", t.delta_1 / TWO_PI),
            get("search", "gamma_2_hz", t.gamma_2 / TWO_PI),
            get("search", "delta_2_hz", t.delta_2 / TWO_PI),
            angle_tolerance=get("search", "angle_tolerance", t.angle_tolerance),
            rel_tol=get("search", "rel_tol", t.rel_tol),
            band=(get("search", "band_min_hz", t.band[0]), get("search", "band_max_hz", t.band[1])),
        )
        idler_mode = get("tuning", "idler_mode", d.idler_mode)
        if idler_mode not in ("cavity", "ideal"):
            raise ValueError(f"idler_mode must be 'cavity' or 'ideal', got {idler_mode!r}")
        grid = (get("grid", "fmin", d.grid[0]), get("grid", "fmax", d.grid[1]), get("grid", "n", d.grid[2]))
        _parse_grid(",".join(str(x) for x in grid))
        mass = (
            get("horizon", "mass_min", d.mass_range[0]),
            get("horizon", "mass_max", d.mass_range[1]),
            get("horizon", "n_mass", d.mass_range[2]),
        )
        if not 0 < mass[0] < mass[1] or mass[2] < 2:
            raise ValueError("mass range needs 0 < mass_min < mass_max and n_mass >= 2")
        extra = get("horizon", "extra_asd_files", "")
        extra = tuple(str((path.parent / e.strip()).resolve()) for e in extra.split(",") if e.strip())
        mc = get("phase_noise", "monte_carlo_samples", 0)
        if mc < 0:
            raise ValueError("monte_carlo_samples must be non-negative")
        cfg = RunConfig(
            plant=plant,
            qt_squeeze_db=get("squeezing", "qt_squeeze_db", d.qt_squeeze_db),
            baseline_squeeze_db=tuple(get("squeezing", "baseline_squeeze_db", d.baseline_squeeze_db)),
            tuning=(get("tuning", "q", d.tuning[0]), get("tuning", "p", d.tuning[1])),
            branches=(get("tuning", "n_a", d.branches[0]), get("tuning", "n_v", d.branches[1])),
            idler_mode=idler_mode,
            losses=losses,
            phase_noise=pn,
            monte_carlo_samples=mc,
            targets=targets,
            q_range=(get("search", "q_min", d.q_range[0]), get("search", "q_max", d.q_range[1])),
            p_range=(get("search", "p_min", d.p_range[0]), get("search", "p_max", d.p_range[1])),
            n_a_range=(get("search", "n_a_min", d.n_a_range[0]), get("search", "n_a_max", d.n_a_range[1])),
            n_v_range=(get("search", "n_v_min", d.n_v_range[0]), get("search", "n_v_max", d.n_v_range[1])),
            grid=grid,
            mass_range=mass,
            snr_threshold=get("horizon", "snr_threshold", d.snr_threshold),
            sky_average=get("horizon", "sky_average", d.sky_average),
            extra_asd_files=extra,
            H0=get("horizon", "H0", d.H0),
            Omega_m=get("horizon", "Omega_m", d.Omega_m),
            schemes=_parse_schemes(get("output", "schemes", ",".join(d.schemes))),
            plots=get("output", "plots", d.plots),
            source_dir=path.parent,
        )
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    for lo, hi, name in (
        (*cfg.q_range, "q"),
        (*cfg.p_range, "p"),
        (*cfg.n_a_range, "n_a"),
        (*cfg.n_v_range, "n_v"),
    ):
        if lo > hi:
            raise ConfigError(f"{path}: {name}_min exceeds {name}_max")
    return replace(cfg, digest=_digest(cfg))
