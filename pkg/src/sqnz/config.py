"""Run configuration: TOML/JSON ingestion, validation, and atomic writers.

All frequencies in a config file are ratios to the resonance frequency
(``xi_ratio``, ``delta_ratio``, ``gamma_ratio``); internal computation uses
Omega = omega0.  A JSON result file embeds the configuration it was produced
from under the key ``"config"`` and can itself be passed back as ``--config``.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Optional

try:
    import tomllib  # py >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .errors import ConfigError
from .kernels import (
    BandConfig,
    OscillatorConfig,
    oscillator_from_gamma_ratio,
    resonance_params,
    squeeze_derive,
)

__all__ = [
    "GridSpec",
    "MonteCarloSpec",
    "EnergySpec",
    "RunConfig",
    "load_config",
    "parse_config_dict",
    "resolve_threads",
    "format_float",
    "write_csv_atomic",
    "write_json_atomic",
]

THREADS_ENV = "SQNZ_THREADS"


@dataclass(frozen=True)
class GridSpec:
    t_min: float
    t_max: float
    points_per_decade: int = 40

    def times(self) -> np.ndarray:
        from .dispersion import log_time_grid

        return log_time_grid(self.t_min, self.t_max, self.points_per_decade)


@dataclass(frozen=True)
class MonteCarloSpec:
    duration: float
    dt: float
    n_modes: int = 128
    n_samples: int = 1000
    n_output: int = 50


@dataclass(frozen=True)
class EnergySpec:
    omega_bar: Optional[float] = None  # defaults to the first band's Xi
    x_phase: float = 0.0
    volume: float = 1.0
    points_per_period: int = 512


@dataclass(frozen=True)
class RunConfig:
    oscillator: OscillatorConfig
    bands: tuple[BandConfig, ...]
    grid: GridSpec
    method: str = "closed_form"
    output: str = "csv"
    seed: int = 20260810
    threads: Optional[int] = None
    montecarlo: Optional[MonteCarloSpec] = None
    energy: EnergySpec = field(default_factory=EnergySpec)
    raw: dict = field(default_factory=dict, repr=False)


def _get(block: dict, section: str, key: str, default=None, required=False):
    if key in block:
        return block[key]
    if required:
        raise ConfigError(f"[{section}] missing required key '{key}'")
    return default


def _number(block: dict, section: str, key: str, default=None, required=False):
    val = _get(block, section, key, default, required)
    if val is None:
        return None
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"[{section}] {key}: expected a number, got {val!r}")
    return float(val)


def parse_config_dict(cfg: dict) -> RunConfig:
    """Build and validate a RunConfig; errors name the offending section/key."""
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a table")

    osc_block = cfg.get("oscillator", {})
    mass = _number(osc_block, "oscillator", "mass", 1.0)
    omega0 = _number(osc_block, "oscillator", "omega0", 1.0)
    small_alpha = bool(_get(osc_block, "oscillator", "small_alpha", False))
    charge2 = _number(osc_block, "oscillator", "charge2")
    gamma_ratio = _number(osc_block, "oscillator", "gamma_ratio")
    if (charge2 is None) == (gamma_ratio is None):
        raise ConfigError("[oscillator] give exactly one of 'charge2' or 'gamma_ratio'")
    try:
        if gamma_ratio is not None:
            osc = oscillator_from_gamma_ratio(gamma_ratio, omega0, mass, small_alpha)
        else:
            osc = resonance_params(mass, charge2, omega0, small_alpha)
    except ValueError as exc:
        raise ConfigError(f"[oscillator] {exc}") from exc

    band_blocks = cfg.get("band", [])
    if isinstance(band_blocks, dict):
        band_blocks = [band_blocks]
    if not band_blocks:
        raise ConfigError("[band] at least one band block is required")
    bands = []
    for i, blk in enumerate(band_blocks):
        section = f"band #{i + 1}"
        xi = _number(blk, section, "xi_ratio", required=True) * osc.Omega
        delta = _number(blk, section, "delta_ratio", required=True) * osc.Omega
        weight = _number(blk, section, "weight", 1.0)
        r = _number(blk, section, "r", 0.0)
        theta = _number(blk, section, "theta", 0.0)
        try:
            bands.append(BandConfig(Xi=xi, Delta=delta, A=weight, squeeze=squeeze_derive(r, theta)))
        except ValueError as exc:
            raise ConfigError(f"[{section}] {exc}") from exc

    grid_block = cfg.get("grid", {})
    t_max_default = 10.0 / osc.Gamma if osc.Gamma > 0.0 else 1e3 / osc.Omega
    t_min = _number(grid_block, "grid", "t_min", 1e-2 / osc.Omega)
    t_max = _number(grid_block, "grid", "t_max", t_max_default)
    ppd = _get(grid_block, "grid", "points_per_decade", 40)
    if not isinstance(ppd, int) or ppd < 1:
        raise ConfigError("[grid] points_per_decade: expected a positive integer")
    if not (0.0 < t_min < t_max):
        raise ConfigError(f"[grid] need 0 < t_min < t_max, got ({t_min:g}, {t_max:g})")
    grid = GridSpec(t_min=t_min, t_max=t_max, points_per_decade=ppd)

    run_block = cfg.get("run", {})
    method = _get(run_block, "run", "method", "closed_form")
    if method not in ("closed_form", "quadrature", "asymptotic", "monte_carlo"):
        raise ConfigError(f"[run] method: unknown method {method!r}")
    output = _get(run_block, "run", "output", "csv")
    if output not in ("csv", "json"):
        raise ConfigError(f"[run] output: must be 'csv' or 'json', got {output!r}")
    seed = _get(run_block, "run", "seed", 20260810)
    if not isinstance(seed, int):
        raise ConfigError("[run] seed: expected an integer")
    threads = _get(run_block, "run", "threads", None)
    if threads is not None and (not isinstance(threads, int) or threads < 1):
        raise ConfigError("[run] threads: expected a positive integer")

    mc = None
    if "montecarlo" in cfg or method == "monte_carlo":
        mc_block = cfg.get("montecarlo", {})
        duration_default = (
            5.0 / osc.Gamma if osc.Gamma > 0.0 else 100.0 / osc.Omega
        )
        duration = _number(mc_block, "montecarlo", "duration", duration_default)
        # default dt: a quarter of the band Nyquist limit
        dt_default = math.pi / (2.0 * max(b.hi for b in bands)) / 4.0
        dt = _number(mc_block, "montecarlo", "dt", dt_default)
        n_modes = _get(mc_block, "montecarlo", "n_modes", 128)
        n_samples = _get(mc_block, "montecarlo", "n_samples", 1000)
        n_output = _get(mc_block, "montecarlo", "n_output", 50)
        for name, val in (("n_modes", n_modes), ("n_samples", n_samples), ("n_output", n_output)):
            if not isinstance(val, int) or val < 1:
                raise ConfigError(f"[montecarlo] {name}: expected a positive integer")
        if duration <= 0.0 or dt <= 0.0:
            raise ConfigError("[montecarlo] duration and dt must be positive")
        mc = MonteCarloSpec(
            duration=duration, dt=dt, n_modes=n_modes, n_samples=n_samples, n_output=n_output
        )

    energy_block = cfg.get("energy", {})
    energy = EnergySpec(
        omega_bar=_number(energy_block, "energy", "omega_bar"),
        x_phase=_number(energy_block, "energy", "x_phase", 0.0),
        volume=_number(energy_block, "energy", "volume", 1.0),
        points_per_period=_get(energy_block, "energy", "points_per_period", 512),
    )
    if energy.volume <= 0.0:
        raise ConfigError("[energy] volume must be positive")

    return RunConfig(
        oscillator=osc,
        bands=tuple(bands),
        grid=grid,
        method=method,
        output=output,
        seed=seed,
        threads=threads,
        montecarlo=mc,
        energy=energy,
        raw=cfg,
    )


def load_config(path) -> RunConfig:
    """Load a TOML config, a JSON config, or a JSON result file (its embedded config)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    text = blob.decode("utf-8", errors="replace").lstrip()
    if text.startswith("{"):
        obj = json.loads(text)
        if isinstance(obj, dict) and "config" in obj and isinstance(obj["config"], dict):
            obj = obj["config"]
    else:
        try:
            obj = tomllib.loads(blob.decode("utf-8"))
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: TOML parse error: {exc}") from exc
    return parse_config_dict(obj)


def resolve_threads(cli_value: Optional[int], cfg: Optional[RunConfig] = None) -> int:
    """--threads flag, then [run] threads, then the SQNZ_THREADS env var, then 1."""
    if cli_value is not None:
        return max(1, cli_value)
    if cfg is not None and cfg.threads is not None:
        return max(1, cfg.threads)
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"{THREADS_ENV}: expected an integer, got {env!r}") from exc
    return 1


# ---------------------------------------------------------------------------
# output writers
# ---------------------------------------------------------------------------

def format_float(x: float) -> str:
    """17 significant digits: lossless round-trip of binary64."""
    return format(float(x), ".17g")


def _atomic_write(path, data: bytes):
    tmp = f"{path}.tmp-{os.getpid()}"
    try:
        with open(tmp, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def render_csv(columns: list[str], rows: list[list], comments: list[str]) -> bytes:
    lines = [f"# {c}" for c in comments]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(
            ",".join(format_float(v) if isinstance(v, float) else str(v) for v in row)
        )
    return ("\n".join(lines) + "\n").encode()


def write_csv_atomic(path, columns, rows, comments=()):
    _atomic_write(path, render_csv(list(columns), rows, list(comments)))


def write_json_atomic(path, payload: dict):
    _atomic_write(path, (json.dumps(payload, indent=1) + "\n").encode())
