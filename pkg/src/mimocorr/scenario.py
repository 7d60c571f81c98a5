"""Scenario configuration files.

A scenario is a YAML mapping. Angles are given in degrees and converted
to radians on load; lengths are in wavelengths. Example::

    format_version: 1
    scenario: single_cluster
    seed: 2006
    trials: 20000
    snr_db: [0, 5, 10, 15, 20, 25, 30]
    variants: [exact, kronecker, iid]
    tx_array: {type: uca, elements: 3, radius: 0.5}
    rx_array: {type: uca, elements: 3, radius: 0.5}
    psd:
      - id: sigma_r_30
        family: gaussian
        mean_departure: 90
        mean_arrival: 90
        spread_t: 10
        spread_r: 30
        rho: 0.8
    outputs:
      dir: results/single_cluster
      psd_grid: {resolution: 181, variants: [exact, kronecker]}
"""
import math
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .capacity import DEFAULT_TRIALS
from .errors import MimoCorrError
from .geometry import ArrayGeometry, AntennaPosition, uniform_circular_array
from .psd import BiAngularPsd, MixturePsd, PsdParams, make_psd

__all__ = ["ConfigError", "PsdCase", "Scenario", "load_scenario", "parse_scenario",
           "FORMAT_VERSION", "VARIANTS"]

FORMAT_VERSION = 1
VARIANTS = ("exact", "kronecker", "iid")
_TOP_KEYS = {"format_version", "scenario", "seed", "trials", "snr_db", "variants", "method",
             "tx_array", "rx_array", "psd", "outputs"}
_CLUSTER_KEYS = {"id", "family", "mean_departure", "mean_arrival", "spread_t", "spread_r", "rho"}


class ConfigError(MimoCorrError, ValueError):
    """A scenario file is malformed; `field` names the offending entry."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class PsdCase:
    id: str
    psd: BiAngularPsd
    spec: dict


@dataclass(frozen=True)
class Scenario:
    scenario_id: str
    tx_array: ArrayGeometry
    rx_array: ArrayGeometry
    cases: tuple
    snr_db: tuple
    trials: int = DEFAULT_TRIALS
    seed: int = 0
    variants: tuple = VARIANTS
    method: str = "quadrature"
    out_dir: str = "results"
    psd_grid: dict = field(default=None)
    source: dict = field(default=None, repr=False, compare=False)


def _require(mapping, key, where):
    if key not in mapping:
        raise ConfigError(f"{where}.{key}" if where else key, "missing required field")
    return mapping[key]


def _number(value, where, integer=False, minimum=None):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(where, f"expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(where, "must be finite")
    if integer and int(value) != value:
        raise ConfigError(where, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(where, f"must be >= {minimum}, got {value!r}")
    return int(value) if integer else float(value)


def _check_keys(mapping, allowed, where):
    if not isinstance(mapping, dict):
        raise ConfigError(where, "expected a mapping")
    unknown = sorted(set(mapping) - allowed)
    if unknown:
        raise ConfigError(f"{where}.{unknown[0]}" if where else unknown[0], "unknown field")


def _parse_array(spec, where):
    _check_keys(spec, {"type", "elements", "radius", "positions", "aperture_radius"}, where)
    kind = spec.get("type", "uca")
    try:
        if kind == "uca":
            n = _number(_require(spec, "elements", where), f"{where}.elements", True, 1)
            radius = _number(_require(spec, "radius", where), f"{where}.radius", minimum=0)
            array = uniform_circular_array(n, radius)
            if "aperture_radius" in spec:
                aperture = _number(spec["aperture_radius"], f"{where}.aperture_radius", minimum=0)
                array = ArrayGeometry(array.positions, aperture)
            return array
        if kind == "custom":
            positions = _require(spec, "positions", where)
            if not isinstance(positions, list) or not positions:
                raise ConfigError(f"{where}.positions", "expected a non-empty list of [radius, azimuth_deg]")
            parsed = []
            for i, pair in enumerate(positions):
                if not isinstance(pair, (list, tuple)) or len(pair) != 2:
                    raise ConfigError(f"{where}.positions[{i}]", "expected [radius, azimuth_deg]")
                r = _number(pair[0], f"{where}.positions[{i}][0]", minimum=0)
                az = _number(pair[1], f"{where}.positions[{i}][1]")
                parsed.append(AntennaPosition(r, math.radians(az)))
            aperture = spec.get("aperture_radius")
            if aperture is not None:
                aperture = _number(aperture, f"{where}.aperture_radius", minimum=0)
            return ArrayGeometry(tuple(parsed), aperture)
    except MimoCorrError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(where, str(exc)) from None
    raise ConfigError(f"{where}.type", f"unknown array type {kind!r} (use 'uca' or 'custom')")


def _parse_cluster(spec, where):
    _check_keys(spec, _CLUSTER_KEYS, where)
    family = _require(spec, "family", where)
    values = {}
    for key in ("mean_departure", "mean_arrival", "spread_t", "spread_r"):
        values[key] = math.radians(_number(_require(spec, key, where), f"{where}.{key}"))
    rho = _number(spec.get("rho", 0.0), f"{where}.rho")
    if abs(rho) > 1:
        raise ConfigError(f"{where}.rho", f"must lie in [-1, 1], got {rho}")
    for key in ("spread_t", "spread_r"):
        if values[key] <= 0:
            raise ConfigError(f"{where}.{key}", "must be positive")
    try:
        return make_psd(family, PsdParams(rho=rho, **values))
    except MimoCorrError as exc:
        message = str(exc)
        culprit = next((k for k in ("rho", "family", "spread") if k in message), None)
        if culprit == "spread":
            culprit = "spread_t" if values["spread_t"] > math.pi else "spread_r"
        raise ConfigError(f"{where}.{culprit}" if culprit else where, message) from None


def _parse_psd(spec, where):
    if not isinstance(spec, dict):
        raise ConfigError(where, "expected a mapping")
    if spec.get("family") != "mixture":
        return _parse_cluster({k: v for k, v in spec.items() if k != "id"}, where)
    _check_keys(spec, {"id", "family", "components", "weights"}, where)
    comps = _require(spec, "components", where)
    if not isinstance(comps, list) or not comps:
        raise ConfigError(f"{where}.components", "expected a non-empty list")
    psds = [_parse_cluster(c, f"{where}.components[{i}]") for i, c in enumerate(comps)]
    weights = spec.get("weights")
    if weights is None:
        return MixturePsd.equal_weights(psds)
    if not isinstance(weights, list) or len(weights) != len(psds):
        raise ConfigError(f"{where}.weights", "expected one weight per component")
    weights = [_number(w, f"{where}.weights[{i}]") for i, w in enumerate(weights)]
    try:
        return MixturePsd(tuple(zip(weights, psds)))
    except MimoCorrError as exc:
        raise ConfigError(f"{where}.weights", str(exc)) from None


def parse_scenario(data, default_id="scenario"):
    """Validate a decoded YAML mapping and build a :class:`Scenario`."""
    _check_keys(data, _TOP_KEYS, "")
    version = data.get("format_version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise ConfigError("format_version", f"unsupported version {version!r}")
    scenario_id = str(data.get("scenario", default_id))
    seed = _number(data.get("seed", 0), "seed", True, 0)
    trials = _number(data.get("trials", DEFAULT_TRIALS), "trials", True, 1)
    snr = _require(data, "snr_db", "")
    if not isinstance(snr, list) or not snr:
        raise ConfigError("snr_db", "expected a non-empty list")
    snr = tuple(_number(s, f"snr_db[{i}]") for i, s in enumerate(snr))
    variants = data.get("variants", list(VARIANTS))
    if not isinstance(variants, list) or not variants:
        raise ConfigError("variants", "expected a non-empty list")
    for i, v in enumerate(variants):
        if v not in VARIANTS:
            raise ConfigError(f"variants[{i}]", f"unknown variant {v!r}")
    method = data.get("method", "quadrature")
    if method not in ("quadrature", "closed-form"):
        raise ConfigError("method", f"unknown method {method!r}")

    tx = _parse_array(_require(data, "tx_array", ""), "tx_array")
    rx = _parse_array(_require(data, "rx_array", ""), "rx_array")

    psd_spec = _require(data, "psd", "")
    specs = psd_spec if isinstance(psd_spec, list) else [psd_spec]
    if not specs:
        raise ConfigError("psd", "expected at least one density")
    cases, seen = [], set()
    for i, spec in enumerate(specs):
        where = f"psd[{i}]" if isinstance(psd_spec, list) else "psd"
        psd = _parse_psd(spec, where)
        case_id = str(spec.get("id", f"case{i}"))
        if case_id in seen:
            raise ConfigError(f"{where}.id", f"duplicate id {case_id!r}")
        seen.add(case_id)
        if method == "closed-form" and not psd.is_single_family:
            raise ConfigError("method", f"closed-form is unavailable for the mixture in {where}")
        cases.append(PsdCase(case_id, psd, spec))

    outputs = data.get("outputs", {}) or {}
    _check_keys(outputs, {"dir", "psd_grid"}, "outputs")
    grid = outputs.get("psd_grid")
    if grid is not None:
        _check_keys(grid, {"resolution", "variants"}, "outputs.psd_grid")
        resolution = _number(grid.get("resolution", 181), "outputs.psd_grid.resolution", True, 3)
        grid_variants = grid.get("variants", ["exact", "kronecker"])
        for i, v in enumerate(grid_variants):
            if v not in ("exact", "kronecker"):
                raise ConfigError(f"outputs.psd_grid.variants[{i}]", f"unknown variant {v!r}")
        grid = {"resolution": resolution, "variants": list(grid_variants)}

    return Scenario(scenario_id, tx, rx, tuple(cases), snr, trials, seed, tuple(variants),
                    method, str(outputs.get("dir", "results")), grid, data)


def load_scenario(path):
    """Read and validate a scenario file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(str(path), f"invalid YAML: {exc}") from None
    return parse_scenario(data, default_id=path.stem)
