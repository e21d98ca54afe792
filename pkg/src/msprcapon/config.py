"""YAML experiment configs: parsing, validation with line numbers, and echoing.

Powers may be given in dB (``snr_db``, ``inr_db``) or linear (``soi_power``,
``power``). Conversion to linear happens once, here; the echoed form written
to run manifests is always linear so it parses back to an identical config.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any

import yaml

from .beamformers import MsprConfig
from .manifold import AngleGrid, ArrayGeometry
from .metrics import CampaignConfig
from .scene import Interferer, Scene


class ConfigError(ValueError):
    """Malformed config; ``str()`` names the file and line when known."""


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


# Reference scenario: 8-element half-wavelength ULA, SOI at 0 deg with 10 dB SNR,
# interferers at -30/30/70 deg with 20/20/40 dB INR, 100 snapshots.
DEFAULTS: dict[str, Any] = {
    "array": {"num_sensors": 8, "spacing_wavelengths": 0.5},
    "grid": {"step_deg": 1.0},
    "scene": {
        "soi_doa_deg": 0.0,
        "snr_db": 10.0,
        "noise_power": 1.0,
        "num_snapshots": 100,
        "interferers": [
            {"doa_deg": -30.0, "inr_db": 20.0},
            {"doa_deg": 30.0, "inr_db": 20.0},
            {"doa_deg": 70.0, "inr_db": 40.0},
        ],
    },
    "steer_angle_deg": 0.0,
    "half_width_bins": 12,
    "diagonal_loading": 0.0,
    "mspr": {"gamma": 1.0, "max_iterations": 200, "rel_tolerance": 1e-8, "relaxation": 1.0},
    "campaign": {"num_trials": 1000, "master_seed": 2011},
}

_SECTIONS = {
    "array": {"num_sensors", "spacing_wavelengths"},
    "grid": {"step_deg"},
    "scene": {"soi_doa_deg", "snr_db", "soi_power", "noise_power", "num_snapshots", "interferers"},
    "mspr": {"gamma", "max_iterations", "rel_tolerance", "relaxation"},
    "campaign": {"num_trials", "master_seed"},
}
_SCALARS = {"steer_angle_deg", "half_width_bins", "diagonal_loading"}
_INTERFERER_KEYS = {"doa_deg", "inr_db", "power"}


def _line_index(node, path=(), out=None) -> dict[tuple, int]:
    """Map key paths to 1-based source lines from a composed YAML node tree."""
    out = {} if out is None else out
    out.setdefault(path, node.start_mark.line + 1)
    if isinstance(node, yaml.MappingNode):
        for key, value in node.value:
            out[path + (key.value,)] = key.start_mark.line + 1
            _line_index(value, path + (key.value,), out)
    elif isinstance(node, yaml.SequenceNode):
        for i, item in enumerate(node.value):
            _line_index(item, path + (i,), out)
    return out


class _Resolver:
    def __init__(self, data: dict, lines: dict, source: str):
        self.data = data
        self.lines = lines
        self.source = source

    def fail(self, path: tuple, message: str):
        line = None
        for n in range(len(path), -1, -1):
            line = self.lines.get(path[:n])
            if line is not None:
                break
        where = f"{self.source}:{line}" if line else self.source
        key = ".".join(str(p) for p in path)
        raise ConfigError(f"{where}: {key + ': ' if key else ''}{message}")

    def get(self, path: tuple, kind):
        node: Any = self.data
        default: Any = DEFAULTS
        for p in path:
            node = node.get(p) if isinstance(node, dict) else None
            default = default.get(p) if isinstance(default, dict) else None
        value = default if node is None else node
        if value is None:
            return None
        try:
            if kind is int:
                if isinstance(value, bool) or float(value) != int(value):
                    raise ValueError
                return int(value)
            if kind is float and isinstance(value, bool):
                raise ValueError
            return kind(value)
        except (TypeError, ValueError):
            self.fail(path, f"expected {kind.__name__}, got {value!r}")

    def check_keys(self):
        if not isinstance(self.data, dict):
            self.fail((), "top level must be a mapping")
        for key, value in self.data.items():
            if key in _SECTIONS:
                if not isinstance(value, dict):
                    self.fail((key,), "expected a mapping")
                for sub in value:
                    if sub not in _SECTIONS[key]:
                        self.fail((key, sub), "unknown key")
            elif key not in _SCALARS:
                self.fail((key,), "unknown key")

    def interferers(self, noise_power: float) -> list[Interferer]:
        scene = self.data.get("scene") or {}
        raw = scene.get("interferers")
        if raw is None:
            raw = DEFAULTS["scene"]["interferers"]
        if not isinstance(raw, list):
            self.fail(("scene", "interferers"), "expected a list")
        out = []
        for i, item in enumerate(raw):
            path = ("scene", "interferers", i)
            if not isinstance(item, dict):
                self.fail(path, "expected a mapping with doa_deg and inr_db or power")
            unknown = set(item) - _INTERFERER_KEYS
            if unknown:
                self.fail(path + (sorted(unknown)[0],), "unknown key")
            if "doa_deg" not in item or (("inr_db" in item) == ("power" in item)):
                self.fail(path, "needs doa_deg and exactly one of inr_db / power")
            try:
                doa = float(item["doa_deg"])
                if "power" in item:
                    power = float(item["power"])
                else:
                    power = noise_power * db_to_linear(float(item["inr_db"]))
            except (TypeError, ValueError):
                self.fail(path, "interferer values must be numbers")
            out.append(Interferer(doa, power))
        return out

    def resolve(self) -> CampaignConfig:
        self.check_keys()
        g = self.get
        scene_in = self.data.get("scene") or {}
        if "snr_db" in scene_in and "soi_power" in scene_in:
            self.fail(("scene", "soi_power"), "give either snr_db or soi_power, not both")
        noise = g(("scene", "noise_power"), float)
        if "soi_power" in scene_in:
            soi_power = g(("scene", "soi_power"), float)
        else:
            # SNR is relative to the per-sensor noise power
            soi_power = noise * db_to_linear(g(("scene", "snr_db"), float))
        interferers = self.interferers(noise)

        def build(path, fn):
            try:
                return fn()
            except ConfigError:
                raise
            except ValueError as exc:
                self.fail(path, str(exc))

        geometry = build(("array",), lambda: ArrayGeometry(
            g(("array", "num_sensors"), int), g(("array", "spacing_wavelengths"), float)))
        grid = build(("grid",), lambda: AngleGrid.uniform(g(("grid", "step_deg"), float)))
        scene = build(("scene",), lambda: Scene(
            soi_doa_deg=g(("scene", "soi_doa_deg"), float),
            soi_power=soi_power,
            interferers=tuple(interferers),
            noise_power=noise,
            num_snapshots=g(("scene", "num_snapshots"), int),
        ))
        mspr = build(("mspr",), lambda: MsprConfig(
            gamma=g(("mspr", "gamma"), float),
            max_iterations=g(("mspr", "max_iterations"), int),
            rel_tolerance=g(("mspr", "rel_tolerance"), float),
            relaxation=g(("mspr", "relaxation"), float),
        ))
        return build(("steer_angle_deg",), lambda: CampaignConfig(
            scene=scene,
            geometry=geometry,
            grid=grid,
            steer_angle_deg=g(("steer_angle_deg",), float),
            half_width_bins=g(("half_width_bins",), int),
            mspr=mspr,
            num_trials=g(("campaign", "num_trials"), int),
            master_seed=g(("campaign", "master_seed"), int),
            diagonal_loading=g(("diagonal_loading",), float),
        ))


def parse_config(text: str, source: str = "<config>") -> CampaignConfig:
    """Parse YAML text. A run manifest (with a top-level ``config`` key) is accepted too."""
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{source}:{mark.line + 1}" if mark else source
        raise ConfigError(f"{where}: invalid YAML: {getattr(exc, 'problem', exc)}") from None
    if data is None:
        data, lines = {}, {}
    else:
        lines = _line_index(node)
    if isinstance(data, dict) and "config" in data and isinstance(data["config"], dict):
        data = data["config"]
        lines = {k[1:]: v for k, v in lines.items() if k[:1] == ("config",)}
    return _Resolver(data, lines, source).resolve()


def load_config(path) -> CampaignConfig:
    path = Path(path)
    return parse_config(path.read_text(), str(path))


def config_to_dict(config: CampaignConfig) -> dict[str, Any]:
    """Fully resolved, linear-power form of ``config``; round-trips through parse_config."""
    s = config.scene
    return {
        "array": {
            "num_sensors": config.geometry.num_sensors,
            "spacing_wavelengths": float(config.geometry.spacing_wavelengths),
        },
        "grid": {"step_deg": float(config.grid.step_deg)},
        "scene": {
            "soi_doa_deg": float(s.soi_doa_deg),
            "soi_power": float(s.soi_power),
            "noise_power": float(s.noise_power),
            "num_snapshots": int(s.num_snapshots),
            "interferers": [{"doa_deg": float(i.doa_deg), "power": float(i.power)} for i in s.interferers],
        },
        "steer_angle_deg": float(config.steer_angle_deg),
        "half_width_bins": int(config.half_width_bins),
        "diagonal_loading": float(config.diagonal_loading),
        "mspr": {
            "gamma": float(config.mspr.gamma),
            "max_iterations": int(config.mspr.max_iterations),
            "rel_tolerance": float(config.mspr.rel_tolerance),
            "relaxation": float(config.mspr.relaxation),
        },
        "campaign": {"num_trials": int(config.num_trials), "master_seed": int(config.master_seed)},
    }
