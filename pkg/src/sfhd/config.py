"""JSON run configuration shared by the command-line tools.

Layout::

    {
      "model":      {"alpha": 0.8, "beta": 1.0, "c": 1.0, "d_coef": 1.0},
      "measure":    {"discrete": {"atoms": [[mu, sigma], ...], "mass_convention": "sigma"}}
                    or {"matern": {"sigma2": 1, "a": 1, "nu": 2}},
      "kernel":     {"n_terms": 80, "m_terms": 80, ...},
      "simulation": {"l_max": 100, "seed": 0, "times": [0, 0.05], ...},
      "output":     {"dir": "out"},
      "verify":     {"tolerance_scale": 1.0, "mc_seeds": 200}
    }

``mass_convention`` says whether the second entry of each atom is a standard
deviation (``"sigma"``, squared to give the mass) or the mass itself
(``"sigma2"``).
"""

from __future__ import annotations

import copy
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from typing import Any

from .fieldsim import SimulationConfig
from .kernel import KernelConfig, ModelParams
from .spectra import DiscreteMeasure, MaternSpectrum

__all__ = [
    "ConfigError",
    "RunConfig",
    "VerifyConfig",
    "default_config_dict",
    "load_config",
    "apply_overrides",
    "parse_number_list",
    "format_float",
]


class ConfigError(ValueError):
    """Invalid or unreadable configuration."""


def format_float(x: float) -> str:
    """Shortest round-tripping decimal, with a trailing ``.0`` dropped (``1.0`` -> ``1``)."""
    x = float(x)
    if x == 0.0:
        return "0"
    s = repr(x)
    if s.endswith(".0"):
        s = s[:-2]
    return s


def parse_number_list(text: str) -> list[float]:
    """Comma-separated numbers; a token ``a:b:n`` expands to ``n`` evenly spaced values."""
    out: list[float] = []
    for tok in str(text).split(","):
        tok = tok.strip()
        if not tok:
            continue
        if ":" in tok:
            parts = tok.split(":")
            if len(parts) != 3:
                raise ConfigError(f"range token must be start:stop:count, got {tok!r}")
            a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
            if n < 1:
                raise ConfigError(f"range count must be >= 1, got {tok!r}")
            out.extend([a] if n == 1 else [a + (b - a) * k / (n - 1) for k in range(n)])
        else:
            try:
                out.append(float(tok))
            except ValueError as exc:
                raise ConfigError(f"not a number: {tok!r}") from exc
    if not out:
        raise ConfigError("empty number list")
    return out


def default_config_dict() -> dict:
    """Ten atoms ``mu_i = 1 + 4(i-1)``, ``sigma_i = 100/i``; alpha 0.8, beta 1, c = D = 1."""
    return {
        "model": {"alpha": 0.8, "beta": 1.0, "c": 1.0, "d_coef": 1.0},
        "measure": {
            "discrete": {
                "atoms": [[1.0 + 4.0 * (i - 1), 100.0 / i] for i in range(1, 11)],
                "mass_convention": "sigma",
            }
        },
        "kernel": KernelConfig().to_dict(),
        "simulation": {
            "l_max": 100,
            "seed": 0,
            "times": [0.0, 0.05],
            "grid_n_theta": 128,
            "grid_n_phi": 256,
        },
        "output": {"dir": "sfhd_out"},
        "verify": {"tolerance_scale": 1.0, "mc_seeds": 200},
    }


@dataclass(frozen=True)
class VerifyConfig:
    tolerance_scale: float = 1.0
    mc_seeds: int = 200


@dataclass
class RunConfig:
    model: ModelParams
    measure: DiscreteMeasure | MaternSpectrum
    kernel: KernelConfig
    simulation: SimulationConfig | None
    output_dir: str
    verify: VerifyConfig = field(default_factory=VerifyConfig)
    raw: dict = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("configuration root must be a JSON object")
        known = {"model", "measure", "kernel", "simulation", "output", "verify"}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown configuration section(s): {', '.join(sorted(extra))}")
        for name in ("model", "measure", "output"):
            if name not in data:
                raise ConfigError(f"{name}: section is required")
        model = _build("model", ModelParams, data["model"])
        measure = _build_measure(data["measure"])
        kernel = _build("kernel", KernelConfig, data.get("kernel", {}))
        sim = None
        if data.get("simulation") is not None:
            s = dict(_section("simulation", data["simulation"]))
            if "times" in s:
                if not isinstance(s["times"], list):
                    raise ConfigError("simulation.times: must be a list of numbers")
                s["times"] = tuple(s["times"])
            sim = _build("simulation", SimulationConfig, s)
        out = _section("output", data["output"])
        if set(out) - {"dir"} or not isinstance(out.get("dir"), str) or not out["dir"]:
            raise ConfigError("output.dir: a nonempty path string is required")
        verify = _build("verify", VerifyConfig, data.get("verify", {}))
        if not (verify.tolerance_scale > 0):
            raise ConfigError("verify.tolerance_scale: must be > 0")
        if not (isinstance(verify.mc_seeds, int) and verify.mc_seeds >= 2):
            raise ConfigError("verify.mc_seeds: must be an integer >= 2")
        return cls(model, measure, kernel, sim, out["dir"], verify, copy.deepcopy(data))

    def to_dict(self) -> dict:
        d: dict[str, Any] = {"model": self.model.to_dict()}
        if isinstance(self.measure, MaternSpectrum):
            m = self.measure
            d["measure"] = {"matern": {"sigma2": m.sigma2, "a": m.a, "nu": m.nu}}
        else:
            d["measure"] = {
                "discrete": {"atoms": [[mu, s2] for mu, s2 in self.measure.atoms], "mass_convention": "sigma2"}
            }
        d["kernel"] = self.kernel.to_dict()
        if self.simulation is not None:
            s = self.simulation
            d["simulation"] = {
                "l_max": s.l_max,
                "seed": s.seed,
                "times": list(s.times),
                "grid_n_theta": s.grid_n_theta,
                "grid_n_phi": s.grid_n_phi,
            }
        d["output"] = {"dir": self.output_dir}
        d["verify"] = {"tolerance_scale": self.verify.tolerance_scale, "mc_seeds": self.verify.mc_seeds}
        return d

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def check_output_dir(self) -> None:
        """Create ``output_dir`` if needed and confirm it is writable."""
        try:
            os.makedirs(self.output_dir, exist_ok=True)
            with tempfile.NamedTemporaryFile(dir=self.output_dir, prefix=".sfhd-probe-"):
                pass
        except OSError as exc:
            raise ConfigError(f"output.dir: {self.output_dir!r} is not writable ({exc.strerror or exc})") from exc


def _section(name, value) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{name}: section must be a JSON object")
    return value


def _build(name, cls, value):
    value = _section(name, value)
    fields = set(cls.__dataclass_fields__)
    extra = set(value) - fields
    if extra:
        raise ConfigError(f"{name}.{sorted(extra)[0]}: unknown field")
    try:
        return cls(**value)
    except ValueError as exc:
        msg = str(exc)
        raise ConfigError(msg if msg.startswith(name + ".") else f"{name}.{msg}") from exc
    except TypeError as exc:
        raise ConfigError(f"{name}: {exc}") from exc


def _build_measure(value) -> DiscreteMeasure | MaternSpectrum:
    value = _section("measure", value)
    kinds = [k for k in ("discrete", "matern") if k in value]
    if len(kinds) != 1 or set(value) - {"discrete", "matern"}:
        raise ConfigError("measure: exactly one of 'discrete' or 'matern' is required")
    if kinds[0] == "matern":
        m = _section("measure.matern", value["matern"])
        extra = set(m) - {"sigma2", "a", "nu"}
        if extra:
            raise ConfigError(f"measure.matern.{sorted(extra)[0]}: unknown field")
        try:
            return MaternSpectrum(**{k: m[k] for k in ("sigma2", "a", "nu") if k in m})
        except TypeError as exc:
            raise ConfigError(f"measure.matern: {exc}") from exc
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    d = _section("measure.discrete", value["discrete"])
    extra = set(d) - {"atoms", "mass_convention"}
    if extra:
        raise ConfigError(f"measure.discrete.{sorted(extra)[0]}: unknown field")
    conv = d.get("mass_convention", "sigma")
    if conv not in ("sigma", "sigma2"):
        raise ConfigError("measure.discrete.mass_convention: must be 'sigma' or 'sigma2'")
    atoms = d.get("atoms")
    if not isinstance(atoms, list) or not atoms:
        raise ConfigError("measure.discrete.atoms: a nonempty list of [mu, value] pairs is required")
    pairs = []
    for i, a in enumerate(atoms):
        if not (isinstance(a, (list, tuple)) and len(a) == 2 and all(_is_num(v) for v in a)):
            raise ConfigError(f"measure.discrete.atoms[{i}]: must be a [mu, value] pair of numbers")
        mu, v = float(a[0]), float(a[1])
        if not (math.isfinite(v) and v > 0):
            raise ConfigError(f"measure.discrete.atoms[{i}]: {conv} must be finite and > 0 (got {v!r})")
        pairs.append((mu, v * v if conv == "sigma" else v))
    try:
        return DiscreteMeasure(tuple(pairs))
    except ValueError as exc:
        raise ConfigError(str(exc).replace("measure.", "measure.discrete.", 1)) from exc


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def apply_overrides(data: dict, overrides: list[tuple[str, str]]) -> dict:
    """Set dotted paths (``model.alpha``) to JSON-decoded values (bare strings kept as text)."""
    data = copy.deepcopy(data)
    for path, text in overrides:
        keys = [k for k in path.split(".") if k]
        if not keys:
            raise ConfigError(f"bad override path {path!r}")
        try:
            value = json.loads(text)
        except json.JSONDecodeError:
            value = text
        node = data
        for k in keys[:-1]:
            nxt = node.get(k)
            if not isinstance(nxt, dict):
                nxt = {}
                node[k] = nxt
            node = nxt
        node[keys[-1]] = value
    return data


def load_config(path: str | None, overrides: list[tuple[str, str]] | None = None) -> RunConfig:
    """Read ``path`` (or the built-in default when ``None``), apply overrides, validate."""
    if path is None:
        data = default_config_dict()
    else:
        try:
            with open(path) as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path!r}: {exc.strerror or exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path!r} is not valid JSON: {exc}") from exc
    if overrides:
        data = apply_overrides(data, overrides)
    return RunConfig.from_dict(data)
