"""INI experiment configuration with strict key validation.

Sections: ``[model] [coeffs] [grid] [mc] [experiment]``.  Unknown sections
or keys raise :class:`ConfigError`, so a typo never silently falls back to a
default.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

ALLOWED = {
    "model": {"kind", "domain", "rho", "tail_tol", "n_cov"},
    "coeffs": {"rule", "exponent", "scale", "a0", "k_max", "alpha"},
    "grid": {"n", "rect", "mode", "gamma", "rho", "levels"},
    "mc": {"paths", "seed", "dim", "threads"},
    "experiment": {"name", "out", "alpha", "bc", "modes", "beta", "q", "level", "theta", "values", "min_slope"},
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    name: str = ""
    model: dict = field(default_factory=dict)
    coeffs: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    mc: dict = field(default_factory=dict)
    experiment: dict = field(default_factory=dict)
    source: Optional[str] = None

    @property
    def seed(self) -> int:
        return int(self.mc.get("seed", 0))

    @property
    def out_dir(self) -> Path:
        return Path(self.experiment.get("out", "."))

    def to_dict(self):
        return {
            "name": self.name,
            "model": dict(self.model),
            "coeffs": dict(self.coeffs),
            "grid": dict(self.grid),
            "mc": dict(self.mc),
            "experiment": dict(self.experiment),
            "source": self.source,
        }


def validate(sections: dict) -> None:
    for sec, items in sections.items():
        if sec not in ALLOWED:
            raise ConfigError(f"unknown section [{sec}]")
        for key in items:
            if sec == "model" and key.startswith("params."):
                continue
            if key not in ALLOWED[sec]:
                raise ConfigError(f"unknown key {key!r} in [{sec}]")
    model = sections.get("model")
    if model is not None and "kind" not in model:
        raise ConfigError("[model] needs a kind")


def from_sections(sections: dict, source: Optional[str] = None) -> ExperimentConfig:
    validate(sections)
    get = lambda s: {k: str(v) for k, v in sections.get(s, {}).items()}  # noqa: E731
    exp = get("experiment")
    return ExperimentConfig(exp.get("name", ""), get("model"), get("coeffs"), get("grid"), get("mc"), exp, source)


def load_config(path) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keep params.H case
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(str(exc)) from exc
    sections = {s: dict(parser[s]) for s in parser.sections()}
    return from_sections(sections, str(path))


def parse_model_arg(text: str):
    """``"FBM:H=0.3"`` or ``"RFS:exponent=1.8"`` -> ``(model, coeffs)`` sections.

    Keys named in ``[coeffs]`` go there; everything else becomes ``params.*``.
    Top-level model keys (``domain``, ``n_cov``, ...) are recognised by name.
    """
    kind, _, rest = text.partition(":")
    model, coeffs = {"kind": kind.strip()}, {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        if "=" not in item:
            raise ConfigError(f"bad model parameter {item!r}, expected key=value")
        k, v = (x.strip() for x in item.split("=", 1))
        if k in ALLOWED["model"]:
            model[k] = v
        elif k in ALLOWED["coeffs"] and kind.strip() == "RFS":
            coeffs[k] = v
        else:
            model[f"params.{k}"] = v
    if kind.strip() == "RFS":
        coeffs.setdefault("rule", "power_law")
    return model, coeffs
