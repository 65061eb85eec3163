"""Plain-text run configuration.

Files hold ``key = value`` lines grouped under section headers::

    [channel]
    kind = y_flip
    p = 0.1

    [detection]
    loss_db = 20

    [run]
    protection = 1,5,9
    seed = 7

Unknown sections or keys and duplicate keys are rejected. Values left out
fall back to the detector defaults (efficiency 0.5, receiver loss 8 dB,
dark-count probability 5e-6 per gate).
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .channels import PauliChannel, y_flip
from .errors import QkdError
from .protocol import (
    DEFAULT_DARK_COUNT_PROB,
    DEFAULT_EFFICIENCY,
    DEFAULT_RECEIVER_LOSS_DB,
    SimulationConfig,
    photon_number_loss_db,
    pulses_for_sifted,
)
from .security import bb84_channel, six_state_channel
from .twirl import TwirlSet, default_protection, standard_2design

COMMANDS = ("twirl-check", "discriminate", "qber-sweep", "thresholds", "simulate", "distill")


class ConfigError(QkdError):
    """Raised for malformed or invalid configuration.

    ``lineno`` is set for syntax problems, ``key`` for validation failures.
    """

    def __init__(self, message: str, lineno: int | None = None, key: str | None = None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno
        self.key = key


def _float_list(s: str) -> list[float]:
    return [float(v) for v in s.replace(";", ",").split(",") if v.strip()]


def _int_list(s: str) -> list[int]:
    return [int(v) for v in s.replace(";", ",").split(",") if v.strip()]


def _nonneg(conv):
    def check(s):
        v = conv(s)
        if v < 0:
            raise ValueError("must be nonnegative")
        return v

    return check


def _prob(s):
    v = float(s)
    if not 0 <= v <= 1:
        raise ValueError("must lie in [0, 1]")
    return v


def _positive_int(s):
    v = int(s)
    if v < 1:
        raise ValueError("must be at least 1")
    return v


def _seed(s):
    v = int(s)
    if not 0 <= v < 2**64:
        raise ValueError("must be an unsigned 64-bit integer")
    return v


SCHEMA: dict[str, dict[str, Callable[[str], Any]]] = {
    "channel": {
        "kind": str,
        "p": _prob,
        "probs": _float_list,
        "qber": _prob,
        "x": _prob,
    },
    "detection": {
        "loss_db": _nonneg(float),
        "receiver_loss_db": _nonneg(float),
        "efficiency": _prob,
        "dark_count_prob": _prob,
        "mean_photon_number": _nonneg(float),
    },
    "run": {
        "protocol": str,
        "n_pulses": _positive_int,
        "n_sifted": _positive_int,
        "protection": str,
        "seed": _seed,
        "workers": _positive_int,
    },
    "sweep": {
        "p": _float_list,
        "loss_db": _float_list,
        "protection": str,
    },
    "discriminate": {
        "p_min": float,
        "p_max": float,
        "steps": _positive_int,
        "ensemble": str,
    },
    "distill": {
        "k": _int_list,
        "error_rate": _prob,
        "n_bits": _positive_int,
    },
}


def parse_config_text(text: str, source: str = "<config>") -> dict[str, dict[str, Any]]:
    """Parse and type-check a configuration file body."""
    parser = configparser.ConfigParser(delimiters=("=",), comment_prefixes=("#", ";"), interpolation=None, strict=True)
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.DuplicateOptionError as e:
        raise ConfigError(f"duplicate key {e.option!r} in [{e.section}]", lineno=e.lineno, key=e.option) from None
    except configparser.DuplicateSectionError as e:
        raise ConfigError(f"duplicate section [{e.section}]", lineno=e.lineno) from None
    except configparser.MissingSectionHeaderError as e:
        raise ConfigError("key outside of any [section]", lineno=e.lineno) from None
    except configparser.ParsingError as e:
        lineno = e.errors[0][0] if e.errors else None
        raise ConfigError("expected 'key = value'", lineno=lineno) from None
    out: dict[str, dict[str, Any]] = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]", key=section)
        out[section] = {}
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]", key=key)
            try:
                out[section][key] = SCHEMA[section][key](raw)
            except ValueError as e:
                raise ConfigError(f"invalid value for {key}: {raw!r} ({e})", key=key) from None
    return out


def load_config(path: str | Path) -> dict[str, dict[str, Any]]:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {p}: {e.strerror}") from None
    return parse_config_text(text, source=str(p))


def parse_protection(spec: str | None) -> TwirlSet | None:
    """``none``/``off``, ``default`` (U1,U5,U9), ``full`` or comma-separated design indices."""
    if spec is None:
        return None
    v = spec.strip().lower()
    if v in ("", "none", "off", "false"):
        return None
    if v in ("default", "on", "true", "three"):
        return default_protection()
    if v in ("full", "design", "2design"):
        return standard_2design()
    try:
        return TwirlSet.from_labels(_int_list(v))
    except ValueError as e:
        raise ConfigError(f"invalid protection {spec!r}: {e}", key="protection") from None


def build_channel(section: dict[str, Any]) -> PauliChannel:
    kind = section.get("kind", "y_flip")
    try:
        if kind == "y_flip":
            return y_flip(section.get("p", 0.0))
        if kind == "pauli":
            if "probs" not in section:
                raise ConfigError("pauli channel needs probs = p0, px, py, pz", key="probs")
            return PauliChannel(np.array(section["probs"]))
        if kind == "bb84":
            return bb84_channel(section.get("qber", 0.0), section.get("x", 0.0))
        if kind == "six_state":
            return six_state_channel(section.get("qber", 0.0))
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(f"invalid channel parameters: {e}", key="channel") from None
    raise ConfigError(f"unknown channel kind {kind!r}", key="kind")


@dataclass
class RunSpec:
    command: str
    params: dict[str, Any] = field(default_factory=dict)
    output_path: Path | None = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}", key="command")


def simulation_config(cfg: dict[str, dict[str, Any]], overrides: dict[str, Any] | None = None) -> SimulationConfig:
    """Assemble a validated SimulationConfig; ``overrides`` wins over file values."""
    ch = dict(cfg.get("channel", {}))
    det = dict(cfg.get("detection", {}))
    run = dict(cfg.get("run", {}))
    for k, v in (overrides or {}).items():
        if v is None:
            continue
        if k in SCHEMA["run"]:
            run[k] = v
            if k in ("n_pulses", "n_sifted"):
                run.pop("n_sifted" if k == "n_pulses" else "n_pulses", None)
        elif k in SCHEMA["detection"]:
            det[k] = v
        elif k in SCHEMA["channel"]:
            ch[k] = v
        else:
            raise ConfigError(f"unknown override {k!r}", key=k)
    loss = det.get("loss_db", 0.0)
    if "mean_photon_number" in det:
        loss += photon_number_loss_db(det["mean_photon_number"])
    protocol = run.get("protocol", "bb84")
    if protocol not in ("bb84", "two-state"):
        raise ConfigError(f"unknown protocol {protocol!r}", key="protocol")
    try:
        sim = SimulationConfig(
            protocol=protocol,
            n_pulses=run.get("n_pulses", 1_000_000),
            channel=build_channel(ch),
            protection=parse_protection(run.get("protection")),
            loss_db=loss,
            receiver_loss_db=det.get("receiver_loss_db", DEFAULT_RECEIVER_LOSS_DB),
            detector_efficiency=det.get("efficiency", DEFAULT_EFFICIENCY),
            dark_count_prob=det.get("dark_count_prob", DEFAULT_DARK_COUNT_PROB),
            seed=run.get("seed", 0),
            workers=run.get("workers", 1),
        )
    except ValueError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(str(e)) from None
    if "n_sifted" in run and "n_pulses" not in run:
        sim = replace(sim, n_pulses=pulses_for_sifted(sim, run["n_sifted"]))
    return sim
