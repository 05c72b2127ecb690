"""Experiment configuration: key=value files, flag overrides, stable hashing."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, fields

from .montecarlo import CHANNELS, ExperimentPlan
from .noise import NoiseParams

_NOISE_KEYS = ("p_loss", "p_b", "p_dep", "p_Z_spin", "p_X_photon", "p_Z_photon",
               "p_blink", "blink_rate", "kappa_bar")
_BOOL_KEYS = ("bias_after_loss", "reinit_after_zz_only", "buffer_noise")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    """Flat configuration mirroring one ExperimentPlan plus output options."""

    channel: str = "loss"
    grid: tuple = ()
    lattice_sizes: tuple = (3, 5)
    n_attempts: int = 8
    trials: int = 2000
    master_seed: int = 2024
    bias_after_loss: bool = True
    reinit_after_zz_only: bool = False
    buffer_noise: bool = True
    matcher: str = "exact"
    noise: dict = field(default_factory=dict)

    def normalised_items(self):
        items = [("channel", self.channel),
                 ("grid", ",".join(f"{g:.10g}" for g in self.grid)),
                 ("lattice_sizes", ",".join(str(x) for x in self.lattice_sizes)),
                 ("n_attempts", str(self.n_attempts)),
                 ("trials", str(self.trials)),
                 ("master_seed", str(self.master_seed)),
                 ("bias_after_loss", str(int(self.bias_after_loss))),
                 ("reinit_after_zz_only", str(int(self.reinit_after_zz_only))),
                 ("buffer_noise", str(int(self.buffer_noise))),
                 ("matcher", self.matcher)]
        for k in _NOISE_KEYS:
            if k in self.noise:
                items.append((k, f"{self.noise[k]:.10g}"))
        return items

    def config_hash(self) -> str:
        text = "\n".join(f"{k}={v}" for k, v in self.normalised_items())
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def to_text(self) -> str:
        return "\n".join(f"{k}={v}" for k, v in self.normalised_items()) + "\n"

    def plan(self) -> ExperimentPlan:
        if not self.grid:
            raise ConfigError("no sweep grid configured")
        return ExperimentPlan(
            channel=self.channel, grid=tuple(self.grid),
            lattice_sizes=tuple(self.lattice_sizes), n_attempts=self.n_attempts,
            trials=self.trials, master_seed=self.master_seed,
            base_noise=NoiseParams(**self.noise),
            bias_after_loss=self.bias_after_loss,
            reinit_after_zz_only=self.reinit_after_zz_only,
            buffer_noise=self.buffer_noise, matcher=self.matcher)


def parse_grid(text: str) -> tuple:
    """'start:stop:step' (inclusive ends, within fp tolerance) or 'a,b,c'."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"grid range must be start:stop:step, got {text!r}")
        start, stop, step = (float(x) for x in parts)
        if step <= 0 or stop < start:
            raise ConfigError("grid range must increase")
        n = int(round((stop - start) / step))
        vals = [start + i * step for i in range(n + 1)]
        return tuple(round(v, 12) for v in vals)
    return tuple(float(x) for x in text.split(",") if x.strip())


def _parse_value(key: str, val: str):
    if key in ("channel", "matcher"):
        return val
    if key == "grid":
        return parse_grid(val)
    if key == "lattice_sizes":
        return tuple(int(x) for x in val.split(","))
    if key in ("n_attempts", "trials", "master_seed"):
        return int(val)
    if key in _BOOL_KEYS:
        low = val.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key} must be a boolean, got {val!r}")
    if key in _NOISE_KEYS:
        return float(val)
    raise ConfigError(f"unknown configuration key {key!r}")


def load_config(path: str | None = None, overrides: dict | None = None) -> ExperimentConfig:
    cfg = ExperimentConfig()
    entries: list = []
    if path:
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
                key, val = (s.strip() for s in line.split("=", 1))
                entries.append((key, val))
    for key, val in (overrides or {}).items():
        if val is not None:
            entries.append((key, val if isinstance(val, str) else str(val)))
    for key, val in entries:
        parsed = _parse_value(key, val)
        if key in _NOISE_KEYS:
            cfg.noise[key] = parsed
        else:
            setattr(cfg, key, parsed)
    if cfg.channel not in CHANNELS:
        raise ConfigError(f"unknown channel {cfg.channel!r}")
    if cfg.matcher not in ("exact", "unionfind"):
        raise ConfigError(f"unknown matcher {cfg.matcher!r}")
    try:
        NoiseParams(**cfg.noise)
    except Exception as exc:
        raise ConfigError(str(exc)) from exc
    return cfg
