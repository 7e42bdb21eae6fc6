"""Dataset profiles and layered run configuration.

A profile bundles the per-dataset hyperparameters (mixing probability,
noise scales, clipping bound, frequency keep ratio and noise level) plus
the 70/10/20 split. Precedence when resolving a run: CLI flag > config
file > profile default.

The config file is INI-style text. Recognized sections and keys:

  [run]      profile, seed, out
  [split]    train_ratio, val_ratio, test_ratio, seed
  [implicit] method, alpha, sigma, clip_c, alpha_var, keep_ratio,
             noise_level, fdp_mode
  [train]    epochs, batch_size, learning_rate
  [fusion]   w_self, w_user, w_entity, layers
  [explicit] strategies, copies, cache_dir, endpoint, model, max_tokens,
             temperature, auth_env, max_retries, max_in_flight
"""

from __future__ import annotations

import configparser
import json
from dataclasses import dataclass, field

from .classify import TrainConfig
from .core import SplitSpec
from .graph import FusionParams
from .perturb import PerturbationConfig
from .textaug import ProviderConfig

PROFILE_NAMES = ("kawarith6", "twitter2012", "twitter2018", "custom")

_PROFILE_IMPLICIT = {
    "kawarith6": dict(alpha=0.3, sigma=0.01, clip_c=0.005,
                      keep_ratio=0.98, noise_level=0.02),
    "twitter2012": dict(alpha=0.6, sigma=0.1, clip_c=0.05,
                        keep_ratio=0.95, noise_level=0.02),
    "twitter2018": dict(alpha=0.6, sigma=0.1, clip_c=0.0006,
                        keep_ratio=0.98, noise_level=0.02),
    "custom": {},
}


def profile_perturbation(name: str) -> PerturbationConfig:
    if name not in PROFILE_NAMES:
        raise ValueError(f"unknown profile {name!r}; expected one of {PROFILE_NAMES}")
    return PerturbationConfig(**_PROFILE_IMPLICIT[name])


_IMPLICIT_FLOATS = ("alpha", "sigma", "clip_c", "alpha_var", "keep_ratio",
                    "noise_level")
_TRAIN_KEYS = {"epochs": int, "batch_size": int, "learning_rate": float}
_FUSION_KEYS = {"w_self": float, "w_user": float, "w_entity": float,
                "layers": int}
_SPLIT_KEYS = {"train_ratio": float, "val_ratio": float, "test_ratio": float,
               "seed": int}
_EXPLICIT_KEYS = {"strategies": str, "copies": int, "cache_dir": str,
                  "endpoint": str, "model": str, "max_tokens": int,
                  "temperature": float, "auth_env": str, "max_retries": int,
                  "max_in_flight": int}


def read_config_file(path) -> dict:
    """Parse the INI config into a {section: {key: typed value}} dict."""
    parser = configparser.ConfigParser()
    with open(path, "r", encoding="utf-8") as fh:
        parser.read_file(fh)
    out: dict = {}
    schema = {
        "run": {"profile": str, "seed": int, "out": str},
        "split": _SPLIT_KEYS,
        "implicit": {**{k: float for k in _IMPLICIT_FLOATS},
                     "method": str, "fdp_mode": str},
        "train": _TRAIN_KEYS,
        "fusion": _FUSION_KEYS,
        "explicit": _EXPLICIT_KEYS,
    }
    for section in parser.sections():
        if section not in schema:
            raise ValueError(f"unknown config section [{section}]")
        out[section] = {}
        for key, raw in parser.items(section):
            if key not in schema[section]:
                raise ValueError(f"unknown key {key!r} in section [{section}]")
            caster = schema[section][key]
            try:
                out[section][key] = caster(raw)
            except ValueError as exc:
                raise ValueError(f"[{section}] {key}: {exc}") from exc
    return out


@dataclass
class RunConfig:
    """Effective parameters for one command run, after layering."""

    profile: str = "custom"
    seed: int = 0
    out_dir: str = "out"
    split: SplitSpec = field(default_factory=SplitSpec)
    perturbation: PerturbationConfig = field(default_factory=PerturbationConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    fusion: FusionParams = field(default_factory=FusionParams)
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    strategies: tuple[str, ...] = ("paraphrase", "add-context", "style-transfer",
                                   "keep-entity", "extract-rewrite:keywords")
    copies: int = 1
    cache_dir: str | None = None

    def to_dict(self) -> dict:
        p = self.perturbation
        return {
            "profile": self.profile,
            "seed": self.seed,
            "out_dir": self.out_dir,
            "split": {"train_ratio": self.split.train_ratio,
                      "val_ratio": self.split.val_ratio,
                      "test_ratio": self.split.test_ratio,
                      "seed": self.split.seed},
            "implicit": {"method": p.method, "alpha": p.alpha, "sigma": p.sigma,
                         "clip_c": p.clip_c, "alpha_var": p.alpha_var,
                         "keep_ratio": p.keep_ratio, "noise_level": p.noise_level,
                         "fdp_mode": p.fdp_mode},
            "train": {"epochs": self.train.epochs,
                      "batch_size": self.train.batch_size,
                      "learning_rate": self.train.learning_rate,
                      "seed": self.train.seed},
            "fusion": {"w_self": self.fusion.w_self, "w_user": self.fusion.w_user,
                       "w_entity": self.fusion.w_entity,
                       "layers": self.fusion.layers},
            "explicit": {"strategies": list(self.strategies),
                         "copies": self.copies,
                         "cache_dir": self.cache_dir,
                         "endpoint": self.provider.endpoint,
                         "model": self.provider.model,
                         "max_tokens": self.provider.max_tokens,
                         "temperature": self.provider.temperature,
                         "max_retries": self.provider.max_retries,
                         "max_in_flight": self.provider.max_in_flight},
        }

    def snapshot_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def resolve_config(profile: str | None = None, file_values: dict | None = None,
                   overrides: dict | None = None) -> RunConfig:
    """Layer profile defaults, config file values, and CLI overrides.

    ``overrides`` mirrors the config file structure; None values are
    ignored so unset CLI flags never shadow the file.
    """
    file_values = file_values or {}
    overrides = overrides or {}

    def merged(section: str) -> dict:
        vals = dict(file_values.get(section, {}))
        for key, value in overrides.get(section, {}).items():
            if value is not None:
                vals[key] = value
        return vals

    run_vals = merged("run")
    profile = profile or run_vals.get("profile") or "custom"
    if profile not in PROFILE_NAMES:
        raise ValueError(f"unknown profile {profile!r}; expected one of {PROFILE_NAMES}")

    seed = int(run_vals.get("seed", 0))
    out_dir = run_vals.get("out", "out")

    implicit_vals = {**_PROFILE_IMPLICIT[profile], **merged("implicit")}
    perturbation = PerturbationConfig(**implicit_vals)

    split_vals = merged("split")
    split_vals.setdefault("seed", seed)
    split_spec = SplitSpec(**split_vals)

    train_vals = merged("train")
    train = TrainConfig(seed=seed, perturbation=perturbation, **train_vals)

    fusion = FusionParams(**merged("fusion"))

    explicit_vals = merged("explicit")
    strategies = explicit_vals.pop("strategies", None)
    if isinstance(strategies, str):
        strategies = tuple(s.strip() for s in strategies.split(",") if s.strip())
    copies = int(explicit_vals.pop("copies", 1))
    cache_dir = explicit_vals.pop("cache_dir", None)
    provider = ProviderConfig(**explicit_vals)

    config = RunConfig(profile=profile, seed=seed, out_dir=out_dir,
                       split=split_spec, perturbation=perturbation,
                       train=train, fusion=fusion, provider=provider,
                       copies=copies, cache_dir=cache_dir)
    if strategies:
        config.strategies = strategies
    return config
