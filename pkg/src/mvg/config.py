"""Run configuration: JSON schema, validation, and object construction."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np

from . import io, rng, toydata
from .denoiser import Condition, GmmDenoiser
from .errors import InvalidArgument
from .metrics import make_embedder
from .pie import PieConfig
from .scheduler import build_schedule
from .toydata import DomainSpec

_CONDITION = {
    "type": "object",
    "properties": {
        "class_id": {"type": "integer"},
        "severity": {"type": "number", "minimum": 0, "maximum": 1},
    },
    "required": ["class_id"],
    "additionalProperties": False,
}

SCHEMA = {
    "type": "object",
    "properties": {
        "domain": {"type": "object"},
        "schedule": {
            "type": "object",
            "properties": {
                "T": {"type": "integer", "minimum": 1},
                "beta_start": {"type": ["number", "null"]},
                "beta_end": {"type": ["number", "null"]},
            },
            "additionalProperties": False,
        },
        "pie": {
            "type": "object",
            "properties": {
                "N": {"type": "integer", "minimum": 0},
                "gamma": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "beta1": {"type": "number", "minimum": 0, "maximum": 1},
                "beta2": {"type": "number", "minimum": 0, "maximum": 1},
                "composite_origin": {"type": "boolean"},
            },
            "additionalProperties": False,
        },
        "mask": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["disk", "rect", "full", "empty", "file"]},
                "params": {"type": "object"},
                "path": {"type": "string"},
            },
            "required": ["kind"],
            "additionalProperties": False,
        },
        "condition": {
            "type": "object",
            "properties": {"source": _CONDITION, "target": _CONDITION},
            "required": ["target"],
            "additionalProperties": False,
        },
        "start": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["mean", "sample"]},
                "class_id": {"type": "integer"},
                "severity": {"type": "number"},
                "seed": {"type": "integer"},
            },
            "additionalProperties": False,
        },
        "metrics": {"type": "array", "items": {"enum": ["conf", "clip_i", "kid", "mae"]}},
        "embedder": {
            "type": "object",
            "properties": {
                "kind": {"enum": ["identity", "random_projection"]},
                "out_dim": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer"},
            },
            "additionalProperties": False,
        },
        "reference_states": {"type": "array", "items": {"type": "string"}},
        "kid_reference": {
            "type": "object",
            "properties": {"count": {"type": "integer", "minimum": 2}, "seed": {"type": "integer"}},
            "additionalProperties": False,
        },
        "video": {
            "type": "object",
            "properties": {
                "K": {"type": "integer", "minimum": 2},
                "gamma": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "seed": {"type": "integer"},
            },
            "additionalProperties": False,
        },
        "verify": {
            "type": "object",
            "properties": {
                "stages": {"type": "integer", "minimum": 15},
                "seeds": {"type": "integer", "minimum": 1},
                "delta": {"type": "number", "exclusiveMinimum": 0},
                "x0_scale": {"type": "number"},
                "burn_in": {"type": "integer", "minimum": 0},
                "schedule": {"type": "object"},
            },
            "additionalProperties": False,
        },
        "out_dir": {"type": "string"},
        "seeds": {
            "oneOf": [
                {"type": "array", "items": {"type": "integer"}, "minItems": 1},
                {
                    "type": "object",
                    "properties": {
                        "count": {"type": "integer", "minimum": 1},
                        "start": {"type": "integer"},
                    },
                    "required": ["count"],
                    "additionalProperties": False,
                },
            ]
        },
    },
    "additionalProperties": False,
}

DEFAULTS = {
    "schedule": {"T": 50, "beta_start": None, "beta_end": None},
    "pie": {"N": 10, "gamma": 0.6, "beta1": 0.01, "beta2": 0.75, "composite_origin": True},
    "mask": {"kind": "disk", "params": {"center": [10.0, 10.0], "radius": 5.5}},
    "condition": {"source": {"class_id": 0, "severity": 0.0}, "target": {"class_id": 1, "severity": 1.0}},
    "start": {"kind": "mean", "class_id": 0, "severity": 0.0, "seed": 1234},
    "metrics": ["conf", "clip_i", "kid", "mae"],
    "embedder": {"kind": "identity", "out_dim": 64, "seed": 0},
    "kid_reference": {"count": 100, "seed": 777},
    "video": {"K": 16, "gamma": 0.6, "seed": 0},  # desk-scale configs use K=8
    "verify": {"stages": 100, "seeds": 50, "delta": 0.01, "x0_scale": 10.0, "burn_in": 5,
               "schedule": {"T": 2, "beta_start": 0.1, "beta_end": 0.1}},
    "out_dir": "runs/out",
    "seeds": [0, 1, 2, 3, 4],
}


def _merged(raw: dict) -> dict:
    out = json.loads(json.dumps(DEFAULTS))
    for key, value in raw.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key].update(value)
        else:
            out[key] = value
    return out


@dataclass
class RunConfig:
    """Validated view over a run-config JSON document."""

    raw: dict
    base_dir: Path

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        raw = io.read_json(path)
        return cls.from_dict(raw, base_dir=path.parent)

    @classmethod
    def from_dict(cls, raw: dict, base_dir=".") -> "RunConfig":
        try:
            jsonschema.validate(raw, SCHEMA)
        except jsonschema.ValidationError as err:
            raise InvalidArgument(f"config invalid at {list(err.absolute_path)}: {err.message}") from err
        cfg = cls(raw=_merged(raw), base_dir=Path(base_dir))
        cfg._check_files()
        return cfg

    def _check_files(self):
        paths = list(self.raw.get("reference_states", []))
        if self.raw["mask"]["kind"] == "file":
            if "path" not in self.raw["mask"]:
                raise InvalidArgument("mask kind 'file' needs a path")
            paths.append(self.raw["mask"]["path"])
        for p in paths:
            if not (self.base_dir / p).exists():
                raise InvalidArgument(f"referenced file does not exist: {p}")

    def config_hash(self) -> str:
        return hashlib.sha256(json.dumps(self.raw, sort_keys=True).encode()).hexdigest()[:16]

    # -- constructed objects -------------------------------------------------

    def domain(self) -> DomainSpec:
        return DomainSpec.from_dict(self.raw.get("domain", {}))

    def schedule(self):
        sc = self.raw["schedule"]
        return build_schedule(sc["T"], sc.get("beta_start"), sc.get("beta_end"))

    def model(self):
        return toydata.build_domain(self.domain())

    def denoiser(self):
        return GmmDenoiser(self.model(), self.schedule())

    def mask(self) -> np.ndarray:
        spec = self.domain()
        mc = self.raw["mask"]
        if mc["kind"] == "file":
            return io.read_tensor(self.base_dir / mc["path"])
        return toydata.make_mask(spec, mc["kind"], mc.get("params", {}))

    def pie_config(self, seed: int) -> PieConfig:
        p = self.raw["pie"]
        return PieConfig(N=p["N"], gamma=p["gamma"], beta1=p["beta1"], beta2=p["beta2"],
                         seed=seed, composite_origin=p.get("composite_origin", True))

    def conditions(self) -> tuple[Condition, Condition]:
        c = self.raw["condition"]
        src = c.get("source", c["target"])
        return (
            Condition(src["class_id"], src.get("severity", 0.0)),
            Condition(c["target"]["class_id"], c["target"].get("severity", 1.0)),
        )

    def start_image(self) -> np.ndarray:
        st = self.raw["start"]
        spec = self.domain()
        mean = toydata.render_mean(spec, st.get("class_id", 0), st.get("severity", 0.0))
        if st["kind"] == "sample":
            # noisy instance of the requested (class, severity) state
            noise = rng.normal(mean.shape, st.get("seed", 0))
            return mean + spec.noise_sigma * noise
        return mean

    def embedder(self):
        e = self.raw["embedder"]
        return make_embedder(e["kind"], e.get("out_dim", 64), e.get("seed", 0))

    def seeds(self) -> list[int]:
        spec = self.raw["seeds"]
        if isinstance(spec, dict):
            start = spec.get("start", 0)
            return list(range(start, start + spec["count"]))
        return list(spec)

    def out_dir(self) -> Path:
        # outputs resolve against the working directory; inputs (mask files,
        # reference states) resolve against the config file's directory
        return Path(self.raw["out_dir"])
