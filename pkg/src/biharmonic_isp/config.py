"""Strict JSON experiment configuration with built-in presets."""

from __future__ import annotations

import copy
import json
import re
from dataclasses import dataclass

import numpy as np

from .randsrc import ConfigurationError, Grid, StrengthField

PRESETS = {
    "example1": {
        "dim": 2,
        "strength": {"kind": "example1", "clamp": True},
        "source_grid": {"lower": [-1.0, -1.0], "upper": [1.0, 1.0], "intervals": 20},
        "domains": {
            "lowers": [[1.5, 1.5], [1.5, -2.5], [-2.5, -2.5], [-2.5, 1.5]],
            "side": 1.0,
            "intervals": 40,
        },
        "frequencies": [2.0],
        "paths": 1000,
        "seed": 0,
        "inversion": {"gamma": 1e-7, "sweeps": 6, "clamp": False, "data": "difference"},
        "ergodic": {"T": 50.0, "nodes": 200, "m": 0.0, "receivers": None,
                    "invert": False, "gamma": 1e-8, "sweeps": 500},
    },
    "example2": {
        "strength": {"kind": "example2", "clamp": True},
        "frequencies": [1.0, 2.0, 3.0, 4.0, 5.0],
        "inversion": {"gamma": 1e-5},
    },
    "ergodic3d": {
        "dim": 3,
        "strength": {"kind": "example1", "clamp": True},
        "source_grid": {"lower": [-1.0, -1.0, -1.0], "upper": [1.0, 1.0, 1.0], "intervals": 20},
        "domains": {
            "lowers": [[1.6, -0.5, -0.5], [-2.6, -0.5, -0.5], [-0.5, 1.6, -0.5],
                       [-0.5, -2.6, -0.5], [-0.5, -0.5, 1.6], [-0.5, -0.5, -2.6]],
            "side": 1.0,
            "intervals": 3,
        },
        "paths": 1,
        "ergodic": {
            "receivers": [[2.71, 0.33, 0.17], [0.41, 2.93, -0.29], [-2.37, 0.83, 1.13],
                          [1.27, -1.91, 2.21], [-0.61, -0.47, -3.07]],
        },
    },
}

SCHEMA = {
    "preset": str,
    "dim": int,
    "strength": {"kind": str, "clamp": bool, "csv": (str, type(None)), "value": float},
    "source_grid": {"lower": list, "upper": list, "intervals": int},
    "domains": {"lowers": list, "side": float, "intervals": int},
    "frequencies": list,
    "paths": int,
    "seed": int,
    "inversion": {"gamma": float, "sweeps": int, "clamp": bool, "data": str},
    "ergodic": {"T": float, "nodes": int, "m": float, "receivers": (list, type(None)),
                "invert": bool, "gamma": float, "sweeps": int},
}


class ConfigError(ConfigurationError):
    """Configuration problem, optionally located at a line of the source file."""

    def __init__(self, message, line=None, source=None):
        self.line = line
        self.source = source
        loc = f"{source or '<config>'}:{line}: " if line is not None else ""
        super().__init__(loc + message)


def _deep_merge(base, over):
    out = copy.deepcopy(base)
    for key, val in over.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def _line_of(text, key):
    if not text:
        return None
    m = re.search(r'"' + re.escape(key) + r'"\s*:', text)
    return text.count("\n", 0, m.start()) + 1 if m else 1


def _check_schema(doc, schema, text, source, where=""):
    for key, val in doc.items():
        if key not in schema:
            raise ConfigError(f"unknown key {where + key!r}", _line_of(text, key), source)
        spec = schema[key]
        if isinstance(spec, dict):
            if not isinstance(val, dict):
                raise ConfigError(f"{where + key!r} must be an object", _line_of(text, key), source)
            _check_schema(val, spec, text, source, where + key + ".")
            continue
        types = spec if isinstance(spec, tuple) else (spec,)
        ok = isinstance(val, types)
        if float in types and isinstance(val, int) and not isinstance(val, bool):
            ok = True
        if int in types and isinstance(val, bool):
            ok = False
        if not ok:
            names = "/".join(t.__name__ for t in types)
            raise ConfigError(f"{where + key!r} must be {names}", _line_of(text, key), source)


@dataclass
class ExperimentConfig:
    """Validated experiment description; ``raw`` is the merged JSON document."""

    raw: dict
    source: str | None = None
    text: str | None = None

    def __post_init__(self):
        self.validate()

    # -- construction -----------------------------------------------------
    @classmethod
    def from_preset(cls, name="example1", overrides=None):
        if name not in PRESETS:
            raise ConfigError(f"unknown preset {name!r}")
        base = PRESETS["example1"]
        doc = base if name == "example1" else _deep_merge(base, PRESETS[name])
        return cls(_deep_merge(doc, overrides or {}))

    @classmethod
    def from_json(cls, text, source=None):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON: {exc.msg}", exc.lineno, source) from None
        if not isinstance(doc, dict):
            raise ConfigError("top level must be an object", 1, source)
        _check_schema(doc, SCHEMA, text, source)
        preset = doc.pop("preset", "example1")
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}", _line_of(text, "preset"), source)
        base = PRESETS["example1"] if preset == "example1" else _deep_merge(PRESETS["example1"], PRESETS[preset])
        return cls(_deep_merge(base, doc), source, text)

    @classmethod
    def from_file(cls, path):
        with open(path) as fh:
            return cls.from_json(fh.read(), str(path))

    def with_overrides(self, **kw) -> "ExperimentConfig":
        doc = copy.deepcopy(self.raw)
        for key, val in kw.items():
            if val is None:
                continue
            if key in ("gamma", "sweeps"):
                doc["inversion"][key] = val
            else:
                doc[key] = val
        return ExperimentConfig(doc, self.source, None)

    # -- validation -------------------------------------------------------
    def _fail(self, msg, key):
        raise ConfigError(msg, _line_of(self.text, key), self.source if self.text else None)

    def validate(self):
        _check_schema(self.raw, SCHEMA, self.text, self.source)
        d = self.raw["dim"]
        if d not in (2, 3):
            self._fail("dim must be 2 or 3", "dim")
        sg = self.raw["source_grid"]
        if len(sg["lower"]) != d or len(sg["upper"]) != d:
            self._fail(f"source_grid bounds must have {d} entries", "source_grid")
        if sg["intervals"] < 1:
            self._fail("source_grid.intervals must be >= 1", "intervals")
        if any(u <= lo for lo, u in zip(sg["lower"], sg["upper"])):
            self._fail("source_grid upper must exceed lower", "upper")
        if self.raw["paths"] < 1:
            self._fail("paths must be >= 1", "paths")
        freqs = self.raw["frequencies"]
        if not freqs or any((not isinstance(k, (int, float))) or k <= 0 for k in freqs):
            self._fail("frequencies must be a nonempty list of positive numbers", "frequencies")
        if any(b <= a for a, b in zip(freqs, freqs[1:])):
            self._fail("frequencies must be strictly increasing", "frequencies")
        st = self.raw["strength"]
        if st["kind"] not in ("example1", "example2", "constant", "tabulated"):
            self._fail(f"unknown strength kind {st['kind']!r}", "kind")
        if st["kind"] == "tabulated" and not st.get("csv"):
            self._fail("tabulated strength needs strength.csv", "strength")
        if st["kind"] == "example2" and d != 2:
            self._fail("example2 strength is two-dimensional", "kind")
        inv = self.raw["inversion"]
        if inv["gamma"] < 0:
            self._fail("inversion.gamma must be >= 0", "gamma")
        if inv["sweeps"] < 1:
            self._fail("inversion.sweeps must be >= 1", "sweeps")
        if inv["data"] not in ("difference", "magnitude"):
            self._fail("inversion.data must be 'difference' or 'magnitude'", "data")
        dom = self.raw["domains"]
        if dom["side"] <= 0 or dom["intervals"] < 1:
            self._fail("domains need positive side and intervals", "domains")
        grid = self.grid()
        for lower in dom["lowers"]:
            if len(lower) != d:
                self._fail(f"domain corner {lower} must have {d} entries", "lowers")
            if _box_gap(lower, dom["side"], grid) <= 0:
                self._fail(f"measurement domain at {lower} intersects the source box", "lowers")
        erg = self.raw["ergodic"]
        if not (d - 6 < erg["m"] <= d):
            self._fail(f"ergodic.m must lie in ({d - 6}, {d}]", "m")
        if erg["T"] <= 0 or erg["nodes"] < 2:
            self._fail("ergodic band needs T > 0 and at least 2 nodes", "T")
        if erg["receivers"] is not None:
            pts = np.asarray(erg["receivers"], dtype=float)
            if pts.ndim != 2 or pts.shape[1] != d:
                self._fail(f"ergodic.receivers must be a list of {d}-vectors", "receivers")
            if np.any(grid.distance_to_box(pts) <= 0):
                self._fail("ergodic receivers must lie outside the source box", "receivers")

    # -- derived objects --------------------------------------------------
    @property
    def dim(self) -> int:
        return self.raw["dim"]

    @property
    def seed(self) -> int:
        return self.raw["seed"]

    @property
    def paths(self) -> int:
        return self.raw["paths"]

    @property
    def frequencies(self) -> list:
        return [float(k) for k in self.raw["frequencies"]]

    def grid(self) -> Grid:
        sg = self.raw["source_grid"]
        return Grid.from_bounds(sg["lower"], sg["upper"], sg["intervals"])

    def strength(self) -> StrengthField:
        st = self.raw["strength"]
        sg = self.raw["source_grid"]
        if st["kind"] == "tabulated":
            return StrengthField.from_csv(st["csv"], clamp=st.get("clamp", True))
        if st["kind"] == "constant":
            return StrengthField("constant", st.get("clamp", True), tuple(sg["lower"]), tuple(sg["upper"]),
                                 value=float(st.get("value", 1.0)))
        return StrengthField(st["kind"], st.get("clamp", True), tuple(sg["lower"]), tuple(sg["upper"]))

    def receivers(self):
        from .forward import ReceiverSet

        dom = self.raw["domains"]
        return ReceiverSet.from_boxes(dom["lowers"], dom["side"], dom["intervals"])

    def ergodic_receivers(self):
        from .forward import ReceiverSet

        pts = self.raw["ergodic"]["receivers"]
        if pts is None:
            return self.receivers()
        return ReceiverSet.single(*pts)

    def to_json(self) -> str:
        return json.dumps(self.raw, indent=2, sort_keys=True)


def _box_gap(lower, side, grid: Grid) -> float:
    lo = np.asarray(lower, dtype=float)
    hi = lo + side
    glo = np.asarray(grid.origin)
    ghi = np.asarray(grid.upper)
    gap = np.maximum(glo - hi, 0.0) + np.maximum(lo - ghi, 0.0)
    return float(np.sqrt((gap**2).sum()))


def parse_frequency_range(text: str) -> list:
    """``"1:5"`` -> [1, 2, 3, 4, 5]; ``"2"`` -> [2]; ``"1,2.5"`` -> [1, 2.5]."""
    text = text.strip()
    try:
        if ":" in text:
            a, b = text.split(":", 1)
            a, b = int(a), int(b)
            if b < a:
                raise ValueError
            return [float(k) for k in range(a, b + 1)]
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise ConfigError(f"bad frequency specification {text!r} (use a:b or a comma list)") from None
