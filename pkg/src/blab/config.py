"""Flat dotted-key run configuration.

One `key = value` per line, `#` starts a comment, unknown keys are
rejected with their line number. Every run writes back a resolved echo
(all keys, defaults filled, sorted) so outputs are self-describing;
parsing the echo reproduces the config exactly.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class _KeySpec:
    kind: str                 # int | float | str | float_list | int_list
    default: object = None
    required: bool = False
    choices: tuple = ()
    check: object = None      # value -> error string or None


def _power_of_two(n):
    if n < 8 or (n & (n - 1)) != 0:
        return "n must be a power of two, at least 8"
    return None


def _positive(x):
    return None if x > 0 else "must be positive"


def _non_negative(x):
    return None if x >= 0 else "must be non-negative"


_COMMON = {
    "subcommand": _KeySpec("str", required=True,
                           choices=("simulate", "td-run", "verify",
                                    "analyze")),
    "grid.n": _KeySpec("int", 256, check=_power_of_two),
    "grid.period": _KeySpec("float", 2.0 * math.pi, check=_positive),
    "grid.dealias_fraction": _KeySpec("float", 2.0 / 3.0, check=_positive),
    "seed": _KeySpec("int", 0, check=_non_negative),
    "output_dir": _KeySpec("str", "out"),
}

_SCHEMAS = {
    "simulate": {
        "sim.dt": _KeySpec("float", 2e-3, check=_positive),
        "sim.t_end": _KeySpec("float", 5.0, check=_positive),
        "sim.alpha": _KeySpec("float", 1.0),
        "sim.cfl_safety": _KeySpec("float", 0.5, check=_positive),
        "sim.initial": _KeySpec("str", "standard",
                                choices=("standard", "random", "snapshot")),
        "sim.initial_snapshot": _KeySpec("str", ""),
        "sim.amplitude": _KeySpec("float", 1.0),
        "sim.slope": _KeySpec("float", -2.0),
        "sim.p_list": _KeySpec("float_list", (2.0, 4.0, float("inf"))),
        "sim.block_p": _KeySpec("float", 4.0),
        "sim.snapshot_stride": _KeySpec("int", 0, check=_non_negative),
        "sim.apriori_stride": _KeySpec("int", 50, check=_positive),
        "sim.n_trunc": _KeySpec("int", -1),
    },
    "td-run": {
        "td.dt": _KeySpec("float", 1e-3, check=_positive),
        "td.t_end": _KeySpec("float", 1.0, check=_positive),
        "td.alpha": _KeySpec("float", 1.0),
        "td.cfl_safety": _KeySpec("float", 0.5, check=_positive),
        "td.velocity": _KeySpec("str", "zero",
                                choices=("zero", "shear", "random")),
        "td.amplitude": _KeySpec("float", 1.0),
        "td.slope": _KeySpec("float", -2.0),
        "td.initial": _KeySpec("str", "sin1",
                               choices=("sin1", "standard", "random")),
        "td.forcing": _KeySpec("str", "none", choices=("none", "mode")),
        "td.p_list": _KeySpec("float_list", (2.0, 4.0, float("inf"))),
        "td.block_p": _KeySpec("float", 4.0),
        "td.reports": _KeySpec("str_list",
                               ("max_principle", "smoothing",
                                "log_estimate")),
        "td.besov_s": _KeySpec("float", 0.0),
        "td.besov_r": _KeySpec("float", 1.0),
    },
    "verify": {
        "verify.estimate": _KeySpec(
            "str", required=True,
            choices=("thm33p1", "thm33p2", "lemma43", "lemma32",
                     "genbernstein", "bernstein")),
        "verify.samples": _KeySpec("int", 100, check=_positive),
        "verify.resolutions": _KeySpec("int_list", (64, 128)),
        "verify.slope": _KeySpec("float", -2.0),
        "verify.p": _KeySpec("float", 4.0),
        "verify.r": _KeySpec("float", 2.0),
        "verify.rho": _KeySpec("float", 2.0),
        "verify.eps": _KeySpec("float", 0.1),
    },
    "analyze": {
        "analyze.snapshot": _KeySpec("str", required=True),
        "analyze.field": _KeySpec("str", "theta"),
        "analyze.s": _KeySpec("float", 0.0),
        "analyze.p": _KeySpec("float", float("inf")),
        "analyze.r": _KeySpec("float", 1.0),
    },
}


def _parse_scalar(spec: _KeySpec, raw: str):
    if spec.kind == "int":
        return int(raw)
    if spec.kind == "float":
        return float(raw)
    if spec.kind == "str":
        return raw
    if spec.kind == "float_list":
        return tuple(float(v.strip()) for v in raw.split(",") if v.strip())
    if spec.kind == "int_list":
        return tuple(int(v.strip()) for v in raw.split(",") if v.strip())
    if spec.kind == "str_list":
        return tuple(v.strip() for v in raw.split(",") if v.strip())
    raise AssertionError(spec.kind)


def _format_value(value) -> str:
    if isinstance(value, tuple):
        return ",".join(_format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass
class RunConfig:
    """A validated, fully resolved run configuration."""

    subcommand: str
    values: dict

    def get(self, key: str):
        return self.values[key]

    def echo_text(self) -> str:
        # keys whose value formats to nothing (empty-string defaults) are
        # left out: the parser rejects empty values, and re-parsing the
        # echo restores the identical default anyway
        lines = [f"subcommand = {self.subcommand}"]
        for key in sorted(self.values):
            formatted = _format_value(self.values[key])
            if formatted:
                lines.append(f"{key} = {formatted}")
        return "\n".join(lines) + "\n"

    @property
    def run_id(self) -> str:
        return f"{zlib.crc32(self.echo_text().encode('ascii')):08x}"

    def make_grid(self):
        from .grid import Grid
        return Grid(self.get("grid.n"), self.get("grid.period"),
                    self.get("grid.dealias_fraction"))


def _schema_for(subcommand: str) -> dict:
    schema = dict(_COMMON)
    schema.update(_SCHEMAS[subcommand])
    return schema


def parse_config(text: str, subcommand: str | None = None,
                 overrides: tuple = ()) -> RunConfig:
    """Parse config text; the first error is reported with its line.

    subcommand, if given, supplies or cross-checks the file's own
    `subcommand` key. overrides are extra `key=value` strings applied
    after the file (they may re-set file keys).
    """
    pairs = []
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', "
                              f"got '{line}'")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not key or not value:
            raise ConfigError(f"line {lineno}: empty key or value")
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key '{key}' "
                              f"(first set on line {seen[key]})")
        seen[key] = lineno
        pairs.append((lineno, key, value))
    for i, item in enumerate(overrides):
        if "=" not in item:
            raise ConfigError(f"override '{item}': expected key=value")
        key, _, value = item.partition("=")
        pairs.append((0, key.strip(), value.strip()))

    file_sub = next((v for ln, k, v in pairs if k == "subcommand"), None)
    sub = file_sub or subcommand
    if sub is None:
        raise ConfigError("missing required key: subcommand")
    if subcommand is not None and file_sub is not None \
            and file_sub != subcommand:
        raise ConfigError(f"config names subcommand '{file_sub}' but "
                          f"'{subcommand}' was requested")
    if sub not in _SCHEMAS:
        raise ConfigError(f"unknown subcommand '{sub}'")

    schema = _schema_for(sub)
    values = {}
    for lineno, key, raw in pairs:
        where = f"line {lineno}" if lineno else f"override {key}"
        if key == "subcommand":
            if raw not in _SCHEMAS:
                raise ConfigError(f"{where}: unknown subcommand '{raw}'")
            continue
        spec = schema.get(key)
        if spec is None:
            raise ConfigError(f"{where}: unknown key '{key}'")
        try:
            value = _parse_scalar(spec, raw)
        except ValueError:
            raise ConfigError(
                f"{where}: key '{key}' expects {spec.kind}, got '{raw}'")
        if spec.choices and value not in spec.choices:
            raise ConfigError(
                f"{where}: key '{key}' must be one of "
                f"{', '.join(spec.choices)}")
        if spec.check is not None:
            msg = spec.check(value)
            if msg:
                raise ConfigError(f"{where}: key '{key}': {msg}")
        values[key] = value

    for key, spec in schema.items():
        if key == "subcommand" or key in values:
            continue
        if spec.required:
            raise ConfigError(f"missing required key: {key}")
        values[key] = spec.default

    return RunConfig(subcommand=sub, values=values)
