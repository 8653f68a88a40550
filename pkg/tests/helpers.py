"""Pipeline shortcuts shared by the test modules."""

from __future__ import annotations

from cleflite.infer import infer_program
from cleflite.psg import elaborate, saturate
from cleflite.syntax import desugar, parse
from cleflite.targets import bundled_config_path, load_config


def config():
    return load_config(bundled_config_path())


def typed_of(source: str, units=None):
    return infer_program(desugar(parse(source)), units)


def graph_of(source: str, strict: bool = True, saturated: bool = True):
    cfg = config()
    g = elaborate(typed_of(source, cfg.units), list(cfg.bindings))
    return saturate(g, strict=strict) if saturated else g
