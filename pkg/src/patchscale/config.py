"""Run configuration: plain ``key = value`` text with repeated [stage] sections.

Example::

    # global settings
    seed = 42
    condition = 0
    codec = identity          # identity | pool2 | pool8
    denoiser = zero           # zero | oracle:<image path>
    out = out.ppm
    report = report.json

    [stage]
    width = 64
    height = 64
    steps = 6
    patch = 32
    slider = 0

Global keys and defaults: seed (0), condition (0), codec (identity),
denoiser (zero), out (out.ppm), report (report.json), train_steps (1000),
beta_start (1e-4), beta_end (0.02), overlap_tolerance (10).
Stage keys: width and height (required), steps (50), slider (0), patch or
patch_height/patch_width (128), seed (derived from the master seed by
stage counter when omitted).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .cascade import StageSpec, stage_seed, validate_stages
from .codec import IdentityCodec, PoolCodec
from .errors import ConfigError

_CODECS = ("identity", "pool2", "pool8")
_GLOBAL_INT_KEYS = ("seed", "condition", "train_steps", "overlap_tolerance")
_GLOBAL_FLOAT_KEYS = ("beta_start", "beta_end")
_GLOBAL_STR_KEYS = ("codec", "denoiser", "out", "report")
_GLOBAL_KEYS = _GLOBAL_INT_KEYS + _GLOBAL_FLOAT_KEYS + _GLOBAL_STR_KEYS
_STAGE_KEYS = ("width", "height", "steps", "slider", "patch", "patch_height",
               "patch_width", "seed")
_STR_ATTR = {"codec": "codec_name", "denoiser": "denoiser_spec",
             "out": "out_path", "report": "report_path"}


@dataclass
class RunConfig:
    """Fully resolved settings for one generation run."""

    stages: list[StageSpec] = field(default_factory=list)
    seed: int = 0
    condition: int = 0
    codec_name: str = "identity"
    denoiser_spec: str = "zero"
    out_path: str = "out.ppm"
    report_path: str = "report.json"
    train_steps: int = 1000
    beta_start: float = 1e-4
    beta_end: float = 2e-2
    overlap_tolerance: int = 10

    def make_codec(self):
        if self.codec_name == "identity":
            return IdentityCodec(channels=3)
        if self.codec_name == "pool2":
            return PoolCodec(scale=2)
        return PoolCodec(scale=8)

    def resolved_stages(self) -> list[StageSpec]:
        """Stages with every seed made concrete from the master seed."""
        return [s if s.seed is not None else replace(s, seed=stage_seed(self.seed, k))
                for k, s in enumerate(self.stages)]

    def echo(self) -> dict:
        """Resolved settings as a plain dict (the run report's config echo)."""
        return {
            "seed": self.seed,
            "condition": self.condition,
            "codec": self.codec_name,
            "denoiser": self.denoiser_spec,
            "out": self.out_path,
            "report": self.report_path,
            "train_steps": self.train_steps,
            "beta_start": self.beta_start,
            "beta_end": self.beta_end,
            "overlap_tolerance": self.overlap_tolerance,
            "stages": [
                {
                    "height": s.height,
                    "width": s.width,
                    "steps": s.steps,
                    "slider": s.slider,
                    "patch_height": s.patch_height,
                    "patch_width": s.patch_width,
                    "seed": s.seed,
                }
                for s in self.resolved_stages()
            ],
        }


def _scan(text: str, problems: list[str]):
    """Split config text into a global section and raw [stage] sections."""
    globals_raw: dict[str, tuple[int, str]] = {}
    stages_raw: list[tuple[int, dict[str, tuple[int, str]]]] = []
    section: dict[str, tuple[int, str]] | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("["):
            section = {}
            if line == "[stage]":
                stages_raw.append((lineno, section))
            else:
                problems.append(f"line {lineno}: unknown section {line!r}")
            continue
        if "=" not in line:
            problems.append(f"line {lineno}: expected 'key = value', got {line!r}")
            continue
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.split("#", 1)[0].strip()
        if not value:
            problems.append(f"line {lineno}: key '{key}' has no value")
            continue
        target = globals_raw if section is None else section
        allowed = _GLOBAL_KEYS if section is None else _STAGE_KEYS
        if key not in allowed:
            scope = "global" if section is None else "stage"
            problems.append(f"line {lineno}: unknown {scope} key '{key}'")
        elif key in target:
            problems.append(f"line {lineno}: duplicate key '{key}'")
        else:
            target[key] = (lineno, value)
    return globals_raw, stages_raw


def _take_int(entries, key, problems, default=None, minimum=None):
    if key not in entries:
        return default
    lineno, value = entries[key]
    try:
        parsed = int(value, 0)
    except ValueError:
        problems.append(f"line {lineno}: key '{key}' expects an integer, got {value!r}")
        return default
    if minimum is not None and parsed < minimum:
        problems.append(f"line {lineno}: key '{key}' must be >= {minimum}, got {parsed}")
        return default
    return parsed


def _take_float(entries, key, problems, default=None):
    if key not in entries:
        return default
    lineno, value = entries[key]
    try:
        return float(value)
    except ValueError:
        problems.append(f"line {lineno}: key '{key}' expects a number, got {value!r}")
        return default


def parse_config(text: str) -> RunConfig:
    """Parse and validate; reports every violation, each with its line number."""
    problems: list[str] = []
    globals_raw, stages_raw = _scan(text, problems)

    cfg = RunConfig()
    cfg.seed = _take_int(globals_raw, "seed", problems, cfg.seed, minimum=0)
    cfg.condition = _take_int(globals_raw, "condition", problems, cfg.condition)
    cfg.train_steps = _take_int(globals_raw, "train_steps", problems, cfg.train_steps, minimum=1)
    cfg.overlap_tolerance = _take_int(globals_raw, "overlap_tolerance", problems,
                                      cfg.overlap_tolerance, minimum=0)
    cfg.beta_start = _take_float(globals_raw, "beta_start", problems, cfg.beta_start)
    cfg.beta_end = _take_float(globals_raw, "beta_end", problems, cfg.beta_end)
    for key, attr in _STR_ATTR.items():
        if key in globals_raw:
            setattr(cfg, attr, globals_raw[key][1])

    if cfg.seed >= 2 ** 64:
        lineno = globals_raw["seed"][0]
        problems.append(f"line {lineno}: key 'seed' must fit in 64 bits")
    if not 0.0 < cfg.beta_start <= cfg.beta_end < 1.0:
        lineno = globals_raw.get("beta_start", globals_raw.get("beta_end", (0, "")))[0]
        problems.append(
            f"line {lineno}: betas must satisfy 0 < beta_start <= beta_end < 1, "
            f"got ({cfg.beta_start}, {cfg.beta_end})")
    if "codec" in globals_raw and cfg.codec_name not in _CODECS:
        lineno = globals_raw["codec"][0]
        problems.append(
            f"line {lineno}: key 'codec' must be one of {', '.join(_CODECS)}, got '{cfg.codec_name}'")
    if "denoiser" in globals_raw:
        lineno = globals_raw["denoiser"][0]
        spec = cfg.denoiser_spec
        if spec != "zero" and not (spec.startswith("oracle:") and spec[len("oracle:"):].strip()):
            problems.append(
                f"line {lineno}: key 'denoiser' must be 'zero' or 'oracle:<image path>', got '{spec}'")

    stage_lines: list[int] = []
    for sec_line, entries in stages_raw:
        stage_lines.append(sec_line)
        height = _take_int(entries, "height", problems)
        width = _take_int(entries, "width", problems)
        for name, value in (("height", height), ("width", width)):
            if name not in entries:
                problems.append(f"line {sec_line}: stage is missing required key '{name}'")
        if height is None or width is None:
            continue
        patch = _take_int(entries, "patch", problems, 128, minimum=1)
        spec = StageSpec(
            height=height,
            width=width,
            steps=_take_int(entries, "steps", problems, 50, minimum=1),
            slider=_take_int(entries, "slider", problems, 0, minimum=0),
            patch_height=_take_int(entries, "patch_height", problems, patch, minimum=1),
            patch_width=_take_int(entries, "patch_width", problems, patch, minimum=1),
            seed=_take_int(entries, "seed", problems, None, minimum=0),
        )
        cfg.stages.append(spec)

    if not stages_raw:
        problems.append("config has no [stage] section; at least one stage is required")
    elif len(cfg.stages) == len(stages_raw) and cfg.codec_name in _CODECS:
        for k, msg in validate_stages(cfg.stages, cfg.make_codec()):
            problems.append(f"line {stage_lines[k]}: stage {k}: {msg}")

    if problems:
        raise ConfigError(problems)
    return cfg
