"""Command-line front end.

Usage::

    patchscale generate --config run.cfg [--seed N] [--out img.ppm] [--report run.json]

Writes the final image, one ``-stageK``-suffixed image per intermediate
stage, and a JSON run report. Exit codes: 0 success, 1 usage or
configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .cascade import oracle_factory_from_image, run_cascade
from .config import RunConfig, parse_config
from .denoisers import ZeroDenoiser
from .errors import ConfigError, FormatError
from .pnm import read_image, write_image
from .report import build_report, report_text

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _stage_path(out_path: str, index: int) -> Path:
    p = Path(out_path)
    return p.with_name(f"{p.stem}-stage{index}{p.suffix}")


def _make_denoiser(cfg: RunConfig, codec):
    if cfg.denoiser_spec == "zero":
        max_area = max(s.patch_height * s.patch_width for s in cfg.stages)
        return ZeroDenoiser(max_patch_area=max_area)
    target_path = cfg.denoiser_spec[len("oracle:"):].strip()
    return oracle_factory_from_image(read_image(target_path), codec)


def cmd_generate(cfg: RunConfig) -> int:
    codec = cfg.make_codec()
    denoiser = _make_denoiser(cfg, codec)
    trace = []
    image = run_cascade(cfg.resolved_stages(), denoiser, codec, cfg.condition,
                        master_seed=cfg.seed,
                        train_steps=cfg.train_steps,
                        beta_start=cfg.beta_start,
                        beta_end=cfg.beta_end,
                        overlap_tolerance=cfg.overlap_tolerance,
                        trace=trace)
    for result in trace[:-1]:
        write_image(result.image, _stage_path(cfg.out_path, result.index))
    write_image(image, cfg.out_path)
    report = build_report(cfg.echo(), trace, engine_version=__version__)
    Path(cfg.report_path).write_text(report_text(report), encoding="utf-8")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _Parser(prog="patchscale",
                     description="Patch-based cascaded diffusion image generation")
    sub = parser.add_subparsers(dest="command", required=True)
    gen = sub.add_parser("generate", help="run a cascade from a config file")
    gen.add_argument("--config", required=True, help="path to a run config file")
    gen.add_argument("--seed", type=int, help="override the master seed")
    gen.add_argument("--out", help="override the output image path")
    gen.add_argument("--report", help="override the report path")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"patchscale: cannot read config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = parse_config(text)
    except ConfigError as exc:
        for violation in exc.violations:
            print(f"patchscale: {args.config}: {violation}", file=sys.stderr)
        return EXIT_USAGE
    if args.seed is not None:
        if args.seed < 0:
            print("patchscale: --seed must be >= 0", file=sys.stderr)
            return EXIT_USAGE
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out_path = args.out
    if args.report is not None:
        cfg.report_path = args.report

    try:
        return cmd_generate(cfg)
    except (ConfigError, FormatError) as exc:
        print(f"patchscale: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"patchscale: I/O error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # engine errors carry stage context via message
        print(f"patchscale: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
