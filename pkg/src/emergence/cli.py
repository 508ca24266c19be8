"""Command line entry point.

    emergence <kind> [--config FILE] [--out DIR] [--seed N] [key=value ...]
    emergence rerun MANIFEST [--out DIR]

Exit codes: 0 success, 2 configuration error, 3 physics error,
4 numerical failure.  Configuration errors leave no files behind; every
other run ends with ``manifest.json`` in the output directory.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import tomli

from .errors import InputError, NumericalError, PhysicsError
from .experiments import EXPERIMENTS, ConfigError
from .io import atomic_write, sha256

log = logging.getLogger("emergence")

EXIT_OK, EXIT_CONFIG, EXIT_PHYSICS, EXIT_NUMERICAL = 0, 2, 3, 4


def tool_version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "unknown"


def parse_override(item: str):
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not key=value")
    key, raw = item.split("=", 1)
    key = key.strip()
    try:
        value = tomli.loads(f"v = {raw}")["v"]
    except tomli.TOMLDecodeError:
        value = raw
    return key, value


def load_config(kind: str, path: str | None, overrides, seed: int | None) -> tuple:
    """Resolve file values, then overrides, then --seed; returns (config, out)."""
    data = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                data = tomli.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except tomli.TOMLDecodeError as exc:
            raise ConfigError(f"config {path} is not valid TOML: {exc}") from None
    file_kind = data.pop("kind", kind)
    if file_kind != kind:
        raise ConfigError(f"config is for {file_kind!r}, not {kind!r}")
    out = data.pop("out", None)
    for item in overrides:
        k, v = parse_override(item)
        data[k] = v
    if seed is not None:
        data["seed"] = seed
    cls, _ = EXPERIMENTS[kind]
    return cls.from_mapping(data), out


def execute(kind: str, cfg, out_dir: Path) -> int:
    _, runner = EXPERIMENTS[kind]
    start = time.perf_counter()
    manifest = {
        "kind": kind,
        "config": cfg.as_dict(),
        "tool_version": tool_version(),
        "seed": cfg.seed,
    }
    code, error, checks, written = EXIT_OK, None, {}, {}
    try:
        artifacts, checks = runner(cfg)
        for name in sorted(artifacts):
            path = out_dir / name
            atomic_write(path, artifacts[name])
            written[name] = sha256(path)
    except PhysicsError as exc:
        code, error = EXIT_PHYSICS, f"{type(exc).__name__}: {exc}"
    except NumericalError as exc:
        code, error = EXIT_NUMERICAL, f"{type(exc).__name__}: {exc}"
    except InputError as exc:
        code, error = EXIT_CONFIG, f"{type(exc).__name__}: {exc}"
    manifest.update({
        "status": "ok" if code == EXIT_OK else "failed",
        "exit_code": code,
        "error": error,
        "checks": {k: bool(v) for k, v in sorted(checks.items())},
        "artifacts": written,
        "wall_time_s": round(time.perf_counter() - start, 3),
    })
    atomic_write(out_dir / "manifest.json", json.dumps(manifest, indent=2) + "\n")
    for name, ok in sorted(checks.items()):
        log.info("%-40s %s", name, "PASS" if ok else "FAIL")
    if error:
        log.error(error)
    return code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="emergence", description=__doc__.split("\n\n")[0])
    p.add_argument("kind", choices=sorted(EXPERIMENTS) + ["rerun"])
    p.add_argument("overrides", nargs="*", help="key=value config overrides (TOML values)")
    p.add_argument("--config", help="TOML config file (a manifest.json for rerun)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int, help="unsigned 64-bit seed")
    p.add_argument("-q", "--quiet", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(message)s")
    try:
        if args.kind == "rerun":
            source = args.config or (args.overrides[0] if args.overrides else None)
            if source is None:
                raise ConfigError("rerun needs a manifest path")
            try:
                old = json.loads(Path(source).read_text())
                kind, data = old["kind"], dict(old["config"])
            except (OSError, ValueError, KeyError) as exc:
                raise ConfigError(f"cannot use manifest {source}: {exc}") from None
            if kind not in EXPERIMENTS:
                raise ConfigError(f"manifest names unknown experiment {kind!r}")
            cfg = EXPERIMENTS[kind][0].from_mapping(data)
            out = args.out or str(Path(source).parent)
        else:
            kind = args.kind
            cfg, out = load_config(kind, args.config, args.overrides, args.seed)
            out = args.out or out or f"runs/{kind}"
    except InputError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return execute(kind, cfg, Path(out))


if __name__ == "__main__":
    sys.exit(main())
