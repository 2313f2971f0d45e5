"""Command-line BER/complexity sweep.

Examples::

    richardson-mimo --preset paper-fig1 --trials 50 --seed 7 --out fig1.csv
    richardson-mimo --n 32 --k 8 --snr 0:2:8 --detector exact \\
        --detector richardson:3,5 --detector neumann --iters 2 --iters 4 \\
        --omega auto --coded false --out sweep.csv
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .errors import MimoError
from .sim import (
    FIXED_RELAXATION,
    SNR_CONVENTION,
    DetectorSpec,
    SimIOError,
    emit_csv,
    fig1_preset_config,
    run_sweep,
    SimConfig,
)
from .mimo import AUTO_SAFETY

log = logging.getLogger("richardson_mimo")

EXIT_CONFIG = 2
EXIT_IO = 3


def parse_snr(text: str) -> tuple[float, ...]:
    """``start:step:stop`` (stop inclusive), a comma list, or a single value."""
    try:
        if ":" in text:
            start, step, stop = (float(p) for p in text.split(":"))
            if step <= 0 or stop < start:
                raise ValueError
            count = int(np.floor((stop - start) / step + 1e-9)) + 1
            return tuple(round(start + k * step, 10) for k in range(count))
        return tuple(float(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad SNR spec {text!r}; use start:step:stop") from None


def parse_bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def parse_omega(text: str):
    """``auto``, ``auto:<safety>`` or a positive float."""
    if text == "auto":
        return "auto", AUTO_SAFETY
    if text.startswith("auto:"):
        return "auto", float(text[5:])
    value = float(text)
    if value <= 0:
        raise argparse.ArgumentTypeError("relaxation parameter must be positive")
    return value, AUTO_SAFETY


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="richardson-mimo",
        description="Monte-Carlo BER sweep of exact, Richardson and Neumann MMSE detection.",
    )
    p.add_argument("--preset", choices=["paper-fig1"], help="start from a predefined configuration")
    p.add_argument("--n", type=int, help="base-station antennas N")
    p.add_argument("--k", type=int, help="single-antenna users K")
    p.add_argument("--snr", type=parse_snr, help="receiver SNR grid in dB, start:step:stop")
    p.add_argument(
        "--detector",
        action="append",
        metavar="NAME[:I,I..]",
        help="exact, richardson or neumann, optionally with iteration counts (repeatable)",
    )
    p.add_argument("--iters", type=int, action="append", help="iteration counts for detectors given without them (repeatable)")
    p.add_argument("--omega", type=parse_omega, help="Richardson relaxation: float, auto or auto:<safety>")
    p.add_argument("--coded", type=parse_bool, help="use the convolutional code and interleaver")
    p.add_argument("--frame-bits", type=int, help="info bits per frame")
    p.add_argument("--trials", type=int, help="max frames per SNR point")
    p.add_argument("--target-errors", type=int, help="stop an SNR point once every detector has this many errors")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--workers", type=int, default=1, help="worker processes (results do not depend on it)")
    p.add_argument("--out", required=True, help="CSV output path")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _detectors(names, iters, omega) -> list[DetectorSpec]:
    relaxation, safety = omega if omega else (FIXED_RELAXATION, AUTO_SAFETY)
    default_iters = iters or [5]
    specs = []
    for item in names:
        name, _, counts = item.partition(":")
        if name == "exact":
            specs.append(DetectorSpec("exact"))
            continue
        chosen = [int(c) for c in counts.split(",")] if counts else default_iters
        for i in chosen:
            if name == "richardson":
                specs.append(DetectorSpec(name, i, relaxation, safety))
            else:
                specs.append(DetectorSpec(name, i))
    return specs


def config_from_args(args) -> SimConfig:
    overrides = {}
    if args.n is not None:
        overrides["n_rx"] = args.n
    if args.k is not None:
        overrides["n_users"] = args.k
    if args.snr is not None:
        overrides["snr_db_list"] = args.snr
    if args.detector:
        overrides["detectors"] = tuple(_detectors(args.detector, args.iters, args.omega))
    elif args.omega is not None and args.preset:
        base = fig1_preset_config()
        relaxation, safety = args.omega
        overrides["detectors"] = tuple(
            DetectorSpec(d.method, d.iters, relaxation, safety) if d.method == "richardson" else d
            for d in base.detectors
        )
    if args.coded is not None:
        overrides["coded"] = args.coded
    if args.frame_bits is not None:
        overrides["frame_info_bits"] = args.frame_bits
    if args.trials is not None:
        overrides["max_trials"] = args.trials
    if args.target_errors is not None:
        overrides["target_bit_errors"] = args.target_errors
    if args.seed is not None:
        overrides["master_seed"] = args.seed

    if args.preset == "paper-fig1":
        return fig1_preset_config(**overrides)
    missing = [k for k in ("n_rx", "n_users", "snr_db_list", "detectors") if k not in overrides]
    if missing:
        raise MimoError(f"without --preset these are required: {', '.join(missing)}")
    return SimConfig(**overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        config = config_from_args(args)
    except (MimoError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    log.info("running %d SNR points x %d detectors", len(config.snr_db_list), len(config.detectors))
    records = run_sweep(config, workers=max(1, args.workers))
    comments = [
        SNR_CONVENTION,
        f"N={config.n_rx} K={config.n_users} coded={config.coded} frame_info_bits={config.frame_info_bits} "
        f"max_trials={config.max_trials} target_bit_errors={config.target_bit_errors} seed={config.master_seed}",
    ]
    try:
        emit_csv(records, args.out, comments)
    except SimIOError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    for r in records:
        log.info("%-10s i=%d snr=%5.1f ber=%.3e (%d/%d)", r.detector, r.iters, r.snr_db, r.ber, r.bit_errors, r.bits)
    return 0


if __name__ == "__main__":
    sys.exit(main())
