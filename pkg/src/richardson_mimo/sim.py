"""Monte-Carlo BER and complexity harness.

Receiver SNR is the total received signal power per antenna (``K`` users of
unit symbol energy over unit-variance channel taps) divided by the noise
power per antenna, so ``sigma2_c = K / 10**(snr_db / 10)``.

A trial is one frame: a fresh channel realization shared by every channel
use of the frame (quasi-static flat fading). All configured detectors see
bit-identical inputs within a trial. Trials are seeded by
``(master_seed, snr_index, trial_index)`` and run in fixed-size batches, and
the stopping rule is checked only between batches, so results do not depend
on the number of worker processes.
"""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from . import modem
from .errors import ConfigurationError, MimoError
from .linsolve import count_multiplications
from .mimo import (
    AUTO_SAFETY,
    auto_relaxation,
    build_filtering_system,
    complex_to_real,
    detect_exact,
    detect_neumann,
    detect_richardson,
    generate_channel,
)

FIXED_RELAXATION = 0.00645
CSV_HEADER = ["detector", "iters", "snr_db", "trials", "bits", "bit_errors", "ber", "mults", "wall_seconds"]
SNR_CONVENTION = "snr_db = 10*log10(K / sigma2_c); sigma2_c = complex noise variance per antenna, unit-energy symbols, unit-variance channel taps"
TRIALS_PER_BATCH = 8

Relaxation = Union[float, str]


class SimIOError(MimoError, OSError):
    """Writing simulation output failed."""


@dataclass(frozen=True)
class DetectorSpec:
    method: str
    iters: int = 0
    relaxation: Relaxation = FIXED_RELAXATION
    safety: float = AUTO_SAFETY

    def __post_init__(self):
        if self.method not in ("exact", "richardson", "neumann"):
            raise ConfigurationError(f"unknown detector {self.method!r}")
        if self.method == "exact":
            object.__setattr__(self, "iters", 0)
        elif self.method == "richardson" and self.iters < 1:
            raise ConfigurationError("richardson needs iters >= 1")
        elif self.method == "neumann" and self.iters not in (2, 3, 4, 5):
            raise ConfigurationError("neumann iters must be one of the tabulated rows 2..5")
        if self.method == "richardson":
            if self.relaxation != "auto" and not (
                isinstance(self.relaxation, (int, float)) and self.relaxation > 0
            ):
                raise ConfigurationError(f"bad relaxation {self.relaxation!r}")
            if not 0 < self.safety <= 1:
                raise ConfigurationError(f"safety must lie in (0, 1], got {self.safety}")

    @property
    def label(self) -> str:
        return self.method if self.method == "exact" else f"{self.method}-{self.iters}"


@dataclass(frozen=True)
class SimConfig:
    n_rx: int
    n_users: int
    snr_db_list: tuple[float, ...]
    detectors: tuple[DetectorSpec, ...]
    coded: bool = False
    frame_info_bits: int = 2304
    max_trials: int = 100
    target_bit_errors: int = 400
    master_seed: int = 0
    interleaver_seed: int = 1
    trials_per_batch: int = TRIALS_PER_BATCH

    def __post_init__(self):
        object.__setattr__(self, "snr_db_list", tuple(float(s) for s in self.snr_db_list))
        object.__setattr__(self, "detectors", tuple(self.detectors))
        if self.n_users < 1 or self.n_rx <= self.n_users:
            raise ConfigurationError(f"need n_rx > n_users >= 1, got {self.n_rx}x{self.n_users}")
        if not self.snr_db_list:
            raise ConfigurationError("SNR list is empty")
        if not self.detectors:
            raise ConfigurationError("no detectors configured")
        if self.max_trials < 1 or self.trials_per_batch < 1:
            raise ConfigurationError("max_trials and trials_per_batch must be >= 1")
        if self.frame_info_bits < 1:
            raise ConfigurationError("frame_info_bits must be positive")
        if self.target_bit_errors < 0:
            raise ConfigurationError("target_bit_errors must be non-negative")


@dataclass
class BerRecord:
    detector: str
    iters: int
    snr_db: float
    trials: int
    bits: int
    bit_errors: int
    ber: float
    mults: int
    wall_seconds: float = 0.0


def fig1_preset_config(**overrides) -> SimConfig:
    """128 x 16 coded 64-QAM, fixed relaxation 0.00645, both iterative methods at i = 2..5."""
    detectors = [DetectorSpec("exact")]
    detectors += [DetectorSpec("richardson", i, FIXED_RELAXATION) for i in range(2, 6)]
    detectors += [DetectorSpec("neumann", i) for i in range(2, 6)]
    base = dict(
        n_rx=128,
        n_users=16,
        snr_db_list=(0.0, 1.0, 2.0, 3.0, 4.0, 5.0),
        detectors=tuple(detectors),
        coded=True,
        max_trials=200,
        target_bit_errors=400,
        master_seed=0,
    )
    base.update(overrides)
    return SimConfig(**base)


def snr_to_noise_variance(snr_db: float, n_users: int) -> float:
    if n_users < 1:
        raise ConfigurationError("n_users must be >= 1")
    return n_users / 10.0 ** (snr_db / 10.0)


def _tx_length(config: SimConfig) -> tuple[int, int]:
    """(payload bits on air, padded bits on air); padding fills the last channel use."""
    payload = 2 * (config.frame_info_bits + modem.MEMORY) if config.coded else config.frame_info_bits
    per_use = modem.BITS_PER_SYMBOL * config.n_users
    return payload, -(-payload // per_use) * per_use


def _detect(spec: DetectorSpec, fs, omega_cache: dict) -> np.ndarray:
    if spec.method == "exact":
        return detect_exact(fs)
    if spec.method == "neumann":
        return detect_neumann(fs, spec.iters)[0]
    w = spec.relaxation
    if w == "auto":
        # one eigenvalue estimate per frame, shared by every auto detector
        if "lambda" not in omega_cache:
            omega_cache["lambda"] = 2.0 / auto_relaxation(fs, 1.0)
        w = spec.safety * 2.0 / omega_cache["lambda"]
    return detect_richardson(fs, float(w), spec.iters)[0]


def run_trial(config: SimConfig, snr_db: float, trial_seed) -> list[tuple[int, int]]:
    """One frame through every detector; returns ``(bit_errors, info_bits)`` per detector."""
    return [(e, b) for e, b, _ in _trial(config, snr_db, trial_seed)]


def _trial(config: SimConfig, snr_db: float, trial_seed) -> list[tuple[int, int, float]]:
    rng = np.random.default_rng(trial_seed)
    K, N = config.n_users, config.n_rx
    info = rng.integers(0, 2, config.frame_info_bits, dtype=np.int8)
    if config.coded:
        payload_bits = modem.interleave(modem.conv_encode(info), config.interleaver_seed)
    else:
        payload_bits = info
    payload, padded = _tx_length(config)
    tx_bits = np.concatenate([payload_bits, rng.integers(0, 2, padded - payload, dtype=np.int8)])
    # symbol j goes to channel use j // K, user j % K
    s = modem.qam64_modulate(tx_bits).reshape(-1, K).T

    H = generate_channel(N, K, rng)
    sigma2_c = snr_to_noise_variance(snr_db, K)
    noise = rng.standard_normal((N, s.shape[1], 2)) * math.sqrt(sigma2_c / 2)
    y = H.entries @ s + (noise[..., 0] + 1j * noise[..., 1])
    fs = build_filtering_system(complex_to_real(H, y, sigma2_c))
    eff_var = sigma2_c / float(np.mean(np.diag(fs.gram)))

    omega_cache: dict = {}
    results = []
    llr_rows = []
    for spec in config.detectors:
        t0 = time.perf_counter()
        x = _detect(spec, fs, omega_cache)
        s_hat = (x[:K] + 1j * x[K:]).T.ravel()
        llr = modem.llr_demap(s_hat, eff_var)[:payload]
        if config.coded:
            llr_rows.append(modem.deinterleave(llr, config.interleaver_seed, payload))
            results.append([0, info.size, time.perf_counter() - t0])
        else:
            errors = int(np.count_nonzero((llr < 0) != (info == 1)))
            results.append([errors, info.size, time.perf_counter() - t0])
    if config.coded:
        t0 = time.perf_counter()
        decoded = modem.viterbi_decode_soft(np.stack(llr_rows))
        share = (time.perf_counter() - t0) / len(results)
        for row, bits in zip(results, decoded):
            row[0] = int(np.count_nonzero(bits != info))
            row[2] += share
    return [tuple(r) for r in results]


def trial_seed(master_seed: int, snr_index: int, trial_index: int) -> list[int]:
    return [master_seed, snr_index, trial_index]


def _run_one(args) -> list[tuple[int, int, float]]:
    config, snr_db, seed = args
    return _trial(config, snr_db, seed)


def run_sweep(config: SimConfig, workers: int = 1) -> list[BerRecord]:
    """Run every SNR point until each detector has ``target_bit_errors`` or trials run out.

    Records come out detector by detector (config order), SNR ascending.
    """
    n_det = len(config.detectors)
    snrs = sorted(enumerate(config.snr_db_list), key=lambda p: p[1])
    totals: dict[int, np.ndarray] = {}
    walls: dict[int, np.ndarray] = {}
    trials_run: dict[int, int] = {}

    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for snr_index, snr_db in snrs:
            acc = np.zeros((n_det, 2), dtype=np.int64)
            wall = np.zeros(n_det)
            done = 0
            while done < config.max_trials:
                batch = range(done, min(done + config.trials_per_batch, config.max_trials))
                jobs = [(config, snr_db, trial_seed(config.master_seed, snr_index, t)) for t in batch]
                outs = pool.map(_run_one, jobs) if pool else map(_run_one, jobs)
                for out in outs:
                    for d, (e, b, sec) in enumerate(out):
                        acc[d] += (e, b)
                        wall[d] += sec
                done = batch.stop
                if np.all(acc[:, 0] >= config.target_bit_errors):
                    break
            totals[snr_index], walls[snr_index], trials_run[snr_index] = acc, wall, done
    finally:
        if pool:
            pool.shutdown()

    records = []
    for d, spec in enumerate(config.detectors):
        mults = count_multiplications(spec.method, config.n_users, spec.iters)
        for snr_index, snr_db in snrs:
            errors, bits = (int(v) for v in totals[snr_index][d])
            records.append(
                BerRecord(
                    detector=spec.method,
                    iters=spec.iters,
                    snr_db=snr_db,
                    trials=trials_run[snr_index],
                    bits=bits,
                    bit_errors=errors,
                    ber=errors / bits if bits else 0.0,
                    mults=mults,
                    wall_seconds=float(walls[snr_index][d]),
                )
            )
    return records


def _fmt(x: float) -> str:
    return format(x, ".6g")


def emit_csv(records: Sequence[BerRecord], path, comments: Sequence[str] = ()) -> None:
    """Write records under the fixed header; ``comments`` become leading ``#`` lines."""
    try:
        with open(path, "w", newline="") as fh:
            for line in comments:
                fh.write(f"# {line}\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for r in records:
                writer.writerow(
                    [r.detector, r.iters, _fmt(r.snr_db), r.trials, r.bits, r.bit_errors,
                     _fmt(r.ber), r.mults, _fmt(r.wall_seconds)]
                )
    except OSError as exc:
        raise SimIOError(f"cannot write {path}: {exc.strerror or exc}") from exc


def binomial_ci(errors: int, bits: int, z: float = 1.959964) -> tuple[float, float]:
    """Wilson score interval for a bit error rate (95% by default)."""
    if bits == 0:
        return 0.0, 1.0
    p = errors / bits
    denom = 1 + z * z / bits
    centre = (p + z * z / (2 * bits)) / denom
    half = z * math.sqrt(p * (1 - p) / bits + z * z / (4 * bits * bits)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)
