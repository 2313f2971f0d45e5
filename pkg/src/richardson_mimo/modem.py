"""64-QAM mapping, max-log soft demapping and the rate-1/2 convolutional coding chain.

LLR sign convention: positive means bit 0 is more likely.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError, FramingError

BITS_PER_SYMBOL = 6
QAM64_SCALE = 1.0 / np.sqrt(42.0)

# Gray labels of the 8-PAM levels, MSB first, before scaling
PAM8_GRAY = {
    (0, 0, 0): -7,
    (0, 0, 1): -5,
    (0, 1, 1): -3,
    (0, 1, 0): -1,
    (1, 1, 0): +1,
    (1, 1, 1): +3,
    (1, 0, 1): +5,
    (1, 0, 0): +7,
}

# level indexed by the 3-bit label read as an integer
_LEVEL_OF_LABEL = np.zeros(8)
for _bits, _level in PAM8_GRAY.items():
    _LEVEL_OF_LABEL[_bits[0] * 4 + _bits[1] * 2 + _bits[2]] = _level
# bit table of the levels in ascending order: _LEVEL_BITS[j, b] is bit b of level j
_LEVELS = np.arange(-7.0, 8.0, 2.0)
_LEVEL_BITS = np.array(
    [next(b for b, lv in PAM8_GRAY.items() if lv == level) for level in _LEVELS]
)

CONSTRAINT_LENGTH = 7
MEMORY = CONSTRAINT_LENGTH - 1
N_STATES = 1 << MEMORY
GENERATORS = (0o133, 0o171)


def _bits(bits) -> np.ndarray:
    b = np.asarray(bits)
    if b.ndim != 1:
        raise FramingError(f"expected a 1-D bit sequence, got shape {b.shape}")
    if b.size and not np.all((b == 0) | (b == 1)):
        raise DomainError("bit sequence contains values other than 0/1")
    return b.astype(np.int8)


def qam64_constellation() -> np.ndarray:
    """All 64 points, indexed by the 6-bit label (I bits first, MSB first)."""
    labels = np.arange(64)
    return (_LEVEL_OF_LABEL[labels >> 3] + 1j * _LEVEL_OF_LABEL[labels & 7]) * QAM64_SCALE


def qam64_modulate(bits) -> np.ndarray:
    b = _bits(bits)
    if b.size % BITS_PER_SYMBOL:
        raise FramingError(f"bit count {b.size} is not a multiple of {BITS_PER_SYMBOL}")
    g = b.reshape(-1, 2, 3)
    label = g[..., 0] * 4 + g[..., 1] * 2 + g[..., 2]
    levels = _LEVEL_OF_LABEL[label]
    return (levels[:, 0] + 1j * levels[:, 1]) * QAM64_SCALE


def _pam_llr(r: np.ndarray) -> np.ndarray:
    # squared distance of each sample to the 8 levels, shape (m, 8)
    d2 = (r[:, None] - _LEVELS[None, :] * QAM64_SCALE) ** 2
    out = np.empty((r.size, 3))
    for b in range(3):
        ones = _LEVEL_BITS[:, b] == 1
        out[:, b] = d2[:, ones].min(axis=1) - d2[:, ~ones].min(axis=1)
    return out


def llr_demap(equalized, eff_noise_var: float) -> np.ndarray:
    """Max-log LLRs, six per symbol in modulation bit order.

    Each LLR is ``(min_{p: b=1} |r-p|^2 - min_{p: b=0} |r-p|^2) / eff_noise_var``.
    The square grid makes the search separable, so it runs on I and Q apart.
    """
    if not eff_noise_var > 0:
        raise DomainError(f"effective noise variance must be positive, got {eff_noise_var}")
    r = np.asarray(equalized, dtype=np.complex128).ravel()
    llr = np.concatenate([_pam_llr(r.real), _pam_llr(r.imag)], axis=1)
    return llr.ravel() / eff_noise_var


def _parity(x: np.ndarray) -> np.ndarray:
    x = x.copy()
    x ^= x >> 4
    x ^= x >> 2
    x ^= x >> 1
    return x & 1


def _taps(g: int) -> np.ndarray:
    return np.array([(g >> (MEMORY - k)) & 1 for k in range(CONSTRAINT_LENGTH)], dtype=np.int64)


def conv_encode(info_bits) -> np.ndarray:
    """Encode with generators 133/171 (octal), zero-terminated with six tail bits.

    Output pairs ``(g0, g1)`` per input bit, length ``2 * (len + 6)``.
    """
    u = _bits(info_bits)
    if u.size == 0:
        raise FramingError("cannot encode an empty block")
    padded = np.concatenate([u, np.zeros(MEMORY, dtype=np.int8)]).astype(np.int64)
    streams = [np.convolve(padded, _taps(g))[: padded.size] & 1 for g in GENERATORS]
    return np.stack(streams, axis=1).ravel().astype(np.int8)


def _trellis():
    # state = previous MEMORY inputs, most recent in the high bit
    nxt = np.arange(N_STATES)
    preds = np.stack([(nxt & (N_STATES // 2 - 1)) << 1, ((nxt & (N_STATES // 2 - 1)) << 1) | 1], 1)
    u = (nxt >> (MEMORY - 1))[:, None]
    reg = (u << MEMORY) | preds
    out = np.stack([_parity(reg & g) for g in GENERATORS], axis=-1)
    return preds, out.astype(np.float64)


_PREDS, _BRANCH_BITS = _trellis()


def viterbi_decode_soft(llrs) -> np.ndarray:
    """Soft-input Viterbi over the 64-state trellis, started and terminated in state 0.

    ``llrs`` is one codeword ``(L,)`` or a batch ``(B, L)``; the result has the
    matching shape with ``L / 2 - 6`` info bits per codeword. A branch costs
    the sum of the LLRs of its ``1`` output bits. On equal path metrics the
    predecessor with the lower state index wins.
    """
    x = np.asarray(llrs, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2:
        raise FramingError(f"expected (L,) or (B, L) LLRs, got shape {x.shape}")
    length = x.shape[1]
    if length % 2 or length < 2 * (MEMORY + 1):
        raise FramingError(f"LLR length {length} does not fit a terminated trellis")
    if not np.all(np.isfinite(x)):
        raise DomainError("LLRs must be finite")

    steps = length // 2
    pairs = x.reshape(x.shape[0], steps, 2)
    batch = x.shape[0]
    metric = np.full((batch, N_STATES), np.inf)
    metric[:, 0] = 0.0
    choices = np.empty((steps, batch, N_STATES), dtype=bool)
    b0, b1 = _BRANCH_BITS[..., 0], _BRANCH_BITS[..., 1]
    for t in range(steps):
        l0 = pairs[:, t, 0][:, None, None]
        l1 = pairs[:, t, 1][:, None, None]
        cand = metric[:, _PREDS] + b0 * l0 + b1 * l1
        pick = cand[..., 1] < cand[..., 0]
        choices[t] = pick
        metric = np.where(pick, cand[..., 1], cand[..., 0])

    rows = np.arange(batch)
    state = np.zeros(batch, dtype=np.int64)
    decided = np.empty((batch, steps), dtype=np.int8)
    for t in range(steps - 1, -1, -1):
        decided[:, t] = state >> (MEMORY - 1)
        state = _PREDS[state, choices[t, rows, state].astype(np.int64)]
    info = decided[:, : steps - MEMORY]
    return info[0] if single else info


def interleaver_permutation(length: int, seed: int) -> np.ndarray:
    if length < 1:
        raise FramingError("interleaver length must be positive")
    return np.random.default_rng(seed).permutation(length)


def interleave(seq, seed: int) -> np.ndarray:
    """Seeded pseudorandom permutation: ``out[k] = seq[perm[k]]``."""
    x = np.asarray(seq)
    if x.ndim != 1:
        raise FramingError("interleaver input must be 1-D")
    return x[interleaver_permutation(x.size, seed)]


def deinterleave(seq, seed: int, length: int | None = None) -> np.ndarray:
    """Inverse of :func:`interleave`; ``length`` guards against a mismatched frame."""
    y = np.asarray(seq)
    if y.ndim != 1:
        raise FramingError("deinterleaver input must be 1-D")
    if length is not None and y.size != length:
        raise FramingError(f"deinterleaver expected {length} values, got {y.size}")
    out = np.empty_like(y)
    out[interleaver_permutation(y.size, seed)] = y
    return out
