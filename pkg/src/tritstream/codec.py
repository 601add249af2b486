"""Progressive encoder/decoder: plane loop, framing, truncation, MMSE output.

Both sides walk the digit planes most-significant first.  For each plane
they compute the same priorities from the same interval state, apply forced
digits for free, and entropy-code (or decode) the uncertain digits in
priority order into one chunk per plane.  The stream is the packed header
followed by the concatenated chunks; any byte prefix that still contains the
full header decodes to a valid reconstruction.

Truncation semantics: a plane is entered when bytes remain for it, or when
its directory entry is zero and either bytes remain for later planes or the
stream is byte-complete.  This makes a header-only prefix decode to the
untouched initial intervals (mse = mean initial distortion) while a complete
stream always applies every plane, including trailing all-forced planes that
occupy zero bytes.

Values are canonicalized before coding: clamped into the model interval,
then nudged per plane whenever their digit falls in a zero-frequency bin of
the quantized table (such digits cannot be coded; the mass there is below
2**-16).  The nudge picks the nearest nonzero bin, ties toward the smaller
digit, and clamps the value into it.  decode(encode(x)) therefore equals
canonicalize(x), and equals x exactly when x is already canonical.

Reconstruction values are conditional means over the final intervals.  Two
exactness rules matter downstream: an interval of width 1 reconstructs to
its integer with zero variance, and a base-3 interval centered on zero
reconstructs to 0.0 exactly (its masses are mirror-exact by construction, so
the true mean is zero; forcing it removes float summation dust).
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .entropy import RangeEncoder, decode_digits
from .errors import CorruptionError, FormatError
from .formats import pack_stream_header, parse_stream_header, stream_header_size
from .gaussian import ElementModel, ModelBank, build_model_bank
from .priority import plane_priorities_naive, plane_priorities_vectorized
from .reduction import Shape
from .slicing import IntervalState

__all__ = [
    "EncodeResult",
    "Reconstruction",
    "encode",
    "encode_result",
    "decode",
    "truncate",
    "rd_trace",
    "canonicalize",
    "expected_distortion",
    "PRIORITY_IMPLS",
]

PRIORITY_IMPLS = {
    "vectorized": plane_priorities_vectorized,
    "naive": plane_priorities_naive,
}


@dataclass(frozen=True)
class EncodeResult:
    """Encoded stream plus per-plane accounting.

    entropy_bits[n] is the summed digit entropy of plane n's coded digits,
    the rate model the payload lengths are compared against.  canonical is
    the integer tensor the stream actually represents.
    """

    stream: bytes
    header_size: int
    payload_lengths: np.ndarray
    coded_digits: np.ndarray
    entropy_bits: np.ndarray
    canonical: np.ndarray


@dataclass(frozen=True)
class Reconstruction:
    """Decoder output: conditional means over the surviving intervals."""

    values: np.ndarray
    mse: float
    digits_applied: np.ndarray
    exact: bool


def _prepare(values, sigmas, base: int, sigma_mode: int):
    values = np.asarray(values)
    if values.ndim != 3:
        raise ValueError("expected a (C, H, W) latent tensor")
    if not np.issubdtype(values.dtype, np.integer):
        raise ValueError("latent values must be integers")
    if sigma_mode not in (0, 1):
        raise ValueError(f"invalid sigma storage mode {sigma_mode}")
    sig = np.asarray(sigmas, dtype=np.float64)
    if sig.shape != values.shape:
        raise ValueError("values and sigmas must share one shape")
    shape = Shape(*values.shape)
    sig32 = sig.ravel().astype("<f4")
    # Mode 1 rounds scales to float32 so both coder sides model identically.
    bank_sig = sig32.astype(np.float64) if sigma_mode == 1 else sig.ravel()
    bank = build_model_bank(bank_sig, base)
    return shape, sig32, bank


def _interval_moments(bank: ModelBank, state: IntervalState, ids: np.ndarray):
    """Conditional mean and variance of each listed element's interval."""
    widths = state.widths()[ids]
    left = bank.offsets[ids] + state.lo[ids]
    startpos = bank.starts[ids] + state.lo[ids]
    e = np.empty(ids.size, dtype=np.float64)
    v = np.empty(ids.size, dtype=np.float64)
    for w in np.unique(widths):
        rows = np.flatnonzero(widths == w)
        w = int(w)
        if w == 1:
            e[rows] = left[rows].astype(np.float64)
            v[rows] = 0.0
            continue
        p = bank.masses_flat[startpos[rows][:, None] + np.arange(w)]
        m = left[rows][:, None] + np.arange(w, dtype=np.float64)
        t = p.sum(axis=1)
        mean = (p * m).sum(axis=1) / t
        var = (p * m * m).sum(axis=1) / t - mean * mean
        center = left[rows] + (w - 1) / 2.0
        mean[center == 0.0] = 0.0
        if w % 2 == 0:
            # Unrefined even-width supports: the mirrored masses cancel
            # exactly, so only the unpaired top member survives.  Summing
            # in member order buries that term under cancellation noise.
            fresh = state.applied[ids[rows]] == 0
            if np.any(fresh):
                top = left[rows][fresh].astype(np.float64) + (w - 1)
                mean[fresh] = top * p[fresh, -1] / t[fresh]
        np.maximum(var, 0.0, out=var)
        e[rows] = mean
        v[rows] = var
    return e, v


def _plane_digits(bank: ModelBank, state: IntervalState, pr, j: np.ndarray,
                  sub: int) -> np.ndarray:
    """Digits of the active elements at this plane, nudging j when needed.

    A digit landing in a zero-frequency bin cannot be entropy-coded; the
    value is clamped into the nearest bin the table can express.
    """
    act = pr.active
    lo = state.lo[act]
    cand = (j[act] - lo) // sub
    freq_at = pr.tables[np.arange(act.size), cand]
    bad = np.flatnonzero(freq_at == 0)
    if bad.size:
        ks = np.arange(bank.base)
        dist = np.where(pr.tables[bad] > 0,
                        np.abs(ks[None, :] - cand[bad, None]),
                        bank.base + 1)
        snap = dist.argmin(axis=1)
        cand[bad] = snap
        ids = act[bad]
        lo_new = lo[bad] + snap * sub
        j[ids] = np.clip(j[ids], lo_new, lo_new + sub - 1)
    return cand


def _encode_session(values, sigmas, base: int, sigma_mode: int, priority_fn,
                    trace_group: int | None, perf: dict | None):
    shape, sig32, bank = _prepare(values, sigmas, base, sigma_mode)
    j = np.clip(values.ravel().astype(np.int64) - bank.offsets,
                0, bank.lengths - 1)
    state = IntervalState.initial(bank)
    header_size = stream_header_size(shape, sigma_mode, bank.l_max)

    points = None
    if trace_group is not None:
        if trace_group < 1:
            raise ValueError("trace group must be positive")
        _, v_track = _interval_moments(bank, state, np.arange(bank.size))
        points = [(8.0 * header_size, float(v_track.mean()))]

    payloads: list[bytes] = []
    coded = np.zeros(bank.l_max, dtype=np.int64)
    ebits = np.zeros(bank.l_max, dtype=np.float64)
    done = 0
    for n in range(bank.l_max):
        t0 = time.perf_counter()
        pr = priority_fn(bank, state, n)
        if perf is not None:
            perf["priority_s"] = perf.get("priority_s", 0.0) + time.perf_counter() - t0
        sub = bank.base ** (bank.l_max - n - 1)
        cand = _plane_digits(bank, state, pr, j, sub)
        upos = np.searchsorted(pr.active, pr.order)
        tabs = pr.tables[upos]
        digs = cand[upos]
        state.apply_plane_digits(n, pr.active, cand)
        if points is not None:
            _, v_active = _interval_moments(bank, state, pr.active)
            v_track[pr.certain] = v_active[np.searchsorted(pr.active, pr.certain)]

        u = pr.order.size
        coded[n] = u
        ebits[n] = float(pr.delta_r.sum())
        if u:
            cums = np.zeros((u, bank.base + 1), dtype=np.int64)
            np.cumsum(tabs, axis=1, out=cums[:, 1:])
            cum_l = cums.tolist()
            freq_l = tabs.tolist()
            dig_l = digs.tolist()
            enc = RangeEncoder()
            t0 = time.perf_counter()
            for i in range(u):
                d = dig_l[i]
                enc.encode(cum_l[i][d], freq_l[i][d])
                if points is not None:
                    v_track[pr.order[i]] = v_active[upos[i]]
                    if (i + 1) % trace_group == 0:
                        bits = 8.0 * (header_size + done + enc.tell())
                        points.append((bits, float(v_track.mean())))
            chunk = enc.finish()
            if perf is not None:
                perf["entropy_s"] = perf.get("entropy_s", 0.0) + time.perf_counter() - t0
        else:
            chunk = b""
        payloads.append(chunk)
        done += len(chunk)
        if points is not None and chunk:
            points.append((8.0 * (header_size + done), float(v_track.mean())))

    lengths = np.asarray([len(c) for c in payloads], dtype=np.int64)
    header = pack_stream_header(base, sigma_mode, shape, bank.l_max, lengths,
                                sig32 if sigma_mode == 1 else None)
    stream = header + b"".join(payloads)
    result = EncodeResult(
        stream=stream,
        header_size=header_size,
        payload_lengths=lengths,
        coded_digits=coded,
        entropy_bits=ebits,
        canonical=(bank.offsets + j).reshape(values.shape),
    )
    if points is not None:
        # Mid-plane estimates can repeat a byte count (low-entropy digits may
        # leave the coder's buffer untouched across a whole group).  Keep the
        # first, conservative point per byte count; points at the final byte
        # count would contradict the complete stream, which applies every
        # remaining zero-byte plane, so the exact endpoint replaces them all.
        total_bits = 8.0 * len(stream)
        seen: set[float] = set()
        kept = []
        for bits, mse in points:
            if bits < total_bits and bits not in seen:
                seen.add(bits)
                kept.append((bits, mse))
        kept.append((total_bits, float(v_track.mean())))
        return result, np.asarray(kept, dtype=np.float64)
    return result, None


def encode(values, sigmas, base: int = 3, sigma_mode: int = 1, *,
           priority_impl: str = "vectorized", perf: dict | None = None) -> bytes:
    """Encode an integer latent tensor into a progressive stream."""
    return encode_result(values, sigmas, base, sigma_mode,
                         priority_impl=priority_impl, perf=perf).stream


def encode_result(values, sigmas, base: int = 3, sigma_mode: int = 1, *,
                  priority_impl: str = "vectorized",
                  perf: dict | None = None) -> EncodeResult:
    """Encode and keep the per-plane accounting alongside the stream."""
    result, _ = _encode_session(values, sigmas, base, sigma_mode,
                                PRIORITY_IMPLS[priority_impl], None, perf)
    return result


def rd_trace(values, sigmas, base: int = 3, sigma_mode: int = 1, *,
             group: int = 256) -> tuple[np.ndarray, bytes]:
    """Encode and report the (cumulative_bits, mse) curve.

    Points land at every `group` coded digits and at plane boundaries; the
    first point is (header bits, mean initial distortion), the last
    (total bits, 0.0).  Returns the points and the encoded stream.
    """
    result, points = _encode_session(values, sigmas, base, sigma_mode,
                                     plane_priorities_vectorized, group, None)
    return points, result.stream


def canonicalize(values, sigmas, base: int = 3, sigma_mode: int = 1) -> np.ndarray:
    """The integer tensor a round-trip through the codec preserves exactly."""
    _, _, bank = _prepare(values, sigmas, base, sigma_mode)
    return _canonicalize(values, bank)


def _canonicalize(values, bank: ModelBank) -> np.ndarray:
    j = np.clip(values.ravel().astype(np.int64) - bank.offsets,
                0, bank.lengths - 1)
    state = IntervalState.initial(bank)
    for n in range(bank.l_max):
        pr = plane_priorities_vectorized(bank, state, n)
        sub = bank.base ** (bank.l_max - n - 1)
        cand = _plane_digits(bank, state, pr, j, sub)
        state.apply_plane_digits(n, pr.active, cand)
    return (bank.offsets + j).reshape(values.shape)


def truncate(stream: bytes, byte_budget: int) -> bytes:
    """Cut a stream to a byte budget; the header must survive whole."""
    header = parse_stream_header(stream)
    if byte_budget < header.header_size:
        raise ValueError(
            f"budget {byte_budget} is below the header size {header.header_size}")
    return stream[:byte_budget]


def decode(stream: bytes, sigmas=None, *, priority_impl: str = "vectorized",
           perf: dict | None = None) -> Reconstruction:
    """Decode a stream or any header-preserving byte prefix of one."""
    priority_fn = PRIORITY_IMPLS[priority_impl]
    hdr = parse_stream_header(stream)
    if hdr.sigma_mode == 1:
        bank_sig = hdr.sigmas.astype(np.float64)
    else:
        if sigmas is None:
            raise ValueError("sigma storage mode 0 needs out-of-band scales")
        sig = np.asarray(sigmas, dtype=np.float64)
        if sig.size != hdr.shape.size:
            raise ValueError("scale count does not match the stream dimensions")
        bank_sig = sig.ravel()
    bank = build_model_bank(bank_sig, hdr.base)
    if bank.l_max != hdr.l_max:
        raise CorruptionError("plane count disagrees with the scales")
    full_end = hdr.header_size + int(hdr.payload_lengths.sum(dtype=np.int64))
    if len(stream) > full_end:
        raise FormatError("stream extends past its plane directory")
    complete = len(stream) == full_end

    state = IntervalState.initial(bank)
    pos = hdr.header_size
    for n in range(hdr.l_max):
        plen = int(hdr.payload_lengths[n])
        remaining = len(stream) - pos
        if remaining == 0 and (plen > 0 or not complete):
            break
        t0 = time.perf_counter()
        pr = priority_fn(bank, state, n)
        if perf is not None:
            perf["priority_s"] = perf.get("priority_s", 0.0) + time.perf_counter() - t0
        u = pr.order.size
        if (u == 0) != (plen == 0):
            raise CorruptionError("plane directory disagrees with the models")
        if pr.certain.size:
            state.apply_plane_digits(n, pr.certain, pr.forced_digit)
        if u == 0:
            continue
        avail = min(plen, remaining)
        t0 = time.perf_counter()
        res = decode_digits(stream[pos:pos + avail], pr.tables_for(pr.order), u)
        if perf is not None:
            perf["entropy_s"] = perf.get("entropy_s", 0.0) + time.perf_counter() - t0
        if res.digits.size:
            state.apply_plane_digits(n, pr.order[:res.digits.size], res.digits)
        pos += avail
        if res.digits.size < u:
            if avail == plen:
                raise CorruptionError("payload ended before its digit count")
            break

    e, v = _interval_moments(bank, state, np.arange(bank.size))
    dims = (hdr.shape.channels, hdr.shape.height, hdr.shape.width)
    return Reconstruction(
        values=e.reshape(dims),
        mse=float(v.mean()),
        digits_applied=state.applied.copy(),
        exact=bool(np.all(state.applied == bank.exponents)),
    )


def expected_distortion(model: ElementModel, digits_applied: int) -> float:
    """Expected squared error after n digits, averaged over all digit paths.

    This is the marginal counterpart of a decoder's reported per-element
    distortion: the reconstruction is the conditional mean of whichever
    depth-n interval the value falls in.
    """
    n = digits_applied
    if not 0 <= n <= model.exponent:
        raise ValueError(f"digit count {n} outside 0..{model.exponent}")
    if n == model.exponent:
        return 0.0
    p = model.masses.reshape(model.base ** n, -1)
    m = model.support.astype(np.float64).reshape(p.shape)
    s = p.sum(axis=1)
    mu = (p * m).sum(axis=1) / s
    within = (p * m * m).sum(axis=1) - mu * mu * s
    return float(np.maximum(within, 0.0).sum() / p.sum())
