"""Complex field envelopes on uniform time grids.

All times are measured in units of the inverse inhomogeneous linewidth
(1/Gamma_inh) with c = 1, so a pulse of spectral width ``delta_omega`` (in
units of Gamma_inh) has temporal sigma 1/delta_omega.  The optical carrier
exp(-i*omega0*t) is never sampled; it is book-kept through
``carrier_phase_ref`` and through explicit phase factors where a carrier
phase matters (interferometer module).

Envelope "energy" is the discrete L2 norm sum(|a|^2)*dt, in excitation-number
units: a unit-energy envelope corresponds to a single-photon wave packet.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "SampledEnvelope",
    "OverlapWarning",
    "make_gaussian",
    "make_double_packet",
    "time_reverse",
    "shift",
    "scale",
    "add",
    "overlap",
    "fidelity",
    "resample",
    "save_csv",
    "load_csv",
]


class OverlapWarning(UserWarning):
    """Two wave packets were placed too close to be resolved."""


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(a, dtype=np.complex128)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class SampledEnvelope:
    """Slowly-varying complex amplitude sampled on a uniform time grid.

    Immutable after construction; safe to share between threads.
    """

    t_start: float
    dt: float
    samples: np.ndarray
    carrier_phase_ref: float = 0.0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        samples = np.asarray(self.samples)
        if samples.ndim != 1 or samples.size == 0:
            raise ValueError("samples must be a non-empty 1-D array")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")
        object.__setattr__(self, "samples", _readonly(samples))

    @property
    def n(self) -> int:
        return self.samples.size

    @property
    def t_end(self) -> float:
        return self.t_start + (self.n - 1) * self.dt

    @property
    def times(self) -> np.ndarray:
        return self.t_start + self.dt * np.arange(self.n)

    def energy(self) -> float:
        return float(np.sum(np.abs(self.samples) ** 2) * self.dt)

    def with_samples(self, samples: np.ndarray) -> "SampledEnvelope":
        return replace(self, samples=samples)


def _auto_grid(delta_omega, t_center, tau=0.0, min_sigmas=8.0, pts_per_sigma=16):
    """Default grid wide enough for min_sigmas standard deviations per packet."""
    sigma_t = 1.0 / delta_omega
    dt = sigma_t / pts_per_sigma
    t_lo = t_center - min_sigmas * sigma_t
    t_hi = t_center + tau + min_sigmas * sigma_t
    n = int(np.ceil((t_hi - t_lo) / dt)) + 1
    return t_lo, dt, n


def make_gaussian(
    delta_omega: float,
    t_center: float = 0.0,
    phase: float = 0.0,
    amplitude: float = 1.0,
    *,
    t_start: float | None = None,
    dt: float | None = None,
    n: int | None = None,
    min_sigmas: float = 6.0,
) -> SampledEnvelope:
    """Gaussian wave packet, energy exactly amplitude**2 on the grid.

    The envelope is proportional to exp(-((t-t_center)*delta_omega)^2/2) *
    exp(i*phase).  If the grid is not given it is chosen automatically; a
    given grid must hold at least ``min_sigmas`` standard deviations on each
    side of the packet.
    """
    if not delta_omega > 0:
        raise ValueError("delta_omega must be positive")
    if t_start is None or dt is None or n is None:
        if not (t_start is None and dt is None and n is None):
            raise ValueError("give all of t_start/dt/n or none of them")
        t_start, dt, n = _auto_grid(delta_omega, t_center)
    sigma_t = 1.0 / delta_omega
    t_end = t_start + (n - 1) * dt
    if t_center - min_sigmas * sigma_t < t_start or t_center + min_sigmas * sigma_t > t_end:
        raise ValueError(
            f"grid [{t_start}, {t_end}] too narrow for {min_sigmas} sigma "
            f"support of packet at t={t_center} (sigma_t={sigma_t})"
        )
    t = t_start + dt * np.arange(n)
    samples = np.exp(-0.5 * ((t - t_center) * delta_omega) ** 2).astype(np.complex128)
    norm = np.sum(np.abs(samples) ** 2) * dt
    samples *= amplitude / np.sqrt(norm)
    samples *= np.exp(1j * phase)
    return SampledEnvelope(t_start=t_start, dt=dt, samples=samples)


def make_double_packet(
    alpha: complex,
    beta: complex,
    tau: float,
    phi1: float = 0.0,
    phi2: float = 0.0,
    delta_omega: float = 1.0,
    *,
    t_center: float = 0.0,
    t_start: float | None = None,
    dt: float | None = None,
    n: int | None = None,
    separation_threshold: float = 3.0,
) -> SampledEnvelope:
    """Superposition of two Gaussian packets, the second delayed by tau.

    Packet amplitudes are alpha and beta with constant phases phi1, phi2.
    Each packet alone has energy |alpha|^2 resp. |beta|^2; for overlapping
    packets (tau*delta_omega small) the total differs by the Gaussian overlap
    integral and an OverlapWarning is emitted when
    tau*delta_omega < separation_threshold.
    """
    if tau < 0:
        raise ValueError("tau must be non-negative")
    if abs(alpha) ** 2 + abs(beta) ** 2 > 1.0 + 1e-9:
        raise ValueError("|alpha|^2 + |beta|^2 must not exceed 1")
    if tau * delta_omega < separation_threshold:
        warnings.warn(
            f"packet separation tau*delta_omega = {tau * delta_omega:.3g} below "
            f"threshold {separation_threshold}; packets overlap",
            OverlapWarning,
            stacklevel=2,
        )
    if t_start is None or dt is None or n is None:
        t_start, dt, n = _auto_grid(delta_omega, t_center, tau=tau)
    first = make_gaussian(
        delta_omega, t_center, phi1, 1.0, t_start=t_start, dt=dt, n=n
    )
    second = make_gaussian(
        delta_omega, t_center + tau, phi2, 1.0, t_start=t_start, dt=dt, n=n
    )
    samples = alpha * first.samples + beta * second.samples
    return SampledEnvelope(t_start=t_start, dt=dt, samples=samples)


def time_reverse(env: SampledEnvelope, pivot: float) -> SampledEnvelope:
    """Mirror the envelope about ``pivot``: sample at t moves to 2*pivot - t.

    Exact on the sample lattice (no interpolation); energy and carrier phase
    bookkeeping are unchanged.
    """
    new_start = 2.0 * pivot - env.t_end
    return SampledEnvelope(
        t_start=new_start,
        dt=env.dt,
        samples=env.samples[::-1],
        carrier_phase_ref=env.carrier_phase_ref,
    )


def shift(env: SampledEnvelope, delay: float) -> SampledEnvelope:
    """Translate the envelope in time by ``delay`` (grid metadata only)."""
    return replace(env, t_start=env.t_start + delay)


def scale(env: SampledEnvelope, factor: complex) -> SampledEnvelope:
    return env.with_samples(env.samples * factor)


def add(a: SampledEnvelope, b: SampledEnvelope) -> SampledEnvelope:
    """Pointwise sum on the union grid (grids must be commensurate)."""
    if abs(a.dt - b.dt) > 1e-12 * a.dt:
        b = resample(b, b.t_start, a.dt, int(round((b.t_end - b.t_start) / a.dt)) + 1)
    off = (b.t_start - a.t_start) / a.dt
    k = int(round(off))
    if abs(off - k) > 1e-6:
        raise ValueError("grids not commensurate; resample first")
    lo = min(0, k)
    hi = max(a.n, k + b.n)
    out = np.zeros(hi - lo, dtype=np.complex128)
    out[-lo : -lo + a.n] += a.samples
    out[k - lo : k - lo + b.n] += b.samples
    return SampledEnvelope(t_start=a.t_start + lo * a.dt, dt=a.dt, samples=out)


def _aligned_pair(a: SampledEnvelope, b: SampledEnvelope):
    """Return sample arrays of a and b on a's lattice over the union support."""
    if abs(a.dt - b.dt) > 1e-12 * a.dt:
        n_new = int(np.floor((b.t_end - b.t_start) / a.dt)) + 1
        b = resample(b, b.t_start, a.dt, n_new)
    off = (b.t_start - a.t_start) / a.dt
    k = int(round(off))
    if abs(off - k) > 1e-6:
        # incommensurate offsets: put b on a's exact lattice
        n_new = int(np.floor((b.t_end - (a.t_start + np.ceil((b.t_start - a.t_start) / a.dt) * a.dt)) / a.dt)) + 1
        start = a.t_start + np.ceil((b.t_start - a.t_start) / a.dt) * a.dt
        b = resample(b, float(start), a.dt, max(n_new, 2))
        k = int(round((b.t_start - a.t_start) / a.dt))
    lo = min(0, k)
    hi = max(a.n, k + b.n)
    av = np.zeros(hi - lo, dtype=np.complex128)
    bv = np.zeros(hi - lo, dtype=np.complex128)
    av[-lo : -lo + a.n] = a.samples
    bv[k - lo : k - lo + b.n] = b.samples
    return av, bv, a.dt


def overlap(a: SampledEnvelope, b: SampledEnvelope) -> complex:
    """Inner product sum(conj(a)*b)*dt.

    Grids with different step or incommensurate offsets are brought onto a's
    lattice by windowed-sinc resampling (see ``resample``).
    """
    av, bv, dt = _aligned_pair(a, b)
    return complex(np.sum(np.conj(av) * bv) * dt)


def fidelity(a: SampledEnvelope, b: SampledEnvelope) -> float:
    """|<a,b>|^2 / (energy(a)*energy(b)); 1 for envelopes equal up to phase."""
    ea, eb = a.energy(), b.energy()
    if ea <= 0.0 or eb <= 0.0:
        raise ValueError("fidelity undefined for zero-energy envelope")
    return abs(overlap(a, b)) ** 2 / (ea * eb)


def resample(
    env: SampledEnvelope,
    t_start: float,
    dt: float,
    n: int,
    taps: int = 16,
) -> SampledEnvelope:
    """Band-limited resampling with a Kaiser-windowed sinc kernel.

    ``taps`` input samples contribute to each output point (default 16,
    Kaiser beta=14).  Preserves energy of signals well inside the Nyquist
    band to better than 1e-6.
    """
    beta = 14.0
    half = taps // 2
    t_out = t_start + dt * np.arange(n)
    p = (t_out - env.t_start) / env.dt  # fractional input index per output point
    k0 = np.floor(p).astype(int)
    offsets = np.arange(-half + 1, half + 1)
    idx = k0[:, None] + offsets[None, :]
    frac = p[:, None] - idx
    win = np.i0(beta * np.sqrt(np.clip(1.0 - (2.0 * frac / (2 * half)) ** 2, 0.0, 1.0)))
    kern = np.sinc(frac) * win / np.i0(beta)
    valid = (idx >= 0) & (idx < env.n)
    vals = np.where(valid, env.samples[np.clip(idx, 0, env.n - 1)], 0.0)
    out = np.sum(kern * vals, axis=1)
    return SampledEnvelope(
        t_start=t_start, dt=dt, samples=out, carrier_phase_ref=env.carrier_phase_ref
    )


def save_csv(env: SampledEnvelope, path) -> None:
    """Write the envelope as CSV with header t,re,im."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["t", "re", "im"])
        for t, a in zip(env.times, env.samples):
            w.writerow([repr(float(t)), repr(float(a.real)), repr(float(a.imag))])


def load_csv(path) -> SampledEnvelope:
    """Read an envelope written by :func:`save_csv` (header row required)."""
    with open(path, newline="") as f:
        r = csv.reader(f)
        header = next(r)
        if [h.strip().lower() for h in header[:3]] != ["t", "re", "im"]:
            raise ValueError(f"expected header t,re,im in {path}, got {header}")
        rows = [(float(t), float(re), float(im)) for t, re, im in r]
    if len(rows) < 2:
        raise ValueError(f"{path} holds fewer than two samples")
    t = np.array([row[0] for row in rows])
    dts = np.diff(t)
    dt = float(np.mean(dts))
    if np.max(np.abs(dts - dt)) > 1e-9 * max(dt, 1.0):
        raise ValueError(f"{path} is not sampled on a uniform grid")
    samples = np.array([complex(re, im) for _, re, im in rows])
    return SampledEnvelope(t_start=float(t[0]), dt=dt, samples=samples)
