"""Exact analytic memory channel: time reversal plus a global phase.

A packet that entered the medium at time t (referenced to the input grid
start t0) is re-emitted backward at t' - (t - t0), each photon picking up the
controllable phase exp(-i*chi12).  The channel is exactly unitary on the
amplitude data; it is the golden reference the dynamical solver converges to
at large optical depth.

The same map is provided on n-photon kappa-space amplitude tensors, where the
n-photon block acquires exp(-i*n*chi12), the mode arguments move from the
forward (+k0) to the backward (-k0) sideband, and free propagation shows up
as a time-origin shift.  Both forms are exactly Fourier-conjugate; a helper
reconstructs the n=1 time envelope for cross-checks.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace
from itertools import permutations
from math import factorial

import numpy as np

from .envelopes import SampledEnvelope, scale, time_reverse

__all__ = [
    "NPhotonAmplitude",
    "ideal_retrieve_envelope",
    "ideal_retrieve_nphoton",
    "nphoton_from_product",
    "nphoton_to_envelope",
    "save_nphoton",
    "load_nphoton",
]

MAX_PHOTONS = 3
MAX_GRID = 128


def ideal_retrieve_envelope(
    inp: SampledEnvelope, chi12: float, t_prime: float
) -> SampledEnvelope:
    """Ideal retrieved envelope: exp(-i*chi12) * input mirrored onto t'.

    The input is referenced to its own grid start t0 = inp.t_start; sample at
    time t maps to t0 + t' - t, so a packet entering at t = t0 exits at
    t = t'.  Energy is preserved exactly.
    """
    pivot = 0.5 * (inp.t_start + t_prime)
    return scale(time_reverse(inp, pivot), np.exp(-1j * chi12))


@dataclass(frozen=True)
class NPhotonAmplitude:
    """Bose-symmetric rank-n amplitude tensor on a uniform kappa grid.

    ``sideband`` is +1 while the state lives on forward modes (kappa + k0)
    and -1 after retrieval (kappa - k0); ``time_origin`` carries the free
    propagation phase exp(i*c*(t - t')*sum kappa_m) as metadata.
    """

    n: int
    kappa_start: float
    dkappa: float
    values: np.ndarray
    vacuum_amp: complex = 0.0
    sideband: int = 1
    time_origin: float = 0.0

    def __post_init__(self):
        if not 1 <= self.n <= MAX_PHOTONS:
            raise ValueError(f"photon number must be 1..{MAX_PHOTONS}")
        vals = np.ascontiguousarray(self.values, dtype=np.complex128)
        if vals.ndim != self.n:
            raise ValueError(f"rank-{self.n} tensor expected, got shape {vals.shape}")
        if any(s != vals.shape[0] for s in vals.shape):
            raise ValueError("tensor must be square in every axis")
        if vals.shape[0] > MAX_GRID:
            raise ValueError(f"grid limited to {MAX_GRID} points per axis")
        if self.sideband not in (+1, -1):
            raise ValueError("sideband must be +1 or -1")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        asym = self.max_asymmetry()
        if asym > 1e-10:
            raise ValueError(f"tensor not bosonic-symmetric (max asymmetry {asym:.2e})")

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def kappa_grid(self) -> np.ndarray:
        return self.kappa_start + self.dkappa * np.arange(self.m)

    def max_asymmetry(self) -> float:
        worst = 0.0
        for perm in permutations(range(self.n)):
            worst = max(worst, float(np.max(np.abs(self.values - self.values.transpose(perm)))))
        return worst

    def norm(self) -> float:
        """|phi0|^2 + integral of |phi_n|^2 over all n arguments."""
        return float(
            abs(self.vacuum_amp) ** 2
            + np.sum(np.abs(self.values) ** 2) * self.dkappa**self.n
        )


def nphoton_from_product(
    factors: list[np.ndarray],
    kappa_start: float,
    dkappa: float,
    vacuum_amp: complex = 0.0,
    normalize: bool = True,
) -> NPhotonAmplitude:
    """Symmetrized product state phi_n ~ sym(f1 x f2 x ... ) on a shared grid."""
    n = len(factors)
    tensor = factors[0].astype(np.complex128)
    for f in factors[1:]:
        tensor = np.multiply.outer(tensor, f.astype(np.complex128))
    sym = np.zeros_like(tensor)
    for perm in permutations(range(n)):
        sym += tensor.transpose(perm)
    sym /= factorial(n)
    if normalize:
        nn = np.sum(np.abs(sym) ** 2) * dkappa**n
        if nn > 0:
            target = 1.0 - abs(vacuum_amp) ** 2
            sym *= np.sqrt(target / nn)
    return NPhotonAmplitude(
        n=n, kappa_start=kappa_start, dkappa=dkappa, values=sym, vacuum_amp=vacuum_amp
    )


def ideal_retrieve_nphoton(
    state: NPhotonAmplitude, chi12: float, t_prime: float = 0.0
) -> NPhotonAmplitude:
    """Apply the channel blockwise: phase e^{-i n chi12}, sideband flip.

    The kappa values of every argument are unchanged (mode kappa + k0 maps to
    kappa - k0); the free propagation phase c(t - t')*sum kappa is carried by
    shifting the block's time origin to t'.  The vacuum amplitude is a fixed
    point and the total norm is preserved exactly.
    """
    if state.sideband != +1:
        raise ValueError("state already retrieved (backward sideband)")
    vals = state.values * np.exp(-1j * state.n * chi12)
    return replace(
        state,
        values=vals,
        sideband=-1,
        time_origin=state.time_origin + t_prime,
    )


def nphoton_to_envelope(state: NPhotonAmplitude, t_start: float, dt: float, n: int) -> SampledEnvelope:
    """Time envelope of a one-photon block at z = 0 (cross-check helper).

    Forward sideband: psi(t) = (2*pi)^(-1/2) integral phi(k) e^{-i k (t-t_org)} dk;
    backward sideband the dispersion sign flips, e^{+i k (t - t_org)}.
    """
    if state.n != 1:
        raise ValueError("envelope reconstruction defined for one-photon blocks")
    t = t_start + dt * np.arange(n)
    sign = -1.0 if state.sideband == +1 else +1.0
    phase = np.exp(1j * sign * np.outer(t - state.time_origin, state.kappa_grid))
    samples = phase @ state.values * state.dkappa / np.sqrt(2.0 * np.pi)
    return SampledEnvelope(t_start=t_start, dt=dt, samples=samples)


def save_nphoton(state: NPhotonAmplitude, path_prefix: str) -> tuple:
    """Write <prefix>.json (header) and <prefix>.csv (flat tensor payload).

    CSV columns: flat row-major index, re, im.
    """
    header = {
        "n": state.n,
        "grid": {"kappa_start": state.kappa_start, "dkappa": state.dkappa, "points": state.m},
        "vacuum_re": state.vacuum_amp.real,
        "vacuum_im": state.vacuum_amp.imag,
        "sideband": state.sideband,
        "time_origin": state.time_origin,
        "payload": "csv row-major",
    }
    jpath, cpath = f"{path_prefix}.json", f"{path_prefix}.csv"
    with open(jpath, "w") as f:
        json.dump(header, f, indent=1)
    flat = state.values.ravel()
    with open(cpath, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["index", "re", "im"])
        for i, v in enumerate(flat):
            w.writerow([i, repr(float(v.real)), repr(float(v.imag))])
    return jpath, cpath


def load_nphoton(path_prefix: str) -> NPhotonAmplitude:
    with open(f"{path_prefix}.json") as f:
        header = json.load(f)
    m = header["grid"]["points"]
    n = header["n"]
    flat = np.zeros(m**n, dtype=np.complex128)
    with open(f"{path_prefix}.csv", newline="") as f:
        r = csv.reader(f)
        next(r)
        for idx, re, im in r:
            flat[int(idx)] = complex(float(re), float(im))
    return NPhotonAmplitude(
        n=n,
        kappa_start=header["grid"]["kappa_start"],
        dkappa=header["grid"]["dkappa"],
        values=flat.reshape((m,) * n),
        vacuum_amp=complex(header["vacuum_re"], header["vacuum_im"]),
        sideband=header["sideband"],
        time_origin=header["time_origin"],
    )
