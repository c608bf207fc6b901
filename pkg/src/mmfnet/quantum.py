"""Heralded biphoton states through a realized circuit.

Conventions
-----------
* A realized gate ``T`` is an ``m x m`` matrix on gate mode indices: columns
  are input modes (port 1 first), rows are output modes (port 1 first).
* A source emits ``sum_i lambda_i |i>_idler |i>_signal``; signal mode ``i``
  enters gate input ``source.modes[i]``.
* In every two-party measurement the first party projects onto a MUB vector
  ``u`` and the second onto its complex conjugate ``u*``. With this choice
  the target ``|Phi+>`` is perfectly correlated in every basis.
"""

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np

from .circuit import apply_inter_pol_phase
from .errors import (ConfigError, DegenerateProjectorError, EmptyDataError,
                     InvalidPatternError, ShapeError, UnheraldablePatternError)
from .modes import mub_set


# ---------------------------------------------------------------- sources

@dataclass(frozen=True, eq=False)
class BiphotonSource:
    """Pure two-photon source with Schmidt coefficients ``lambdas``.

    ``modes[i]`` is the gate input index that signal mode ``i`` enters.
    """

    lambdas: np.ndarray
    modes: tuple

    def __post_init__(self):
        lam = np.array(self.lambdas, dtype=float)
        if lam.ndim != 1 or lam.size == 0:
            raise ConfigError("Schmidt coefficients must be a non-empty vector")
        if np.any(lam < 0):
            raise ConfigError("Schmidt coefficients must be non-negative")
        if abs(np.sum(lam**2) - 1) > 1e-12:
            raise ConfigError(f"Schmidt coefficients are not normalised (sum of squares {np.sum(lam**2)!r})")
        modes = tuple(int(k) for k in self.modes)
        if len(modes) != lam.size:
            raise ShapeError(f"{lam.size} Schmidt coefficients but {len(modes)} signal modes")
        lam.setflags(write=False)
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "modes", modes)

    @property
    def d(self):
        return self.lambdas.size

    @classmethod
    def maximally_entangled(cls, d, modes=None):
        modes = tuple(range(d)) if modes is None else modes
        return cls(np.full(d, 1 / np.sqrt(d)), modes)


def gamma_from_delay(tau, sigma, gamma0=1.0):
    """Indistinguishability ``gamma0 * exp(-tau^2 / (2 sigma^2))``."""
    if not sigma > 0:
        raise ConfigError("delay width sigma must be positive")
    if not 0 <= gamma0 <= 1:
        raise ConfigError("gamma0 must lie in [0, 1]")
    tau = np.asarray(tau, dtype=float)
    return gamma0 * np.exp(-tau**2 / (2 * sigma**2))


def _check_gamma(gamma):
    if not 0 <= gamma <= 1:
        raise ConfigError(f"indistinguishability {gamma} outside [0, 1]")


# ---------------------------------------------------------------- heralding

@dataclass(frozen=True, eq=False)
class HeraldedState:
    """Unnormalised signal amplitude after an idler projection."""

    amplitude: np.ndarray
    weight: float
    modes: tuple

    def embedded(self, m):
        """Amplitude as a length-``m`` vector over gate input modes."""
        v = np.zeros(m, dtype=complex)
        v[list(self.modes)] = self.amplitude
        return v


def herald(source, projector):
    """Project the idler onto ``projector``; amplitude ``lambda_i conj(p_i)``."""
    proj = np.asarray(projector, dtype=complex)
    if proj.shape != (source.d,):
        raise ShapeError(f"projector of length {proj.size} for a d={source.d} source")
    if not np.any(proj):
        raise DegenerateProjectorError("idler projector is the zero vector")
    amp = source.lambdas * proj.conj()
    return HeraldedState(amp, float(np.vdot(amp, amp).real), source.modes)


def _detector(det, m):
    if isinstance(det, (int, np.integer)):
        if not 0 <= det < m:
            raise InvalidPatternError(f"detector mode {det} outside [0, {m})")
        v = np.zeros(m, dtype=complex)
        v[det] = 1
        return v
    v = np.asarray(det, dtype=complex)
    if v.shape != (m,):
        raise ShapeError(f"detector vector of length {v.size} for a {m}-mode gate")
    return v


def routing_coincidence_prob(T, heralded, output_projector):
    """``|<out| T |heralded>|^2`` for a single routed photon."""
    T = np.asarray(T)
    v = _detector(output_projector, T.shape[0])
    return float(abs(v.conj() @ T @ heralded.embedded(T.shape[1])) ** 2)


def two_photon_event(T, heralded1, heralded2, det1, det2, gamma=1.0):
    """Coincidence probability for two photons with overlap ``gamma``.

    ``p = |M11 M22|^2 + |M12 M21|^2 + 2 gamma Re(M11 M22 conj(M12 M21))``
    with ``M[k, l] = <det_k| T |heralded_l>``.
    """
    _check_gamma(gamma)
    T = np.asarray(T)
    if isinstance(det1, (int, np.integer)) and isinstance(det2, (int, np.integer)) and det1 == det2:
        raise InvalidPatternError(f"both detectors on mode {det1}")
    d1, d2 = _detector(det1, T.shape[0]), _detector(det2, T.shape[0])
    if abs(np.vdot(d1, d2)) > 1e-12:
        raise InvalidPatternError("detector modes overlap")
    h1, h2 = heralded1.embedded(T.shape[1]), heralded2.embedded(T.shape[1])
    m11, m12 = d1.conj() @ T @ h1, d1.conj() @ T @ h2
    m21, m22 = d2.conj() @ T @ h1, d2.conj() @ T @ h2
    direct, exchange = m11 * m22, m12 * m21
    p = abs(direct) ** 2 + abs(exchange) ** 2 + 2 * gamma * (direct * exchange.conjugate()).real
    return float(max(p, 0.0))


# ---------------------------------------------------------------- swapping

@dataclass(frozen=True, eq=False)
class ConditionalState:
    """Normalised idler state ``rho`` (first source's idler first) and its herald probability."""

    rho: np.ndarray
    probability: float
    dims: tuple

    def restrict(self, idx_a, idx_b):
        """Post-select the idlers onto the given mode subsets and renormalise."""
        da, db = self.dims
        keep = [a * db + b for a in idx_a for b in idx_b]
        sub = self.rho[np.ix_(keep, keep)]
        tr = float(np.trace(sub).real)
        if tr <= 0:
            raise UnheraldablePatternError("no weight on the selected idler modes")
        return ConditionalState(sub / tr, self.probability * tr, (len(idx_a), len(idx_b)))

    def fidelity(self, target):
        t = np.asarray(target, dtype=complex)
        return float(np.vdot(t, self.rho @ t).real / np.vdot(t, t).real)


def swap_amplitudes(T, sources, pattern):
    """Direct and exchanged amplitudes ``A1, A2`` as ``(d1, d2)`` arrays."""
    s1, s2 = sources
    det1, det2 = pattern
    T = np.asarray(T)
    d1, d2 = _detector(det1, T.shape[0]), _detector(det2, T.shape[0])
    r1, r2 = d1.conj() @ T, d2.conj() @ T
    lam = np.outer(s1.lambdas, s2.lambdas)
    a1 = lam * np.outer(r1[list(s1.modes)], r2[list(s2.modes)])
    a2 = lam * np.outer(r2[list(s1.modes)], r1[list(s2.modes)])
    return a1, a2


def swapped_state(T, sources, pattern, gamma=1.0, phi=0.0):
    """Idler state heralded by detecting one photon at each mode of ``pattern``.

    ``phi`` is applied to the port-2-to-port-1 block of ``T`` before
    propagation. The unnormalised state is
    ``A1 A1^dag + A2 A2^dag + gamma (A1 A2^dag + A2 A1^dag)``.
    """
    _check_gamma(gamma)
    det1, det2 = pattern
    if isinstance(det1, (int, np.integer)) and isinstance(det2, (int, np.integer)) and det1 == det2:
        raise InvalidPatternError(f"both detectors on mode {det1}")
    T = apply_inter_pol_phase(T, phi) if phi else np.asarray(T, dtype=complex)
    a1, a2 = (a.ravel() for a in swap_amplitudes(T, sources, pattern))
    rho = (np.outer(a1, a1.conj()) + np.outer(a2, a2.conj())
           + gamma * (np.outer(a1, a2.conj()) + np.outer(a2, a1.conj())))
    p = float(np.trace(rho).real)
    if p <= 1e-300:
        raise UnheraldablePatternError(f"pattern {tuple(pattern)} is never heralded")
    rho = (rho + rho.conj().T) / (2 * p)
    return ConditionalState(rho, p, (sources[0].d, sources[1].d))


def swap_target(theta):
    """``(|01> - exp(i theta)|10>) / sqrt(2)``."""
    v = np.zeros(4, dtype=complex)
    v[1] = 1 / np.sqrt(2)
    v[2] = -np.exp(1j * theta) / np.sqrt(2)
    return v


def swap_patterns(channel_map, c):
    """All four ``(Out1 focus, Out2 focus)`` detection pairs of channel ``c``."""
    from .modes import Port
    return [(a, b) for a in channel_map.channel(Port.OUT1, c) for b in channel_map.channel(Port.OUT2, c)]


def default_swap_pattern(channel_map, c):
    """Pattern heralding ``(|01> - e^{i phi}|10>)/sqrt(2)`` for the swap gates."""
    from .modes import Port
    return channel_map.channel(Port.OUT1, c)[0], channel_map.channel(Port.OUT2, c)[1]


# ---------------------------------------------------------------- measurement tables

@dataclass(eq=False)
class CountTable:
    """Two-party outcome table over MUB settings.

    ``data[(m, n)]`` is a ``d x d`` array indexed ``[a, b]``: party one
    measured basis ``m`` with outcome ``a``, party two the conjugate of
    basis ``n`` with outcome ``b``. Entries are probabilities or counts.
    """

    d: int
    data: dict = field(default_factory=dict)

    @property
    def settings(self):
        return sorted(self.data)

    def total(self):
        return float(sum(np.sum(v) for v in self.data.values()))

    def map(self, fn):
        return CountTable(self.d, {k: fn(v) for k, v in self.data.items()})

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["basis_m", "basis_n", "outcome_a", "outcome_b", "counts"])
            for (m, n) in self.settings:
                for (a, b), v in np.ndenumerate(self.data[(m, n)]):
                    w.writerow([m, n, a, b, repr(v.item())])

    @classmethod
    def from_csv(cls, path, d=None):
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        if not rows:
            raise EmptyDataError(f"no rows in {path}")
        d = d or 1 + max(max(int(r["outcome_a"]), int(r["outcome_b"])) for r in rows)
        data = {}
        for r in rows:
            key = (int(r["basis_m"]), int(r["basis_n"]))
            data.setdefault(key, np.zeros((d, d)))
            data[key][int(r["outcome_a"]), int(r["outcome_b"])] = float(r["counts"])
        if all(float(v).is_integer() for arr in data.values() for v in arr.ravel()):
            data = {k: v.astype(np.int64) for k, v in data.items()}
        return cls(d, data)


def _settings(d, settings):
    if settings == "diagonal":
        return [(m, m) for m in range(d + 1)]
    if settings == "all":
        return [(m, n) for m in range(d + 1) for n in range(d + 1)]
    return [tuple(s) for s in settings]


def state_prob_table(rho, d, settings="all"):
    """Outcome probabilities ``Tr[(P_a^m (x) conj(P_b^n)) rho]`` for a two-qudit state."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (d * d, d * d):
        raise ShapeError(f"state of shape {rho.shape} is not two {d}-level systems")
    bases = mub_set(d).bases
    r4 = rho.reshape(d, d, d, d)
    out = {}
    for m, n in _settings(d, settings):
        U, V = bases[m], bases[n].conj()
        # <u_a v_b| rho |u_a v_b>
        amp = np.einsum("ia,jb,ijkl,kc,ld->abcd", U.conj(), V.conj(), r4, U, V)
        p = np.einsum("abab->ab", amp).real
        out[(m, n)] = np.clip(p, 0, None)
    return CountTable(d, out)


def routing_prob_table(T, source, idler_modes, output_modes, settings="diagonal"):
    """Coincidence probabilities between an idler user and an output user.

    The idler user measures MUB vectors on source modes ``idler_modes``;
    the output user measures their conjugates on gate outputs
    ``output_modes``. Probabilities are absolute (not normalised per
    setting), so circuit loss is retained.
    """
    T = np.asarray(T)
    d = len(idler_modes)
    if len(output_modes) != d:
        raise ShapeError("idler and output users must have the same dimension")
    bases = mub_set(d).bases
    out = {}
    for m, n in _settings(d, settings):
        tab = np.zeros((d, d))
        for a in range(d):
            proj = np.zeros(source.d, dtype=complex)
            proj[list(idler_modes)] = bases[m][:, a]
            h = herald(source, proj)
            for b in range(d):
                v = np.zeros(T.shape[0], dtype=complex)
                v[list(output_modes)] = bases[n][:, b].conj()
                tab[a, b] = routing_coincidence_prob(T, h, v)
        out[(m, n)] = tab
    return CountTable(d, out)


def sample_counts(prob_table, flux, duration, seed=0, background=0.0):
    """Poisson counts with mean ``flux * duration * (p + background)``."""
    if flux < 0 or duration < 0:
        raise ConfigError("flux and duration must be non-negative")
    if background < 0:
        raise ConfigError("background must be non-negative")
    rng = np.random.default_rng(seed)
    out = {}
    for key in prob_table.settings:
        p = np.asarray(prob_table.data[key], dtype=float)
        if np.any(p < 0) or np.any(p > 1):
            raise ConfigError("probabilities must lie in [0, 1]")
        out[key] = rng.poisson(flux * duration * (p + background))
    return CountTable(prob_table.d, out)


# ---------------------------------------------------------------- HOM

@dataclass(frozen=True, eq=False)
class HomScan:
    delays: np.ndarray
    coincidence: np.ndarray
    visibility: float


def hom_scan(T, delays, sigma, gamma0=1.0, inputs=(0, 1), outputs=(0, 1)):
    """Coincidence probability versus relative delay.

    One photon enters each of ``inputs``; coincidences are between the two
    ``outputs``. The visibility is ``(p_inf - p_0) / p_inf`` with ``p_inf``
    the distinguishable-photon value.
    """
    T = np.asarray(T, dtype=complex)
    h1 = HeraldedState(np.ones(1), 1.0, (inputs[0],))
    h2 = HeraldedState(np.ones(1), 1.0, (inputs[1],))
    delays = np.asarray(delays, dtype=float)
    gammas = gamma_from_delay(delays, sigma, gamma0)
    coinc = np.array([two_photon_event(T, h1, h2, outputs[0], outputs[1], g) for g in gammas])
    p_inf = two_photon_event(T, h1, h2, outputs[0], outputs[1], 0.0)
    p_0 = two_photon_event(T, h1, h2, outputs[0], outputs[1], gamma0)
    if p_inf == 0:
        warnings.warn("distinguishable coincidence probability is zero; visibility undefined")
        vis = float("nan")
    else:
        vis = (p_inf - p_0) / p_inf
    return HomScan(delays, coinc, float(vis))
