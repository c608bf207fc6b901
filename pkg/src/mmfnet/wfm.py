"""Wavefront-matching inverse design of the four phase planes.

Each plane update forward-propagates every input mode to the plane,
back-propagates its target output field to the same plane, and sets the
pixel phase to ``-arg(sum_i w_i psi_i conj(chi_i))``.

Two refinements make the update target the normalised gate fidelity rather
than raw throughput into the target foci:

* ``crosstalk``: the back-propagated target for mode ``i`` is
  ``exp(i arg t) G_i - crosstalk * (|t| / n) T_i`` where ``t = Tr(G^dag T)``
  and ``n = Tr(T^dag T)``. With ``crosstalk=1`` this is the fidelity
  gradient, so light landing in the wrong selected foci is pushed away.
* ``relaxation``: the new phasor is ``(1 - r) exp(i P_old) + r exp(i P_match)``
  (weighted by the local overlap magnitude), damping the update.

``crosstalk=0, relaxation=1`` is the plain update.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from .circuit import PhasePlanes, gate_fidelity, gate_library, GateSpec, realize
from .errors import ConfigError, NumericalError, ShapeError
from .modes import port_modes


@dataclass(frozen=True)
class WfmOptions:
    max_iters: int = 200
    tol: float = 1e-6
    order: tuple = (0, 1, 2, 3)
    weights: tuple = None
    crosstalk: float = 1.0
    relaxation: float = 0.1

    def __post_init__(self):
        if self.max_iters < 1:
            raise ConfigError("max_iters must be at least 1")
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        if not set(self.order) <= {0, 1, 2, 3} or not self.order:
            raise ConfigError(f"invalid plane order {self.order}")
        if not 0 < self.relaxation <= 1:
            raise ConfigError("relaxation must lie in (0, 1]")
        if self.crosstalk < 0:
            raise ConfigError("crosstalk must be non-negative")


@dataclass(eq=False)
class WfmTrace:
    """Fidelity and transmission before the first sweep and after each sweep."""

    fidelity: np.ndarray
    transmission: np.ndarray
    planes: PhasePlanes
    converged: bool = False
    realized: np.ndarray = field(default=None, repr=False)

    @property
    def iterations(self):
        return len(self.fidelity) - 1

    @property
    def final_fidelity(self):
        return float(self.fidelity[-1])

    @property
    def final_transmission(self):
        return float(self.transmission[-1])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "fidelity", "transmission"])
            for k, (f, e) in enumerate(zip(self.fidelity, self.transmission)):
                w.writerow([k, repr(float(f)), repr(float(e))])


class _Propagator:
    """Fixed-optics propagation for one (medium, modes) pair."""

    def __init__(self, medium, inputs, outputs):
        self.medium = medium
        self.d_in = [ms.dim for ms in inputs]
        self.d_out = [ms.dim for ms in outputs]
        self.in_slices = _slices(self.d_in)
        self.out_slices = _slices(self.d_out)
        self.outputs = outputs
        # fields just before the input planes
        self.psi_in = [medium.F_in @ ms.vectors.T for ms in inputs]

    def fibre_in(self, planes, q):
        return self.medium.C_in[q] @ (np.exp(1j * planes.input_plane(q))[:, None] * self.psi_in[q])

    def targets(self, Geff):
        """Detection-plane target fields per output port, shape ``(M, m)``."""
        return [self.outputs[p].vectors.T @ Geff[self.out_slices[p]] for p in range(2)]

    def backward_to_output_plane(self, tgt, p):
        return self.medium.F_out.conj().T @ tgt[p]

    def backward_to_input_plane(self, planes, tgt, q):
        med = self.medium
        acc = 0
        for p in range(2):
            at_out = np.exp(-1j * planes.output_plane(p))[:, None] * self.backward_to_output_plane(tgt, p)
            acc = acc + med.block(p, q).conj().T @ (med.U2[p].conj().T @ at_out[:, self.in_slices[q]])
        return med.C_in[q].conj().T @ acc

    def forward_to_output_plane(self, planes, p):
        med = self.medium
        return np.hstack([med.U2[p] @ (med.block(p, q) @ self.fibre_in(planes, q)) for q in range(2)])


def _slices(dims):
    out, start = [], 0
    for d in dims:
        out.append(slice(start, start + d))
        start += d
    return out


def _effective_target(G, T, crosstalk):
    t = np.vdot(G, T)
    n = np.vdot(T, T).real
    if n == 0 or t == 0:
        return G
    return np.exp(1j * np.angle(t)) * G - crosstalk * (abs(t) / n) * T


def wavefront_match(medium, gate, inputs, outputs, opts=None, initial=None):
    """Design phase planes so that the realized map approaches ``gate``.

    Parameters
    ----------
    medium : MediumModel
        The medium the design is computed against (fitted or true).
    gate : GateSpec or array_like
        Target ``m x m`` matrix; rows follow ``outputs``, columns ``inputs``.
    inputs, outputs : (ModeSet, ModeSet)
        Mode sets for ports 1 and 2 on each side.
    opts : WfmOptions, optional
    initial : PhasePlanes, optional
        Starting planes; zero phases by default.

    Returns
    -------
    WfmTrace
    """
    opts = opts or WfmOptions()
    G = np.asarray(gate.matrix if isinstance(gate, GateSpec) else gate, dtype=complex)
    prop = _Propagator(medium, inputs, outputs)
    m_in, m_out = sum(prop.d_in), sum(prop.d_out)
    if G.shape != (m_out, m_in):
        raise ShapeError(f"target {G.shape} does not match {m_out} outputs x {m_in} inputs")
    if any(ms.n_pixels != medium.M for ms in (*inputs, *outputs)):
        raise ShapeError("mode sets and medium disagree on pixels per port")
    w = np.ones(m_in) if opts.weights is None else np.asarray(opts.weights, dtype=float)
    if w.shape != (m_in,) or np.any(w < 0):
        raise ConfigError("weights must be one non-negative value per input mode")
    if not np.any(w > 0):
        raise ConfigError("all mode weights are zero; the matching objective is degenerate")

    planes = initial if initial is not None else PhasePlanes.zeros(medium.M)
    phases = planes.phases.copy()
    T = realize(medium, planes, inputs, outputs)
    fids, etas = [], []
    f0, e0 = gate_fidelity(T, G)
    fids.append(f0)
    etas.append(e0)
    converged = False
    r = opts.relaxation
    for _ in range(opts.max_iters):
        for k in opts.order:
            planes = PhasePlanes(phases)
            T = realize(medium, planes, inputs, outputs)
            tgt = prop.targets(_effective_target(G, T, opts.crosstalk))
            if k < 2:
                psi = prop.psi_in[k]
                chi = prop.backward_to_input_plane(planes, tgt, k)
                ww = w[prop.in_slices[k]]
            else:
                psi = prop.forward_to_output_plane(planes, k - 2)
                chi = prop.backward_to_output_plane(tgt, k - 2)
                ww = w
            s = (psi * chi.conj()) @ ww
            if not np.all(np.isfinite(s)):
                raise NumericalError(f"non-finite field overlap while updating plane {k + 1}")
            mag = np.abs(s)
            old = np.exp(1j * phases[k])
            z = (1 - r) * mag * old + r * s.conj()
            phases[k] = np.where(np.abs(z) > 0, np.angle(z), phases[k])
        planes = PhasePlanes(phases)
        T = realize(medium, planes, inputs, outputs)
        f, e = gate_fidelity(T, G)
        fids.append(f)
        etas.append(e)
        if abs(fids[-1] - fids[-2]) < opts.tol:
            converged = True
            break
    return WfmTrace(np.array(fids), np.array(etas), planes, converged, T)


@dataclass(eq=False)
class GateDesign:
    gate: GateSpec
    planes: PhasePlanes
    fidelity: float
    transmission: float
    inputs: tuple
    outputs: tuple
    trace: WfmTrace = field(default=None, repr=False)


def design_all_gates(medium, names, modes=None, opts=None, seed=0):
    """Run wavefront matching for each named gate against one medium.

    ``modes`` maps modes-per-port to ``(inputs, outputs)``; missing entries
    are built with :func:`port_modes` from ``seed`` so that all gates of one
    size share the same foci.
    """
    modes = dict(modes or {})
    out = {}
    for name in names:
        gate = gate_library(name)
        d = gate.modes_per_port
        if d not in modes:
            modes[d] = port_modes(medium.M, d, seed)
        inputs, outputs = modes[d]
        trace = wavefront_match(medium, gate, inputs, outputs, opts)
        out[name] = GateDesign(gate, trace.planes, trace.final_fidelity,
                               trace.final_transmission, inputs, outputs, trace)
    return out
