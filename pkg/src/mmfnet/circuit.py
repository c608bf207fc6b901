"""Programmable circuit: phase planes around the medium, and the gate library.

The full map acts on both input pixel planes (stacked, port 1 first) and
returns both detection planes (stacked, port 1 first). Block ``(p, q)`` is

    F_out . diag(exp(i P_out[p])) . U2[p] . U1[p, q] . C_in[q] . diag(exp(i P_in[q])) . F_in
"""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import GateLookupError, ShapeError, UndefinedFidelityError
from .modes import ChannelMap


@dataclass(frozen=True, eq=False)
class PhasePlanes:
    """Four phase masks (radians): two input planes, then two output planes."""

    phases: np.ndarray

    def __post_init__(self):
        ph = np.array(self.phases, dtype=float)
        if ph.ndim != 2 or ph.shape[0] != 4:
            raise ShapeError(f"phase planes must have shape (4, M), got {ph.shape}")
        if not np.all(np.isfinite(ph)):
            raise ShapeError("phase planes contain non-finite values")
        ph.setflags(write=False)
        object.__setattr__(self, "phases", ph)

    @classmethod
    def zeros(cls, M):
        return cls(np.zeros((4, M)))

    @classmethod
    def random(cls, M, rng=None):
        return cls(np.random.default_rng(rng).uniform(0, 2 * np.pi, (4, M)))

    @property
    def M(self):
        return self.phases.shape[1]

    def input_plane(self, q):
        return self.phases[q]

    def output_plane(self, p):
        return self.phases[2 + p]

    def with_plane(self, k, values):
        ph = self.phases.copy()
        ph[k] = values
        return PhasePlanes(ph)


# ---------------------------------------------------------------- gates

def _perm(order):
    return np.eye(len(order))[list(order)]


def _gate_table():
    s = 1 / np.sqrt(2)
    i4, i2, i3 = np.eye(4), np.eye(2), np.eye(3)

    def swap_block(i):
        return s * np.block([[i, i], [i, -i]])

    def cross(i):
        z = np.zeros_like(i)
        return np.block([[z, i], [i, z]])

    mux = ChannelMap.standard(4, 2)
    return {
        "T_I": (np.eye(8), mux),
        "T_X": (cross(i4), mux),
        "T_M": (_perm([0, 1, 4, 5, 2, 3, 6, 7]), mux),
        "T_S": (swap_block(i4), mux),
        "Identity4": (np.eye(4), ChannelMap.standard(2, 2)),
        "X4": (cross(i2), ChannelMap.standard(2, 2)),
        "Swap4": (swap_block(i2), ChannelMap.standard(2, 2)),
        "Identity6": (np.eye(6), ChannelMap.standard(3, 3)),
        "X6": (cross(i3), ChannelMap.standard(3, 3)),
    }


GATE_NAMES = tuple(_gate_table())


@dataclass(frozen=True, eq=False)
class GateSpec:
    name: str
    matrix: np.ndarray
    channel_map: ChannelMap

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=complex)
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @property
    def m(self):
        return self.matrix.shape[0]

    @property
    def modes_per_port(self):
        return self.m // 2


def gate_library(name, d=None):
    """Look up a target gate.

    ``d`` is the number of modes per port; when given it must match the
    gate (4 for the multiplexed ``T_*`` gates, 2 or 3 for the single-channel
    ones).
    """
    table = _gate_table()
    if name not in table:
        raise GateLookupError(f"unknown gate {name!r}; known: {', '.join(table)}")
    matrix, cmap = table[name]
    if d is not None and d != matrix.shape[0] // 2:
        raise GateLookupError(f"gate {name} acts on {matrix.shape[0] // 2} modes per port, not {d}")
    return GateSpec(name, matrix, cmap)


# ---------------------------------------------------------------- maps

def _check_planes(medium, planes):
    if planes.M != medium.M:
        raise ShapeError(f"phase planes have {planes.M} pixels, medium ports have {medium.M}")


def end_to_end_map(medium, planes):
    """Full ``(2M, 2M)`` linear map from input mode planes to detection planes."""
    _check_planes(medium, planes)
    M = medium.M
    out = np.zeros((2 * M, 2 * M), dtype=complex)
    for q in range(2):
        fibre_in = medium.C_in[q] @ (np.exp(1j * planes.input_plane(q))[:, None] * medium.F_in)
        for p in range(2):
            plane = medium.U2[p] @ (medium.block(p, q) @ fibre_in)
            out[p * M:(p + 1) * M, q * M:(q + 1) * M] = (
                medium.F_out @ (np.exp(1j * planes.output_plane(p))[:, None] * plane))
    return out


def _embed(modesets, M):
    vecs = []
    for k, ms in enumerate(modesets):
        if ms.n_pixels != M:
            raise ShapeError(f"mode set on {ms.n_pixels} pixels, map ports have {M}")
        v = np.zeros((ms.dim, 2 * M), dtype=complex)
        v[:, k * M:(k + 1) * M] = ms.vectors
        vecs.append(v)
    return np.vstack(vecs)


def realized_submatrix(full_map, inputs, outputs):
    """``T[b, a] = <out_b| map |in_a>`` for mode-set pairs ``(port1, port2)``."""
    full_map = np.asarray(full_map)
    if full_map.ndim != 2 or full_map.shape[0] != full_map.shape[1] or full_map.shape[0] % 2:
        raise ShapeError(f"expected a square two-port map, got {full_map.shape}")
    M = full_map.shape[0] // 2
    vin = _embed(inputs, M)
    vout = _embed(outputs, M)
    if vin.shape[0] != vout.shape[0]:
        raise ShapeError(f"{vin.shape[0]} input modes but {vout.shape[0]} output modes")
    return vout.conj() @ full_map @ vin.T


def realize(medium, planes, inputs, outputs):
    """Realized sub-matrix computed directly from the mode sets.

    Equivalent to ``realized_submatrix(end_to_end_map(...), ...)`` but
    without forming the full map.
    """
    _check_planes(medium, planes)
    d_in = [ms.dim for ms in inputs]
    d_out = [ms.dim for ms in outputs]
    if sum(d_in) != sum(d_out):
        raise ShapeError(f"{sum(d_in)} input modes but {sum(d_out)} output modes")
    T = np.zeros((sum(d_out), sum(d_in)), dtype=complex)
    col = 0
    for q in range(2):
        fibre_in = medium.C_in[q] @ (np.exp(1j * planes.input_plane(q))[:, None]
                                     * (medium.F_in @ inputs[q].vectors.T))
        row = 0
        for p in range(2):
            field = medium.F_out @ (np.exp(1j * planes.output_plane(p))[:, None]
                                    * (medium.U2[p] @ (medium.block(p, q) @ fibre_in)))
            T[row:row + d_out[p], col:col + d_in[q]] = outputs[p].vectors.conj() @ field
            row += d_out[p]
        col += d_in[q]
    return T


def apply_inter_pol_phase(T, phi, n_in1=None, n_out1=None):
    """Multiply the ``In2 -> Out1`` block of a gate by ``exp(i phi)``.

    The block sizes default to half the matrix on each side.
    """
    T = np.array(T, dtype=complex)
    n_in1 = T.shape[1] // 2 if n_in1 is None else n_in1
    n_out1 = T.shape[0] // 2 if n_out1 is None else n_out1
    T[:n_out1, n_in1:] *= np.exp(1j * phi)
    return T


# ---------------------------------------------------------------- scoring

@dataclass(frozen=True, eq=False)
class RealizedGate:
    matrix: np.ndarray
    fidelity: float
    transmission: float


def gate_fidelity(T, G):
    """Normalised overlap and transmission of a realized map.

    ``F = |Tr(G^dag T)|^2 / (Tr(G^dag G) Tr(T^dag T))`` and
    ``eta = Tr(T^dag T) / m``. For unitary ``G`` the first denominator is
    ``m``. ``F`` is blind to any complex rescaling of ``T``.
    """
    T = np.asarray(T)
    G = np.asarray(G.matrix if isinstance(G, GateSpec) else G)
    if T.shape != G.shape:
        raise ShapeError(f"realized map {T.shape} and target {G.shape} differ in shape")
    power = float(np.vdot(T, T).real)
    if power == 0:
        raise UndefinedFidelityError("realized map is identically zero")
    norm_g = float(np.vdot(G, G).real)
    fid = abs(np.vdot(G, T)) ** 2 / (norm_g * power)
    return float(min(fid, 1.0)), power / T.shape[1]


def block_phase_free_fidelity(T, G, n_in1=None, n_out1=None):
    """Gate fidelity maximised over an independent phase on each port block.

    The fitted fibre carries an unobservable phase per polarisation block,
    which reappears as a phase on block ``(p, q)`` of the realized gate. With
    ``t_pq = Tr(G_pq^dag T_pq)`` the optimum is
    ``(sum |t_pq|)^2 / (Tr(G^dag G) Tr(T^dag T))``.
    """
    T = np.asarray(T)
    G = np.asarray(G.matrix if isinstance(G, GateSpec) else G)
    if T.shape != G.shape:
        raise ShapeError(f"realized map {T.shape} and target {G.shape} differ in shape")
    n_in1 = T.shape[1] // 2 if n_in1 is None else n_in1
    n_out1 = T.shape[0] // 2 if n_out1 is None else n_out1
    power = float(np.vdot(T, T).real)
    if power == 0:
        raise UndefinedFidelityError("realized map is identically zero")
    rows = (slice(0, n_out1), slice(n_out1, None))
    cols = (slice(0, n_in1), slice(n_in1, None))
    acc = sum(abs(np.vdot(G[r, c], T[r, c])) for r in rows for c in cols)
    return float(min(acc**2 / (float(np.vdot(G, G).real) * power), 1.0))


def score(T, G):
    fid, eta = gate_fidelity(T, G)
    return RealizedGate(np.asarray(T), fid, eta)


def save_matrix_csv(path, matrix):
    """Long-form CSV: ``row, col, real, imag``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["row", "col", "real", "imag"])
        for (r, c), v in np.ndenumerate(np.asarray(matrix, dtype=complex)):
            w.writerow([r, c, repr(float(v.real)), repr(float(v.imag))])


def load_matrix_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    n_r = 1 + max(int(r["row"]) for r in rows)
    n_c = 1 + max(int(r["col"]) for r in rows)
    out = np.zeros((n_r, n_c), dtype=complex)
    for r in rows:
        out[int(r["row"]), int(r["col"])] = float(r["real"]) + 1j * float(r["imag"])
    return out

