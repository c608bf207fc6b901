"""Discrete spatial-mode bases and measurement bases.

Input modes are flat-top "macro-pixel" disks on a square pixel grid, output
modes are single-pixel foci in the detection plane. Both are orthonormal by
disjoint support. Mutually unbiased bases (MUBs) provide the measurement
settings for qubits and qutrits.
"""

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, GeometryError, UnsupportedDimensionError


class Port(enum.Enum):
    IN1 = "In1"
    IN2 = "In2"
    OUT1 = "Out1"
    OUT2 = "Out2"

    @property
    def is_input(self):
        return self in (Port.IN1, Port.IN2)

    @property
    def index(self):
        """0 for the first port on either side, 1 for the second."""
        return 0 if self in (Port.IN1, Port.OUT1) else 1


class ModeLabel(enum.Enum):
    MACRO_PIXEL = "MacroPixel"
    FOCI = "Foci"


def grid_shape(grid):
    """Normalise a grid spec (pixel count or ``(rows, cols)``) to a shape."""
    if isinstance(grid, (tuple, list)):
        rows, cols = (int(g) for g in grid)
    else:
        side = math.isqrt(int(grid))
        if side * side != int(grid):
            raise GeometryError(f"pixel count {grid} is not a square; pass (rows, cols)")
        rows = cols = side
    if rows < 1 or cols < 1:
        raise GeometryError(f"empty grid {grid!r}")
    return rows, cols


@dataclass(frozen=True, eq=False)
class ModeSet:
    """Orthonormal set of complex field vectors over one port's pixel plane.

    ``vectors`` has shape ``(dim, M)``; row ``k`` is mode ``k``.
    """

    label: ModeLabel
    vectors: np.ndarray
    port: Port
    grid: tuple = field(default=None)

    def __post_init__(self):
        vecs = np.asarray(self.vectors, dtype=complex)
        if vecs.ndim != 2:
            raise GeometryError("mode vectors must be a 2-d array (dim, M)")
        if vecs.shape[0] > vecs.shape[1]:
            raise CapacityError(f"{vecs.shape[0]} modes do not fit in {vecs.shape[1]} pixels")
        vecs.setflags(write=False)
        object.__setattr__(self, "vectors", vecs)
        if self.grid is not None:
            object.__setattr__(self, "grid", tuple(int(g) for g in self.grid))

    @property
    def dim(self):
        return self.vectors.shape[0]

    @property
    def n_pixels(self):
        return self.vectors.shape[1]

    def gram(self):
        return self.vectors.conj() @ self.vectors.T


def _disk_pixels(center, radius, rows, cols):
    r0, c0 = center
    yy, xx = np.mgrid[:rows, :cols]
    mask = (yy - r0) ** 2 + (xx - c0) ** 2 <= radius**2 + 1e-9
    return np.flatnonzero(mask.ravel())


def default_geometry(d, grid):
    """Square lattice of disk centres with the largest non-overlapping radius."""
    rows, cols = grid_shape(grid)
    k = math.ceil(math.sqrt(d))
    pitch_r, pitch_c = rows / k, cols / k
    centers = [((i + 0.5) * pitch_r - 0.5, (j + 0.5) * pitch_c - 0.5)
               for i in range(k) for j in range(k)][:d]
    radius = 0.5 * min(pitch_r, pitch_c)
    return centers, radius


def macro_pixel_basis(d, grid=64, radius=None, centers=None, port=Port.IN1):
    """Flat-top disk modes on a pixel grid.

    Parameters
    ----------
    d : int
        Number of modes.
    grid : int or (int, int)
        Pixel count of a square grid, or ``(rows, cols)``.
    radius : float, optional
        Disk radius in pixels. Pixels whose centre lies within ``radius`` of
        a disk centre belong to that disk.
    centers : sequence of (row, col), optional
        Disk centres in pixel coordinates. Defaults to a regular lattice.
    port : Port

    Returns
    -------
    ModeSet
        ``d`` disjoint-support, unit-norm, uniform-amplitude modes.
    """
    rows, cols = grid_shape(grid)
    n_pix = rows * cols
    if d < 1:
        raise CapacityError("need at least one mode")
    if d > n_pix:
        raise CapacityError(f"{d} modes cannot fit in {n_pix} pixels")
    if centers is None or radius is None:
        auto_centers, auto_radius = default_geometry(d, (rows, cols))
        centers = auto_centers if centers is None else centers
        radius = auto_radius if radius is None else radius
    if len(centers) != d:
        raise GeometryError(f"expected {d} disk centres, got {len(centers)}")

    owner = -np.ones(n_pix, dtype=int)
    vectors = np.zeros((d, n_pix), dtype=complex)
    for k, c in enumerate(centers):
        if not (-0.5 <= c[0] <= rows - 0.5 and -0.5 <= c[1] <= cols - 0.5):
            raise GeometryError(f"disk centre {c} lies outside the {rows}x{cols} grid")
        pix = _disk_pixels(c, radius, rows, cols)
        if pix.size == 0:
            raise GeometryError(f"disk {k} at {c} with radius {radius} covers no pixel")
        clash = owner[pix] >= 0
        if clash.any():
            raise GeometryError(f"disk {k} overlaps disk {owner[pix][clash][0]}")
        owner[pix] = k
        vectors[k, pix] = 1.0 / math.sqrt(pix.size)
    return ModeSet(ModeLabel.MACRO_PIXEL, vectors, port, (rows, cols))


def foci_basis(indices, grid=64, port=Port.OUT1):
    """Single-pixel detection modes at the given flat pixel indices."""
    rows, cols = grid_shape(grid)
    n_pix = rows * cols
    idx = [int(i) for i in indices]
    if len(set(idx)) != len(idx):
        raise GeometryError(f"duplicate focus index in {idx}")
    if any(i < 0 or i >= n_pix for i in idx):
        raise GeometryError(f"focus index out of range [0, {n_pix})")
    vectors = np.zeros((len(idx), n_pix), dtype=complex)
    vectors[np.arange(len(idx)), idx] = 1.0
    return ModeSet(ModeLabel.FOCI, vectors, port, (rows, cols))


def random_foci(n, grid=64, rng=None, port=Port.OUT1):
    """Foci at ``n`` distinct pixels drawn uniformly without replacement."""
    rows, cols = grid_shape(grid)
    rng = np.random.default_rng(rng)
    idx = np.sort(rng.choice(rows * cols, size=n, replace=False))
    return foci_basis(idx, (rows, cols), port)


@dataclass(frozen=True, eq=False)
class MubFamily:
    """Complete set of ``d + 1`` mutually unbiased bases.

    ``bases[m]`` is a unitary whose columns are the vectors of basis ``m``;
    basis 0 is always the computational basis.
    """

    d: int
    bases: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bases, dtype=complex)
        b.setflags(write=False)
        object.__setattr__(self, "bases", b)

    def __len__(self):
        return self.bases.shape[0]

    def vector(self, m, a):
        return self.bases[m][:, a]

    def projectors(self, conjugate=False):
        """Rank-one projectors, shape ``(d + 1, d, d, d)`` indexed ``[m, a]``."""
        b = self.bases.conj() if conjugate else self.bases
        vecs = np.swapaxes(b, 1, 2)
        return vecs[..., :, None] * vecs[..., None, :].conj()


def mub_set(d):
    """Complete MUB family for ``d`` in {2, 3}.

    For qubits the bases are the Z, X and Y eigenbases in that order, with
    outcome 0 the +1 eigenvector. For qutrits the Wootters-Fields
    construction ``omega**(k n**2 + j n) / sqrt(3)`` is used for ``k = 0..2``
    after the computational basis.
    """
    if d == 2:
        s = 1 / math.sqrt(2)
        bases = np.array([
            np.eye(2),
            [[s, s], [s, -s]],
            [[s, s], [1j * s, -1j * s]],
        ], dtype=complex)
    elif d == 3:
        omega = np.exp(2j * np.pi / d)
        n = np.arange(d)
        bases = [np.eye(d, dtype=complex)]
        for k in range(d):
            cols = [omega ** ((k * n * n + j * n) % d) / math.sqrt(d) for j in range(d)]
            bases.append(np.array(cols).T)
        bases = np.array(bases)
    else:
        raise UnsupportedDimensionError(f"MUB families are provided for d in {{2, 3}}, not {d}")
    return MubFamily(d, bases)


@dataclass(frozen=True)
class ChannelMap:
    """Assignment of gate mode indices to channels on every port.

    ``channels[port]`` is a tuple of channels, each a tuple of mode indices.
    """

    channels: dict

    def __post_init__(self):
        normalised = {}
        for port, chans in self.channels.items():
            port = Port(port)
            chans = tuple(tuple(int(i) for i in ch) for ch in chans)
            flat = [i for ch in chans for i in ch]
            if len(set(flat)) != len(flat):
                raise GeometryError(f"mode index reused across channels of {port.value}")
            normalised[port] = chans
        object.__setattr__(self, "channels", normalised)

    @classmethod
    def standard(cls, modes_per_port=4, channel_dim=2):
        """Consecutive channels; port 2 indices follow port 1 indices.

        The default reproduces In1.Ch1={0,1}, In1.Ch2={2,3}, In2.Ch1={4,5},
        In2.Ch2={6,7}, with the same layout on the outputs.
        """
        if modes_per_port % channel_dim:
            raise GeometryError("channel dimension must divide the modes per port")
        n_ch = modes_per_port // channel_dim

        def chans(offset):
            return tuple(tuple(range(offset + c * channel_dim, offset + (c + 1) * channel_dim))
                         for c in range(n_ch))

        return cls({Port.IN1: chans(0), Port.IN2: chans(modes_per_port),
                    Port.OUT1: chans(0), Port.OUT2: chans(modes_per_port)})

    def flatten(self, port):
        return tuple(i for ch in self.channels[Port(port)] for i in ch)

    def channel(self, port, c):
        return self.channels[Port(port)][c]

    @property
    def n_channels(self):
        return len(self.channels[Port.IN1])

    @property
    def modes_per_port(self):
        return len(self.flatten(Port.IN1))


def port_modes(M=64, modes_per_port=4, seed=0):
    """Standard mode sets for a two-port circuit.

    Returns ``(inputs, outputs)``: identical macro-pixel layouts on both
    input ports and randomly chosen foci (seeded) on each output port.
    """
    rng = np.random.default_rng(seed)
    inputs = (macro_pixel_basis(modes_per_port, M, port=Port.IN1),
              macro_pixel_basis(modes_per_port, M, port=Port.IN2))
    outputs = (random_foci(modes_per_port, M, rng, Port.OUT1),
               random_foci(modes_per_port, M, rng, Port.OUT2))
    return inputs, outputs
