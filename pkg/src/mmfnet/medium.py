"""Ground-truth model of the scattering medium and its fixed optics.

The fibre is a Haar-random unitary on ``2N`` modes (``N`` per polarisation).
Around it sit fixed optics per port: a Fourier lens from the input mode plane
to the input phase plane, a truncated-unitary coupler into the fibre, a
truncated-unitary map from the fibre onto the output phase plane, and a
Fourier lens from the output phase plane to the detection plane.
"""

from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import expm

from .errors import CapacityError, ConfigError


def haar_unitary(n, rng):
    """Haar-distributed ``n x n`` unitary.

    QR of a complex Ginibre matrix, with the phases of ``diag(R)`` folded
    into ``Q`` so the result is uniform rather than QR-convention biased.
    """
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def dft_matrix(n):
    return np.fft.fft(np.eye(n), norm="ortho")


def random_hermitian(n, rng):
    """Random Hermitian matrix with unit spectral norm."""
    a = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    h = (a + a.conj().T) / 2
    return h / np.max(np.abs(np.linalg.eigvalsh(h)))


@dataclass(frozen=True, eq=False)
class MediumModel:
    """Fibre plus fixed optics.

    Attributes
    ----------
    N : int
        Fibre modes per polarisation.
    M : int
        Pixels per port plane.
    U1 : (2N, 2N) complex
        Fibre transmission; rows/cols ``[:N]`` are polarisation H (port 1),
        ``[N:]`` polarisation V (port 2).
    C_in : (2, N, M) complex
        Per-port coupling from the input phase plane into the fibre.
    F_in : (M, M) complex
        Lens from the input mode plane to the input phase plane.
    U2 : (2, M, N) complex
        Per-port map from fibre modes onto the output phase plane.
    F_out : (M, M) complex
        Lens from the output phase plane to the detection plane.
    phi : float
        Relative phase between input polarisations. Intensity-only
        characterisation cannot see it; it enters two-photon interference
        through the polarisation-converting path ``In2 -> Out1``.
    seed : int or None
    """

    N: int
    M: int
    U1: np.ndarray
    C_in: np.ndarray
    F_in: np.ndarray
    U2: np.ndarray
    F_out: np.ndarray
    phi: float = 0.0
    seed: int = None

    def __post_init__(self):
        for name in ("U1", "C_in", "F_in", "U2", "F_out"):
            arr = np.array(getattr(self, name), dtype=complex)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        n2, m = 2 * self.N, self.M
        expected = {"U1": (n2, n2), "C_in": (2, self.N, m), "F_in": (m, m),
                    "U2": (2, m, self.N), "F_out": (m, m)}
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise ConfigError(f"{name} has shape {getattr(self, name).shape}, expected {shape}")

    def block(self, p, q):
        """Fibre block from input polarisation ``q`` to output polarisation ``p``."""
        n = self.N
        return self.U1[p * n:(p + 1) * n, q * n:(q + 1) * n]

    def with_U1(self, U1, **changes):
        return replace(self, U1=U1, **changes)


def sample_medium(N=32, M=64, seed=0, transmission=1.0):
    """Draw a medium deterministically from ``seed``.

    ``transmission`` is an optional per-port power transmission applied to
    the input couplers (1 means only the truncation loss).
    """
    if N > M:
        raise CapacityError(f"N={N} fibre modes exceed M={M} pixels per port")
    if not 0 < transmission <= 1:
        raise ConfigError("transmission must lie in (0, 1]")
    ss = np.random.SeedSequence(seed)
    r_u1, r_in, r_out, r_phi = (np.random.default_rng(s) for s in ss.spawn(4))
    U1 = haar_unitary(2 * N, r_u1)
    C_in = np.sqrt(transmission) * np.stack([haar_unitary(M, r_in)[:N] for _ in range(2)])
    U2 = np.stack([haar_unitary(M, r_out)[:N].conj().T for _ in range(2)])
    F = dft_matrix(M)
    phi = float(r_phi.uniform(0, 2 * np.pi))
    return MediumModel(N, M, U1, C_in, F, U2, F.copy(), phi, seed)


def perturb_medium(model, eps, seed=0):
    """Apply a drift ``U1 <- expm(i eps H) U1`` with seeded ``||H||_2 = 1``."""
    if eps < 0:
        raise ConfigError("drift strength must be non-negative")
    if eps == 0:
        return model
    H = random_hermitian(2 * model.N, np.random.default_rng(seed))
    return model.with_U1(expm(1j * eps * H) @ model.U1)

