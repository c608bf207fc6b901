"""Transmission-matrix reconstruction from intensity-only probes.

Light enters one input port at a time through a flat source field. Random
phase patterns are shown on that port's input plane and on both output
planes, and the detection-plane intensities of both output ports are
recorded. The fibre block ``U1[p, q]`` is then fitted by first-order descent
on the squared intensity residual.

Each output port is imaged separately, so every block ``U1[p, q]`` is
recovered only up to its own global phase.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, EmptyDataError, ShapeError, StepSizeError


@dataclass(frozen=True, eq=False)
class ProbeSet:
    """Random probe phases.

    ``x1[q]`` has shape ``(T, M)`` (input plane of port ``q``), ``x2[q]``
    has shape ``(T, 2, M)`` (both output planes) for the probes sent
    through port ``q``.
    """

    x1: np.ndarray
    x2: np.ndarray
    seed: int = None

    @property
    def count(self):
        return self.x1.shape[1]


@dataclass(frozen=True, eq=False)
class IntensityData:
    """Detection-plane intensities, shape ``(2, T, 2, M)`` indexed ``[q, t, p, x]``."""

    y: np.ndarray
    noise: float = 0.0


@dataclass(eq=False)
class TmFit:
    """Fitted fibre blocks; ``U1`` is assembled from the four blocks."""

    U1: np.ndarray
    loss: np.ndarray
    similarity: np.ndarray = field(default=None)

    @property
    def loss_smoothed(self):
        return np.minimum.accumulate(self.loss, axis=-1)

    def aligned(self, truth):
        """Copy of the fit with each block's global phase matched to ``truth``.

        Only for evaluation: the per-block phase is not observable from the
        probe data.
        """
        N = truth.N
        U = self.U1.copy()
        for p in range(2):
            for q in range(2):
                sl = np.s_[p * N:(p + 1) * N, q * N:(q + 1) * N]
                ov = np.vdot(U[sl], truth.U1[sl])
                if ov != 0:
                    U[sl] *= ov / abs(ov)
        return U


def source_field(M):
    """Flat illumination on the input phase plane (the lens image of a point)."""
    return np.full(M, 1 / np.sqrt(M), dtype=complex)


def _fibre_inputs(optics, x1, q):
    """Fibre-mode fields for each probe, shape ``(N, T)``."""
    s = source_field(optics.M)
    return optics.C_in[q] @ (np.exp(1j * x1).T * s[:, None])


def predict(optics, block, x1, x2, q, p):
    """Detection-plane fields of port ``p`` for probes through port ``q``, ``(M, T)``."""
    z = _fibre_inputs(optics, x1, q)
    return optics.F_out @ (np.exp(1j * x2[:, p, :]).T * (optics.U2[p] @ (block @ z)))


def generate_probe_data(medium, n_probes, noise=0.0, seed=0):
    """Simulate camera intensities for random probe patterns.

    Gaussian noise of standard deviation ``noise`` is added and the result
    clipped at zero.
    """
    if n_probes < 1:
        raise ConfigError("need at least one probe")
    rng = np.random.default_rng(seed)
    M = medium.M
    x1 = rng.uniform(0, 2 * np.pi, (2, n_probes, M))
    x2 = rng.uniform(0, 2 * np.pi, (2, n_probes, 2, M))
    y = np.zeros((2, n_probes, 2, M))
    for q in range(2):
        for p in range(2):
            y[q, :, p, :] = np.abs(predict(medium, medium.block(p, q), x1[q], x2[q], q, p)).T ** 2
    if noise > 0:
        y = np.clip(y + noise * rng.standard_normal(y.shape), 0, None)
    return ProbeSet(x1, x2, seed), IntensityData(y, noise)


def block_loss_and_grad(optics, block, x1, x2, y, q, p):
    """Squared-residual loss of one block and its gradient.

    The gradient is returned as ``dL/dRe + i dL/dIm`` for every entry of
    ``block``.
    """
    z = _fibre_inputs(optics, x1, q)
    mid = optics.U2[p] @ (block @ z)
    mask = np.exp(1j * x2[:, p, :]).T
    w = optics.F_out @ (mask * mid)
    r = np.abs(w) ** 2 - y.T
    g_w = 4 * r * w
    g_mid = mask.conj() * (optics.F_out.conj().T @ g_w)
    grad = (optics.U2[p].conj().T @ g_mid) @ z.conj().T
    return float(np.sum(r * r)), grad


def fit_tm(probes, data, optics, iters=3000, step=1.0, seed=0, init=None, tol=1e-14):
    """Fit all four fibre blocks by gradient descent.

    Parameters
    ----------
    probes : ProbeSet
    data : IntensityData
    optics : MediumModel
        Supplies the fixed optics (couplers, lenses); its ``U1`` is unused.
    iters : int
        Maximum descent steps per block.
    step : float
        Step size in units of ``1 / (2 T mean(y))`` for ``T`` probes.
    seed : int
        Seed of the random complex initialisation.
    init : array, optional
        Initial ``2N x 2N`` estimate in place of the random start.
    tol : float
        Stop once the loss falls below ``tol`` times its initial value.

    Raises
    ------
    StepSizeError
        If the loss rises for 10 consecutive steps or overflows.

    Returns
    -------
    TmFit
        ``loss`` has shape ``(2, 2, n_steps)``, padded with the last value
        when blocks stop early.
    """
    if probes.count == 0:
        raise EmptyDataError("no probes")
    if data.y.shape[1] != probes.count:
        raise ShapeError(f"{probes.count} probes but {data.y.shape[1]} intensity records")
    N = optics.N
    rng = np.random.default_rng(seed)
    U = np.zeros((2 * N, 2 * N), dtype=complex)
    traces = [[None, None], [None, None]]
    for q in range(2):
        for p in range(2):
            y = data.y[q, :, p, :]
            if init is not None:
                B = np.array(init[p * N:(p + 1) * N, q * N:(q + 1) * N], dtype=complex)
            else:
                B = (rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))) / np.sqrt(4 * N)
            lr = step / (2 * probes.count * max(y.mean(), 1e-300))
            trace = []
            rising = 0
            for _ in range(iters):
                with np.errstate(over="ignore", invalid="ignore"):
                    loss, g = block_loss_and_grad(optics, B, probes.x1[q], probes.x2[q], y, q, p)
                if not np.isfinite(loss):
                    raise StepSizeError(f"loss overflowed on block ({p}, {q}); reduce step (now {step})")
                if trace and loss > trace[-1]:
                    rising += 1
                    if rising >= 10:
                        raise StepSizeError(
                            f"loss rose for 10 consecutive steps on block ({p}, {q}); reduce step (now {step})")
                else:
                    rising = 0
                trace.append(loss)
                if loss <= tol * trace[0]:
                    break
                B = B - lr * g
            U[p * N:(p + 1) * N, q * N:(q + 1) * N] = B
            traces[p][q] = trace
    n = max(len(t) for row in traces for t in row)
    loss = np.array([[t + [t[-1]] * (n - len(t)) for t in row] for row in traces])
    return TmFit(U, loss)


def block_similarity(fit, truth):
    """Per-block overlap ``|Tr(A^dag B)| / max(|A|^2, |A||B|)``.

    ``A`` is the true block and ``B`` the fitted one. The absolute value
    absorbs the unobservable block phase; the denominator keeps the score in
    ``[0, 1]`` and reduces to ``|Tr(A^dag B)| / dim`` for a unitary ``A``.
    Returns a ``2 x 2`` array indexed ``[p, q]``, or a scalar when given two
    plain matrices.
    """
    if isinstance(fit, np.ndarray) and isinstance(truth, np.ndarray):
        return _similarity(truth, fit)
    U_fit = fit.U1 if isinstance(fit, TmFit) else np.asarray(fit)
    N = truth.N
    out = np.zeros((2, 2))
    for p in range(2):
        for q in range(2):
            sl = np.s_[p * N:(p + 1) * N, q * N:(q + 1) * N]
            out[p, q] = _similarity(truth.U1[sl], U_fit[sl])
    if isinstance(fit, TmFit):
        fit.similarity = out
    return out


def _similarity(A, B):
    na, nb = np.linalg.norm(A), np.linalg.norm(B)
    den = max(na * na, na * nb)
    return float(abs(np.vdot(A, B)) / den) if den > 0 else 0.0


def fitted_medium(fit, optics):
    """Medium model carrying the fitted fibre for use in design."""
    return optics.with_U1(fit.U1, phi=0.0)
