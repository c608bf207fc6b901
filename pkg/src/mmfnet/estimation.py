"""Estimators: correlation matrices, MUB fidelity witness, RrhoR tomography, bootstrap.

The witness rests on the identity
``sum_m sum_a |u_a^m><u_a^m| (x) |u_a^m*><u_a^m*| = I + d |Phi+><Phi+|``
for a complete MUB family, so ``<Phi+|rho|Phi+> = (S - 1) / d`` with ``S``
the summed probability of matching outcomes over all ``d + 1`` bases.
"""

import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ConfigError, EmptyDataError, IncompleteDataError, ShapeError
from .modes import mub_set
from .quantum import CountTable


@dataclass(frozen=True, eq=False)
class CorrelationMatrix:
    basis: int
    probs: np.ndarray

    def to_rows(self):
        return [(self.basis, a, b, float(p)) for (a, b), p in np.ndenumerate(self.probs)]


@dataclass(frozen=True)
class WitnessResult:
    fidelity: float
    stderr: float
    certified_k: int


@dataclass(eq=False)
class TomographyResult:
    rho: np.ndarray
    iterations: int
    loglik: np.ndarray
    converged: bool
    samples: np.ndarray = field(default=None)


class PhaseEstimate(NamedTuple):
    theta: float
    defined: bool


def correlations_from_counts(counts, m):
    """Normalised ``P(a, b)`` for basis ``m`` on both sides."""
    key = (m, m)
    if key not in counts.data:
        raise IncompleteDataError(f"no counts for basis {m}")
    n = np.asarray(counts.data[key], dtype=float)
    if n.shape != (counts.d, counts.d):
        raise ShapeError(f"basis {m} table has shape {n.shape}, expected {(counts.d, counts.d)}")
    tot = n.sum()
    if tot <= 0:
        raise EmptyDataError(f"all counts in basis {m} are zero")
    return CorrelationMatrix(m, n / tot)


def schmidt_bound(k, d):
    """Largest fidelity to ``|Phi+>`` reachable with Schmidt number ``k``."""
    return k / d


def certified_schmidt_number(F, d):
    """Largest ``k`` with ``F > (k - 1) / d``; 1 means nothing certified."""
    k = 1
    while k < d and F > schmidt_bound(k, d):
        k += 1
    return k


def fidelity_from_mubs(correlations, d, totals=None):
    """Fidelity to ``|Phi+>`` from correlations in all ``d + 1`` MUBs.

    ``correlations`` is a sequence of :class:`CorrelationMatrix` or ``d x d``
    arrays, or a :class:`CountTable`. If raw counts are available
    (``CountTable`` input or ``totals``), the multinomial standard error of
    ``F`` is returned; otherwise it is 0.
    """
    if isinstance(correlations, CountTable):
        if correlations.d != d:
            raise ShapeError(f"count table is for d={correlations.d}, not {d}")
        totals = []
        mats = []
        for m in range(d + 1):
            cm = correlations_from_counts(correlations, m)
            mats.append(cm.probs)
            totals.append(float(np.sum(correlations.data[(m, m)])))
    else:
        mats = [np.asarray(c.probs if isinstance(c, CorrelationMatrix) else c, dtype=float)
                for c in correlations]
    if len(mats) != d + 1:
        raise IncompleteDataError(f"need {d + 1} bases for d={d}, got {len(mats)}")
    if any(p.shape != (d, d) for p in mats):
        raise ShapeError("correlation matrices must be d x d")
    diag = [float(np.trace(p)) for p in mats]
    S = sum(diag)
    F = (S - 1) / d
    var = 0.0
    if totals is not None:
        var = sum(s * (1 - s) / n for s, n in zip(diag, totals) if n > 0) / d**2
    return WitnessResult(F, float(np.sqrt(var)), certified_schmidt_number(F, d))


def witness_bootstrap(counts, n_rep=2000, seed=0):
    """Mean and std of the witness over Poisson-resampled count tables."""
    rng = np.random.default_rng(seed)
    d = counts.d
    tabs = np.array([counts.data[(m, m)] for m in range(d + 1)], dtype=float)
    res = rng.poisson(tabs, size=(n_rep,) + tabs.shape).astype(float)
    tot = res.sum(axis=(2, 3))
    tot[tot == 0] = np.nan
    S = np.nansum(np.trace(res, axis1=2, axis2=3) / tot, axis=1)
    F = (S - 1) / d
    return float(np.mean(F)), float(np.std(F, ddof=1))


def direct_fidelity(rho, d):
    """``<Phi+|rho|Phi+>``."""
    phi = np.eye(d).ravel() / np.sqrt(d)
    return float(np.vdot(phi, np.asarray(rho) @ phi).real)


def state_fidelity(rho, target):
    t = np.asarray(target, dtype=complex)
    return float(np.vdot(t, np.asarray(rho) @ t).real / np.vdot(t, t).real)


def trace_distance(a, b):
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(a - b))))


# ---------------------------------------------------------------- MLE

def measurement_operators(d):
    """Projectors ``P_a^m (x) conj(P_b^n)`` as an array ``(d+1, d+1, d, d, d^2, d^2)``."""
    proj = mub_set(d).projectors()
    ops = np.einsum("maij,nbkl->mnabikjl", proj, proj.conj())
    return ops.reshape(d + 1, d + 1, d, d, d * d, d * d)


def _setting_arrays(counts):
    d = counts.d
    need = [(m, n) for m in range(d + 1) for n in range(d + 1)]
    missing = [s for s in need if s not in counts.data]
    if missing:
        raise IncompleteDataError(
            f"tomography needs all {len(need)} basis pairs; missing {len(missing)} (e.g. {missing[0]})")
    ops = measurement_operators(d)
    P, n, setting = [], [], []
    for i, (m, nb) in enumerate(need):
        tab = np.asarray(counts.data[(m, nb)], dtype=float)
        for a in range(d):
            for b in range(d):
                P.append(ops[m, nb, a, b])
                n.append(tab[a, b])
                setting.append(i)
    return np.array(P), np.array(n), np.array(setting)


def _loglik(n, probs, w):
    return np.sum(w * n * np.log(np.maximum(probs, 1e-12)), axis=-1)


def _mle_batch(P, n, w, max_iters, tol, eps=1e-12):
    """Batched RrhoR iteration; ``n`` has shape ``(B, K)``.

    If a full step lowers the likelihood it is diluted towards the identity
    map (``R -> (I + t R)/(1 + t)``, halving ``t``) until it does not.
    """
    B, K = n.shape
    D = P.shape[-1]
    rho = np.tile(np.eye(D, dtype=complex) / D, (B, 1, 1))

    def probs_of(r):
        return np.einsum("kij,bji->bk", P, r).real

    pr = probs_of(rho)
    ll = _loglik(n, pr, w)
    trace = [ll.copy()]
    active = np.ones(B, dtype=bool)
    it = 0
    eye = np.eye(D)
    for it in range(1, max_iters + 1):
        coef = w * n / np.maximum(pr, eps)
        R = np.einsum("bk,kij->bij", coef, P)
        t = np.ones(B)
        new = rho.copy()
        new_ll = ll.copy()
        todo = active.copy()
        for _ in range(60):
            if not todo.any():
                break
            idx = np.flatnonzero(todo)
            Rt = (eye + t[idx, None, None] * R[idx]) / (1 + t[idx, None, None])
            cand = Rt @ rho[idx] @ Rt
            cand = 0.5 * (cand + cand.conj().transpose(0, 2, 1))
            cand /= np.trace(cand, axis1=1, axis2=2).real[:, None, None]
            cp = np.einsum("kij,bji->bk", P, cand).real
            cl = _loglik(n[idx], cp, w[idx])
            ok = cl >= ll[idx] - 1e-13 * np.maximum(1, np.abs(ll[idx]))
            new[idx[ok]] = cand[ok]
            new_ll[idx[ok]] = cl[ok]
            todo[idx[ok]] = False
            t[idx[~ok]] *= 0.5
        step = 0.5 * np.abs(np.linalg.eigvalsh(new - rho)).sum(axis=1)
        rho = new
        pr = probs_of(rho)
        ll = new_ll
        trace.append(ll.copy())
        active &= step >= tol
        if not active.any():
            break
    return rho, it, np.array(trace).T, ~active


def mle_tomography(counts, max_iters=5000, tol=1e-10):
    """RrhoR maximum-likelihood reconstruction from all basis pairs.

    Each projector's term in ``R`` is weighted by ``1 / N_setting`` (the
    setting's total counts), and ``Tr[P rho]`` is floored at ``1e-12``.
    """
    P, n, setting = _setting_arrays(counts)
    w = _setting_weights(n[None], setting)[0]
    if not np.any(n > 0):
        raise EmptyDataError("all counts are zero")
    rho, it, ll, conv = _mle_batch(P, n[None], w[None], max_iters, tol)
    return TomographyResult(rho[0], it, ll[0], bool(conv[0]))


def _setting_weights(n, setting):
    n_set = np.zeros((n.shape[0], setting.max() + 1))
    for s in range(n_set.shape[1]):
        n_set[:, s] = n[:, setting == s].sum(axis=1)
    tot = n_set[:, setting]
    return np.where(tot > 0, 1.0 / np.where(tot > 0, tot, 1), 0.0)


def bootstrap_fidelity(counts, target, n_rep=2000, seed=0, max_iters=5000, tol=1e-10, batch=250):
    """Mean and standard deviation of MLE fidelity over Poisson resamples.

    Returns ``(mean, std, samples)``.
    """
    if n_rep < 2:
        raise ConfigError("need at least two bootstrap replicas")
    if n_rep < 100:
        warnings.warn(f"only {n_rep} bootstrap replicas; the error estimate is unreliable")
    P, n, setting = _setting_arrays(counts)
    rng = np.random.default_rng(seed)
    t = np.asarray(target, dtype=complex)
    t = t / np.linalg.norm(t)
    samples = []
    for start in range(0, n_rep, batch):
        k = min(batch, n_rep - start)
        nb = rng.poisson(n, size=(k, n.size)).astype(float)
        w = _setting_weights(nb, setting)
        rho, *_ = _mle_batch(P, nb, w, max_iters, tol)
        samples.append(np.einsum("i,bij,j->b", t.conj(), rho, t).real)
    s = np.concatenate(samples)
    return float(s.mean()), float(s.std(ddof=1)), s


def phase_fit(rho):
    """Phase ``theta`` maximising overlap with ``(|01> - e^{i theta}|10>)/sqrt(2)``.

    ``<Psi(theta)|rho|Psi(theta)> = (r11 + r22)/2 - Re(e^{i theta} r_{01,10})``,
    which peaks at ``theta = arg(-<10|rho|01>)``.
    """
    rho = np.asarray(rho)
    if rho.shape != (4, 4):
        raise ShapeError("phase fit needs a two-qubit state")
    c = rho[2, 1]
    if abs(c) == 0:
        return PhaseEstimate(float("nan"), False)
    return PhaseEstimate(float(np.angle(-c) % (2 * np.pi)), True)
