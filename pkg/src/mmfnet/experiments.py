"""Named end-to-end experiments with cached, deterministic stages.

Pipeline: medium -> tm fit -> gate design -> photon statistics -> estimation.
Each stage's artifact is cached under ``<out>/cache`` keyed by a hash of
the configuration fields it depends on. Result files contain no timings or
timestamps, so an identical configuration reproduces them byte for byte;
timings live only in ``manifest.json``.
"""

import csv
import dataclasses
import hashlib
import json
import time
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .circuit import block_phase_free_fidelity, gate_fidelity, gate_library, realize
from .errors import ConfigError, MissingArtifactError
from .estimation import (bootstrap_fidelity, certified_schmidt_number, correlations_from_counts,
                         fidelity_from_mubs, mle_tomography, phase_fit, state_fidelity,
                         witness_bootstrap)
from .io import load_artifact, save_artifact
from .medium import MediumModel, perturb_medium, sample_medium
from .modes import Port, port_modes
from .quantum import (BiphotonSource, default_swap_pattern, hom_scan,
                      routing_prob_table, sample_counts, state_prob_table, swap_target,
                      swapped_state)
from .tmchar import TmFit, block_similarity, fit_tm, fitted_medium, generate_probe_data
from .wfm import WfmOptions, wavefront_match

EXPERIMENTS = ("characterize-tm", "design-gates", "routing", "routing-single-channel",
               "swap", "swap-multiplexed", "hom-scan", "stability")

_DEFAULT_GATES = {
    "characterize-tm": (),
    "design-gates": ("T_I", "T_X", "T_M", "T_S"),
    "routing": ("T_I", "T_X", "T_M"),
    "routing-single-channel": ("Identity4", "X4"),
    "swap": ("Swap4",),
    "swap-multiplexed": ("T_S",),
    "hom-scan": ("T_S",),
    "stability": ("T_M",),
}

# seed offsets for the independent random streams of one run
_SEED = {"medium": 0, "probes": 1, "tm_init": 2, "modes": 3, "counts": 4, "bootstrap": 5, "drift": 6}

SEPARABLE_BOUND = 0.5


@dataclass
class ExperimentConfig:
    """Configuration of one experiment; see the README for every field."""

    experiment: str
    seed: int = 0
    out: str = "runs"
    # medium
    N: int = 32
    M: int = 64
    transmission: float = 1.0
    phi: float = None
    # pipeline switches
    oracle_medium: bool = False
    ideal_gates: bool = False
    gates: list = None
    # tm characterisation
    tm_probes: int = None
    tm_noise: float = 0.0
    tm_iters: int = 3000
    tm_step: float = 1.0
    # wavefront matching
    wfm_iters: int = 200
    wfm_tol: float = 1e-6
    # sources
    lambdas: list = None
    gamma: float = 1.0
    # statistics
    exact: bool = False
    counts_per_setting: float = 1000.0
    flux: float = None
    duration: float = None
    background: float = 0.0
    bootstrap: int = 2000
    # hom scan
    hom_delays: list = None
    hom_sigma: float = 1.0
    # stability
    stability_eps: list = None
    # explicit artifacts instead of computing the stage
    medium_artifact: str = None
    tm_artifact: str = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        if self.gates is None:
            self.gates = list(_DEFAULT_GATES[self.experiment])
        else:
            self.gates = list(self.gates)
        for g in self.gates:
            gate_library(g)
        if self.N < 1 or self.M < 1:
            raise ConfigError("N and M must be positive")
        if not 0 <= self.gamma <= 1:
            raise ConfigError("gamma must lie in [0, 1]")
        if self.background < 0:
            raise ConfigError("background must be non-negative")
        if self.bootstrap < 2:
            raise ConfigError("bootstrap needs at least 2 replicas")
        if (self.flux is None) != (self.duration is None):
            raise ConfigError("flux and duration must be given together")
        if self.hom_delays is None:
            self.hom_delays = np.linspace(-4, 4, 33).tolist()
        if self.stability_eps is None:
            self.stability_eps = [round(0.01 * k, 2) for k in range(14)]

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown config fields: {', '.join(sorted(unknown))}")
        if "experiment" not in d:
            raise ConfigError("config must name an experiment")
        return cls(**d)

    @classmethod
    def load(cls, path):
        try:
            d = json.loads(Path(path).read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"config file {path} not found") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(d)

    def to_dict(self):
        return dataclasses.asdict(self)

    def hash(self, keys=None):
        d = self.to_dict()
        d.pop("out")
        if keys is not None:
            d = {k: d[k] for k in keys}
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]

    def sub_seed(self, name):
        return self.seed * 100 + _SEED[name]


@dataclass
class RunManifest:
    config_hash: str
    experiment: str
    versions: dict
    timings: dict = field(default_factory=dict)
    results: dict = field(default_factory=dict)
    artifacts: dict = field(default_factory=dict)
    records: list = field(default=None, repr=False)

    def write(self, path):
        d = dataclasses.asdict(self)
        d.pop("records")
        Path(path).write_text(json.dumps(d, indent=2, sort_keys=True))


def _record(experiment, gate, channel, users, F, F_err, certified_k=None, theta=None):
    return {"experiment": experiment, "gate": gate, "channel": channel, "users": users,
            "F": float(F), "F_err": None if F_err is None else float(F_err),
            "certified_k": certified_k, "theta": None if theta is None else float(theta)}


class _Run:
    def __init__(self, cfg):
        self.cfg = cfg
        self.out = Path(cfg.out)
        self.cache = self.out / "cache"
        self.cache.mkdir(parents=True, exist_ok=True)
        self.manifest = RunManifest(cfg.hash(), cfg.experiment,
                                    {"mmfnet": __version__, "numpy": np.__version__,
                                     "scipy": scipy.__version__, "artifact_schema": 1})
        self._memo = {}
        self._traces = {}

    def timed(self, name, fn, *args):
        t0 = time.perf_counter()
        res = fn(*args)
        self.manifest.timings[name] = self.manifest.timings.get(name, 0.0) + time.perf_counter() - t0
        return res

    def cached(self, stage, keys, compute, extra=""):
        path = self.cache / f"{stage}-{self.cfg.hash(keys)}{extra}.json"
        self.manifest.artifacts[f"{stage}{extra}"] = str(path.relative_to(self.out))
        if path.exists():
            return load_artifact(path)
        obj = self.timed(stage, compute)
        save_artifact(path, obj)
        return obj

    # -------------------------------------------------------- stages

    _MEDIUM_KEYS = ("seed", "N", "M", "transmission", "phi")

    def medium(self):
        if "medium" not in self._memo:
            self._memo["medium"] = self._load_medium()
        return self._memo["medium"]

    def _load_medium(self):
        cfg = self.cfg
        if cfg.medium_artifact:
            if not Path(cfg.medium_artifact).exists():
                raise MissingArtifactError(cfg.medium_artifact, "medium")
            return load_artifact(cfg.medium_artifact, MediumModel)

        def compute():
            m = sample_medium(cfg.N, cfg.M, cfg.sub_seed("medium"), cfg.transmission)
            return m if cfg.phi is None else dataclasses.replace(m, phi=float(cfg.phi))

        return self.cached("medium", self._MEDIUM_KEYS, compute)

    _TM_KEYS = _MEDIUM_KEYS + ("tm_probes", "tm_noise", "tm_iters", "tm_step")

    def tm_fit(self, medium):
        cfg = self.cfg
        if cfg.tm_artifact:
            if not Path(cfg.tm_artifact).exists():
                raise MissingArtifactError(cfg.tm_artifact, "characterize-tm")
            return load_artifact(cfg.tm_artifact, TmFit)

        def compute():
            n = cfg.tm_probes or 4 * 2 * medium.N
            probes, data = generate_probe_data(medium, n, cfg.tm_noise, cfg.sub_seed("probes"))
            fit = fit_tm(probes, data, medium, cfg.tm_iters, cfg.tm_step, cfg.sub_seed("tm_init"))
            block_similarity(fit, medium)
            return fit

        return self.cached("tm", self._TM_KEYS, compute)

    def estimate(self, medium):
        """Medium the designs are computed against."""
        if self.cfg.oracle_medium:
            return medium
        if "estimate" not in self._memo:
            self._memo["estimate"] = fitted_medium(self.tm_fit(medium), medium)
        return self._memo["estimate"]

    def design(self, medium, name):
        cfg = self.cfg
        gate = gate_library(name)
        inputs, outputs = port_modes(medium.M, gate.modes_per_port, cfg.sub_seed("modes"))
        keys = self._TM_KEYS + ("oracle_medium", "wfm_iters", "wfm_tol", "medium_artifact", "tm_artifact")

        def compute():
            est = self.estimate(medium)
            trace = wavefront_match(est, gate, inputs, outputs, WfmOptions(cfg.wfm_iters, cfg.wfm_tol))
            self._traces[name] = trace
            return trace.planes

        planes = self.cached("design", keys, compute, extra=f"-{name}")
        return planes, inputs, outputs

    def gate_matrix(self, name, medium=None):
        """Gate realized on ``medium`` (default: the true medium), or the exact matrix.

        Designs are always computed against the undrifted medium estimate.
        """
        if self.cfg.ideal_gates:
            return gate_library(name).matrix
        planes, inputs, outputs = self.design(self.medium(), name)
        return realize(medium or self.medium(), planes, inputs, outputs)

    # -------------------------------------------------------- statistics

    def scale(self, probs):
        """Expected-count scale ``flux * duration`` for a probability table."""
        cfg = self.cfg
        if cfg.flux is not None:
            return cfg.flux * cfg.duration
        per_setting = np.mean([np.sum(v) for v in probs.data.values()])
        return cfg.counts_per_setting / per_setting

    def counts(self, probs, seed_offset):
        cfg = self.cfg
        scale = self.scale(probs)
        bg = cfg.background * np.mean([np.sum(v) for v in probs.data.values()]) / probs.d**2
        return sample_counts(probs, scale, 1.0, cfg.sub_seed("counts") * 1000 + seed_offset, bg)

    def save_csv(self, name, header, rows):
        path = self.out / name
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for r in rows:
                w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])
        self.manifest.results[name] = name
        return path


# ------------------------------------------------------------ users and pairs

def user_name(port, c):
    return {Port.IN1: "A", Port.IN2: "H", Port.OUT1: "B", Port.OUT2: "G"}[port] + str(c + 1)


def routing_pairs(T, channel_map):
    """Pairs (source port, idler channel, output port, output channel) by dominant power."""
    T = np.asarray(T)
    pairs = []
    for src in (Port.IN1, Port.IN2):
        for c, in_modes in enumerate(channel_map.channels[src]):
            best, best_p = None, -1.0
            for out in (Port.OUT1, Port.OUT2):
                for k, out_modes in enumerate(channel_map.channels[out]):
                    p = float(np.sum(np.abs(T[np.ix_(out_modes, in_modes)]) ** 2))
                    if p > best_p:
                        best, best_p = (out, k), p
            pairs.append((src, c, *best))
    return pairs


def _pair_label(src, c, out, k):
    return "".join(sorted([user_name(src, c), user_name(out, k)]))


def _sources(gate, lambdas=None):
    cm = gate.channel_map
    srcs = []
    for port in (Port.IN1, Port.IN2):
        modes = cm.flatten(port)
        if lambdas is None:
            srcs.append(BiphotonSource.maximally_entangled(len(modes), modes))
        else:
            lam = np.asarray(lambdas, dtype=float)
            srcs.append(BiphotonSource(lam / np.linalg.norm(lam), modes))
    return srcs


def _routing_records(run, experiment, name, T, channel_label=None, csv_rows=None):
    cfg = run.cfg
    gate = gate_library(name)
    cm = gate.channel_map
    sources = _sources(gate, cfg.lambdas)
    out = []
    for i, (src, c, outp, k) in enumerate(routing_pairs(T, cm)):
        source = sources[src.index]
        offset = cm.flatten(src)[0]
        idler = [j - offset for j in cm.channel(src, c)]
        probs = routing_prob_table(T, source, idler, cm.channel(outp, k))
        d = probs.d
        users = _pair_label(src, c, outp, k)
        if cfg.exact:
            tab = probs
            w = fidelity_from_mubs([correlations_from_counts(tab, m) for m in range(d + 1)], d)
            F, err = w.fidelity, 0.0
        else:
            tab = run.counts(probs, zlib.crc32(f"{name}{users}".encode()) % 997)
            F = fidelity_from_mubs(tab, d).fidelity
            _, err = witness_bootstrap(tab, cfg.bootstrap, cfg.sub_seed("bootstrap"))
        out.append(_record(experiment, name, c + 1 if channel_label is None else channel_label,
                           users, F, err, certified_schmidt_number(F, d)))
        if csv_rows is not None:
            for m in range(d + 1):
                P = correlations_from_counts(tab, m).probs
                for (a, b), p in np.ndenumerate(P):
                    csv_rows.append([name, users, m, a, b, float(p)])
    return out


# ------------------------------------------------------------ experiments

def _exp_characterize(run):
    medium = run.medium()
    fit = run.tm_fit(medium)
    sim = block_similarity(fit, medium)
    rows = [[p, q, float(sim[p, q]), float(fit.loss[p, q, -1])] for p in range(2) for q in range(2)]
    run.save_csv("tm_similarity.csv", ["block_out", "block_in", "similarity", "final_loss"], rows)
    trace_rows = [[p, q, k, float(v)] for p in range(2) for q in range(2)
                  for k, v in enumerate(fit.loss_smoothed[p, q])]
    run.save_csv("tm_loss.csv", ["block_out", "block_in", "iteration", "loss"], trace_rows)
    return []


def _exp_design(run):
    medium = run.medium()
    rows, trace_rows = [], []
    for name in run.cfg.gates:
        gate = gate_library(name)
        planes, inputs, outputs = run.design(medium, name)
        est = run.estimate(medium)
        F_est, eta_est = gate_fidelity(realize(est, planes, inputs, outputs), gate)
        T_true = realize(medium, planes, inputs, outputs)
        F_true, eta_true = gate_fidelity(T_true, gate)
        F_free = block_phase_free_fidelity(T_true, gate)
        rows.append([name, F_est, eta_est, F_true, F_free, eta_true])
        save_artifact(run.out / f"planes_{name}.json", planes)
        run.manifest.results[f"planes_{name}.json"] = f"planes_{name}.json"
        tr = run._traces.get(name)
        if tr is not None:
            trace_rows += [[name, k, float(f), float(e)]
                           for k, (f, e) in enumerate(zip(tr.fidelity, tr.transmission))]
    run.save_csv("gates.csv", ["gate", "F_design", "eta_design", "F_true", "F_true_block_phase_free", "eta_true"], rows)
    if trace_rows:
        run.save_csv("wfm_traces.csv", ["gate", "iteration", "F_gate", "eta"], trace_rows)
    return []


def _exp_routing(run):
    cfg = run.cfg
    records, rows = [], []
    for name in cfg.gates:
        T = run.gate_matrix(name)
        records += _routing_records(run, cfg.experiment, name, T, csv_rows=rows)
    run.save_csv("correlations.csv", ["gate", "users", "basis", "outcome_a", "outcome_b", "P"], rows)
    return records


def _swap_records(run, name, channels):
    cfg = run.cfg
    gate = gate_library(name)
    cm = gate.channel_map
    if cfg.ideal_gates:
        T = gate.matrix
        phi = 0.0 if cfg.phi is None else float(cfg.phi)
    else:
        T = run.gate_matrix(name)
        phi = run.medium().phi
    sources = _sources(gate, cfg.lambdas)
    records, rows = [], []
    for c in channels:
        pattern = default_swap_pattern(cm, c)
        full = swapped_state(T, sources, pattern, cfg.gamma, phi)
        idx = [j - cm.flatten(Port.IN1)[0] for j in cm.channel(Port.IN1, c)]
        idx2 = [j - cm.flatten(Port.IN2)[0] for j in cm.channel(Port.IN2, c)]
        state = full.restrict(idx, idx2)
        probs = state_prob_table(state.rho, 2, "all")
        users = f"{user_name(Port.IN1, c)}{user_name(Port.IN2, c)}"
        if cfg.exact:
            tab = probs
            rho_hat = mle_tomography(tab).rho
            theta = phase_fit(rho_hat).theta
            F, err = state_fidelity(rho_hat, swap_target(theta)), 0.0
        else:
            tab = run.counts(probs, 31 * c + 7)
            rho_hat = mle_tomography(tab).rho
            theta = phase_fit(rho_hat).theta
            F, err, _ = bootstrap_fidelity(tab, swap_target(theta), cfg.bootstrap,
                                           cfg.sub_seed("bootstrap") + c)
            F = state_fidelity(rho_hat, swap_target(theta))
        records.append(_record(cfg.experiment, name, c + 1, users, F, err, None, theta))
        for (m, n) in tab.settings:
            for (a, b), v in np.ndenumerate(tab.data[(m, n)]):
                rows.append([name, users, m, n, a, b, float(v)])
        save_artifact(run.out / f"rho_{users}.json", rho_hat)
        run.manifest.results[f"rho_{users}.json"] = f"rho_{users}.json"
    run.save_csv("swap_counts.csv", ["gate", "users", "basis_m", "basis_n", "outcome_a", "outcome_b",
                                     "counts"], rows)
    return records


def _exp_swap(run):
    return _swap_records(run, run.cfg.gates[0], [0])


def _exp_swap_multiplexed(run):
    name = run.cfg.gates[0]
    return _swap_records(run, name, range(gate_library(name).channel_map.n_channels))


def _exp_hom(run):
    """Source indistinguishability scan on the exact gate's balanced splitter."""
    cfg = run.cfg
    name = cfg.gates[0]
    gate = gate_library(name)
    T = gate.matrix
    cm = gate.channel_map
    inputs = (cm.flatten(Port.IN1)[0], cm.flatten(Port.IN2)[0])
    outputs = (cm.flatten(Port.OUT1)[0], cm.flatten(Port.OUT2)[0])
    scan = hom_scan(T, cfg.hom_delays, cfg.hom_sigma, cfg.gamma, inputs, outputs)
    run.save_csv("hom_scan.csv", ["delay", "coincidence"],
                 [[float(t), float(p)] for t, p in zip(scan.delays, scan.coincidence)])
    return [_record(cfg.experiment, name, 1, "-", scan.visibility, None)]


def _exp_stability(run):
    cfg = run.cfg
    base = run.medium()
    records, rows = [], []
    for step, eps in enumerate(cfg.stability_eps):
        drifted = perturb_medium(base, eps, cfg.sub_seed("drift"))
        for name in cfg.gates:
            T = gate_library(name).matrix if cfg.ideal_gates else run.gate_matrix(name, drifted)
            for r in _routing_records(run, cfg.experiment, name, T):
                records.append(r)
                rows.append([step, float(eps), name, r["users"], r["F"], r["F_err"], SEPARABLE_BOUND])
    run.save_csv("stability.csv", ["step", "eps", "gate", "users", "F", "F_err", "bound"], rows)
    return records


_RUNNERS = {
    "characterize-tm": _exp_characterize,
    "design-gates": _exp_design,
    "routing": _exp_routing,
    "routing-single-channel": _exp_routing,
    "swap": _exp_swap,
    "swap-multiplexed": _exp_swap_multiplexed,
    "hom-scan": _exp_hom,
    "stability": _exp_stability,
}


def run(config):
    """Execute ``config`` and write results under ``config.out``.

    Writes ``results.json`` (one record per user pair or channel), the
    experiment's CSV files and ``manifest.json``. Returns the manifest.
    """
    if isinstance(config, dict):
        config = ExperimentConfig.from_dict(config)
    r = _Run(config)
    records = r.timed("experiment", _RUNNERS[config.experiment], r)
    path = r.out / "results.json"
    path.write_text(json.dumps(records, indent=2, sort_keys=True))
    r.manifest.results["results.json"] = "results.json"
    (r.out / "config.json").write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True))
    r.manifest.write(r.out / "manifest.json")
    r.manifest.records = records
    return r.manifest
