"""Rule engine that validates and adjusts ``N_phi`` and the boson mass.

A session repeatedly measures the local field, conjugate-field and (when
needed) boson distributions, computes the window fractions ``beta_phi`` and
``beta_kappa`` and applies one of five actions until the parameters are
accepted.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Protocol, Sequence

import numpy as np

from .distribution import Distribution
from .finiterep import build, commutator_cutoff, diagonalize
from .measure import QPEConfig, field_histograms, qpe_distribution
from .sampling import SamplingGrid

__all__ = [
    "GuidelineState",
    "MeasurementSnapshot",
    "Betas",
    "Accept",
    "RescaleMass",
    "GrowGrid",
    "NeedBosonCheck",
    "GrowForBosons",
    "Backend",
    "HarmonicBackend",
    "Phi4Backend",
    "StateBackend",
    "HistogramBackend",
    "BackendExhausted",
    "SessionResult",
    "boson_cutoff",
    "compute_betas",
    "decide",
    "decide_sites",
    "run_session",
    "replay",
    "snapshot_from_json",
    "snapshot_to_json",
]

SNAPSHOT_TOL = 1e-6


@lru_cache(maxsize=None)
def boson_cutoff(n_phi: int, tol: float = 1e-4) -> int:
    """Commutator-based ``N_b`` of an ``n_phi`` grid (independent of the mass)."""
    return commutator_cutoff(n_phi, tol)


@dataclass(frozen=True)
class GuidelineState:
    """Current parameters of a validation session.

    Parameters
    ----------
    n_phi : int
        Even number of grid points.
    mass : float
        Boson mass ``m``.
    eps : float
        Target accuracy in ``(0, 0.1)``.
    f_c : float
        Confidence factor in ``(0, 1)``; ``[0.6, 0.8]`` is the advised range.
    grow : {"pow2", "even"}
        Rounding of a grown ``n_phi``.
    history : tuple
        ``(snapshot, action)`` pairs of earlier rounds.
    """

    n_phi: int = 32
    mass: float = 1.0
    eps: float = 1e-4
    f_c: float = 0.7
    grow: str = "pow2"
    history: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if self.n_phi < 2 or self.n_phi % 2:
            raise ValueError("n_phi must be even")
        if not 0 < self.f_c < 1:
            raise ValueError("f_c must lie in (0, 1)")
        if not 0 < self.eps < 0.1:
            raise ValueError("eps must lie in (0, 0.1)")
        if not self.mass > 0:
            raise ValueError("mass must be positive")
        if self.grow not in ("pow2", "even"):
            raise ValueError("grow must be 'pow2' or 'even'")

    @property
    def grid(self) -> SamplingGrid:
        return SamplingGrid.from_mass(self.n_phi, self.mass)


@dataclass(frozen=True, eq=False)
class MeasurementSnapshot:
    """Measured local distributions on the grid of the state that produced them."""

    p_phi: Distribution
    p_kappa: Distribution
    p_boson: Distribution | None = None

    def __post_init__(self):
        for d in (self.p_phi, self.p_kappa, self.p_boson):
            if d is not None and abs(d.total() - 1.0) > SNAPSHOT_TOL:
                raise ValueError("snapshot distributions must sum to one within 1e-6")


@dataclass(frozen=True)
class Betas:
    beta_phi: float
    beta_kappa: float
    overflow_phi: bool
    overflow_kappa: bool

    @property
    def product(self) -> float:
        return self.beta_phi * self.beta_kappa


# --- actions --------------------------------------------------------------------

@dataclass(frozen=True)
class Accept:
    name = "Accept"


@dataclass(frozen=True)
class NeedBosonCheck:
    name = "NeedBosonCheck"


@dataclass(frozen=True)
class RescaleMass:
    mu: float
    name = "RescaleMass"


@dataclass(frozen=True)
class GrowGrid:
    factor: float
    n_phi: int
    name = "GrowGrid"


@dataclass(frozen=True)
class GrowForBosons:
    n_phi: int
    name = "GrowForBosons"


def _action_to_dict(action) -> dict:
    out = {"action": action.name}
    out.update({k: v for k, v in action.__dict__.items()})
    return out


def _action_from_dict(d: dict):
    kind = d["action"]
    args = {k: v for k, v in d.items() if k != "action"}
    return {"Accept": Accept, "NeedBosonCheck": NeedBosonCheck, "RescaleMass": RescaleMass,
            "GrowGrid": GrowGrid, "GrowForBosons": GrowForBosons}[kind](**args)


# --- rules ------------------------------------------------------------------------

def _beta(support: np.ndarray, probs: np.ndarray, window: float, n_phi: int, eps: float):
    # scan the cell boundaries beta_k = 2k/N, k = 1..N/2
    absx = np.abs(np.asarray(support, dtype=float))
    for k in range(1, n_phi // 2 + 1):
        beta = 2.0 * k / n_phi
        outside = float(probs[absx > beta * window * (1 + 1e-12)].sum())
        if outside < eps:
            return beta, k == n_phi // 2
    return 1.0, True


def compute_betas(snap: MeasurementSnapshot, state: GuidelineState) -> Betas:
    """Smallest window fractions leaving less than ``eps`` probability outside.

    ``beta`` is scanned over the cell boundaries ``2k/N``.  When only
    ``beta = 1`` satisfies the rule (the outermost points carry ``eps`` or
    more) the overflow flag is set.
    """
    grid = state.grid
    if len(snap.p_phi) != state.n_phi or len(snap.p_kappa) != state.n_phi:
        raise ValueError("snapshot does not match the grid size")
    bp, op = _beta(snap.p_phi.support, snap.p_phi.probs, grid.F, state.n_phi, state.eps)
    bk, ok = _beta(snap.p_kappa.support, snap.p_kappa.probs, grid.K, state.n_phi, state.eps)
    return Betas(bp, bk, op, ok)


def _grown(n_phi: int, factor: float, mode: str) -> int:
    target = n_phi * factor
    if mode == "pow2":
        n = 2
        while n < target - 1e-9:
            n *= 2
        return max(n, n_phi + 2)
    n = int(math.ceil(target - 1e-9))
    n += n % 2
    return max(n, n_phi + 2)


def decide(snap: MeasurementSnapshot, state: GuidelineState, betas: Betas | None = None):
    """Apply the guideline rules in order and return one action.

    1. ``b_phi b_kappa <= f_c^2`` and ``b_phi ~ b_kappa`` (within 10 percent
       or within one scan step ``2/N``, whichever is looser): the
       boson distribution decides (``GrowForBosons`` if its weight at
       ``k >= N_b`` is at least ``eps``, else ``Accept``); without a boson
       histogram the result is ``NeedBosonCheck``.
    2. ``b_phi b_kappa <= f_c^2`` otherwise: ``RescaleMass(b_kappa / b_phi)``.
    3. ``b_phi b_kappa > f_c^2``: ``GrowGrid`` by ``b_phi b_kappa / f_c^2``.
    """
    b = compute_betas(snap, state) if betas is None else betas
    limit = state.f_c ** 2
    if b.product <= limit:
        slack = max(0.1 * max(b.beta_phi, b.beta_kappa), 2.0 / state.n_phi)
        if abs(b.beta_phi - b.beta_kappa) <= slack * (1 + 1e-12):
            if snap is None or snap.p_boson is None:
                return NeedBosonCheck()
            n_b = boson_cutoff(state.n_phi)
            if snap.p_boson.tail_from(n_b) >= state.eps:
                return GrowForBosons(2 * state.n_phi)
            return Accept()
        return RescaleMass(b.beta_kappa / b.beta_phi)
    factor = b.product / limit
    return GrowGrid(factor, _grown(state.n_phi, factor, state.grow))


_SEVERITY = {"GrowGrid": 4, "GrowForBosons": 3, "RescaleMass": 2, "NeedBosonCheck": 1, "Accept": 0}


def decide_sites(snaps: Sequence[MeasurementSnapshot], state: GuidelineState):
    """Most conservative action over per-site snapshots."""
    actions = [decide(s, state) for s in snaps]

    def weight(a):
        extra = getattr(a, "n_phi", 0) or abs(math.log(getattr(a, "mu", 1.0)))
        return (_SEVERITY[a.name], extra)

    return max(actions, key=weight)


# --- backends -----------------------------------------------------------------

class BackendExhausted(RuntimeError):
    """The backend cannot produce a snapshot for the requested parameters."""


class Backend(Protocol):
    def snapshot(self, n_phi: int, mass: float, bosons: bool) -> MeasurementSnapshot: ...


class StateBackend:
    """Backend built from a grid-state factory ``state(n_phi, mass) -> vector``.

    Boson histograms come from the analytic phase-estimation readout in the
    discrete oscillator basis of the same grid with ``n_r = log2 N + 1``.
    ``shots`` replaces exact probabilities with seeded multinomial estimates.
    """

    def __init__(self, shots: int | None = None, seed: int | None = None):
        if shots is not None and seed is None:
            raise ValueError("a seed is required when shots are sampled")
        self.shots = shots
        self.seed = seed
        self._calls = 0

    def state(self, n_phi: int, mass: float) -> np.ndarray:
        raise NotImplementedError

    def _noisy(self, dist: Distribution) -> Distribution:
        if self.shots is None:
            return dist
        rng = np.random.default_rng([self.seed, self._calls])
        self._calls += 1
        counts = rng.multinomial(self.shots, dist.probs / dist.probs.sum())
        return Distribution(dist.support, counts / self.shots)

    def snapshot(self, n_phi: int, mass: float, bosons: bool) -> MeasurementSnapshot:
        psi = self.state(n_phi, mass)
        grid = SamplingGrid.from_mass(n_phi, mass)
        p_phi, p_kappa = field_histograms(psi, grid)
        p_boson = None
        if bosons:
            if n_phi & (n_phi - 1):
                raise ValueError("boson readout needs a power-of-two grid")
            rep = build(n_phi, mass)
            eig = diagonalize(rep)
            cfg = QPEConfig.from_eigensystem(rep, eig)
            coeffs = eig.states.T @ psi
            anc = qpe_distribution(coeffs / np.linalg.norm(coeffs), cfg, boson_cutoff(n_phi))
            p_boson = anc.as_distribution()
        return MeasurementSnapshot(self._noisy(p_phi), self._noisy(p_kappa),
                                   None if p_boson is None else self._noisy(p_boson))


class Phi4Backend(StateBackend):
    """Ground state of ``Pi^2/2 + m0^2 Phi^2/2 + g Phi^4/24`` on the ``(N, m)`` grid."""

    def __init__(self, m0_sq: float = 1.0, g: float = 0.0, shots: int | None = None, seed: int | None = None):
        super().__init__(shots, seed)
        self.m0_sq = float(m0_sq)
        self.g = float(g)

    def state(self, n_phi: int, mass: float) -> np.ndarray:
        rep = build(n_phi, mass)
        phi = rep.phi
        pi_sq = rep.h_osc - 0.5 * mass ** 2 * np.diag(phi ** 2)  # = Pi^2 / 2
        h = pi_sq + np.diag(0.5 * self.m0_sq * phi ** 2 + self.g / 24.0 * phi ** 4)
        w, v = np.linalg.eigh(h)
        vec = v[:, 0]
        return vec if vec[n_phi // 2] >= 0 else -vec


class HarmonicBackend(Phi4Backend):
    """Harmonic oscillator of bare mass ``m0`` sampled on the advisor's grid."""

    def __init__(self, m0: float = 1.0, shots: int | None = None, seed: int | None = None):
        super().__init__(m0 ** 2, 0.0, shots, seed)


class FunctionBackend(StateBackend):
    """Normalized samples ``sqrt(dphi) f(phi_i)`` of a fixed wavefunction."""

    def __init__(self, func, shots: int | None = None, seed: int | None = None):
        super().__init__(shots, seed)
        self.func = func

    def state(self, n_phi: int, mass: float) -> np.ndarray:
        grid = SamplingGrid.from_mass(n_phi, mass)
        vec = math.sqrt(grid.delta_phi) * np.asarray(self.func(grid.phi), dtype=float)
        return vec / np.linalg.norm(vec)


class HistogramBackend:
    """Serves externally measured snapshots keyed by ``(n_phi, mass)``."""

    def __init__(self, records: Sequence[tuple[int, float, MeasurementSnapshot]]):
        self.records = list(records)

    def snapshot(self, n_phi: int, mass: float, bosons: bool) -> MeasurementSnapshot:
        found = False
        for n, m, snap in self.records:
            if n == n_phi and math.isclose(m, mass, rel_tol=1e-12):
                found = True
                if not bosons or snap.p_boson is not None:
                    return snap
        if found:
            raise BackendExhausted("no boson histogram recorded for this grid")
        raise BackendExhausted(f"no histograms recorded for n_phi={n_phi}, mass={mass}")


__all__ += ["FunctionBackend"]


# --- sessions -------------------------------------------------------------------

@dataclass
class SessionResult:
    """Outcome of :func:`run_session`.

    ``verdict`` is ``"accepted"``, ``"not-converged"`` or ``"needs-measurement"``.
    """

    verdict: str
    state: GuidelineState
    rounds: list

    def to_json(self) -> dict:
        return {
            "version": 1,
            "verdict": self.verdict,
            "final": {"n_phi": self.state.n_phi, "mass": self.state.mass},
            "config": {"eps": self.state.eps, "f_c": self.state.f_c, "grow": self.state.grow},
            "rounds": self.rounds,
        }


def snapshot_to_json(snap: MeasurementSnapshot, n_phi: int, mass: float) -> dict:
    """Histogram-ingestion record for one snapshot."""
    return {
        "grid": {"n_phi": int(n_phi), "mass": float(mass)},
        "p_phi": [float(x) for x in snap.p_phi.probs],
        "p_kappa": [float(x) for x in snap.p_kappa.probs],
        "p_boson": None if snap.p_boson is None else [float(x) for x in snap.p_boson.probs],
    }


def snapshot_from_json(record: dict) -> tuple[int, float, MeasurementSnapshot]:
    """Parse a histogram-ingestion record into ``(n_phi, mass, snapshot)``."""
    try:
        n_phi = int(record["grid"]["n_phi"])
        mass = float(record["grid"]["mass"])
        grid = SamplingGrid.from_mass(n_phi, mass)
        p_phi = Distribution(grid.phi, record["p_phi"], tol=SNAPSHOT_TOL)
        p_kappa = Distribution(grid.kappa, record["p_kappa"], tol=SNAPSHOT_TOL)
        pb = record.get("p_boson")
        p_boson = None if pb is None else Distribution(np.arange(len(pb)), pb, tol=SNAPSHOT_TOL)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed histogram record: {exc}") from exc
    return n_phi, mass, MeasurementSnapshot(p_phi, p_kappa, p_boson)


def _apply(state: GuidelineState, action) -> GuidelineState:
    if isinstance(action, RescaleMass):
        return replace(state, mass=state.mass * action.mu)
    if isinstance(action, (GrowGrid, GrowForBosons)):
        return replace(state, n_phi=action.n_phi)
    return state


def run_session(backend: Backend, state: GuidelineState, max_rounds: int = 6) -> SessionResult:
    """Iterate measure/decide/adjust until ``Accept`` or ``max_rounds``.

    A round measures the field histograms; if the rules ask for a boson
    check, the boson histogram of the same configuration is measured and the
    rules are applied again.
    """
    rounds = []
    history = []
    for _ in range(max_rounds):
        try:
            snap = backend.snapshot(state.n_phi, state.mass, bosons=False)
            action = decide(snap, state)
            if isinstance(action, NeedBosonCheck):
                rounds.append(_round_record(state, snap, action))
                history.append((snap, action))
                snap = backend.snapshot(state.n_phi, state.mass, bosons=True)
                action = decide(snap, state)
        except BackendExhausted:
            return SessionResult("needs-measurement", replace(state, history=tuple(history)), rounds)
        rounds.append(_round_record(state, snap, action))
        history.append((snap, action))
        if isinstance(action, Accept):
            return SessionResult("accepted", replace(state, history=tuple(history)), rounds)
        state = _apply(state, action)
    return SessionResult("not-converged", replace(state, history=tuple(history)), rounds)


def _round_record(state: GuidelineState, snap: MeasurementSnapshot, action) -> dict:
    b = compute_betas(snap, state)
    rec = snapshot_to_json(snap, state.n_phi, state.mass)
    rec["betas"] = {"beta_phi": b.beta_phi, "beta_kappa": b.beta_kappa,
                    "overflow_phi": b.overflow_phi, "overflow_kappa": b.overflow_kappa}
    rec["action"] = _action_to_dict(action)
    return rec


def replay(transcript: dict | str) -> list[bool]:
    """Re-run :func:`decide` on every recorded round; ``True`` where the action matches."""
    data = json.loads(transcript) if isinstance(transcript, str) else transcript
    cfg = data["config"]
    out = []
    for rec in data["rounds"]:
        n_phi, mass, snap = snapshot_from_json(rec)
        state = GuidelineState(n_phi, mass, cfg["eps"], cfg["f_c"], cfg["grow"])
        out.append(decide(snap, state) == _action_from_dict(rec["action"]))
    return out
