"""Counterfactual optical layer: stage probabilities and gate trajectories.

The analytic half evaluates, exactly as printed, the closed-form success
and abortion probabilities of every interferometric gate and protocol
stage (the lambda/nabla/zeta family).  The Monte Carlo half simulates the
gates trajectory by trajectory under two explicitly named absorber models:

* ``PER_CYCLE_BORN`` reproduces the closed forms: each cycle an absorption
  event fires with the fixed probability weight * sin^2(theta), with the
  absorber's branch weights frozen until a final collapse;
* ``COHERENT`` evolves the joint absorber-photon amplitudes cycle by cycle
  and samples every event from the current squared amplitude.

The two models agree in the many-cycle limit but not at finite cycle
counts; both are reported, neither is declared authoritative.

Counterfactuality bookkeeping: a trajectory counts as Success only if no
absorption event fired, i.e. the photon was never found in the channel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from enum import Enum

import numpy as np

from . import protocol as _protocol
from .hilbert import StateVector, fidelity
from .protocol import BellInput, GeneralInput

# Switch products to log-space accumulation above this many factors so
# sweeps with thousands of cycles stay accurate.
_LOG_SPACE_THRESHOLD = 10_000


@dataclass(frozen=True)
class CycleConfig:
    """Cycle counts: M outer, N inner, K concatenated collapse gates."""

    M: int
    N: int
    K: int

    def __post_init__(self) -> None:
        for name in ("M", "N", "K"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValueError(f"cycle count {name} must be a positive integer, got {value!r}")

    @property
    def theta_m(self) -> float:
        return math.pi / (2 * self.M)

    @property
    def theta_n(self) -> float:
        return math.pi / (2 * self.N)

    @property
    def theta_k(self) -> float:
        return math.pi / (2 * self.K)


def _cospi(x: float) -> float:
    """cos(pi * x), exact at half-integer x (so quarter-turn angles are exact)."""
    x = math.fmod(x, 2.0)
    if x < 0.0:
        x += 2.0
    doubled = 2.0 * x
    if doubled == math.floor(doubled):
        return (1.0, 0.0, -1.0, 0.0)[int(doubled) % 4]
    return math.cos(math.pi * x)


def _sin_sq_pi(y: float) -> float:
    """sin^2(pi * y) via the half-angle identity; exact at quarter turns."""
    return (1.0 - _cospi(2.0 * y)) / 2.0


def _cos_sq_pi(y: float) -> float:
    """cos^2(pi * y) via the half-angle identity; exact at quarter turns."""
    return (1.0 + _cospi(2.0 * y)) / 2.0


def _survival_power(x: float, n: int) -> float:
    """(1 - x)^n for a per-cycle loss x in [0, 1]."""
    if x >= 1.0:
        return 0.0
    if x <= 0.0:
        return 1.0
    if n > _LOG_SPACE_THRESHOLD:
        return math.exp(n * math.log1p(-x))
    base = 1.0 - x
    out = 1.0
    for _ in range(n):
        out *= base
    return out


def _validate_cycles(**counts: int) -> None:
    for name, value in counts.items():
        if int(value) != value or value < 1:
            raise ValueError(f"cycle count {name} must be a positive integer, got {value!r}")


def _validate_weight(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")


def qz_survival(inner: int) -> float:
    """Probability cos^(2N)(pi/2N) that a blocked interferometer emits its photon unchanged."""
    _validate_cycles(N=inner)
    return _survival_power(_sin_sq_pi(1.0 / (2 * inner)), inner)


def cqz_lambda0(outer: int) -> float:
    """Chained-gate survival cos^(2M)(pi/2M) for an absent blocker."""
    _validate_cycles(M=outer)
    return _survival_power(_sin_sq_pi(1.0 / (2 * outer)), outer)


def cqz_lambda1(outer: int, inner: int) -> float:
    """Chained-gate survival for a present blocker: the printed M-term product."""
    _validate_cycles(M=outer, N=inner)
    s_n = _sin_sq_pi(1.0 / (2 * inner))
    if outer * inner > _LOG_SPACE_THRESHOLD:
        log_total = 0.0
        for i in range(1, outer + 1):
            x = _sin_sq_pi(i / (2 * outer)) * s_n
            if x >= 1.0:
                return 0.0
            log_total += inner * math.log1p(-x)
        return math.exp(log_total)
    out = 1.0
    for i in range(1, outer + 1):
        out *= _survival_power(_sin_sq_pi(i / (2 * outer)) * s_n, inner)
    return out


def cepi_success(inner: int, nabla0: float) -> float:
    """Superposed-absorber collapse success (1 - nabla0 sin^2 theta_N)^N * nabla0."""
    _validate_cycles(N=inner)
    _validate_weight("nabla0", nabla0)
    return _survival_power(nabla0 * _sin_sq_pi(1.0 / (2 * inner)), inner) * nabla0


def dcepi_success(inner: int, nabla1: float) -> float:
    """Dual-rail entangling collapse success; same functional form as cepi_success."""
    _validate_cycles(N=inner)
    _validate_weight("nabla1", nabla1)
    return _survival_power(nabla1 * _sin_sq_pi(1.0 / (2 * inner)), inner) * nabla1


def coherent_qz_success(inner: int, nabla: float) -> float:
    """Success probability of the same gate under the coherent absorber model.

    The branch-resolved calculation gives nabla * cos^(2N) theta_N, which
    converges to the per-cycle-Born value cepi_success(N, nabla) as N grows
    but differs at finite N.
    """
    _validate_cycles(N=inner)
    _validate_weight("nabla", nabla)
    return nabla * qz_survival(inner)


def dcfo_stage_success(chain: int, inner: int, nabla: float) -> float:
    """Per-stage success (1 - nabla cos^2 theta_K sin^2 theta_N)^N (1 - nabla sin^2 theta_K)."""
    _validate_cycles(K=chain, N=inner)
    _validate_weight("nabla", nabla)
    y = 1.0 / (2 * chain)
    first = _survival_power(nabla * _cos_sq_pi(y) * _sin_sq_pi(1.0 / (2 * inner)), inner)
    return first * (1.0 - nabla * _sin_sq_pi(y))


def dcfo_success(chain: int, inner: int, nabla: float) -> float:
    """Success of K concatenated collapse stages: dcfo_stage_success^K."""
    stage = dcfo_stage_success(chain, inner, nabla)
    if chain > _LOG_SPACE_THRESHOLD:
        return math.exp(chain * math.log(stage)) if stage > 0.0 else 0.0
    out = 1.0
    for _ in range(chain):
        out *= stage
    return out


def ddcfo_success(chain: int, inner: int, nabla4: float) -> float:
    """Dual-rail variant; the printed formula coincides with dcfo_success."""
    return dcfo_success(chain, inner, nabla4)


def _chained_factors(
    outer: int, inner: int, outer_weight: float, inner_weight: float, outer_cycles: int | None = None
) -> tuple[float, float]:
    """Outer-discard and inner-absorption survival factors of a chained stage.

    The rotation step stays pi/(2*outer) even when the stage runs
    ``outer_cycles`` != outer outer cycles (the doubled controlled-phase
    stage runs 2M cycles at the M-cycle step size).
    """
    cycles = outer if outer_cycles is None else outer_cycles
    outer_factor = _survival_power(outer_weight * _sin_sq_pi(1.0 / (2 * outer)), cycles)
    s_n = _sin_sq_pi(1.0 / (2 * inner))
    if cycles * inner > _LOG_SPACE_THRESHOLD:
        log_total = 0.0
        for i in range(1, cycles + 1):
            x = inner_weight * _sin_sq_pi(i / (2 * outer)) * s_n
            if x >= 1.0:
                return outer_factor, 0.0
            log_total += inner * math.log1p(-x)
        return outer_factor, math.exp(log_total)
    inner_factor = 1.0
    for i in range(1, cycles + 1):
        inner_factor *= _survival_power(inner_weight * _sin_sq_pi(i / (2 * outer)) * s_n, inner)
    return outer_factor, inner_factor


def chained_survival(
    outer: int, inner: int, outer_weight: float, inner_weight: float, outer_cycles: int | None = None
) -> float:
    """Product of both factors of a chained interferometer stage."""
    _validate_cycles(M=outer, N=inner)
    _validate_weight("outer_weight", outer_weight)
    _validate_weight("inner_weight", inner_weight)
    f_out, f_in = _chained_factors(outer, inner, outer_weight, inner_weight, outer_cycles)
    return f_out * f_in


@dataclass(frozen=True)
class StageProbabilities:
    """All derived stage probabilities of one configuration and input.

    Fields not defined for the protocol variant at hand stay None: the
    general protocol populates lambda2..lambda5, nabla7, nabla8 and the
    zeta_m pair; the Bell-type protocol populates lambda6, lambda7,
    nabla9, nabla10 and zeta.  lambda0/lambda1 depend on the cycle counts
    alone and are always filled.
    """

    lambda0: float
    lambda1: float
    lambda2: float | None = None
    lambda3: float | None = None
    lambda4: float | None = None
    lambda5: float | None = None
    lambda6: float | None = None
    lambda7: float | None = None
    nabla0: float | None = None
    nabla1: float | None = None
    nabla2: float | None = None
    nabla3: float | None = None
    nabla4: float | None = None
    nabla5: float | None = None
    nabla6: float | None = None
    nabla7: float | None = None
    nabla8: float | None = None
    nabla9: float | None = None
    nabla10: float | None = None
    zeta_m: tuple[float, float] | None = None
    zeta: float | None = None

    def __post_init__(self) -> None:
        for field in fields(self):
            value = getattr(self, field.name)
            if value is None:
                continue
            values = value if isinstance(value, tuple) else (value,)
            for v in values:
                if not 0.0 <= v <= 1.0:
                    raise ValueError(f"{field.name} must lie in [0, 1], got {v!r}")

    def populated(self) -> dict[str, float | tuple[float, float]]:
        return {
            field.name: getattr(self, field.name)
            for field in fields(self)
            if getattr(self, field.name) is not None
        }


def stage_probabilities_general(cfg: CycleConfig, inp: GeneralInput) -> StageProbabilities:
    """Evaluate every printed stage probability of the general protocol.

    The controlled-phase stage (lambda5) runs 2M outer cycles at the
    unchanged M-cycle step size and enters the abortion rate only for the
    outcome branch m=1: zeta_m = 1 - lambda2*lambda3*lambda4*lambda5^m.
    """
    a2, b2 = abs(inp.alpha) ** 2, abs(inp.beta) ** 2
    g2, d2 = abs(inp.gamma) ** 2, abs(inp.delta) ** 2
    half = inp.angles.theta / 2.0
    c2, s2 = math.cos(half) ** 2, math.sin(half) ** 2

    lam2 = chained_survival(cfg.M, cfg.N, a2 * d2, b2 * d2)
    lam3 = dcfo_success(cfg.K, cfg.N, d2 * s2)
    nabla7 = d2 * a2 * c2 + d2 * b2 * s2
    nabla8 = d2 * b2 * c2 + d2 * a2 * s2
    lam4 = chained_survival(cfg.M, cfg.N, nabla7, nabla8)
    lam5 = chained_survival(cfg.M, cfg.N, a2 * g2, b2 * g2, outer_cycles=2 * cfg.M)
    zeta0 = 1.0 - lam2 * lam3 * lam4
    zeta1 = 1.0 - lam2 * lam3 * lam4 * lam5
    return StageProbabilities(
        lambda0=cqz_lambda0(cfg.M),
        lambda1=cqz_lambda1(cfg.M, cfg.N),
        lambda2=lam2,
        lambda3=lam3,
        lambda4=lam4,
        lambda5=lam5,
        nabla7=nabla7,
        nabla8=nabla8,
        zeta_m=(zeta0, zeta1),
    )


def stage_probabilities_bell(cfg: CycleConfig, inp: BellInput) -> StageProbabilities:
    """Evaluate the printed Bell-type stage probabilities.

    The blocking weight is the squared coefficient of the component Bob's
    photon can be absorbed from: |c1|^2 for class 0, |c0|^2 for class 1.
    Class 1 puts nabla9 on the outer factor and nabla10 on the inner one;
    class 0 swaps them.
    """
    nab = abs(inp.c1) ** 2 if inp.ell == 0 else abs(inp.c0) ** 2
    half = inp.angles.theta / 2.0
    nabla9 = nab * math.cos(half) ** 2
    nabla10 = nab * math.sin(half) ** 2

    lam6 = dcfo_success(cfg.K, cfg.N, nab * math.sin(half) ** 2)
    if inp.ell == 1:
        lam7 = chained_survival(cfg.M, cfg.N, nabla9, nabla10)
    else:
        lam7 = chained_survival(cfg.M, cfg.N, nabla10, nabla9)
    return StageProbabilities(
        lambda0=cqz_lambda0(cfg.M),
        lambda1=cqz_lambda1(cfg.M, cfg.N),
        lambda6=lam6,
        lambda7=lam7,
        nabla9=nabla9,
        nabla10=nabla10,
        zeta=1.0 - lam6 * lam7,
    )


class AbsorberModel(Enum):
    """How absorption events are sampled along a trajectory."""

    COHERENT = "coherent"
    PER_CYCLE_BORN = "per_cycle_born"


class OutcomeKind(Enum):
    SUCCESS = "success"
    ABSORBED_BY_ELECTRON = "absorbed_by_electron"
    DISCARDED_AT_DETECTOR = "discarded_at_detector"


@dataclass(frozen=True)
class TrajectoryOutcome:
    """Result of one simulated gate traversal.

    ``final_state`` lives on (absorber, photon polarization) with basis
    order absorber {|0>=absence, |1>=presence} and photon {|0>=H, |1>=V}.
    For Success it is the delivered joint state; for an absorption at the
    exit port it records the state diverted into the absorber.
    ``photon_entered_channel`` is True exactly when an absorption event
    fired, so Success trajectories always carry False.
    """

    kind: OutcomeKind
    stage: str
    cycle_index: int
    final_state: StateVector | None
    photon_entered_channel: bool

    def __post_init__(self) -> None:
        if self.kind is OutcomeKind.SUCCESS:
            if self.final_state is None or not self.final_state.is_normalized(1e-9):
                raise ValueError("Success outcomes must carry a normalized final state")
            if self.photon_entered_channel:
                raise ValueError("Success outcomes cannot have touched the channel")


_POL_INDEX = {"H": 0, "V": 1}


def _validate_absorber(absorber: tuple[complex, complex]) -> tuple[complex, complex]:
    a, b = complex(absorber[0]), complex(absorber[1])
    total = abs(a) ** 2 + abs(b) ** 2
    if abs(total - 1.0) > 1e-12:
        raise ValueError(f"absorber amplitudes must be normalized, got |a|^2+|b|^2 = {total!r}")
    return a, b


def _joint_state(presence: bool, pol_index: int) -> StateVector:
    return StateVector.basis((2, 2), (1 if presence else 0, pol_index))


def simulate_qz(
    absorber: tuple[complex, complex],
    polarization: str,
    inner: int,
    model: AbsorberModel,
    rng: np.random.Generator,
) -> TrajectoryOutcome:
    """One traversal of the single-interferometer gate with its exit port.

    ``absorber`` is (presence amplitude, absence amplitude).  The photon
    enters with the gate's design polarization; per cycle it is rotated by
    pi/(2N) and the channel component may be absorbed by the presence
    branch.  At the exit the polarizing splitter measures the photon: the
    design polarization exits as Success (collapsing the absorber onto
    presence); the orthogonal output is non-counterfactual and is diverted
    into the absorber, recorded as an exit absorption with the pre-discard
    state attached.  A pure-absence absorber therefore shows a
    deterministic polarization flip and never yields Success.
    """
    a, b = _validate_absorber(absorber)
    if polarization not in _POL_INDEX:
        raise ValueError(f"polarization must be 'H' or 'V', got {polarization!r}")
    _validate_cycles(N=inner)
    pol0 = _POL_INDEX[polarization]
    pol1 = 1 - pol0

    if model is AbsorberModel.PER_CYCLE_BORN:
        weight = abs(a) ** 2
        p_cycle = weight * _sin_sq_pi(1.0 / (2 * inner))
        draws = rng.random(inner)
        for index, u in enumerate(draws, start=1):
            if u < p_cycle:
                return TrajectoryOutcome(
                    OutcomeKind.ABSORBED_BY_ELECTRON, "qz:channel", index, None, True
                )
        if rng.random() < weight:
            return TrajectoryOutcome(
                OutcomeKind.SUCCESS, "qz:exit", inner, _joint_state(True, pol0), False
            )
        return TrajectoryOutcome(
            OutcomeKind.ABSORBED_BY_ELECTRON, "qz:exit", inner, _joint_state(False, pol1), True
        )

    # Coherent model: joint amplitudes indexed (absence/presence, design/channel pol).
    amps = np.zeros((2, 2), dtype=np.complex128)
    amps[0, 0] = b
    amps[1, 0] = a
    cos_t = math.cos(math.pi / (2 * inner))
    sin_t = math.sin(math.pi / (2 * inner))
    for index in range(1, inner + 1):
        rotated = amps.copy()
        rotated[:, 0] = cos_t * amps[:, 0] - sin_t * amps[:, 1]
        rotated[:, 1] = sin_t * amps[:, 0] + cos_t * amps[:, 1]
        amps = rotated
        p_absorb = abs(amps[1, 1]) ** 2
        if rng.random() < p_absorb:
            return TrajectoryOutcome(
                OutcomeKind.ABSORBED_BY_ELECTRON, "qz:channel", index, None, True
            )
        amps[1, 1] = 0.0
        amps /= math.sqrt(1.0 - p_absorb)
    # Exit splitter: measure the photon in the gate frame.
    p_design = float(abs(amps[0, 0]) ** 2 + abs(amps[1, 0]) ** 2)
    exits_design = rng.random() < p_design
    column = 0 if exits_design else 1
    collapsed = np.zeros((2, 2), dtype=np.complex128)
    collapsed[:, column] = amps[:, column]
    norm = np.linalg.norm(collapsed)
    final = np.zeros((2, 2), dtype=np.complex128)
    final[:, pol0 if exits_design else pol1] = collapsed[:, column] / norm
    final_state = StateVector((2, 2), final.reshape(-1))
    if exits_design:
        return TrajectoryOutcome(OutcomeKind.SUCCESS, "qz:exit", inner, final_state, False)
    return TrajectoryOutcome(OutcomeKind.ABSORBED_BY_ELECTRON, "qz:exit", inner, final_state, True)


def simulate_cqz(
    absorber: tuple[complex, complex],
    polarization: str,
    outer: int,
    inner: int,
    model: AbsorberModel,
    rng: np.random.Generator,
) -> TrajectoryOutcome:
    """One traversal of the chained gate: M outer cycles nesting an N-cycle gate.

    An absent blocker makes the inner gate route the channel component to
    the detector (discard path); a present blocker makes it a mirror, so
    the polarization rotation accumulates and the photon exits flipped,
    with the blocked branch carrying the -1 phase of the quarter-turn
    rotation.  Both exit branches are counterfactual, so survival yields
    Success for either absorber state; ``cycle_index`` counts outer cycles.
    """
    a, b = _validate_absorber(absorber)
    if polarization not in _POL_INDEX:
        raise ValueError(f"polarization must be 'H' or 'V', got {polarization!r}")
    _validate_cycles(M=outer, N=inner)
    pol0 = _POL_INDEX[polarization]
    pol1 = 1 - pol0

    if model is AbsorberModel.PER_CYCLE_BORN:
        weight = abs(a) ** 2
        s_n = _sin_sq_pi(1.0 / (2 * inner))
        p_detector = (1.0 - weight) * _sin_sq_pi(1.0 / (2 * outer))
        for i in range(1, outer + 1):
            p_absorb = weight * _sin_sq_pi(i / (2 * outer)) * s_n
            draws = rng.random(inner)
            if np.any(draws < p_absorb):
                return TrajectoryOutcome(
                    OutcomeKind.ABSORBED_BY_ELECTRON, "cqz:channel", i, None, True
                )
            if rng.random() < p_detector:
                return TrajectoryOutcome(
                    OutcomeKind.DISCARDED_AT_DETECTOR, "cqz:detector", i, None, False
                )
        if rng.random() < weight:
            final = _joint_state(True, pol1)
        else:
            final = _joint_state(False, pol0)
        return TrajectoryOutcome(OutcomeKind.SUCCESS, "cqz:exit", outer, final, False)

    # Coherent model, gate frame: photon columns (design pol, channel pol).
    amps = np.zeros((2, 2), dtype=np.complex128)
    amps[0, 0] = b
    amps[1, 0] = a
    cos_m = math.cos(math.pi / (2 * outer))
    sin_m = math.sin(math.pi / (2 * outer))
    cos_n = math.cos(math.pi / (2 * inner))
    sin_n = math.sin(math.pi / (2 * inner))
    for i in range(1, outer + 1):
        rotated = amps.copy()
        rotated[:, 0] = cos_m * amps[:, 0] - sin_m * amps[:, 1]
        rotated[:, 1] = sin_m * amps[:, 0] + cos_m * amps[:, 1]
        amps = rotated
        # Channel components enter the inner gate; its own channel is the
        # outer design polarization, read by the detector on exit.
        inner_design = amps[:, 1].copy()
        inner_channel = np.zeros(2, dtype=np.complex128)
        for _ in range(inner):
            new_design = cos_n * inner_design - sin_n * inner_channel
            new_channel = sin_n * inner_design + cos_n * inner_channel
            inner_design, inner_channel = new_design, new_channel
            p_absorb = abs(inner_channel[1]) ** 2
            if rng.random() < p_absorb:
                return TrajectoryOutcome(
                    OutcomeKind.ABSORBED_BY_ELECTRON, "cqz:channel", i, None, True
                )
            inner_channel[1] = 0.0
            scale = math.sqrt(1.0 - p_absorb)
            inner_design /= scale
            inner_channel /= scale
            amps[:, 0] /= scale
        p_detector = float(abs(inner_channel[0]) ** 2)
        if rng.random() < p_detector:
            return TrajectoryOutcome(
                OutcomeKind.DISCARDED_AT_DETECTOR, "cqz:detector", i, None, False
            )
        inner_channel[0] = 0.0
        scale = math.sqrt(1.0 - p_detector)
        amps[:, 0] /= scale
        amps[:, 1] = inner_design / scale
    # Map the gate frame back onto (H, V) and deliver the coherent exit state.
    final = np.zeros((2, 2), dtype=np.complex128)
    final[:, pol0] = amps[:, 0]
    final[:, pol1] = amps[:, 1]
    return TrajectoryOutcome(
        OutcomeKind.SUCCESS, "cqz:exit", outer, StateVector((2, 2), final.reshape(-1)), False
    )


@dataclass(frozen=True)
class MonteCarloReport:
    """Aggregate statistics of a seeded trajectory campaign."""

    trials: int
    successes: int
    absorbed: int
    discarded: int
    abort_rate_estimate: float
    standard_error: float
    conditional_fidelity: float | None
    seed: int

    def __post_init__(self) -> None:
        if self.successes + self.absorbed + self.discarded != self.trials:
            raise ValueError("outcome counts must sum to the number of trials")

    def as_dict(self) -> dict:
        return {
            "trials": self.trials,
            "successes": self.successes,
            "absorbed": self.absorbed,
            "discarded": self.discarded,
            "abort_rate_estimate": self.abort_rate_estimate,
            "standard_error": self.standard_error,
            "conditional_fidelity": self.conditional_fidelity,
            "seed": self.seed,
        }


def _report(trials: int, successes: int, absorbed: int, discarded: int, fid: float | None, seed: int) -> MonteCarloReport:
    abort = 1.0 - successes / trials
    return MonteCarloReport(
        trials=trials,
        successes=successes,
        absorbed=absorbed,
        discarded=discarded,
        abort_rate_estimate=abort,
        standard_error=math.sqrt(abort * (1.0 - abort) / trials),
        conditional_fidelity=fid,
        seed=seed,
    )


def _trial_rng(seed: int, index: int) -> np.random.Generator:
    # Independent, reproducible per-trial stream from (master seed, index).
    return np.random.default_rng([seed, index])


def gate_statistics(
    gate: str,
    absorber: tuple[complex, complex],
    polarization: str,
    inner: int,
    model: AbsorberModel,
    trials: int,
    seed: int,
    outer: int | None = None,
    expected_success_state: StateVector | None = None,
) -> MonteCarloReport:
    """Seeded trajectory campaign over one gate ('qz' or 'cqz').

    ``outer`` is required for the chained gate.  Every Success trajectory
    is asserted never to have touched the channel.
    ``conditional_fidelity`` averages the Success final states against
    ``expected_success_state`` when one is supplied.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if gate not in ("qz", "cqz"):
        raise ValueError(f"gate must be 'qz' or 'cqz', got {gate!r}")
    if gate == "cqz" and outer is None:
        raise ValueError("the chained gate needs an outer cycle count")
    successes = absorbed = discarded = 0
    fid_total = 0.0
    for index in range(trials):
        rng = _trial_rng(seed, index)
        if gate == "qz":
            outcome = simulate_qz(absorber, polarization, inner, model, rng)
        else:
            outcome = simulate_cqz(absorber, polarization, outer, inner, model, rng)
        if outcome.kind is OutcomeKind.SUCCESS:
            if outcome.photon_entered_channel:
                raise RuntimeError("counterfactuality bookkeeping violated: Success touched the channel")
            successes += 1
            if expected_success_state is not None:
                fid_total += fidelity(outcome.final_state, expected_success_state)
        elif outcome.kind is OutcomeKind.ABSORBED_BY_ELECTRON:
            absorbed += 1
        else:
            discarded += 1
    fid = None
    if expected_success_state is not None and successes:
        fid = fid_total / successes
    return _report(trials, successes, absorbed, discarded, fid, seed)


def simulate_cct(
    cfg: CycleConfig,
    inp: GeneralInput | BellInput,
    trials: int,
    seed: int,
) -> MonteCarloReport:
    """Stage-composed Monte Carlo of a full protocol run.

    Per trial, each counterfactual stage succeeds with its printed
    probability; the first failure aborts the trial, classified as a
    detector discard (outer factors) or an electron absorption (inner
    factors and the collapse-chain stages).  Successful trials deliver the
    exact logical output, so the conditional fidelity against the closed
    form is 1 by construction; it is still measured, not asserted.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")

    if isinstance(inp, GeneralInput):
        probs = stage_probabilities_general(cfg, inp)
        a2, b2 = abs(inp.alpha) ** 2, abs(inp.beta) ** 2
        g2, d2 = abs(inp.gamma) ** 2, abs(inp.delta) ** 2
        lam2 = _chained_factors(cfg.M, cfg.N, a2 * d2, b2 * d2)
        lam4 = _chained_factors(cfg.M, cfg.N, probs.nabla7, probs.nabla8)
        lam5 = _chained_factors(cfg.M, cfg.N, a2 * g2, b2 * g2, outer_cycles=2 * cfg.M)
        base_stages = [
            ("toffoli", lam2[0], lam2[1]),
            ("flip-chain", 1.0, probs.lambda3),
            ("flip-pair", lam4[0], lam4[1]),
        ]
        phase_stage = ("controlled-z", lam5[0], lam5[1])
        weights = _protocol.measurement_weights(inp)
        p0 = float(weights[0] / (weights[0] + weights[1]))
        branch_fidelity = {
            m: fidelity(
                _protocol.run_general_for_outcome(inp, m).psi6m,
                _protocol.expected_output_general(inp, m),
            )
            for m in (0, 1)
        }
    else:
        probs = stage_probabilities_bell(cfg, inp)
        if inp.ell == 1:
            lam7 = _chained_factors(cfg.M, cfg.N, probs.nabla9, probs.nabla10)
        else:
            lam7 = _chained_factors(cfg.M, cfg.N, probs.nabla10, probs.nabla9)
        base_stages = [
            ("flip-chain", 1.0, probs.lambda6),
            ("controlled-z", lam7[0], lam7[1]),
        ]
        phase_stage = None
        p0 = None
        bell_fidelity = fidelity(_protocol.run_bell(inp).psi6m, _protocol.expected_output_bell(inp))

    successes = absorbed = discarded = 0
    fid_total = 0.0
    for index in range(trials):
        rng = _trial_rng(seed, index)
        stages = list(base_stages)
        if p0 is not None:
            m = 0 if rng.random() < p0 else 1
            if m == 1:
                stages.append(phase_stage)
        aborted = False
        for _, f_discard, f_absorb in stages:
            if rng.random() >= f_discard:
                discarded += 1
                aborted = True
                break
            if rng.random() >= f_absorb:
                absorbed += 1
                aborted = True
                break
        if aborted:
            continue
        successes += 1
        fid_total += branch_fidelity[m] if p0 is not None else bell_fidelity
    fid = fid_total / successes if successes else None
    return _report(trials, successes, absorbed, discarded, fid, seed)
