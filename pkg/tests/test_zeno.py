from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cctsim import protocol, zeno
from cctsim.gates import EulerAngles
from cctsim.hilbert import StateVector, fidelity
from cctsim.protocol import BellInput, GeneralInput
from cctsim.zeno import (
    AbsorberModel,
    CycleConfig,
    MonteCarloReport,
    OutcomeKind,
    TrajectoryOutcome,
    cepi_success,
    chained_survival,
    coherent_qz_success,
    cqz_lambda0,
    cqz_lambda1,
    dcepi_success,
    dcfo_stage_success,
    dcfo_success,
    ddcfo_success,
    gate_statistics,
    qz_survival,
    simulate_cct,
    simulate_cqz,
    simulate_qz,
    stage_probabilities_bell,
    stage_probabilities_general,
)

ROOT_HALF = 1.0 / math.sqrt(2.0)
BALANCED = GeneralInput(ROOT_HALF, ROOT_HALF, ROOT_HALF, ROOT_HALF, EulerAngles(0.3, math.pi / 2, 0.7))


class TestCycleConfig:
    def test_angles(self):
        cfg = CycleConfig(2, 4, 8)
        assert cfg.theta_m == math.pi / 4
        assert cfg.theta_n == math.pi / 8
        assert cfg.theta_k == math.pi / 16

    @pytest.mark.parametrize("bad", [(0, 1, 1), (1, -2, 1), (1, 1, 0)])
    def test_rejects_nonpositive_counts(self, bad):
        with pytest.raises(ValueError):
            CycleConfig(*bad)


class TestSurvivalFormulas:
    def test_qz_survival_pins(self):
        assert qz_survival(1) == 0.0
        assert qz_survival(2) == 0.25

    def test_qz_survival_monotone_and_high_at_200(self):
        values = [qz_survival(n) for n in range(2, 201)]
        assert all(b >= a for a, b in zip(values, values[1:]))
        assert values[-1] > 0.97

    def test_lambda0_pins_and_limit(self):
        assert cqz_lambda0(1) == 0.0
        assert cqz_lambda0(2) == 0.25
        assert cqz_lambda0(1_000) > 0.997

    def test_lambda1_pins(self):
        assert cqz_lambda1(1, 1) == 0.0
        assert cqz_lambda1(2, 2) == 9.0 / 64.0

    def test_lambda1_rational_oracle(self):
        # Quarter-turn squared sines are exactly 1/2 and 1, so the two-cycle
        # product is (1 - 1/2 * 1/2)^2 * (1 - 1 * 1/2)^2 = 9/64.
        oracle = (1 - Fraction(1, 2) * Fraction(1, 2)) ** 2 * (1 - Fraction(1, 1) * Fraction(1, 2)) ** 2
        assert oracle == Fraction(9, 64)
        assert cqz_lambda1(2, 2) == float(oracle)

    def test_lambda1_grows_along_the_diagonal(self):
        # The printed product sits near exp(-pi^2/8) ~ 0.29 for equal cycle
        # counts; it climbs toward that value, not toward 1, on this scan.
        ten = cqz_lambda1(10, 10)
        twenty_five = cqz_lambda1(25, 25)
        assert twenty_five > ten
        independent = 1.0
        for i in range(1, 26):
            independent *= (1.0 - math.sin(i * math.pi / 50) ** 2 * math.sin(math.pi / 50) ** 2) ** 25
        assert twenty_five == pytest.approx(independent, abs=1e-12)
        assert 0.2 < twenty_five < 0.4

    def test_cepi_pins(self):
        assert cepi_success(5, 0.0) == 0.0
        assert cepi_success(7, 1.0) == qz_survival(7)
        assert cepi_success(2, 0.5) == 0.28125

    def test_dcepi_matches_functional_form(self):
        assert dcepi_success(4, 0.0) == 0.0
        assert dcepi_success(4, 1.0) == qz_survival(4)
        # Orthogonal pairing (alpha=delta=1, beta=gamma=0) zeroes the weight.
        assert dcepi_success(6, abs(1.0 * 0.0) ** 2 + abs(0.0 * 1.0) ** 2) == 0.0

    def test_weight_validation(self):
        with pytest.raises(ValueError):
            cepi_success(3, 1.5)
        with pytest.raises(ValueError):
            dcfo_success(3, 3, -0.1)
        with pytest.raises(ValueError):
            qz_survival(0)


class TestFlipChainFormulas:
    def test_zero_weight_is_certain(self):
        assert dcfo_success(5, 5, 0.0) == 1.0

    def test_single_stage_reduces_to_complement(self):
        # K=1 puts the rotation at a quarter turn: cos^2 = 0 kills the first
        # factor's exponent and the second factor is exactly 1 - weight.
        for weight in (0.0, 0.25, 0.5, 1.0):
            assert dcfo_success(1, 7, weight) == 1.0 - weight

    def test_stage_success_monotone_in_chain_length(self):
        assert dcfo_stage_success(40, 10, 0.5) > dcfo_stage_success(10, 10, 0.5)

    def test_dual_variant_identical(self, rng):
        for _ in range(50):
            chain = int(rng.integers(1, 40))
            inner = int(rng.integers(1, 40))
            weight = float(rng.uniform(0.0, 1.0))
            assert ddcfo_success(chain, inner, weight) == dcfo_success(chain, inner, weight)

    def test_full_weight_two_cycle_rational_oracle(self):
        # nabla = 1, K = N = 2: stage = (1 - 1/2 * 1/2)^2 * (1 - 1/2) = 9/32,
        # and the two-stage chain squares it to 81/1024.
        stage = (1 - Fraction(1, 2) * Fraction(1, 2)) ** 2 * (1 - Fraction(1, 2))
        assert stage == Fraction(9, 32)
        assert dcfo_stage_success(2, 2, 1.0) == float(stage)
        assert ddcfo_success(2, 2, 1.0) == float(stage**2)
        assert float(stage**2) == 81.0 / 1024.0


class TestChainedSurvival:
    def test_degenerate_weights_reduce_to_gate_formulas(self):
        for outer, inner in ((2, 2), (5, 3), (8, 13)):
            assert chained_survival(outer, inner, 1.0, 0.0) == cqz_lambda0(outer)
            assert chained_survival(outer, inner, 0.0, 1.0) == cqz_lambda1(outer, inner)

    def test_log_space_path_matches_direct(self):
        # Same stage evaluated just under and far over the log-space switch.
        direct = chained_survival(60, 60, 0.2, 0.3)
        assert 0.0 < direct < 1.0
        big = chained_survival(600, 600, 0.2, 0.3)
        assert 0.0 < big < 1.0
        # The two routes agree where both are usable.
        s_n = math.sin(math.pi / 120) ** 2
        log_total = 60 * math.log1p(-0.2 * math.sin(math.pi / 120) ** 2)
        for i in range(1, 61):
            log_total += 60 * math.log1p(-0.3 * math.sin(i * math.pi / 120) ** 2 * s_n)
        assert direct == pytest.approx(math.exp(log_total), rel=1e-10)


class TestStageProbabilitiesGeneral:
    def test_inert_control_aborts_never(self):
        inp = GeneralInput(0.6, 0.8, 1.0, 0.0, EulerAngles(0.4, 1.1, 2.0))
        probs = stage_probabilities_general(CycleConfig(4, 4, 4), inp)
        assert probs.lambda2 == 1.0
        assert probs.lambda3 == 1.0
        assert probs.lambda4 == 1.0
        assert probs.zeta_m[0] == 0.0

    def test_zeta_identities_hold_bitwise(self):
        probs = stage_probabilities_general(CycleConfig(7, 9, 11), BALANCED)
        product = probs.lambda2 * probs.lambda3 * probs.lambda4
        assert probs.zeta_m == (1.0 - product, 1.0 - product * probs.lambda5)

    def test_zeta0_never_exceeds_zeta1(self, rng):
        for _ in range(30):
            inp = protocol.random_general_input(rng)
            cfg = CycleConfig(int(rng.integers(1, 30)), int(rng.integers(1, 30)), int(rng.integers(1, 30)))
            probs = stage_probabilities_general(cfg, inp)
            assert probs.zeta_m[0] <= probs.zeta_m[1]

    def test_diagonal_scan_decreases(self):
        smaller = stage_probabilities_general(CycleConfig(50, 50, 50), BALANCED)
        larger = stage_probabilities_general(CycleConfig(25, 25, 25), BALANCED)
        assert smaller.zeta_m[0] < larger.zeta_m[0]

    def test_populated_fields(self):
        probs = stage_probabilities_general(CycleConfig(3, 3, 3), BALANCED)
        keys = set(probs.populated())
        assert {"lambda0", "lambda1", "lambda2", "lambda3", "lambda4", "lambda5", "nabla7", "nabla8", "zeta_m"} <= keys
        assert probs.lambda6 is None
        assert probs.zeta is None


class TestStageProbabilitiesBell:
    def test_flat_rotation_keeps_chain_certain(self):
        inp = BellInput(0, 1, 0.6, 0.8, EulerAngles(0.5, 0.0, 1.0))
        probs = stage_probabilities_bell(CycleConfig(5, 5, 5), inp)
        assert probs.lambda6 == 1.0

    def test_zero_weight_class_never_aborts(self):
        # Class 0 blocks on |c1|^2; class 1 on |c0|^2.
        zero_cls0 = stage_probabilities_bell(CycleConfig(4, 4, 4), BellInput(0, 1, 1.0, 0.0, EulerAngles(0.3, 1.2, 0.5)))
        assert (zero_cls0.lambda6, zero_cls0.lambda7, zero_cls0.zeta) == (1.0, 1.0, 0.0)
        zero_cls1 = stage_probabilities_bell(CycleConfig(4, 4, 4), BellInput(1, -1, 0.0, 1.0, EulerAngles(0.3, 1.2, 0.5)))
        assert (zero_cls1.lambda6, zero_cls1.lambda7, zero_cls1.zeta) == (1.0, 1.0, 0.0)

    def test_half_turn_moves_weight_to_inner_product(self):
        # theta = pi zeroes nabla9, so the outer factor is 1 and the inner
        # product carries the whole class weight.
        inp = BellInput(1, 1, 0.6, 0.8, EulerAngles(0.0, math.pi, 0.0))
        cfg = CycleConfig(6, 6, 6)
        probs = stage_probabilities_bell(cfg, inp)
        weight = 0.36
        assert probs.nabla9 == pytest.approx(0.0, abs=1e-30)
        assert probs.nabla10 == pytest.approx(weight, abs=1e-15)
        assert probs.lambda7 == pytest.approx(chained_survival(6, 6, 0.0, weight), abs=1e-15)

    def test_class_swap_of_weights(self):
        angles = EulerAngles(0.0, 1.0, 0.0)
        cfg = CycleConfig(5, 7, 3)
        one_class = stage_probabilities_bell(cfg, BellInput(1, 1, 0.6, 0.8, angles))
        zero_class = stage_probabilities_bell(cfg, BellInput(0, 1, 0.8, 0.6, angles))
        # Same blocking weight (0.36) lands on swapped factors.
        assert one_class.lambda7 == chained_survival(5, 7, one_class.nabla9, one_class.nabla10)
        assert zero_class.lambda7 == chained_survival(5, 7, zero_class.nabla10, zero_class.nabla9)

    def test_zeta_identity(self):
        inp = BellInput(1, -1, 0.6, 0.8, EulerAngles(0.1, 2.0, 0.9))
        probs = stage_probabilities_bell(CycleConfig(9, 4, 6), inp)
        assert probs.zeta == 1.0 - probs.lambda6 * probs.lambda7


@settings(max_examples=60, deadline=None)
@given(
    outer=st.integers(1, 50),
    inner=st.integers(1, 50),
    chain=st.integers(1, 50),
    w1=st.floats(0.0, 1.0),
    w2=st.floats(0.0, 1.0),
)
def test_analytic_outputs_stay_in_unit_interval(outer, inner, chain, w1, w2):
    values = [
        qz_survival(inner),
        cqz_lambda0(outer),
        cqz_lambda1(outer, inner),
        cepi_success(inner, w1),
        dcepi_success(inner, w2),
        dcfo_stage_success(chain, inner, w1),
        dcfo_success(chain, inner, w2),
        chained_survival(outer, inner, w1, w2),
        coherent_qz_success(inner, w1),
    ]
    for value in values:
        assert 0.0 <= value <= 1.0


@settings(max_examples=40, deadline=None)
@given(
    outer=st.integers(1, 25),
    inner=st.integers(1, 25),
    chain=st.integers(1, 25),
    wa=st.floats(0.0, 1.0),
    wb=st.floats(0.0, 1.0),
    phi=st.floats(-6, 6),
    theta=st.floats(-6, 6),
    varphi=st.floats(-6, 6),
)
def test_stage_probabilities_stay_in_unit_interval(outer, inner, chain, wa, wb, phi, theta, varphi):
    inp = GeneralInput(
        math.sqrt(wa), math.sqrt(1 - wa), math.sqrt(wb), math.sqrt(1 - wb), EulerAngles(phi, theta, varphi)
    )
    probs = stage_probabilities_general(CycleConfig(outer, inner, chain), inp)
    for value in (probs.lambda2, probs.lambda3, probs.lambda4, probs.lambda5, *probs.zeta_m):
        assert 0.0 <= value <= 1.0
    binp = BellInput(0, 1, math.sqrt(wa), math.sqrt(1 - wa), EulerAngles(phi, theta, varphi))
    bprobs = stage_probabilities_bell(CycleConfig(outer, inner, chain), binp)
    for value in (bprobs.lambda6, bprobs.lambda7, bprobs.zeta):
        assert 0.0 <= value <= 1.0


class TestTrajectoryOutcome:
    def test_success_requires_clean_channel(self):
        state = StateVector.basis((2, 2), (1, 0))
        with pytest.raises(ValueError):
            TrajectoryOutcome(OutcomeKind.SUCCESS, "qz:exit", 1, state, True)

    def test_success_requires_final_state(self):
        with pytest.raises(ValueError):
            TrajectoryOutcome(OutcomeKind.SUCCESS, "qz:exit", 1, None, False)


class TestSimulateQz:
    def test_pure_presence_rate_and_polarization(self):
        inner, trials = 4, 30_000
        expected = qz_survival(inner)
        report = gate_statistics(
            "qz", (1.0, 0.0), "H", inner, AbsorberModel.PER_CYCLE_BORN, trials, 5,
            expected_success_state=StateVector.basis((2, 2), (1, 0)),
        )
        se = math.sqrt(expected * (1 - expected) / trials)
        assert abs(report.successes / trials - expected) < 4 * se
        assert report.conditional_fidelity == pytest.approx(1.0, abs=1e-12)

    def test_pure_absence_flips_deterministically(self):
        for index in range(300):
            rng = np.random.default_rng([17, index])
            outcome = simulate_qz((0.0, 1.0), "H", 6, AbsorberModel.PER_CYCLE_BORN, rng)
            assert outcome.kind is OutcomeKind.ABSORBED_BY_ELECTRON
            assert outcome.photon_entered_channel
            assert outcome.stage == "qz:exit"
            # The recorded exit state shows the flip onto V before the discard.
            assert abs(outcome.final_state.amplitude((0, 1))) == pytest.approx(1.0, abs=1e-12)

    def test_balanced_absorber_matches_collapse_formula(self):
        trials = 60_000
        expected = cepi_success(2, 0.5)
        report = gate_statistics("qz", (ROOT_HALF, ROOT_HALF), "H", 2, AbsorberModel.PER_CYCLE_BORN, trials, 23)
        se = math.sqrt(expected * (1 - expected) / trials)
        assert abs(report.successes / trials - expected) < 4 * se

    def test_coherent_model_matches_its_own_formula(self):
        trials = 30_000
        inner = 6
        expected = coherent_qz_success(inner, 0.5)
        report = gate_statistics("qz", (ROOT_HALF, ROOT_HALF), "H", inner, AbsorberModel.COHERENT, trials, 29)
        se = math.sqrt(expected * (1 - expected) / trials)
        assert abs(report.successes / trials - expected) < 4 * se

    def test_v_gate_frame(self, rng):
        outcome = simulate_qz((1.0, 0.0), "V", 200, AbsorberModel.COHERENT, rng)
        if outcome.kind is OutcomeKind.SUCCESS:
            # Design polarization for the V gate is V itself.
            assert abs(outcome.final_state.amplitude((1, 1))) == pytest.approx(1.0, abs=1e-9)

    def test_validation(self, rng):
        with pytest.raises(ValueError):
            simulate_qz((1.0, 1.0), "H", 3, AbsorberModel.COHERENT, rng)
        with pytest.raises(ValueError):
            simulate_qz((1.0, 0.0), "D", 3, AbsorberModel.COHERENT, rng)
        with pytest.raises(ValueError):
            simulate_qz((1.0, 0.0), "H", 0, AbsorberModel.COHERENT, rng)


def _coherent_cqz_oracle(outer: int, inner: int):
    """Deterministic amplitude recursion: survival probability and exit state
    for a pure-presence absorber, tracked independently of the simulator."""
    h, v = 1.0, 0.0
    survival = 1.0
    cos_m, sin_m = math.cos(math.pi / (2 * outer)), math.sin(math.pi / (2 * outer))
    cos_n = math.cos(math.pi / (2 * inner))
    for _ in range(outer):
        h, v = cos_m * h - sin_m * v, sin_m * h + cos_m * v
        # Inner gate: the presence branch keeps cos^N of the amplitude, the
        # rest is absorption weight.
        kept = v * cos_n**inner
        survival *= 1.0 - (v * v - kept * kept)
        scale = math.sqrt(1.0 - (v * v - kept * kept))
        h, v = h / scale, kept / scale
    return survival, (h, v)


class TestSimulateCqz:
    def test_absence_rate_and_polarization(self):
        outer, inner, trials = 5, 5, 30_000
        expected = cqz_lambda0(outer)
        report = gate_statistics(
            "cqz", (0.0, 1.0), "H", inner, AbsorberModel.PER_CYCLE_BORN, trials, 31, outer=outer,
            expected_success_state=StateVector.basis((2, 2), (0, 0)),
        )
        se = math.sqrt(expected * (1 - expected) / trials)
        assert abs(report.successes / trials - expected) < 4 * se
        assert report.conditional_fidelity == pytest.approx(1.0, abs=1e-12)
        assert report.absorbed == 0  # nothing to absorb without a blocker

    def test_presence_rate_and_flip(self):
        outer, inner, trials = 5, 5, 30_000
        expected = cqz_lambda1(outer, inner)
        report = gate_statistics(
            "cqz", (1.0, 0.0), "H", inner, AbsorberModel.PER_CYCLE_BORN, trials, 37, outer=outer,
            expected_success_state=StateVector.basis((2, 2), (1, 1)),
        )
        se = math.sqrt(expected * (1 - expected) / trials)
        assert abs(report.successes / trials - expected) < 4 * se
        assert report.conditional_fidelity == pytest.approx(1.0, abs=1e-12)
        assert report.discarded == 0  # the inner gate mirrors, nothing reaches the detector

    def test_single_cycle_presence_never_succeeds(self):
        for index in range(200):
            rng = np.random.default_rng([41, index])
            outcome = simulate_cqz((1.0, 0.0), "H", 1, 1, AbsorberModel.PER_CYCLE_BORN, rng)
            assert outcome.kind is not OutcomeKind.SUCCESS

    def test_coherent_presence_matches_amplitude_recursion(self):
        outer = inner = 4
        survival, (h, v) = _coherent_cqz_oracle(outer, inner)
        trials = 30_000
        expected_state = StateVector((2, 2), [0.0, 0.0, h, v])  # presence row
        report = gate_statistics(
            "cqz", (1.0, 0.0), "H", inner, AbsorberModel.COHERENT, trials, 43, outer=outer,
            expected_success_state=expected_state.normalized(),
        )
        se = math.sqrt(survival * (1 - survival) / trials)
        assert abs(report.successes / trials - survival) < 4 * se
        # Conditioned on survival the coherent exit state is deterministic.
        assert report.conditional_fidelity == pytest.approx(1.0, abs=1e-9)


class TestSimulateCct:
    def test_bell_zero_weight_never_aborts(self):
        inp = BellInput(0, 1, 1.0, 0.0, EulerAngles(0.7, 1.9, 0.2))
        report = simulate_cct(CycleConfig(3, 3, 3), inp, 2_000, 51)
        assert report.successes == report.trials
        assert report.abort_rate_estimate == 0.0
        assert report.conditional_fidelity == pytest.approx(1.0, abs=1e-10)

    def test_general_abort_rate_matches_mean_zeta(self):
        cfg = CycleConfig(25, 25, 25)
        trials = 40_000
        report = simulate_cct(cfg, BALANCED, trials, 53)
        probs = stage_probabilities_general(cfg, BALANCED)
        expected = (probs.zeta_m[0] + probs.zeta_m[1]) / 2.0
        se = math.sqrt(expected * (1 - expected) / trials)
        assert abs(report.abort_rate_estimate - expected) < 4 * se
        assert report.successes + report.absorbed + report.discarded == trials
        assert report.conditional_fidelity == pytest.approx(1.0, abs=1e-10)

    def test_bell_abort_rate_matches_zeta(self):
        cfg = CycleConfig(10, 10, 10)
        inp = BellInput(1, -1, 0.6, 0.8, EulerAngles(0.4, 2.0, 1.3))
        trials = 40_000
        report = simulate_cct(cfg, inp, trials, 59)
        expected = stage_probabilities_bell(cfg, inp).zeta
        se = math.sqrt(expected * (1 - expected) / trials)
        assert abs(report.abort_rate_estimate - expected) < 4 * se

    def test_seeded_reproducibility(self):
        cfg = CycleConfig(8, 8, 8)
        first = simulate_cct(cfg, BALANCED, 5_000, 61)
        second = simulate_cct(cfg, BALANCED, 5_000, 61)
        assert first == second

    def test_rejects_zero_trials(self):
        with pytest.raises(ValueError):
            simulate_cct(CycleConfig(2, 2, 2), BALANCED, 0, 1)


class TestModelConvergence:
    def test_gap_shrinks_with_cycle_count(self):
        gap10 = abs(coherent_qz_success(10, 0.5) - cepi_success(10, 0.5))
        gap200 = abs(coherent_qz_success(200, 0.5) - cepi_success(200, 0.5))
        assert gap200 < gap10

    def test_report_counts_validated(self):
        with pytest.raises(ValueError):
            MonteCarloReport(10, 5, 2, 2, 0.5, 0.1, None, 0)


class TestGateStatisticsValidation:
    def test_unknown_gate(self, rng):
        with pytest.raises(ValueError):
            gate_statistics("mzi", (1.0, 0.0), "H", 2, AbsorberModel.COHERENT, 10, 1)

    def test_chained_gate_needs_outer(self):
        with pytest.raises(ValueError):
            gate_statistics("cqz", (1.0, 0.0), "H", 2, AbsorberModel.COHERENT, 10, 1)
