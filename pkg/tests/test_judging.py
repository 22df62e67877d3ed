"""Judge-call semantics: noiseless passthrough, clamping, the offset
cancellation that separates comparative from independent scoring, and the
reflection predictor's variance contract."""
import math
import statistics

import pytest
from hypothesis import given, settings, strategies as st

from alphauct.judging import (COMPARATIVE, INDEPENDENT, JudgeFailure,
                              PredictorSpec, SimJudge, SimJudgeSpec,
                              judge_comparative, judge_independent,
                              judge_independent_set, predict_value,
                              residual_noise, sample_outcome)
from alphauct.rng import derive_rng
from alphauct.tree import ActionChunk

VALUES = {"lobby": 0.3, "vault": 0.8, "closet": -1.0}


def sib(screen: str):
    return (ActionChunk((f"goto {screen}",), f"goto_{screen}"),
            type("Obs", (), {"screen": screen, "terminal": "none"})())


def test_noiseless_judge_returns_true_values():
    judge = SimJudge(SimJudgeSpec(), VALUES)
    res = judge_comparative("root", [sib("lobby"), sib("vault")], "go", judge)
    assert res.mode == COMPARATIVE
    assert res.scores == (0.3, 0.8)
    assert judge_independent("root", sib("closet"), "go", judge) == -1.0
    # unknown screens score the neutral default
    assert judge_independent("root", sib("nowhere"), "go", judge) == 0.0


def test_scores_clamped_to_unit_interval():
    judge = SimJudge(SimJudgeSpec(shared_offset_std=50.0, seed=3), VALUES)
    res = judge_comparative("root", [sib("lobby"), sib("vault")], "go", judge)
    assert all(-1.0 <= s <= 1.0 for s in res.scores)


def test_comparative_offset_cancels_in_rankings():
    """Within one joint call every sibling eats the same offset, so score
    differences carry only per-item noise; independent calls add two
    independent offsets and the differences get noisier."""
    values = {"low": -0.25, "high": 0.25}  # away from the clamp boundary
    comp_diffs, indep_diffs = [], []
    for trial in range(300):
        judge = SimJudge(SimJudgeSpec(noise_std=0.05, shared_offset_std=0.25,
                                      seed=trial), values)
        sibs = [sib("low"), sib("high")]
        c = judge_comparative("root", sibs, "go", judge, call_key=(trial,))
        comp_diffs.append(c.scores[1] - c.scores[0])
        i0 = judge_independent("root", sibs[0], "go", judge,
                               call_key=(trial,), slot=0)
        i1 = judge_independent("root", sibs[1], "go", judge,
                               call_key=(trial,), slot=1)
        indep_diffs.append(i1 - i0)
    var_comp = statistics.variance(comp_diffs)
    var_indep = statistics.variance(indep_diffs)
    # comparative diff variance ~ 2*noise^2 = 0.005; independent stacks
    # 2*offset^2 = 0.125 on top
    assert var_comp < 0.01
    assert var_indep > 10 * var_comp
    assert statistics.mean(comp_diffs) == pytest.approx(0.5, abs=0.02)


def test_comparative_diff_is_offset_independent():
    """The within-set score difference doesn't move when only the shared
    offset scale changes (same seed, same call key, values away from clamp)."""
    values = {"a": 0.1, "b": 0.4}
    lo = SimJudge(SimJudgeSpec(noise_std=0.05, shared_offset_std=0.0, seed=9),
                  values)
    hi = SimJudge(SimJudgeSpec(noise_std=0.05, shared_offset_std=0.2, seed=9),
                  values)
    sibs = [sib("a"), sib("b")]
    d_lo = (lambda r: r.scores[1] - r.scores[0])(
        judge_comparative("root", sibs, "go", lo))
    d_hi = (lambda r: r.scores[1] - r.scores[0])(
        judge_comparative("root", sibs, "go", hi))
    assert d_lo == pytest.approx(d_hi, abs=1e-12)


def test_independent_set_matches_looped_calls():
    judge = SimJudge(SimJudgeSpec(noise_std=0.2, shared_offset_std=0.3, seed=5),
                     VALUES)
    sibs = [sib("lobby"), sib("vault"), sib("closet")]
    batched = judge_independent_set("root", sibs, "go", judge, call_key=(7,))
    assert batched.mode == INDEPENDENT
    looped = tuple(judge_independent("root", s, "go", judge, call_key=(7,),
                                     slot=i) for i, s in enumerate(sibs))
    assert batched.scores == looped


def test_empty_sibling_set_rejected():
    judge = SimJudge(SimJudgeSpec(), VALUES)
    with pytest.raises(ValueError):
        judge_comparative("root", [], "go", judge)
    with pytest.raises(ValueError):
        judge_independent_set("root", [], "go", judge)


def test_judge_failure_propagates():
    class FlakyJudge(SimJudge):
        def score_set(self, prepared, instruction, key):
            raise JudgeFailure("backend down")

    with pytest.raises(JudgeFailure):
        judge_comparative("root", [sib("lobby")], "go",
                          FlakyJudge(SimJudgeSpec(), VALUES))


def test_scores_keyed_by_call_not_schedule():
    judge = SimJudge(SimJudgeSpec(noise_std=0.3, seed=2), VALUES)
    sibs = [sib("lobby"), sib("vault")]
    a = judge_comparative("root", sibs, "go", judge, call_key=(4,))
    b = judge_comparative("root", sibs, "go", judge, call_key=(4,))
    c = judge_comparative("root", sibs, "go", judge, call_key=(5,))
    assert a.scores == b.scores
    assert a.scores != c.scores


# -- reflection predictor -----------------------------------------------------


def test_predictor_validation():
    with pytest.raises(ValueError):
        PredictorSpec(rho=1.5, sigma_x2=0.04)
    with pytest.raises(ValueError):
        PredictorSpec(rho=0.5, sigma_x2=-1.0)
    with pytest.raises(ValueError):
        PredictorSpec(rho=0.5, sigma_x2=0.04, noise="gaussian")


def test_predictor_rho_endpoints():
    perfect = PredictorSpec(rho=0.0, sigma_x2=0.04)
    rng = derive_rng(0, "pred")
    theta, outcome = sample_outcome(perfect, 0.6, rng)
    assert theta == 0.6 and outcome == 0.6  # rho=0: no residual at all
    blind = PredictorSpec(rho=1.0, sigma_x2=0.04)
    assert blind.residual_var == pytest.approx(0.04)
    assert predict_value(blind, 0.25) == 0.25


@pytest.mark.parametrize("noise", ["two_point", "uniform"])
def test_residual_variance_matches_contract(noise):
    spec = PredictorSpec(rho=0.25, sigma_x2=0.04, noise=noise)
    assert spec.residual_var == pytest.approx(0.01)
    rng = derive_rng(1, "pred-var")
    draws = [sample_outcome(spec, 0.0, rng)[1] for _ in range(40_000)]
    assert statistics.mean(draws) == pytest.approx(0.0, abs=0.005)
    assert statistics.variance(draws) == pytest.approx(0.01, rel=0.10)
    hw = spec.noise_halfwidth
    assert all(abs(d) <= hw + 1e-12 for d in draws)
    if noise == "two_point":
        assert hw == pytest.approx(0.1)
    else:
        assert hw == pytest.approx(0.1 * math.sqrt(3.0))


def test_sample_outcome_uses_one_draw_always():
    """Draw-count parity keeps scalar and vectorized paths on shared streams."""
    for spec in (PredictorSpec(rho=0.0, sigma_x2=0.04),
                 PredictorSpec(rho=1.0, sigma_x2=0.0),
                 PredictorSpec(rho=0.5, sigma_x2=0.09, noise="uniform")):
        a = derive_rng(3, "parity")
        b = derive_rng(3, "parity")
        sample_outcome(spec, 0.1, a)
        b.random()
        assert a.random() == b.random()


@given(st.floats(0, 1))
def test_residual_noise_is_bounded_and_symmetric(u):
    spec = PredictorSpec(rho=1.0, sigma_x2=0.04, noise="uniform")
    x = residual_noise(spec, u)
    assert abs(x) <= spec.noise_halfwidth + 1e-12
    assert residual_noise(spec, 1.0 - u) == pytest.approx(-x, abs=1e-12)
