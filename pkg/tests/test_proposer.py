"""Proposal-stream contracts: length, keyed determinism, mode collapse under
duplicate_rate, reflection steering, and the infeasibility declaration."""
import pytest

from alphauct.envs import load_fixture
from alphauct.expansion import normalize_action
from alphauct.proposer import (ProposerSpec, SimProposer, TaskInfeasible,
                               proposer_from_fixture)
from alphauct.search import Reflection


def make_proposer(**overrides) -> tuple:
    spec = load_fixture("trap3")
    return spec, proposer_from_fixture(spec, seed=overrides.pop("seed", 0),
                                       **overrides)


def test_returns_k_surface_strings():
    spec, prop = make_proposer()
    for k in (1, 3, 8):
        out = prop.propose("start", None, k, iteration=1, leaf=0)
        assert len(out) == k
        # every proposal resolves to a real canonical action at this screen
        for s in out:
            assert spec.resolve(s) is not None
    with pytest.raises(ValueError):
        prop.propose("start", None, 0, iteration=1, leaf=0)


def test_unknown_screen_yields_no_proposals():
    _, prop = make_proposer()
    assert prop.propose("the-moon", None, 4, iteration=1, leaf=0) == []


def test_streams_keyed_not_stateful():
    _, prop = make_proposer(duplicate_rate=0.3)
    a = prop.propose("start", None, 5, iteration=2, leaf=7)
    # interleave unrelated draws; the keyed stream must not shift
    prop.propose("start", None, 5, iteration=3, leaf=7)
    b = prop.propose("start", None, 5, iteration=2, leaf=7)
    assert a == b
    c = prop.propose("start", None, 5, iteration=2, leaf=8)
    assert a != c or True  # different key may coincide; just prove no error
    d = prop.propose("start", None, 5, iteration=2, leaf=7, slot=(0, 1))
    assert d != a  # slot namespaces the chunk-continuation stream


def test_duplicate_rate_one_collapses_to_single_canonical():
    spec, prop = make_proposer(duplicate_rate=1.0)
    ctx = spec.alias_context()
    out = prop.propose("start", None, 8, iteration=1, leaf=0)
    keys = {normalize_action(s, ctx) for s in out}
    assert len(keys) == 1  # every draw after the first repeats draw 0


def test_duplicate_rate_zero_draws_independently():
    spec, prop = make_proposer(duplicate_rate=0.0)
    ctx = spec.alias_context()
    seen = set()
    for it in range(1, 30):
        for s in prop.propose("start", None, 4, iteration=it, leaf=0):
            seen.add(normalize_action(s, ctx))
    assert len(seen) == 3  # all trap3 root actions eventually appear


def test_reflection_boost_shifts_draw_frequency():
    spec, _ = make_proposer()

    def freq(reflection, canon: str) -> float:
        prop = proposer_from_fixture(spec, seed=0, reflection_gain=8.0)
        ctx = spec.alias_context()
        hits = total = 0
        for it in range(1, 120):
            for s in prop.propose("start", reflection, 3, iteration=it, leaf=0):
                hits += normalize_action(s, ctx) == canon
                total += 1
        return hits / total

    plain = freq(None, "open_gallery")
    boosted = freq(Reflection(source_iteration=1,
                              boost={"open_gallery": 1.0}, rho=0.5),
                   "open_gallery")
    assert boosted > plain + 0.15


def test_infeasible_after_fires_only_past_threshold():
    _, prop = make_proposer(infeasible_after=3)
    prop.propose("start", None, 2, iteration=3, leaf=0)  # at threshold: fine
    with pytest.raises(TaskInfeasible):
        prop.propose("start", None, 2, iteration=4, leaf=0)


def test_spec_validation():
    with pytest.raises(ValueError):
        ProposerSpec(weights={}, surfaces={}, duplicate_rate=1.0001)
    with pytest.raises(ValueError):
        ProposerSpec(weights={}, surfaces={}, reflection_gain=-1.0)
    with pytest.raises(ValueError):
        ProposerSpec(weights={}, surfaces={}, infeasible_after=-1)


def test_surface_spellings_exercise_normalization():
    """Across many draws the same canonical appears under several spellings."""
    spec, prop = make_proposer(seed=5)
    ctx = spec.alias_context()
    spellings: dict[str, set] = {}
    for it in range(1, 60):
        for s in prop.propose("start", None, 3, iteration=it, leaf=0):
            spellings.setdefault(normalize_action(s, ctx), set()).add(s)
    assert any(len(v) > 1 for v in spellings.values())
