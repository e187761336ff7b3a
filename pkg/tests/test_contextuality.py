import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from ewfs.contextuality import (
    GlobalAssignment, HierarchyLevel, ScenarioTooLarge, SnapError, classification_report, classify,
    consistent_globals, count_consistent_globals, is_logically_contextual,
    is_probabilistically_contextual, is_strongly_contextual, probabilistic_analysis, snap,
)
from ewfs.empirical import (
    EmpiricalModel, MeasurementScenarioSpec, PossibilisticModel, canonical_ghz_mermin,
    canonical_hardy, model_from_bell, possibilistic,
)
from ewfs.scenario import BellParty, BellScenario, Setting, chsh_bell, ghz_bell, hardy_bell, product_bell
from ewfs.qsim import make_state

from strategies import qubit_bases


def brute_globals(pm):
    """Independent oracle: itertools over every assignment."""
    spec = pm.spec
    out = set()
    for vals in itertools.product(spec.outcomes, repeat=len(spec.measurements)):
        g = dict(zip(spec.measurements, vals))
        if all(tuple(g[m] for m in c) in pm.supports[c] for c in spec.contexts):
            out.add(GlobalAssignment.of(g))
    return out


def full_support_model(contexts, measurements):
    spec = MeasurementScenarioSpec(measurements, (0, 1), contexts)
    return PossibilisticModel(spec, {c: frozenset(itertools.product((0, 1), repeat=len(c))) for c in spec.contexts})


# ---------------------------------------------------------------- consistent_globals

def test_ghz_has_no_consistent_global():
    pm = canonical_ghz_mermin()
    assert consistent_globals(pm) == set()
    assert 2 ** len(pm.spec.measurements) == 64


def test_hardy_globals_contain_all_ones():
    gs = consistent_globals(canonical_hardy())
    assert GlobalAssignment.of({"A": 1, "B": 1, "U": 1, "W": 1}) in gs
    assert gs == brute_globals(canonical_hardy())


def test_single_context_full_support_all_assignments():
    pm = full_support_model((("a", "b", "c"),), ("a", "b", "c"))
    assert count_consistent_globals(pm) == 8


def test_too_large():
    ms = tuple(f"m{i}" for i in range(25))
    pm = full_support_model(tuple((m,) for m in ms), ms)
    with pytest.raises(ScenarioTooLarge):
        consistent_globals(pm)


# ---------------------------------------------------------------- logical / strong

def test_hardy_logical_witness():
    logical, witness = is_logically_contextual(canonical_hardy())
    assert logical
    ctx, section = witness
    assert section == {"U": 0, "W": 0}


def test_ghz_logical():
    assert is_logically_contextual(canonical_ghz_mermin())[0]


def test_full_support_two_contexts_not_logical():
    pm = full_support_model((("a", "b"), ("b", "c")), ("a", "b", "c"))
    assert is_logically_contextual(pm) == (False, None)


def test_strong():
    assert is_strongly_contextual(canonical_ghz_mermin())
    assert not is_strongly_contextual(canonical_hardy())
    spec = MeasurementScenarioSpec(("a", "b"), (0, 1), (("a", "b"),))
    assert not is_strongly_contextual(PossibilisticModel(spec, {("a", "b"): frozenset({(0, 1)})}))


# ---------------------------------------------------------------- probabilistic

def test_hardy_probabilistically_contextual():
    assert is_probabilistically_contextual(model_from_bell(hardy_bell()))


def test_chsh_probabilistic_not_logical():
    m = model_from_bell(chsh_bell())
    pm = possibilistic(m)
    assert all(len(s) == 4 for s in pm.supports.values())
    assert not is_logically_contextual(pm)[0]
    assert is_probabilistically_contextual(m)


def test_product_mixture_exact():
    m = model_from_bell(product_bell())
    r = probabilistic_analysis(m)
    assert not r.contextual and r.exact
    assert r.max_residual(m) == 0
    assert sum(r.weights.values()) == 1
    assert all(w > 0 for w in r.weights.values())


def test_snap():
    assert snap(1 / 12) == Fraction(1, 12)
    assert snap((2 + np.sqrt(2)) / 8) == Fraction((2 + np.sqrt(2)) / 8).limit_denominator(10 ** 6)
    with pytest.raises(SnapError):
        snap(1e-7)


# ---------------------------------------------------------------- classify

@pytest.mark.parametrize("bell,level", [
    (ghz_bell, HierarchyLevel.STRONG),
    (hardy_bell, HierarchyLevel.LOGICAL),
    (chsh_bell, HierarchyLevel.PROBABILISTIC),
    (product_bell, HierarchyLevel.NONCONTEXTUAL),
])
def test_classify(bell, level):
    assert classify(model_from_bell(bell())) == level


def test_level_order():
    assert (HierarchyLevel.NONCONTEXTUAL < HierarchyLevel.PROBABILISTIC
            < HierarchyLevel.LOGICAL < HierarchyLevel.STRONG)


def test_report_json():
    rep = classification_report(model_from_bell(hardy_bell())).to_json()
    assert rep["level"] == "LOGICAL"
    assert rep["witness"] == {"context": ["U", "W"], "section": {"U": 0, "W": 0}}
    assert rep["consistent_globals"] == 5 and rep["total_globals"] == 16


@pytest.mark.parametrize("bell", [ghz_bell, hardy_bell, chsh_bell, product_bell])
def test_hierarchy_monotonicity(bell):
    m = model_from_bell(bell())
    pm = possibilistic(m)
    strong, logical, prob = (is_strongly_contextual(pm), is_logically_contextual(pm)[0],
                             is_probabilistically_contextual(m))
    assert (not strong or logical) and (not logical or prob)


# ---------------------------------------------------------------- properties

@st.composite
def possibilistic_models(draw):
    n = draw(st.integers(2, 5))
    ms = tuple(f"m{i}" for i in range(n))
    pairs = list(itertools.combinations(ms, 2))
    chosen = draw(st.lists(st.sampled_from(pairs), min_size=1, max_size=len(pairs), unique=True))
    covered = {m for c in chosen for m in c}
    chosen += [(m,) for m in ms if m not in covered]
    spec = MeasurementScenarioSpec(ms, (0, 1), tuple(chosen))
    supports = {}
    for c in spec.contexts:
        outs = list(itertools.product((0, 1), repeat=len(c)))
        supports[c] = frozenset(draw(st.lists(st.sampled_from(outs), min_size=1, unique=True)))
    return PossibilisticModel(spec, supports)


@given(possibilistic_models())
@settings(max_examples=80)
def test_globals_match_oracle(pm):
    assert consistent_globals(pm) == brute_globals(pm)


@given(possibilistic_models(), st.randoms(use_true_random=False))
@settings(max_examples=60)
def test_globals_invariant_under_permutation_and_renaming(pm, rnd):
    ctxs = list(pm.spec.contexts)
    rnd.shuffle(ctxs)
    shuffled = PossibilisticModel(MeasurementScenarioSpec(pm.spec.measurements, (0, 1), tuple(ctxs)),
                                  pm.supports)
    assert consistent_globals(shuffled) == consistent_globals(pm)
    mapping = {m: f"z_{m}" for m in pm.spec.measurements}
    renamed = pm.rename(mapping)
    expected = {GlobalAssignment.of({mapping[m]: v for m, v in g.items()}) for g in consistent_globals(pm)}
    assert consistent_globals(renamed) == expected


@given(qubit_bases(), qubit_bases(), qubit_bases(), qubit_bases(), qubit_bases(), qubit_bases())
@settings(max_examples=25, deadline=None)
def test_separable_states_noncontextual(sa, sb, a0, a1, b0, b1):
    state = make_state(["S_A", "S_B"], np.kron(sa.vectors[0], sb.vectors[0]))
    bell = BellScenario((BellParty("A", (Setting("A0", a0), Setting("A1", a1))),
                         BellParty("B", (Setting("B0", b0), Setting("B1", b1)))), state)
    model = model_from_bell(bell)
    # entries within about 1e-6 of 0 or 1 have no admissible rational; that is a documented error
    assume(all(_snappable(p) for row in model.tables.values() for p in row.values()))
    assert classify(model) == HierarchyLevel.NONCONTEXTUAL


def _snappable(p):
    try:
        snap(p)
    except SnapError:
        return False
    return True


def test_classify_propagates_snap_error():
    spec = MeasurementScenarioSpec(("a", "b"), (0, 1), (("a", "b"),))
    m = EmpiricalModel(spec, {("a", "b"): {(0, 0): 1 - 1e-7, (1, 1): 1e-7}})
    with pytest.raises(SnapError):
        classify(m)


@given(st.lists(st.integers(1, 6), min_size=4, max_size=4))
def test_feasible_mixture_reproduces_tables_exactly(weights):
    """A rational mixture of deterministic boxes must come back exactly."""
    total = sum(weights)
    spec = MeasurementScenarioSpec(("a0", "a1", "b0", "b1"), (0, 1),
                                   (("a0", "b0"), ("a0", "b1"), ("a1", "b0"), ("a1", "b1")))
    globals_ = [dict(a0=0, a1=1, b0=0, b1=1), dict(a0=1, a1=1, b0=0, b1=0),
                dict(a0=0, a1=0, b0=1, b1=1), dict(a0=1, a1=0, b0=1, b1=0)]
    tables = {c: {} for c in spec.contexts}
    for g, w in zip(globals_, weights):
        for c in spec.contexts:
            o = tuple(g[m] for m in c)
            tables[c][o] = tables[c].get(o, 0) + w / total
    m = EmpiricalModel(spec, tables)
    r = probabilistic_analysis(m)
    assert not r.contextual and r.exact and r.max_residual(m) == 0
