import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ewfs.qsim import X_BASIS, Z_BASIS, make_state, friend_unitary
from ewfs.scenario import (
    GHZ_AMPS, HARDY_CONTEXTS, Ask, BellParty, BellScenario, FriendMeasure, Protocol, ScenarioError,
    Setting, SuperMeasure, bell_distribution, compile_bell_to_ewfs, compiled_deviation, fr_protocol,
    ghz_bell, ghz_fr_protocol, hardy_bell, joint_distribution, ok_fail_basis, product_bell,
    recorded_labs, run_protocol, validate_context,
)

from strategies import qubit_bases

S3 = 1 / np.sqrt(3)


def support(dist, eps=1e-9):
    return {o for o, p in dist.items() if p > eps}


# ---------------------------------------------------------------- fr_protocol

def test_fr_structure():
    p = fr_protocol()
    assert p.registers == ("S_A", "L_A", "S_B", "L_B")
    assert [m.name for m in p.measurements().values()] == ["A", "B", "U", "W"]
    assert {m.agent for m in p.measurements().values()} == {"Alice", "Bob", "Ursula", "Wigner"}


def test_fr_psi_t2_amplitudes():
    expected = np.zeros(16)
    expected[[0, 12, 15]] = S3
    np.testing.assert_allclose(run_protocol(fr_protocol(), 2).amps, expected, atol=1e-12)


def test_fr_postselection_probability():
    d = joint_distribution(fr_protocol(), ["U", "W"])
    assert d[(0, 0)] == pytest.approx(1 / 12, abs=1e-12)


def test_fr_uw_distribution():
    # Independent oracle: <±±|psi0> with ok = |->, fail = |+> on each side.
    psi0 = np.array([1, 0, 1, 1]) * S3
    plus, minus = np.array([1, 1]) / np.sqrt(2), np.array([1, -1]) / np.sqrt(2)
    vec = {0: minus, 1: plus}
    d = joint_distribution(fr_protocol(), ["U", "W"])
    for u, w in itertools.product((0, 1), repeat=2):
        assert d[(u, w)] == pytest.approx(abs(np.kron(vec[u], vec[w]) @ psi0) ** 2, abs=1e-12)
    # frozen: 1/12, 1/12, 1/12, 9/12 in column order 00, 01, 10, 11
    assert [d[o] for o in [(0, 0), (0, 1), (1, 0), (1, 1)]] == pytest.approx(
        [1 / 12, 1 / 12, 1 / 12, 9 / 12], abs=1e-12)


def test_fr_u_completeness():
    d = joint_distribution(fr_protocol(), ["U"])
    assert sum(d.values()) == pytest.approx(1, abs=1e-10)
    assert d[(0,)] + d[(1,)] == pytest.approx(1, abs=1e-10)


def test_fr_ab_support():
    assert support(joint_distribution(fr_protocol(), ["A", "B"])) == {(0, 0), (1, 0), (1, 1)}


# ---------------------------------------------------------------- ghz_fr_protocol

def test_ghz_fr_uvw_even_parity_quarter():
    d = joint_distribution(ghz_fr_protocol(), ["U", "V", "W"])
    for o in itertools.product((0, 1), repeat=3):
        assert d[o] == pytest.approx(0.25 if sum(o) % 2 == 0 else 0.0, abs=1e-12)


def test_ghz_fr_ubc_parity_class():
    d = joint_distribution(ghz_fr_protocol(), ["U", "B", "C"])
    assert support(d) == {(u, b, c) for u, b, c in itertools.product((0, 1), repeat=3) if b ^ c == 1 ^ u}
    # four supported triples share the whole mass
    for o in support(d):
        assert d[o] == pytest.approx(0.25, abs=1e-12)


def test_ghz_fr_norm_after_all_steps():
    assert run_protocol(ghz_fr_protocol()).norm == pytest.approx(1, abs=1e-12)


def test_ghz_fr_state_after_friend_steps():
    p = ghz_fr_protocol()
    # oracle: GHZ over (S_A L_A S_B L_B S_C L_C) with labs in |0>, then U x U x U as one Kronecker matrix
    amps = np.zeros(64, dtype=complex)
    amps[0] = amps[0b101010] = 1 / np.sqrt(2)
    u = friend_unitary(p.step_for("A").basis).matrix
    expected = np.kron(np.kron(u, u), u) @ amps
    np.testing.assert_allclose(run_protocol(p, 3).amps, expected, atol=1e-12)


def test_empty_protocol_keeps_state():
    s = make_state(["S_A"], [0.6, 0.8])
    out = run_protocol(Protocol(("S_A",), s, ()))
    assert out.registers == s.registers
    assert np.array_equal(out.amps, s.amps)


# ---------------------------------------------------------------- validate_context

def test_validate_rejects_friend_with_own_super():
    assert validate_context(ghz_fr_protocol(), ["B", "V"]) is not None


@pytest.mark.parametrize("ctx", [["U", "B", "C"], ["U", "V", "W"], ["A", "B", "C"], ["A", "V", "C"]])
def test_validate_accepts(ctx):
    assert validate_context(ghz_fr_protocol(), ctx) is None


def test_validate_unknown_variable():
    with pytest.raises(KeyError):
        validate_context(ghz_fr_protocol(), ["Q"])


def test_joint_distribution_rejects_non_gatherable():
    with pytest.raises(ScenarioError):
        joint_distribution(ghz_fr_protocol(), ["B", "V"])


# ---------------------------------------------------------------- protocol invariants

def _friend(agent, m, x, basis=Z_BASIS):
    return FriendMeasure(agent, m, f"S_{x}", f"L_{x}", basis)


def test_protocol_rejects_two_friends_on_one_lab():
    s = make_state(["S_A"], [1, 0])
    with pytest.raises(ScenarioError):
        Protocol(("S_A",), s, (_friend("Alice", "A", "A"), _friend("Alan", "A2", "A")))


def test_protocol_rejects_super_without_friend():
    s = make_state(["S_A"], [1, 0])
    with pytest.raises(ScenarioError):
        Protocol(("S_A",), s, (SuperMeasure("Ursula", "U", "S_A", "L_A", ok_fail_basis()),))


def test_protocol_rejects_duplicate_names():
    s = make_state(["S_A", "S_B"], [1, 0, 0, 0])
    with pytest.raises(ScenarioError):
        Protocol(("S_A", "S_B"), s, (_friend("Alice", "A", "A"), _friend("Bob", "A", "B")))


def test_ask_after_super_rejected():
    p = fr_protocol()
    with pytest.raises(ScenarioError):
        p.with_steps(p.steps + (Ask("Zeno", "L_A"),))


def test_ask_is_bookkeeping_only():
    p = fr_protocol()
    steps = p.steps[:2] + (Ask("Ursula", "L_B"),) + p.steps[2:]
    q = p.with_steps(steps)
    assert recorded_labs(q) == {"Ursula": {"L_B"}}
    assert np.allclose(run_protocol(q).amps, run_protocol(p).amps)
    for ctx in HARDY_CONTEXTS:
        d1, d2 = joint_distribution(p, ctx), joint_distribution(q, ctx)
        assert all(abs(d1[k] - d2[k]) < 1e-15 for k in d1)


def test_ask_before_friend_rejected():
    p = fr_protocol()
    with pytest.raises(ScenarioError):
        p.with_steps((Ask("Ursula", "L_A"),) + p.steps)


# ---------------------------------------------------------------- compiler

def test_compile_hardy_shape_and_stats():
    proto, mapping = compile_bell_to_ewfs(hardy_bell())
    assert [s.measurement for s in proto.friend_steps] == ["A", "B"]
    assert [s.measurement for s in proto.super_steps] == ["U", "W"]
    direct = bell_distribution(hardy_bell(), ["A", "B"])
    compiled = joint_distribution(proto, mapping[("A", "B")])
    for k in direct:
        assert abs(direct[k] - compiled[k]) < 1e-12


def test_compile_ghz_matches_direct():
    assert compiled_deviation(ghz_bell()) < 1e-12
    proto, mapping = compile_bell_to_ewfs(ghz_bell())
    assert mapping[("X_A", "X_B", "X_C")] == ("U", "V", "W")
    assert mapping[("X_A", "Y_B", "Y_C")] == ("U", "B", "C")


def test_compile_single_party():
    bell = BellScenario((BellParty("A", (Setting("Z", Z_BASIS), Setting("X", X_BASIS))),),
                        make_state(["S_A"], [1, 0]))
    proto, mapping = compile_bell_to_ewfs(bell)
    d = joint_distribution(proto, mapping[("X",)])
    assert d[(0,)] == pytest.approx(0.5, abs=1e-12)


def test_bell_shape_errors():
    with pytest.raises(ScenarioError):
        BellScenario((BellParty("A", (Setting("Z", Z_BASIS),)),), make_state(["S_A"], [1, 0]))
    with pytest.raises(ScenarioError):
        BellScenario((BellParty("A", (Setting("Z", Z_BASIS), Setting("X", X_BASIS))),),
                     make_state(["S_B"], [1, 0]))


@st.composite
def bell_scenarios(draw):
    n = draw(st.integers(1, 3))
    regs = [f"S_{chr(65 + i)}" for i in range(n)]
    re = draw(st.lists(st.floats(-1, 1), min_size=2 ** n, max_size=2 ** n))
    im = draw(st.lists(st.floats(-1, 1), min_size=2 ** n, max_size=2 ** n))
    amps = np.array(re) + 1j * np.array(im)
    if np.linalg.norm(amps) < 1e-3:
        amps[0] = 1
    parties = []
    for i in range(n):
        name = chr(65 + i)
        b0, b1 = draw(qubit_bases()), draw(qubit_bases())
        parties.append(BellParty(name, (Setting(f"{name}0", b0), Setting(f"{name}1", b1))))
    return BellScenario(tuple(parties), make_state(regs, amps))


@given(bell_scenarios())
@settings(max_examples=40, deadline=None)
def test_compiler_correctness(bell):
    assert compiled_deviation(bell) < 1e-12


# ---------------------------------------------------------------- marginal properties

GATHERABLE = [("U", "B", "C"), ("A", "V", "C"), ("A", "B", "W"), ("U", "V", "W"), ("A", "B", "C")]


def _marginal(dist, ctx, keep):
    out = {}
    for o, p in dist.items():
        k = tuple(o[ctx.index(m)] for m in keep)
        out[k] = out.get(k, 0) + p
    return out


@pytest.mark.parametrize("c,d", list(itertools.combinations(GATHERABLE, 2)))
def test_protocol_level_no_signalling(c, d):
    p = ghz_fr_protocol()
    shared = [m for m in c if m in d]
    mc = _marginal(joint_distribution(p, c), c, shared)
    md = _marginal(joint_distribution(p, d), d, shared)
    for k in set(mc) | set(md):
        assert abs(mc.get(k, 0) - md.get(k, 0)) < 1e-10


@pytest.mark.parametrize("ctx", GATHERABLE)
def test_sub_protocol_monotonicity(ctx):
    p = ghz_fr_protocol()
    full = joint_distribution(p, ctx)
    for r in range(1, len(ctx)):
        for sub in itertools.combinations(ctx, r):
            direct = joint_distribution(p, sub)
            marg = _marginal(full, ctx, sub)
            for k in set(direct) | set(marg):
                assert abs(direct.get(k, 0) - marg.get(k, 0)) < 1e-10


@pytest.mark.parametrize("proto", [fr_protocol, ghz_fr_protocol])
def test_extra_outcomes_carry_no_mass(proto):
    p = proto()
    for s in p.super_steps:
        d = joint_distribution(p, [s.measurement])
        assert sum(v for o, v in d.items() if o[0] not in (0, 1)) < 1e-9


def test_product_bell_compiles():
    assert compiled_deviation(product_bell()) < 1e-12
    assert GHZ_AMPS[0] == GHZ_AMPS[-1] == 1
