import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from superdiff.engine import compose, decompose_propagator, phase_aligned_deviation
from superdiff.lattice import LatticeError, LatticeSpec, Bond, BondKind, Layer, build_folded_chain, folded_rung
from superdiff.model import (
    ISOTROPIC,
    PAULI,
    SWAP,
    Coupling,
    FloquetSchedule,
    InteractionVector,
    compile_program,
    equivalent_experiments,
    propagator,
    symmetry_flags,
    two_site_generator,
)

X, Y, Z = PAULI["X"], PAULI["Y"], PAULI["Z"]
finite = st.floats(-3, 3, allow_nan=False)


def test_generator_matches_explicit_paulis():
    c = Coupling(0.7, InteractionVector(0.3, -1.2, 2.0))
    expect = 0.7 * (0.3 * np.kron(X, X) - 1.2 * np.kron(Y, Y) + 2.0 * np.kron(Z, Z)) / 4
    assert np.allclose(two_site_generator(c), expect, atol=1e-15)


def test_isotropic_generator_spectrum():
    # (XX+YY+ZZ)/4 has triplet 1/4 and singlet -3/4
    w = np.linalg.eigvalsh(two_site_generator(Coupling(1.0, ISOTROPIC)))
    assert np.allclose(np.sort(w), [-0.75, 0.25, 0.25, 0.25])


@settings(max_examples=40, deadline=None)
@given(finite, finite, finite, st.floats(0.01, 4))
def test_propagator_matches_expm_and_is_unitary(x, y, z, tau):
    c = Coupling(1.3, InteractionVector(x, y, z))
    u = propagator(c, tau)
    assert np.allclose(u, expm(-1j * tau * two_site_generator(c)), atol=1e-12)
    assert np.allclose(u.conj().T @ u, np.eye(4), atol=1e-12)


def test_zero_coupling_is_identity():
    assert np.allclose(propagator(Coupling(0.0, ISOTROPIC), 1.0), np.eye(4))
    assert np.allclose(propagator(Coupling(1.0, InteractionVector(0, 0, 0)), 1.0), np.eye(4))


@pytest.mark.parametrize("jt, target", [(np.pi, SWAP), (2 * np.pi, np.eye(4))])
def test_isotropic_special_points(jt, target):
    u = propagator(Coupling(1.0, ISOTROPIC), jt)
    assert phase_aligned_deviation(u, target) <= 1e-12


def test_decomposition_random_draws():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        lam = InteractionVector(*rng.uniform(-2, 2, 3))
        c = Coupling(rng.uniform(-3, 3), lam)
        tau = rng.uniform(0.05, 3)
        circ = decompose_propagator(c, tau)
        assert sum(g.name == "cx" for g in circ) == 3
        worst = max(worst, phase_aligned_deviation(compose(circ), propagator(c, tau)))
    assert worst <= 1e-10


def test_phase_aligned_deviation_ignores_global_phase():
    u = propagator(Coupling(1.0, InteractionVector(1, 0.5, 0.2)), 0.8)
    assert phase_aligned_deviation(np.exp(1.3j) * u, u) < 1e-14
    assert phase_aligned_deviation(u, np.eye(4)) > 0.1


def test_interaction_vector_parse_and_label():
    assert InteractionVector.parse("1,0,1") == InteractionVector(1, 0, 1)
    assert InteractionVector.parse("(1, 1, 0)") == InteractionVector(1, 1, 0)
    assert InteractionVector.parse([0, 0, 1]).label() == "(0,0,1)"
    with pytest.raises(ValueError):
        InteractionVector.parse("1,2")


def test_schedule_validation():
    assert np.array_equal(FloquetSchedule(0.5, 4).times, [0, 0.5, 1.0, 1.5, 2.0])
    with pytest.raises(ValueError):
        FloquetSchedule(0.0, 3)
    with pytest.raises(ValueError):
        FloquetSchedule(1.0, -1)


def test_compiled_program_layers_and_couplings():
    spec = build_folded_chain(9, [folded_rung(9, 2)], "mid_site")
    prog = compile_program(spec, FloquetSchedule(1.0, 3), 1.0, 2.0, "0,0,1")
    layers = [g.layer for g in prog.step_gates]
    assert layers == sorted(layers, key=[Layer.R, Layer.G, Layer.B].index)
    assert len(prog.step_gates) == len(spec.bonds)
    rung_sites = {b.sites for b in spec.rung_bonds}
    for g in prog.step_gates:
        c = prog.rung_coupling if g.sites in rung_sites else prog.chain_coupling
        assert np.allclose(g.matrix, propagator(c, 1.0))
    assert prog.metadata()["J_perp"] == 2.0


def test_compile_rejects_overlapping_layer():
    bad = LatticeSpec(n=3, bonds=(Bond(0, 1, Layer.R, BondKind.CHAIN), Bond(1, 2, Layer.R, BondKind.CHAIN)))
    with pytest.raises(LatticeError):
        compile_program(bad, FloquetSchedule(1.0, 1))


def test_equivalent_experiments_orbit():
    orbit = equivalent_experiments(InteractionVector(1, 0, 0.5), "Z")
    assert (InteractionVector(0, 1, 0.5), "Z") in orbit
    assert (InteractionVector(0.5, 0, 1), "X") in orbit
    assert orbit[0] == (InteractionVector(1, 0, 0.5), "Z")
    assert len(equivalent_experiments(ISOTROPIC, "Z")) == 3


@pytest.mark.parametrize("lam, sz, parity", [
    ((0, 0, 1), True, True),
    ((1, 1, 0), True, True),
    ((1, 1, 1), True, True),
    ((1, 0, 0), False, True),
    ((1, 0, 1), False, True),
])
def test_symmetry_flags(lam, sz, parity):
    flags = symmetry_flags(InteractionVector(*lam))
    assert flags.conserves_total_sz is sz
    assert flags.conserves_parity is parity


def test_generator_special_cases():
    assert np.array_equal(two_site_generator(Coupling(1.0, InteractionVector(0, 0, 0))), np.zeros((4, 4)))
    zz = two_site_generator(Coupling(2.0, InteractionVector(0, 0, 1)))
    assert np.allclose(zz, np.diag([0.5, -0.5, -0.5, 0.5]))
    for c in [Coupling(1.0, ISOTROPIC), Coupling(0.3, InteractionVector(1, -2, 0.5))]:
        h = two_site_generator(c)
        assert np.allclose(h, h.conj().T)


def test_small_program_shapes():
    prog = compile_program(build_folded_chain(4), FloquetSchedule(1.0, 1))
    assert [g.layer for g in prog.step_gates] == [Layer.R, Layer.R, Layer.G]
    spec = build_folded_chain(28, [folded_rung(28, 4)], "direct")
    prog = compile_program(spec, FloquetSchedule(1.0, 20), 1.0, 1.0, ISOTROPIC)
    assert len(prog.step_gates) == 27 + 1 and prog.steps == 20


def test_zero_rung_strength_gives_identity_gates():
    spec = build_folded_chain(9, [folded_rung(9, 2)], "mid_site")
    for lam in [(1, 0, 0), (1, 1, 1), (0.3, -2, 5)]:
        prog = compile_program(spec, FloquetSchedule(1.0, 1), 1.0, 0.0, lam)
        rung = {b.sites for b in spec.rung_bonds}
        for g in prog.step_gates:
            if g.sites in rung:
                assert np.array_equal(g.matrix, np.eye(4))


def test_equivalence_examples():
    orbit = equivalent_experiments(InteractionVector(0, 0, 1), "Z")
    assert (InteractionVector(1, 0, 0), "X") in orbit and (InteractionVector(0, 1, 0), "Y") in orbit
    assert (InteractionVector(0, 1, 1), "Z") in equivalent_experiments(InteractionVector(1, 0, 1), "Z")
    assert {lam for lam, _ in equivalent_experiments(ISOTROPIC, "Z")} == {ISOTROPIC}


def test_sz_flag_exhaustive_over_binary_vectors():
    import itertools
    for v in itertools.product((0, 1), repeat=3):
        assert symmetry_flags(InteractionVector(*v)).conserves_total_sz == (v[0] == v[1])


def test_decomposition_special_cases():
    zero = Coupling(1.0, InteractionVector(0, 0, 0))
    assert phase_aligned_deviation(compose(decompose_propagator(zero, 1.0)), np.eye(4)) < 1e-12
    xxx = Coupling(1.0, ISOTROPIC)
    assert phase_aligned_deviation(compose(decompose_propagator(xxx, 1.0)), propagator(xxx, 1.0)) < 1e-12
