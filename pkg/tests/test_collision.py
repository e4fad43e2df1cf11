import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from catline import collision
from catline.collision import (
    CollisionParams,
    CollisionTrace,
    ReservoirSpec,
    collide_once,
    detect_steady_state,
    homogenization_target,
    joint_hamiltonian,
    prepare_unit,
    reservoir_schedule,
    run_collisions,
)
from catline.dynamics import kerr_cat_hamiltonian
from catline.errors import DimensionError, NumericalFailure
from catline.operators import DensityMatrix
from catline.states import auto_dim, bloch_vector, cat_basis, logical_state, plus_state

PI = math.pi


def lossless(**kw):
    kw.setdefault("probe_dissipation", False)
    return CollisionParams(**kw)


def test_param_validation():
    with pytest.raises(ValueError):
        ReservoirSpec(0.0, weight=1.5)
    with pytest.raises(ValueError):
        CollisionParams(eps_x=-1.0)
    with pytest.raises(ValueError):
        CollisionParams(tau=0.0)
    with pytest.raises(ValueError):
        CollisionParams(n_collisions=0)
    with pytest.raises(ValueError, match="weights must sum to 1"):
        CollisionParams(reservoirs=(ReservoirSpec(0, weight=0.6), ReservoirSpec(PI, weight=0.5)))
    with pytest.raises(ValueError):
        CollisionParams(mixing="shuffled")
    with pytest.raises(ValueError):
        CollisionParams(reservoir_model="qutrit")


@pytest.mark.parametrize("model", ["logical-2level", "full-fock"])
def test_joint_hamiltonian_structure(scaled, model):
    d = auto_dim(1.0)
    p = scaled.replace(eps2=scaled.K)  # alpha = 1 keeps the full-fock space small
    b = cat_basis(1.0, d)
    cp = CollisionParams(eps_x=2e-3, reservoir_model=model)
    h = joint_hamiltonian(p, cp, b)
    assert h.dims == (d, 2 if model == "logical-2level" else d)
    assert h.is_hermitian(1e-12)
    h0 = joint_hamiltonian(p, CollisionParams(eps_x=0.0, reservoir_model=model), b)
    du = h.dims[1]
    hp = kerr_cat_hamiltonian(p, d).data
    # eps_x = 0 leaves a sum of probe and unit terms with no coupling
    assert np.allclose(h0.data, np.kron(hp, np.eye(du)) + np.kron(np.eye(d), _unit_free(p, model, d)),
                       atol=1e-15, rtol=0)
    # exchange: |C->|C+> -> eps_x |C+>|C->
    p_vec, m_vec = b.c_plus.amplitudes, b.c_minus.amplitudes
    if model == "logical-2level":
        u_plus, u_minus = np.array([1, 0]), np.array([0, 1])
    else:
        u_plus, u_minus = p_vec, m_vec
    out = (h.data - h0.data) @ np.kron(m_vec, u_plus)
    assert np.allclose(out, 2e-3 * np.kron(p_vec, u_minus), atol=1e-15)


def _unit_free(p, model, d):
    if model == "logical-2level":
        return np.zeros((2, 2))
    return p.delta_ir * np.diag(np.arange(d))


def test_prepare_unit_examples(scaled_basis):
    b = scaled_basis
    assert np.allclose(prepare_unit(ReservoirSpec(0.0), "logical-2level", b).data, np.diag([1, 0]))
    assert np.allclose(prepare_unit(ReservoirSpec(PI), "logical-2level", b).data, np.diag([0, 1]), atol=1e-15)
    u = prepare_unit(ReservoirSpec(PI / 2, PI / 2), "logical-2level", b)
    x, y, z = bloch_vector(u, b)
    # e^{-i phi} amplitude convention puts this state on the -y pole
    assert abs(x) < 1e-12 and abs(z) < 1e-12 and abs(abs(y) - 1) < 1e-12
    full = prepare_unit(ReservoirSpec(0.0), "full-fock", b)
    assert np.allclose(full.data, b.c_plus.dm().data)
    with pytest.raises(ValueError):
        prepare_unit(ReservoirSpec(0.0), "other", b)


@given(st.floats(0, 2 * PI), st.floats(-PI, PI), st.sampled_from(["logical-2level", "full-fock"]))
def test_prepared_units_are_pure(theta, phi, model):
    b = cat_basis(1.0, auto_dim(1.0))
    u = prepare_unit(ReservoirSpec(theta, phi), model, b)
    assert abs(u.purity() - 1) <= 1e-12


def test_uncoupled_collision_keeps_z(scaled, scaled_basis):
    b = scaled_basis
    cp = lossless(eps_x=0.0)
    probe = logical_state(b, 1.0, 0.3).dm()
    unit = prepare_unit(ReservoirSpec(2.0), cp.reservoir_model, b)
    z0 = bloch_vector(probe, b)[2]
    resonant = scaled.replace(delta_ar=0.0, delta_ir=0.0)
    out = collide_once(probe, unit, joint_hamiltonian(resonant, cp, b), resonant, cp)
    assert isinstance(out, DensityMatrix)
    assert abs(bloch_vector(out, b)[2] - z0) <= 1e-10
    assert abs(out.tr() - 1) <= 1e-10
    # detuning mixes the cats with nearby Fock components at second order
    out = collide_once(probe, unit, joint_hamiltonian(scaled, cp, b), scaled, cp)
    assert abs(bloch_vector(out, b)[2] - z0) <= 1e-9


def test_homogenization_fixed_point(scaled, scaled_basis):
    b = scaled_basis
    cp = lossless()
    theta, phi = 2.1, 0.4
    probe = logical_state(b, theta, phi).dm()
    unit = prepare_unit(ReservoirSpec(theta, phi), cp.reservoir_model, b)
    out = collide_once(probe, unit, joint_hamiltonian(scaled, cp, b), scaled, cp)
    assert abs(bloch_vector(out, b)[2] - bloch_vector(probe, b)[2]) <= 1e-6


def test_collide_once_layout_check(scaled, scaled_basis):
    cp = lossless()
    h = joint_hamiltonian(scaled, cp, scaled_basis)
    with pytest.raises(DimensionError):
        collide_once(scaled_basis.c_plus.dm(), DensityMatrix(np.eye(3) / 3), h, scaled, cp)


def test_schedule_largest_remainder():
    cp = CollisionParams(reservoirs=(ReservoirSpec(0, weight=0.8), ReservoirSpec(PI, weight=0.2)))
    s = reservoir_schedule(cp, 10)
    assert s.tolist() == [0, 0, 1, 0, 0, 0, 0, 1, 0, 0]
    eq = CollisionParams(reservoirs=(ReservoirSpec(0, weight=0.5), ReservoirSpec(PI, weight=0.5)))
    assert reservoir_schedule(eq, 6).tolist() == [0, 1, 0, 1, 0, 1]
    assert reservoir_schedule(eq, 3, start=3).tolist() == [1, 0, 1]


@given(st.lists(st.integers(1, 20), min_size=1, max_size=5), st.integers(1, 300))
def test_round_robin_tracks_weights(raw, n):
    w = np.array(raw, dtype=float) / sum(raw)
    w[-1] = 1.0 - w[:-1].sum()
    cp = CollisionParams(reservoirs=tuple(ReservoirSpec(0.0, weight=float(x)) for x in w))
    s = reservoir_schedule(cp, n)
    for k in (n // 3, n):
        if k == 0:
            continue
        counts = np.bincount(s[:k], minlength=len(w))
        assert np.all(np.abs(counts - k * w) < 1.0 + 1e-9)


def test_seeded_random_schedule():
    specs = (ReservoirSpec(0, weight=0.3), ReservoirSpec(PI, weight=0.7))
    a = reservoir_schedule(CollisionParams(reservoirs=specs, mixing="seeded-random", seed=5), 4000)
    b = reservoir_schedule(CollisionParams(reservoirs=specs, mixing="seeded-random", seed=5), 4000)
    c = reservoir_schedule(CollisionParams(reservoirs=specs, mixing="seeded-random", seed=6), 4000)
    assert np.array_equal(a, b) and not np.array_equal(a, c)
    assert abs(np.mean(a == 1) - 0.7) < 0.03
    tail = reservoir_schedule(CollisionParams(reservoirs=specs, mixing="seeded-random", seed=5), 1000, start=3000)
    assert np.array_equal(tail, a[3000:])


def test_detector_examples():
    assert detect_steady_state(np.full(500, 0.3), 50, 1e-6) == (50, pytest.approx(0.3))
    osc = 0.5 * (-1.0) ** np.arange(1000)
    assert detect_steady_state(osc, 20, 0.1) is None
    assert detect_steady_state(np.zeros(10), 20, 0.1) is None
    with pytest.raises(ValueError):
        detect_steady_state(np.zeros(10), 1, 0.1)
    tr = CollisionTrace(np.arange(101, 201), np.zeros(100, int), np.ones(100), np.zeros(100), np.ones(100))
    assert detect_steady_state(tr, 10, 1e-9)[0] == 110


@given(st.lists(st.floats(-1, 1), min_size=2, max_size=60), st.integers(2, 10), st.floats(1e-4, 1))
def test_detector_matches_definition(z, window, tol):
    z = np.asarray(z)
    hit = detect_steady_state(z, window, tol)
    expected = None
    for k in range(window - 1, len(z)):
        if max(abs(z[k] - z[k - j]) for j in range(1, window)) < tol:
            expected = (k + 1, float(np.mean(z[k - window + 1 : k + 1])))
            break
    if expected is None:
        assert hit is None
    else:
        assert hit[0] == expected[0] and hit[1] == pytest.approx(expected[1], abs=1e-12)


@pytest.mark.parametrize("mixing", ["deterministic-roundrobin", "seeded-random"])
def test_split_run_is_bit_identical(scaled, scaled_basis, mixing):
    specs = (ReservoirSpec(0.0, weight=0.7), ReservoirSpec(PI, 0.3, weight=0.3))
    full_cp = CollisionParams(n_collisions=60, reservoirs=specs, mixing=mixing, seed=11)
    probe0 = plus_state(scaled_basis).dm()
    full = run_collisions(probe0, scaled, full_cp, scaled_basis)
    first = run_collisions(probe0, scaled, CollisionParams(**{**full_cp.__dict__, "n_collisions": 25}), scaled_basis)
    second = run_collisions(first.final_state, scaled,
                            CollisionParams(**{**full_cp.__dict__, "n_collisions": 35}), scaled_basis, start=25)
    assert np.array_equal(np.r_[first.z, second.z], full.z)
    assert np.array_equal(np.r_[first.reservoir_index, second.reservoir_index], full.reservoir_index)
    assert np.array_equal(np.r_[first.k, second.k], full.k)
    assert np.array_equal(second.final_state.data, full.final_state.data)


def test_identical_units_are_interchangeable(scaled, scaled_basis):
    probe0 = plus_state(scaled_basis).dm()
    one = run_collisions(probe0, scaled, lossless(n_collisions=40), scaled_basis)
    twin = (ReservoirSpec(0.0, weight=0.5), ReservoirSpec(0.0, weight=0.5))
    for mixing in ("deterministic-roundrobin", "seeded-random"):
        two = run_collisions(probe0, scaled, lossless(n_collisions=40, reservoirs=twin, mixing=mixing),
                             scaled_basis)
        assert np.array_equal(one.z, two.z)


def test_run_rejects_wrong_probe(scaled, scaled_basis):
    with pytest.raises(DimensionError):
        run_collisions(DensityMatrix(np.eye(4) / 4), scaled, lossless(n_collisions=2), scaled_basis)


def test_failure_keeps_partial_trace(scaled, scaled_basis, monkeypatch):
    calls = {"n": 0}
    real = collision._Collider.__call__

    def flaky(self, probe, unit):
        calls["n"] += 1
        out = real(self, probe, unit)
        if calls["n"] == 4:
            out = out * np.nan
        return out

    monkeypatch.setattr(collision._Collider, "__call__", flaky)
    with pytest.raises(NumericalFailure) as info:
        run_collisions(plus_state(scaled_basis).dm(), scaled, lossless(n_collisions=10), scaled_basis)
    assert len(info.value.trace) == 4
    assert info.value.trace.k.tolist() == [1, 2, 3, 4]


def test_z_stays_physical(scaled, scaled_basis):
    tr = run_collisions(plus_state(scaled_basis).dm(), scaled, CollisionParams(n_collisions=200), scaled_basis)
    assert np.all(np.abs(tr.z) <= 1 + 1e-8)
    assert np.allclose(tr.z, tr.p_e - tr.p_g, atol=1e-15)


def test_detector_stops_run_early(scaled, scaled_basis):
    tr = run_collisions(plus_state(scaled_basis).dm(), scaled, lossless(), scaled_basis, detector=(200, 1e-3))
    assert tr.steady_state_index == len(tr) < 5000
    assert tr.z_ss == pytest.approx(detect_steady_state(tr, 200, 1e-3)[1])


@pytest.mark.parametrize("theta", [0.0, PI / 2, PI])
def test_homogenization_targets(scaled, scaled_basis, theta):
    tr = run_collisions(plus_state(scaled_basis).dm(), scaled,
                        lossless(reservoirs=(ReservoirSpec(theta),)), scaled_basis)
    assert abs(tr.p_e[-1] - homogenization_target(ReservoirSpec(theta))) <= 0.05


def test_monotone_toward_north_pole(scaled, scaled_basis):
    tr = run_collisions(plus_state(scaled_basis).dm(), scaled, lossless(n_collisions=1500), scaled_basis)
    burn = int(0.05 * len(tr))
    assert np.min(np.diff(tr.z[burn:])) >= -1e-6


def test_full_fock_agrees_with_logical_model(scaled):
    p = scaled.replace(eps2=scaled.K)
    b = cat_basis(1.0, auto_dim(1.0))
    probe0 = plus_state(b).dm()
    kw = dict(n_collisions=8, eps_x=2e-3, probe_dissipation=False)
    logical = run_collisions(probe0, p, CollisionParams(**kw), b)
    fock = run_collisions(probe0, p, CollisionParams(reservoir_model="full-fock", **kw), b)
    assert np.max(np.abs(logical.z - fock.z)) <= 1e-3


def test_seeded_random_equal_weights_agree_across_seeds(scaled, scaled_basis):
    # a random stream never settles pointwise; its steady-state value is the
    # time average after the 5% burn-in
    specs = (ReservoirSpec(0.0, weight=0.5), ReservoirSpec(PI, weight=0.5))
    probe0 = plus_state(scaled_basis).dm()

    def z_ss(seed):
        cp = lossless(reservoirs=specs, mixing="seeded-random", seed=seed)
        tr = run_collisions(probe0, scaled, cp, scaled_basis)
        return float(np.mean(tr.z[len(tr) // 20 :]))

    for a in range(5):
        assert abs(z_ss(2 * a) - z_ss(2 * a + 1)) <= 0.1
