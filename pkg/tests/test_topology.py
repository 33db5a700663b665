"""Topology construction, coupling-matrix algebra, and file round-trips."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from platoonkit import (
    LeaderUnreachableError,
    Topology,
    TopologyError,
    build_named,
    coupling_spectrum,
    gershgorin_certificate,
    has_leader_spanning_tree,
    load_topology,
    save_topology,
)
from platoonkit.topology import NAMED_KINDS


def test_pf_chain_structure():
    t = build_named("PF", 4)
    expected = np.zeros((4, 4))
    expected[1, 0] = expected[2, 1] = expected[3, 2] = 1
    assert np.array_equal(t.adjacency, expected)
    assert np.array_equal(t.pinning, [1, 0, 0, 0])


def test_pf_coupling_is_identity_like():
    spec = coupling_spectrum(build_named("PF", 9))
    assert spec.is_triangular
    assert np.allclose(spec.real_eigenvalues, 1.0)


def test_pfl_pins_everyone():
    t = build_named("PFL", 5)
    assert t.pinning.sum() == 5
    spec = coupling_spectrum(t)
    # first follower has coupling 1, the rest 2
    assert spec.min_eig == pytest.approx(1.0)
    assert spec.max_eig == pytest.approx(2.0)


def test_tpf_pins_first_two():
    t = build_named("TPF", 6)
    assert np.array_equal(t.pinning, [1, 1, 0, 0, 0, 0])
    spec = coupling_spectrum(t)
    assert (spec.min_eig, spec.max_eig) == (1.0, 2.0)


def test_rpf_truncates_at_front():
    t = build_named("rPF", 9, range=5)
    # follower 3 hears only its 2 existing predecessors
    assert t.adjacency[2].sum() == 2
    assert t.adjacency[8].sum() == 5
    assert np.array_equal(t.pinning, [1] + [0] * 8)


def test_bd3_spectrum_matches_characteristic_roots():
    # det(lam I - M) = lam^3 - 5 lam^2 + 6 lam - 1 for the 3-follower
    # bidirectional chain with the first follower pinned
    spec = coupling_spectrum(build_named("BD", 3))
    oracle = np.sort(np.roots([1.0, -5.0, 6.0, -1.0]).real)
    assert np.allclose(spec.real_eigenvalues, oracle, atol=1e-9)
    assert spec.is_symmetric and not spec.is_triangular


@pytest.mark.parametrize("kind,lo,hi", [
    ("PF", 1.0, 1.0),
    ("PFL", 1.0, 2.0),
    ("TPF", 1.0, 2.0),
    ("TPFL", 1.0, 3.0),
    ("rPF", 1.0, 5.0),
    ("rPFL", 1.0, 6.0),
])
def test_directed_eigen_ranges_n9(kind, lo, hi):
    r = 5 if kind.startswith("r") else 1
    spec = coupling_spectrum(build_named(kind, 9, range=r))
    assert spec.min_eig == pytest.approx(lo)
    assert spec.max_eig == pytest.approx(hi)


@pytest.mark.parametrize("kind", NAMED_KINDS)
@pytest.mark.parametrize("n", [1, 2, 5, 9])
def test_named_kinds_leader_reachable_and_gershgorin(kind, n):
    r = min(n, 4)
    t = build_named(kind, n, range=r)
    assert has_leader_spanning_tree(t)
    assert gershgorin_certificate(coupling_spectrum(t))


def test_unpinned_graph_rejected():
    t = Topology(3, np.zeros((3, 3)), np.zeros(3))
    assert not has_leader_spanning_tree(t)
    with pytest.raises(LeaderUnreachableError):
        coupling_spectrum(t)


def test_validation_errors():
    with pytest.raises(TopologyError):
        build_named("PF", 0)
    with pytest.raises(TopologyError):
        build_named("XX", 3)
    with pytest.raises(TopologyError):
        build_named("rBD", 3, range=7)
    with pytest.raises(TopologyError):
        Topology(2, np.array([[0.0, 2.0], [0.0, 0.0]]), np.array([1.0, 0.0]))
    with pytest.raises(TopologyError):
        Topology(2, np.array([[1.0, 0.0], [0.0, 0.0]]), np.array([1.0, 0.0]))


def test_coupling_matrix_row_sums():
    # rows of L sum to zero, so rows of M sum to the pinning entries
    t = build_named("rBDL", 7, range=3)
    assert np.allclose(t.laplacian().sum(axis=1), 0.0)
    assert np.allclose(t.coupling_matrix().sum(axis=1), t.pinning)


def test_save_load_round_trip(tmp_path):
    t = build_named("rBD", 6, range=2)
    path = tmp_path / "topo.txt"
    save_topology(t, path)
    t2 = load_topology(path)
    assert t2.kind_label == "rBD" and t2.range == 2
    assert np.array_equal(t.adjacency, t2.adjacency)
    assert np.array_equal(t.pinning, t2.pinning)


def test_load_rejects_garbage(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("3 1 PF\n0 0 0\n")
    with pytest.raises(TopologyError):
        load_topology(path)


@settings(max_examples=40, deadline=None)
@given(
    kind=st.sampled_from(NAMED_KINDS),
    n=st.integers(min_value=1, max_value=12),
    r=st.integers(min_value=1, max_value=4),
)
def test_build_named_deterministic_and_valid(kind, n, r):
    r = min(r, n)
    a = build_named(kind, n, range=r)
    b = build_named(kind, n, range=r)
    assert np.array_equal(a.adjacency, b.adjacency)
    assert np.array_equal(a.pinning, b.pinning)
    spec = coupling_spectrum(a)
    # leader-reachable named topologies always have strictly positive spectra
    assert spec.min_eig > 0
