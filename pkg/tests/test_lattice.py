import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from rwrelab.lattice import (BACK, FRONT, SIDE, BoxSpec, DimensionError, NormalizationError,
                             OrientationError, SlabSpec, TiltedBoxSpec, box_contains,
                             build_rotation, canonical_directions, exit_classification,
                             outer_boundary, project_P, project_Q)


def test_canonical_directions_d2():
    dirs = canonical_directions(2)
    assert [dr.vector for dr in dirs] == [(1, 0), (0, 1), (-1, 0), (0, -1)]
    assert [dr.index for dr in dirs] == [1, 2, 3, 4]


def test_canonical_directions_d3_negation_pairs():
    dirs = canonical_directions(3)
    assert len({dr.vector for dr in dirs}) == 6
    for i in range(3):
        assert np.array_equal(np.asarray(dirs[i + 3]), -np.asarray(dirs[i]))
        assert dirs[i].opposite() == dirs[i + 3]


def test_canonical_directions_rejects_d1():
    with pytest.raises(DimensionError):
        canonical_directions(1)


def test_rotation_identity_for_e1():
    assert np.array_equal(build_rotation([1.0, 0.0, 0.0]), np.eye(3))


@pytest.mark.parametrize("l", [[0.0, 1.0], [1 / np.sqrt(2), 1 / np.sqrt(2)], [-1.0, 0.0]])
def test_rotation_defining_properties(l):
    R = build_rotation(l)
    assert np.abs(R.T @ R - np.eye(2)).max() < 1e-12
    assert np.abs(R @ [1.0, 0.0] - l).max() < 1e-12


def test_rotation_rejects_non_unit():
    with pytest.raises(NormalizationError):
        build_rotation([1.0, 1.0])


@pytest.mark.parametrize("d", [2, 3, 4])
def test_rotation_random_battery(d):
    rng = np.random.default_rng(d)
    for _ in range(1000):
        l = rng.normal(size=d)
        l /= np.linalg.norm(l)
        R = build_rotation(l)
        assert np.abs(R.T @ R - np.eye(d)).max() < 1e-12
        assert np.abs(R[:, 0] - l).max() < 1e-12


def test_box_contains_examples():
    box = BoxSpec((1, 0), 2, 3)
    assert box_contains(box, (1, 0))
    assert not box_contains(box, (2, 0))
    assert not box_contains(box, (0, -3))


def test_exit_classification_examples():
    assert exit_classification(BoxSpec((1, 0), 2, 3), (2, 0)) == FRONT
    assert exit_classification(BoxSpec((1, 0), 2, 3), (-2, 1)) == BACK
    assert exit_classification(BoxSpec((1, 0), 2, 2), (0, 2)) == SIDE
    with pytest.raises(ValueError):
        exit_classification(BoxSpec((1, 0), 2, 3), (0, 0))


def _unit(draw_vec):
    v = np.asarray(draw_vec, dtype=float)
    return v / np.linalg.norm(v)


angles = st.floats(-1.5, 1.5, allow_nan=False)


@given(theta=angles, L=st.floats(1.5, 6), Lt=st.floats(1.5, 6))
def test_exit_labels_partition_outer_boundary(theta, L, Lt):
    box = BoxSpec((np.cos(theta), np.sin(theta)), L, Lt)
    sites = box.bounding_sites()
    if len(sites) == 0:
        return
    labels = [exit_classification(box, x) for x in outer_boundary(sites)]
    assert set(labels) <= {FRONT, BACK, SIDE}
    assert len(labels) == len(outer_boundary(sites))


@given(v=arrays(float, 3, elements=st.floats(-1, 1)).filter(lambda v: np.linalg.norm(v) > 0.1),
       L=st.floats(1.5, 6), Lt=st.floats(1.5, 6), perm=st.permutations([1, 2]),
       signs=st.tuples(st.sampled_from([-1, 1]), st.sampled_from([-1, 1])))
def test_membership_independent_of_rotation_choice(v, L, Lt, perm, signs):
    # any transverse signed permutation keeps the first column and the L-infinity cross-section
    l = v / np.linalg.norm(v)
    R = build_rotation(l)
    S = np.zeros((3, 3))
    S[0, 0] = 1
    S[perm[0], 1], S[perm[1], 2] = signs
    a, b = BoxSpec(tuple(l), L, Lt), BoxSpec(tuple(l), L, Lt, rotation=R @ S)
    grid = np.stack(np.meshgrid(*[np.arange(-8, 9)] * 3, indexing="ij"), -1).reshape(-1, 3)
    half = np.array([L, Lt, Lt])
    clear = np.all(np.abs(np.abs(a.rotated(grid)) - half) >= 1e-6, axis=1)
    assert np.array_equal(a.contains(grid)[clear], b.contains(grid)[clear])


def test_projection_examples():
    assert np.allclose(project_P((3, 5), (1, 0)), (3, 0))
    assert np.allclose(project_Q((3, 5), (1, 0)), (0, 5))
    v = (1 / np.sqrt(2), 1 / np.sqrt(2))
    assert np.allclose(project_P((2, 0), v), (2, 2), atol=1e-12)
    assert np.allclose(project_Q((2, 0), v), (0, -2), atol=1e-12)
    assert np.array_equal(project_P((0, 7), v), (0, 0))
    assert np.array_equal(project_Q((0, 7), v), (0, 7))


def test_projection_rejects_backward_direction():
    with pytest.raises(OrientationError):
        project_P((1, 1), (-1, 0))


@given(z=arrays(np.int64, 3, elements=st.integers(-50, 50)),
       v=arrays(float, 3, elements=st.floats(-1, 1)).filter(lambda v: v[0] > 0.05))
def test_projection_decomposition(z, v):
    v = v / np.linalg.norm(v)
    P, Q = project_P(z, v), project_Q(z, v)
    assert np.array_equal(P + Q, z.astype(float)) or np.abs(P + Q - z).max() < 1e-12
    assert abs(Q[0]) < 1e-12


def test_slab_and_tilted_box():
    slab = SlabSpec(0.5, 16)
    assert slab.contains((0, 3)) and not slab.contains((-4, 0)) and not slab.contains((16, 0))
    tb = TiltedBoxSpec((0, 0), 0.5, 16, (1, 0))
    assert tb.contains((10, 3)) and not tb.contains((10, 4)) and not tb.contains((-4, 0))
    sites = tb.sites()
    assert all(tb.contains(s) for s in sites)
    front = tb.front_boundary()
    assert len(front) > 0 and np.all(front[:, 0] >= 16)
    with pytest.raises(OrientationError):
        TiltedBoxSpec((0, 0), 0.5, 16, (-1, 0))
