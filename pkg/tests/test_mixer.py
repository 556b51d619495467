import numpy as np
import pytest

from comixup.energy import Labeling
from comixup.errors import DimensionMismatch
from comixup.mixer import assemble, upsample_labeling
from tests.test_energy import random_labeling


def test_upsample_single_cell_constant():
    counts = np.zeros((2, 1, 3), dtype=np.int64)
    counts[0, 0, 1] = 2
    counts[1, 0, 0] = counts[1, 0, 2] = 1
    masks = upsample_labeling(Labeling(counts, 2), 6, 6)
    assert masks.shape == (2, 3, 6, 6)
    np.testing.assert_array_equal(masks[0, 1], 1.0)
    np.testing.assert_array_equal(masks[1, 0], 0.5)


def test_upsample_identity_when_grid_matches():
    rng = np.random.default_rng(5)
    lab = random_labeling(rng, 2, 9, 3, 2)
    masks = upsample_labeling(lab, 3, 3)
    z = lab.z.reshape(2, 3, 3, 3)
    np.testing.assert_allclose(masks, z.transpose(0, 3, 1, 2))


def test_upsample_block_replication_oracle():
    rng = np.random.default_rng(7)
    lab = random_labeling(rng, 1, 4, 2, 2)  # 2x2 grid
    masks = upsample_labeling(lab, 4, 4)
    z = lab.z.reshape(1, 2, 2, 2)
    for py in range(4):
        for px in range(4):
            np.testing.assert_allclose(masks[0, :, py, px], z[0, py // 2, px // 2])
    # per-pixel masks remain on the simplex
    np.testing.assert_allclose(masks.sum(axis=1), 1.0)


def test_upsample_rejects_non_square():
    counts = np.zeros((1, 3, 2), dtype=np.int64)
    counts[:, :, 0] = 1
    with pytest.raises(DimensionMismatch):
        upsample_labeling(Labeling(counts, 1), 6, 6)


def test_assemble_identity_mix_is_exact():
    rng = np.random.default_rng(11)
    inputs = rng.random((3, 2, 8, 8))
    labels = np.eye(3)
    counts = np.zeros((3, 4, 3), dtype=np.int64)
    for j in range(3):
        counts[j, :, j] = 2
    result = assemble(inputs, labels, Labeling(counts, 2))
    np.testing.assert_array_equal(result.outputs, inputs)
    np.testing.assert_array_equal(result.soft_labels, labels)


def test_assemble_half_half_mean():
    rng = np.random.default_rng(13)
    inputs = rng.random((2, 1, 4, 4))
    labels = np.array([[1.0, 0.0], [0.0, 1.0]])
    counts = np.ones((2, 4, 2), dtype=np.int64)
    result = assemble(inputs, labels, Labeling(counts, 2))
    mean = inputs.mean(axis=0)
    for j in range(2):
        np.testing.assert_allclose(result.outputs[j], mean)
        np.testing.assert_allclose(result.soft_labels[j], [0.5, 0.5])


def test_assemble_weighted_sum_oracle():
    rng = np.random.default_rng(17)
    inputs = rng.random((4, 3, 6, 6))
    labels = np.eye(4)
    lab = random_labeling(rng, 2, 9, 4, 2)
    result = assemble(inputs, labels, lab)
    masks = upsample_labeling(lab, 6, 6)
    for j in range(2):
        expected = np.zeros((3, 6, 6))
        for i in range(4):
            expected += masks[j, i] * inputs[i]
        np.testing.assert_allclose(result.outputs[j], expected, atol=1e-12)
    # soft labels: label matrix weighted by the output's source ratio
    for j in range(2):
        ratio = lab.z[j].sum(axis=0) / 9
        np.testing.assert_allclose(result.soft_labels[j], ratio @ labels, atol=1e-12)


def test_assemble_convexity_and_label_sums():
    rng = np.random.default_rng(19)
    inputs = rng.random((5, 3, 8, 8))
    labels = np.eye(5)[rng.integers(0, 5, size=5)]
    lab = random_labeling(rng, 5, 16, 5, 2)
    result = assemble(inputs, labels, lab)
    np.testing.assert_allclose(result.soft_labels.sum(axis=1), 1.0, atol=1e-6)
    assert np.all(result.soft_labels >= 0)
    lo = inputs.min(axis=0) - 1e-12
    hi = inputs.max(axis=0) + 1e-12
    for j in range(5):
        assert np.all(result.outputs[j] >= lo)
        assert np.all(result.outputs[j] <= hi)


def test_assemble_dimension_checks():
    inputs = np.zeros((2, 1, 4, 4))
    labels = np.eye(2)
    counts = np.zeros((2, 4, 3), dtype=np.int64)  # labeling says m=3
    counts[:, :, 0] = 1
    with pytest.raises(DimensionMismatch):
        assemble(inputs, labels, Labeling(counts, 1))
