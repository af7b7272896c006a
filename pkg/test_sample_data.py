"""
Tests for the synthetic benchmark generator.
"""

import numpy as np
import pytest

from classify import accuracy, nn_classify
from data_loader import load_domain_pair
from errors import ConfigError
from sample_data import SyntheticRecipe, class_centers, feature_digest, generate_synthetic, write_synthetic


def test_default_recipe_shapes():
    pair = generate_synthetic(SyntheticRecipe())
    assert pair.class_count == 3
    assert pair.n_source == 150 and pair.n_target == 150
    assert pair.source.n_features == 2
    assert not pair.has_pseudo_labels
    assert pair.target.true_labels is not None


def test_same_seed_same_pair():
    first = generate_synthetic(SyntheticRecipe(seed=11))
    second = generate_synthetic(SyntheticRecipe(seed=11))
    assert first.features.tobytes() == second.features.tobytes()
    np.testing.assert_array_equal(first.target.true_labels, second.target.true_labels)


def test_different_seed_different_pair():
    first = generate_synthetic(SyntheticRecipe(seed=1))
    second = generate_synthetic(SyntheticRecipe(seed=2))
    assert not np.array_equal(first.features, second.features)


def test_zero_shift_zero_noise():
    recipe = SyntheticRecipe(shift_value=0.0, noise=0.0)
    pair = generate_synthetic(recipe)
    np.testing.assert_allclose(pair.target.features, pair.source.features, atol=1e-12)


def test_zero_rotation_nn_near_perfect():
    pair = generate_synthetic(SyntheticRecipe(shift_value=0.0, noise=0.3))
    pred = nn_classify(pair.source.features, pair.source.labels, pair.target.features)
    assert accuracy(pred, pair.target.true_labels) >= 0.97


def test_rotation_moves_class_means():
    recipe = SyntheticRecipe(shift_kind='rotation', shift_value=90.0, noise=0.0)
    pair = generate_synthetic(recipe)
    centers = class_centers(recipe)
    rotated = np.array([[0.0, -1.0], [1.0, 0.0]]) @ centers.T
    first_target = pair.target.features[:, pair.target.true_labels == 0][:, 0]
    np.testing.assert_allclose(first_target, rotated[:, 0], atol=1e-12)


def test_translation():
    recipe = SyntheticRecipe(shift_kind='translation', shift_value=2.0, noise=0.0, feature_dim=3)
    pair = generate_synthetic(recipe)
    np.testing.assert_allclose(pair.target.features - pair.source.features, 2.0, atol=1e-12)


def test_scale_widens_target_spread():
    recipe = SyntheticRecipe(shift_kind='scale', shift_value=3.0, noise=0.5, per_class=200)
    pair = generate_synthetic(recipe)
    centers = class_centers(recipe)
    source_dev = pair.source.features - centers[pair.source.labels].T
    target_dev = pair.target.features - centers[pair.target.true_labels].T
    assert target_dev.std() > 2.0 * source_dev.std()


@pytest.mark.parametrize('bad', [
    {'class_count': 1}, {'per_class': 0}, {'shift_kind': 'shear'},
    {'shift_kind': 'rotation', 'feature_dim': 1}, {'noise': -1.0},
    {'layout': 'spiral'}, {'pivot': (1.0,)}, {'pivot': ('a', 'b')},
])
def test_invalid_recipe(bad):
    with pytest.raises(ConfigError):
        SyntheticRecipe(**bad)


def test_from_dict_rejects_unknown_keys():
    with pytest.raises(ConfigError):
        SyntheticRecipe.from_dict({'classes': 3})


@pytest.mark.parametrize('fmt', ['csv', 'raw'])
def test_written_files_reload(tmp_path, fmt):
    recipe = SyntheticRecipe(per_class=5)
    source_path, target_path = write_synthetic(recipe, tmp_path, fmt)
    pair, mapping = load_domain_pair(source_path, target_path, fmt)
    original = generate_synthetic(recipe)
    assert pair.features.tobytes() == original.features.tobytes()
    np.testing.assert_array_equal(pair.target.true_labels, original.target.true_labels)
    assert mapping == {0: 0, 1: 1, 2: 2}


def test_line_layout_centers():
    centers = class_centers(SyntheticRecipe(layout='line', center_spread=3.0))
    np.testing.assert_allclose(centers, [[-3.0, 0.0], [0.0, 0.0], [3.0, 0.0]])


def test_rotation_about_pivot():
    recipe = SyntheticRecipe(layout='line', shift_value=90.0, pivot=(3.0, 0.0), noise=0.0)
    pair = generate_synthetic(recipe)
    # the class sitting on the pivot stays put, the one at the origin swings to (3, -3)
    third = pair.target.features[:, pair.target.true_labels == 2][:, 0]
    middle = pair.target.features[:, pair.target.true_labels == 1][:, 0]
    np.testing.assert_allclose(third, [3.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(middle, [3.0, -3.0], atol=1e-12)


def test_pivot_from_json_list():
    recipe = SyntheticRecipe.from_dict({'pivot': [8, 0]})
    assert recipe.pivot == (8.0, 0.0)
    assert recipe.to_dict()['pivot'] == [8.0, 0.0]
    assert hash(recipe) == hash(SyntheticRecipe(pivot=(8.0, 0.0)))


def test_feature_digest_tracks_data():
    recipe = SyntheticRecipe(per_class=5)
    assert feature_digest(generate_synthetic(recipe)) == feature_digest(generate_synthetic(recipe))
    assert feature_digest(generate_synthetic(recipe)) != feature_digest(
        generate_synthetic(SyntheticRecipe(per_class=5, seed=8)))
