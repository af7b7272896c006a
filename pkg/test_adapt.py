"""
Tests for model assembly, the projection solve and the self-training loops.
"""

import numpy as np
import pytest
from scipy.linalg import subspace_angles

from adapt import ModelKind, assemble_db, meda_features, run_adaptation, run_meda_cg, solve_projection
from boundary_graph import AffinityMatrix, build_graphs
from datamodel import AdaptConfig, LabeledDomain, UnlabeledDomain, make_pair
from errors import AdaptationError, ConfigError, DimensionError, StateError, UnsupportedModelError
from linalg import centering_matrix
from mmd import build_mmd_matrices
from sample_data import SyntheticRecipe, generate_synthetic

# forces every affinity to exp(-tiny) == 1.0
FLAT_SIGMA = 1e12


def shifted_pair(per_class=20, seed=3):
    """
    Two classes at -3 / +3 on feature 0; the target is moved by +100 along feature 1,
    which swamps nearest-neighbour matching in input space.
    """
    rng = np.random.default_rng(seed)
    labels = np.repeat([0, 1], per_class)
    centers = np.array([[-3.0, 0.0, 0.0], [3.0, 0.0, 0.0]])
    source = centers[labels] + 0.5 * rng.standard_normal((labels.size, 3))
    target = centers[labels] + 0.5 * rng.standard_normal((labels.size, 3)) + np.array([0.0, 100.0, 0.0])
    return make_pair(LabeledDomain(source.T, labels),
                     UnlabeledDomain(target.T, true_labels=labels))


def small_pair(seed=5):
    rng = np.random.default_rng(seed)
    ys = np.array([0, 0, 0, 1, 1, 1, 2, 2, 2])
    centers = np.array([[0.0, 0.0], [4.0, 0.0], [0.0, 4.0]])
    source = centers[ys] + 0.6 * rng.standard_normal((9, 2))
    target = centers[ys] + 0.6 * rng.standard_normal((9, 2)) + 0.8
    return make_pair(LabeledDomain(source.T, ys), UnlabeledDomain(target.T, true_labels=ys))


class TestModelKind:
    @pytest.mark.parametrize('text, base, boundary', [
        ('JDA', 'JDA', 'none'),
        ('cdda+db', 'CDDA', 'DB'),
        ('DGA-DA+CG', 'DGA_DA', 'CG'),
        ('dga_da', 'DGA_DA', 'none'),
        ('MEDA+CG', 'MEDA', 'CG'),
    ])
    def test_parse(self, text, base, boundary):
        kind = ModelKind.parse(text)
        assert (kind.base, kind.boundary) == (base, boundary)

    def test_name_round_trip(self):
        assert ModelKind.parse('DGA-DA+DB').name == 'DGA_DA+DB'
        assert ModelKind.parse('JDA').name == 'JDA'

    @pytest.mark.parametrize('text', ['MEDA+DB', 'TCA', 'JDA+XX', 'JDA+CG+DB'])
    def test_unsupported(self, text):
        with pytest.raises(UnsupportedModelError):
            ModelKind.parse(text)


class TestAssembleDb:
    def _matrices(self):
        pair = small_pair().with_pseudo_labels(np.array([0, 0, 1, 1, 1, 2, 2, 2, 0]))
        return pair, build_mmd_matrices(pair)

    def test_jda(self):
        _, m = self._matrices()
        np.testing.assert_array_equal(assemble_db(m, None, ModelKind('JDA')).entries, m.m0 + m.mc_sum)

    def test_cdda_minus_jda_is_repulsion(self):
        _, m = self._matrices()
        diff = assemble_db(m, None, ModelKind('CDDA')).entries - assemble_db(m, None, ModelKind('JDA')).entries
        np.testing.assert_allclose(diff, -(m.m_st + m.m_ts), atol=1e-15)

    def test_meda_has_no_repulsion(self):
        _, m = self._matrices()
        np.testing.assert_array_equal(assemble_db(m, None, ModelKind('MEDA')).entries, m.m0 + m.mc_sum)

    @pytest.mark.parametrize('base', ['JDA', 'CDDA', 'DGA_DA'])
    def test_unit_graphs_reduce_to_baseline(self, base):
        pair, m = self._matrices()
        W = AffinityMatrix(np.ones((18, 18)), sigma=FLAT_SIGMA, neighborhood_p=0)
        graphs = build_graphs(pair, W, m.masks, mode='spirit')
        baseline = assemble_db(m, None, ModelKind(base)).entries
        boundary = 'DB' if base != 'JDA' else 'CG'
        np.testing.assert_array_equal(assemble_db(m, graphs, ModelKind(base, boundary)).entries, baseline)

    def test_boundary_needs_graphs(self):
        _, m = self._matrices()
        with pytest.raises(StateError):
            assemble_db(m, None, ModelKind('CDDA', 'DB'))


class TestSolveProjection:
    def test_constraint_and_shapes(self):
        pair = small_pair().with_pseudo_labels(np.array([0, 0, 0, 1, 1, 1, 2, 2, 2]))
        db = assemble_db(build_mmd_matrices(pair), None, ModelKind('JDA'))
        X = pair.features
        proj = solve_projection(X, db, 2, lam=1.0, ridge=0.0)
        assert proj.matrix.shape == (2, 2)
        assert proj.embedded.shape == (2, 18)
        constraint = proj.matrix.T @ X @ centering_matrix(18) @ X.T @ proj.matrix
        np.testing.assert_allclose(constraint, np.eye(2), atol=1e-8)
        assert proj.objective == pytest.approx(sum(proj.eigenvalues), rel=1e-8)

    def test_dimension_clipped(self):
        pair = small_pair().with_pseudo_labels(np.zeros(9, dtype=int))
        db = assemble_db(build_mmd_matrices(pair), None, ModelKind('JDA'))
        proj = solve_projection(pair.features, db, 50, lam=1.0)
        assert proj.matrix.shape == (2, 2)

    def test_size_mismatch(self):
        with pytest.raises(DimensionError):
            solve_projection(np.zeros((2, 3)), np.eye(4), 1, lam=1.0)

    def test_zero_mmd_gives_principal_subspace(self):
        rng = np.random.default_rng(31)
        X = np.diag([5.0, 4.0, 3.0, 2.0, 1.0]) @ rng.standard_normal((5, 40))
        proj = solve_projection(X, np.zeros((40, 40)), 2, lam=1.0, ridge=0.0)
        scatter = X @ centering_matrix(40) @ X.T
        _, vectors = np.linalg.eigh(scatter)
        top = vectors[:, -2:]
        assert np.max(subspace_angles(proj.matrix, top)) < 1e-6


class TestRunAdaptation:
    @pytest.mark.parametrize('model', ['JDA', 'CDDA', 'CDDA+DB'])
    def test_identical_domains_are_solved_at_once(self, model):
        source = small_pair().source
        pair = make_pair(source, UnlabeledDomain(source.features.copy(), true_labels=source.labels))
        report = run_adaptation(pair, AdaptConfig(dim=2, iterations=3), model)
        assert report.iterations[0].accuracy == 1.0

    def test_jda_settles_within_ten_iterations(self):
        report = run_adaptation(shifted_pair(), AdaptConfig(dim=1, lam=1.0, iterations=10), 'JDA')
        assert report.fixed_point_iteration is not None
        assert report.fixed_point_iteration <= 10

    def test_linear_kernel_tracks_primal(self):
        recipe = SyntheticRecipe(layout='line', pivot=(8.0, 0.0), noise=0.1, shift_value=30.0)
        pair = generate_synthetic(recipe)
        primal = run_adaptation(pair, AdaptConfig(dim=1, lam=1.0, iterations=10), 'JDA')
        linear = run_adaptation(pair, AdaptConfig(dim=1, lam=1.0, iterations=10, kernel='linear'), 'JDA')
        assert abs(primal.final_accuracy - linear.final_accuracy) <= 0.02

    @pytest.mark.parametrize('model', ['JDA', 'CDDA+DB', 'DGA_DA+DB'])
    @pytest.mark.parametrize('scale', [4.0, 0.25])
    def test_scaling_features_with_lam_keeps_labels(self, model, scale):
        # powers of two keep every intermediate exactly proportional
        pair = small_pair()
        scaled = make_pair(LabeledDomain(scale * pair.source.features, pair.source.labels),
                           UnlabeledDomain(scale * pair.target.features, true_labels=pair.target.true_labels))
        base = run_adaptation(pair, AdaptConfig(dim=2, lam=1.0, iterations=4), model)
        moved = run_adaptation(scaled, AdaptConfig(dim=2, lam=scale ** 2, iterations=4), model)
        assert len(base.iterations) == len(moved.iterations)
        for a, b in zip(base.iterations, moved.iterations):
            np.testing.assert_array_equal(a.pseudo_labels, b.pseudo_labels)

    def test_jda_improves_on_shifted_classes(self):
        pair = shifted_pair()
        report = run_adaptation(pair, AdaptConfig(dim=1, lam=1.0, iterations=5), 'JDA')
        assert report.final_accuracy >= 0.95
        assert report.final_accuracy >= report.baseline_accuracy

    @pytest.mark.parametrize('model', ['CDDA', 'CDDA+DB', 'DGA_DA'])
    def test_seeded_from_jda_keeps_classes_apart(self, model):
        pair = shifted_pair()
        cfg = AdaptConfig(dim=1, lam=1.0, iterations=5)
        seeded = pair.with_pseudo_labels(run_adaptation(pair, cfg, 'JDA').predicted_labels)
        report = run_adaptation(seeded, cfg, model)
        assert report.final_accuracy >= 0.9

    def test_report_contents(self):
        pair = small_pair()
        cfg = AdaptConfig(dim=2, iterations=4)
        report = run_adaptation(pair, cfg, 'CDDA+DB')
        assert 1 <= len(report.iterations) <= 4
        assert report.model == 'CDDA+DB'
        assert report.predicted_labels.shape == (9,)
        assert report.embedding.shape == (2, 18)
        assert report.settings['label_alpha'] == pytest.approx(cfg.alpha)
        for record in report.iterations:
            assert 0.0 <= record.accuracy <= 1.0
            assert len(record.eigenvalues) == 2
        if report.fixed_point_iteration is not None:
            assert report.iterations[-1].churn == 0

    def test_deterministic(self):
        pair = small_pair()
        cfg = AdaptConfig(dim=2, iterations=3)
        first = run_adaptation(pair, cfg, 'DGA_DA+DB')
        second = run_adaptation(pair, cfg, 'DGA_DA+DB')
        np.testing.assert_array_equal(first.projection, second.projection)
        np.testing.assert_array_equal(first.predicted_labels, second.predicted_labels)

    @pytest.mark.parametrize('model, boundary', [('JDA', 'CG'), ('CDDA', 'CG'), ('CDDA', 'DB'),
                                                 ('DGA_DA', 'DB')])
    def test_flat_affinity_matches_baseline(self, model, boundary):
        pair = small_pair()
        cfg = AdaptConfig(dim=2, iterations=4, sigma=FLAT_SIGMA)
        base = run_adaptation(pair, cfg, ModelKind(model))
        variant = run_adaptation(pair, cfg, ModelKind(model, boundary))
        assert len(base.iterations) == len(variant.iterations)
        for a, b in zip(base.iterations, variant.iterations):
            np.testing.assert_array_equal(a.pseudo_labels, b.pseudo_labels)
        np.testing.assert_array_equal(base.projection, variant.projection)

    def test_kernel_mode(self):
        pair = small_pair()
        report = run_adaptation(pair, AdaptConfig(dim=3, iterations=2, kernel='rbf'), 'JDA+CG')
        assert report.projection.shape == (18, 3)
        assert report.embedding.shape == (3, 18)

    def test_source_labels_untouched(self):
        pair = small_pair()
        before = pair.source.labels.copy()
        run_adaptation(pair, AdaptConfig(dim=2, iterations=2), 'DGA_DA')
        np.testing.assert_array_equal(pair.source.labels, before)

    def test_seeded_pseudo_labels_are_used(self):
        pair = small_pair().with_pseudo_labels(np.zeros(9, dtype=int))
        report = run_adaptation(pair, AdaptConfig(dim=2, iterations=1), 'JDA')
        assert report.iterations[0].churn == int(np.count_nonzero(report.iterations[0].pseudo_labels))

    def test_failure_carries_context(self):
        # every point coincides, so the median bandwidth of the rbf kernel is zero
        source = LabeledDomain(np.zeros((2, 6)), np.array([0, 0, 1, 1, 2, 2]))
        collapsed = make_pair(source, UnlabeledDomain(np.zeros((2, 4))))
        with pytest.raises(AdaptationError) as info:
            run_adaptation(collapsed, AdaptConfig(dim=2, iterations=2, kernel='rbf'), 'JDA')
        assert info.value.model == 'JDA'
        assert info.value.iteration == 0


class TestMeda:
    def test_boundary_graph_does_not_hurt_separated_classes(self):
        pair = generate_synthetic(SyntheticRecipe(shift_kind='translation', shift_value=0.3,
                                                  noise=0.3, per_class=20))
        cfg = AdaptConfig(kernel='rbf', iterations=5)
        base = run_adaptation(pair, cfg, 'MEDA')
        variant = run_meda_cg(pair, cfg)
        assert variant.final_accuracy >= base.final_accuracy - 0.005

    def test_features_keep_full_dimension(self):
        X = small_pair().features
        assert meda_features(X, 2) is X
        assert meda_features(X, 100) is X

    def test_features_follow_principal_axis(self):
        rng = np.random.default_rng(41)
        X = np.array([[4.0], [0.5], [0.1]]) * rng.standard_normal((3, 30))
        Z = meda_features(X, 1)
        assert Z.shape == (1, 30)
        centred = X - X.mean(axis=1, keepdims=True)
        axis = np.linalg.svd(centred, full_matrices=False)[0][:, 0]
        np.testing.assert_allclose(np.abs(Z[0]), np.abs(axis @ centred), atol=1e-10)

    def test_reduced_dimension_runs(self):
        pair = shifted_pair(per_class=10)
        report = run_adaptation(pair, AdaptConfig(kernel='rbf', dim=1, iterations=2), 'MEDA')
        assert report.predicted_labels.shape == (20,)
        assert report.settings['dim'] == 1

    def test_requires_kernel(self):
        with pytest.raises(ConfigError):
            run_adaptation(small_pair(), AdaptConfig(iterations=1), 'MEDA')

    def test_runs_and_labels(self):
        report = run_adaptation(small_pair(), AdaptConfig(kernel='rbf', iterations=3), 'MEDA')
        assert report.predicted_labels.shape == (9,)
        assert set(report.predicted_labels.tolist()) <= {0, 1, 2}
        assert report.iterations[0].eigenvalues == ()
        assert np.isfinite(report.iterations[0].objective)

    def test_flat_affinity_matches_baseline(self):
        pair = small_pair()
        cfg = AdaptConfig(kernel='linear', iterations=3, sigma=FLAT_SIGMA)
        base = run_adaptation(pair, cfg, 'MEDA')
        variant = run_meda_cg(pair, cfg)
        assert variant.model == 'MEDA+CG'
        for a, b in zip(base.iterations, variant.iterations):
            np.testing.assert_array_equal(a.pseudo_labels, b.pseudo_labels)
