import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qkevolve.reduce import (
    load_external_features,
    pca_fit,
    pca_slice,
    pca_transform,
    standardize_apply,
    standardize_fit,
    stratified_split,
)


class TestStandardize:
    def test_training_extremes_map_to_unit_interval(self):
        train = np.array([[0.0], [10.0], [5.0]])
        params = standardize_fit(train)
        out = standardize_apply(params, train)
        assert out.min() == -1.0 and out.max() == 1.0

    def test_constant_feature_maps_to_zero(self):
        train = np.array([[3.0, 1.0], [3.0, 2.0]])
        out = standardize_apply(standardize_fit(train), train)
        assert np.all(out[:, 0] == 0.0)

    def test_test_rows_extend_unclipped(self):
        params = standardize_fit(np.array([[0.0], [10.0]]))
        assert standardize_apply(params, np.array([[15.0]]))[0, 0] == 2.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            standardize_fit(np.empty((0, 3)))


class TestPca:
    def test_rank_one_data_captures_all_variance(self):
        t = np.linspace(-2, 2, 30)
        data = np.stack([t, 3.0 * t], axis=1)
        model = pca_fit(data, 1)
        total = np.var(data, axis=0, ddof=1).sum()
        assert model.explained_variance[0] == pytest.approx(total, rel=1e-10)

    def test_full_rank_transform_is_isometry(self):
        rng = np.random.default_rng(7)
        data = rng.normal(size=(30, 5))
        model = pca_fit(data, 5)
        proj = pca_transform(model, data)
        d_orig = np.linalg.norm(data[:, None] - data[None, :], axis=2)
        d_proj = np.linalg.norm(proj[:, None] - proj[None, :], axis=2)
        assert np.allclose(d_orig, d_proj, atol=1e-8)

    def test_reconstruction_error_non_increasing_in_r(self):
        rng = np.random.default_rng(11)
        data = rng.normal(size=(20, 10))
        errors = []
        for r in range(1, 11):
            model = pca_fit(data, r)
            proj = pca_transform(model, data)
            recon = proj @ model.components + model.mean
            errors.append(np.linalg.norm(data - recon))
        assert all(b <= a + 1e-9 for a, b in zip(errors, errors[1:]))

    def test_orthonormality_and_variance_ordering(self):
        rng = np.random.default_rng(13)
        for _ in range(200):
            n = int(rng.integers(3, 25))
            d = int(rng.integers(2, 15))
            r = int(rng.integers(1, min(n - 1, d) + 1))
            model = pca_fit(rng.normal(size=(n, d)), r)
            gram = model.components @ model.components.T
            assert np.allclose(gram, np.eye(r), atol=1e-8)
            assert np.all(np.diff(model.explained_variance) <= 1e-10)

    def test_out_of_range_components_clamped(self, caplog):
        rng = np.random.default_rng(17)
        data = rng.normal(size=(5, 3))
        model = pca_fit(data, 50)
        assert model.components.shape[0] == 3
        model = pca_fit(data, 0)
        assert model.components.shape[0] == 1

    def test_deterministic_including_signs(self):
        rng = np.random.default_rng(19)
        data = rng.normal(size=(12, 6))
        m1, m2 = pca_fit(data, 4), pca_fit(data, 4)
        assert np.array_equal(m1.components, m2.components)
        # fixed convention: the largest loading of each component is positive
        peaks = m1.components[np.arange(4), np.abs(m1.components).argmax(axis=1)]
        assert np.all(peaks > 0)

    def test_slice_equals_refit(self):
        rng = np.random.default_rng(23)
        data = rng.normal(size=(15, 8))
        full = pca_fit(data, 8)  # full rank, as the evolution cache fits it
        for r in (1, 3, 7, 20):
            sliced = pca_slice(full, r)
            refit = pca_fit(data, r)
            assert np.array_equal(sliced.components, refit.components)
            assert np.array_equal(sliced.explained_variance, refit.explained_variance)

    def test_transform_dimension_mismatch(self):
        model = pca_fit(np.random.default_rng(2).normal(size=(6, 4)), 2)
        with pytest.raises(ValueError, match="mismatch"):
            pca_transform(model, np.zeros((3, 5)))

    def test_too_few_rows_rejected(self):
        with pytest.raises(ValueError):
            pca_fit(np.ones((1, 4)), 1)


class TestStratifiedSplit:
    def test_exact_proportions(self):
        y = np.array([0] * 60 + [1] * 40)
        x = np.zeros((100, 2))
        train, test = stratified_split(x, y, 0.25, seed=1)
        assert (y[test] == 0).sum() == 15
        assert (y[test] == 1).sum() == 10
        assert train.size + test.size == 100
        assert np.intersect1d(train, test).size == 0

    def test_same_seed_identical(self):
        rng = np.random.default_rng(29)
        y = rng.integers(0, 2, 40)
        y[:2] = [0, 1]
        x = rng.normal(size=(40, 3))
        a = stratified_split(x, y, 0.25, seed=9)
        b = stratified_split(x, y, 0.25, seed=9)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])

    def test_balanced_eight_samples(self):
        y = np.array([0, 0, 0, 0, 1, 1, 1, 1])
        _, test = stratified_split(np.zeros((8, 1)), y, 0.25, seed=0)
        # floor(4 * 0.25) = 1 per class, no remainder
        assert (y[test] == 0).sum() == 1
        assert (y[test] == 1).sum() == 1

    def test_remainder_goes_to_largest_class(self):
        y = np.array([0] * 7 + [1] * 3)
        _, test = stratified_split(np.zeros((10, 1)), y, 0.25, seed=0)
        # target floor(10*0.25)=2; floors are 1 and 0; remainder 1 -> class 0
        assert (y[test] == 0).sum() == 2
        assert (y[test] == 1).sum() == 0

    def test_small_class_rejected(self):
        y = np.array([0, 1, 1, 1])
        with pytest.raises(ValueError):
            stratified_split(np.zeros((4, 1)), y, 0.25, seed=0)

    @given(
        st.lists(st.integers(0, 1), min_size=8, max_size=60),
        st.integers(0, 1000),
        st.sampled_from([0.2, 0.25, 0.4]),
    )
    @settings(max_examples=80, deadline=None)
    def test_proportions_within_one_sample(self, labels, seed, fraction):
        y = np.array(labels)
        if (y == 0).sum() < 2 or (y == 1).sum() < 2:
            return
        x = np.zeros((y.size, 1))
        train, test = stratified_split(x, y, fraction, seed=seed)
        assert np.array_equal(np.sort(np.concatenate([train, test])), np.arange(y.size))
        for c in (0, 1):
            expected = (y == c).sum() * fraction
            got = (y[test] == c).sum()
            assert abs(got - expected) <= 1.0


class TestNoLeakage:
    def test_fitted_params_ignore_test_rows(self):
        rng = np.random.default_rng(31)
        x = rng.normal(size=(40, 6))
        y = np.array([0, 1] * 20)
        train, test = stratified_split(x, y, 0.25, seed=4)
        perturbed = x.copy()
        perturbed[test] += rng.normal(scale=10.0, size=(test.size, 6))

        p1, p2 = standardize_fit(x[train]), standardize_fit(perturbed[train])
        assert p1.feature_min.tobytes() == p2.feature_min.tobytes()
        assert p1.feature_max.tobytes() == p2.feature_max.tobytes()
        m1 = pca_fit(standardize_apply(p1, x[train]), 3)
        m2 = pca_fit(standardize_apply(p2, perturbed[train]), 3)
        assert m1.components.tobytes() == m2.components.tobytes()
        assert m1.mean.tobytes() == m2.mean.tobytes()


class TestLoadExternalFeatures:
    def write(self, tmp_path, text, name="features.csv"):
        path = tmp_path / name
        path.write_text(text)
        return path

    def header(self, d=64):
        return ",".join([f"f{i}" for i in range(d)] + ["label"])

    def test_happy_path(self, tmp_path):
        rows = [",".join(["0.5"] * 64) + f",{label}" for label in (0, 0, 1, 1)]
        fm = load_external_features(self.write(tmp_path, self.header() + "\n" + "\n".join(rows)))
        assert fm.rows.shape == (4, 64)
        assert fm.labels.tolist() == [0, 0, 1, 1]

    def test_ragged_row_reports_row_number(self, tmp_path):
        rows = [",".join(["0.1"] * 64) + ",0", ",".join(["0.1"] * 63) + ",1"]
        path = self.write(tmp_path, self.header() + "\n" + "\n".join(rows))
        with pytest.raises(ValueError, match="row 3"):
            load_external_features(path)

    def test_empty_file_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="empty"):
            load_external_features(self.write(tmp_path, ""))

    def test_header_only_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="no data rows"):
            load_external_features(self.write(tmp_path, self.header()))

    def test_missing_label_column_rejected(self, tmp_path):
        path = self.write(tmp_path, "f0,f1\n0.1,0.2")
        with pytest.raises(ValueError, match="label"):
            load_external_features(path)

    def test_unknown_label_rejected(self, tmp_path):
        path = self.write(tmp_path, "f0,label\n0.1,2")
        with pytest.raises(ValueError, match="row 2.*unknown label"):
            load_external_features(path)

    def test_non_numeric_feature_rejected(self, tmp_path):
        path = self.write(tmp_path, "f0,label\nabc,1")
        with pytest.raises(ValueError, match="row 2"):
            load_external_features(path)

    def test_values_returned_exactly_as_stored(self, tmp_path):
        path = self.write(tmp_path, "f0,f1,label\n0.25,-3.5,1\n1.0,2.0,0")
        fm = load_external_features(path)
        assert fm.rows.tolist() == [[0.25, -3.5], [1.0, 2.0]]
