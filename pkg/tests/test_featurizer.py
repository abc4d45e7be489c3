import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from elmloc.dataset import registry_lookup, registry_names
from elmloc.featurizer import (
    FeaturizerSpec,
    abs_activation,
    avg_pool1d_valid,
    batch_flatten,
    conv1d_same,
    feature_width,
    featurize,
    init_featurizer,
    spec_from_dict,
    spec_to_dict,
)


def _spec(filters, **kw):
    filters = np.asarray(filters, dtype=np.float64)
    if filters.ndim == 1:
        filters = filters[:, None]
    return FeaturizerSpec(
        n_filters=filters.shape[1], kernel_size=filters.shape[0],
        filters=filters, filter_bias=np.zeros(filters.shape[1]), **kw
    )


def conv_oracle(x, filters):
    """Same-padded stride-1 cross-correlation, written as plain loops."""
    n_samples, n = x.shape
    k, f = filters.shape
    half = k // 2
    out = np.zeros((n_samples, n, f))
    for s in range(n_samples):
        for i in range(n):
            for j in range(k):
                src = i + j - half
                if 0 <= src < n:
                    for c in range(f):
                        out[s, i, c] += x[s, src] * filters[j, c]
    return out


class TestConv:
    def test_box_kernel_hand_example(self):
        # (1,1,1) over (1,2,3): edges see one zero pad each
        out = conv1d_same(np.array([[1.0, 2.0, 3.0]]), _spec([1.0, 1.0, 1.0]))
        assert out[:, :, 0].tolist() == [[3.0, 6.0, 5.0]]

    def test_identity_kernel(self, rng):
        x = rng.normal(size=(4, 9))
        out = conv1d_same(x, _spec([0.0, 1.0, 0.0]))
        assert out[:, :, 0] == pytest.approx(x)

    def test_matches_loop_oracle(self, rng):
        x = rng.normal(size=(5, 11))
        filters = rng.normal(size=(3, 2))
        spec = _spec(filters)
        assert conv1d_same(x, spec) == pytest.approx(conv_oracle(x, filters), abs=1e-12)

    def test_wide_kernel_matches_oracle(self, rng):
        x = rng.normal(size=(3, 8))
        filters = rng.normal(size=(5, 3))
        spec = _spec(filters)
        assert conv1d_same(x, spec) == pytest.approx(conv_oracle(x, filters), abs=1e-12)

    def test_bias_added_per_filter(self, rng):
        x = rng.normal(size=(2, 6))
        filters = rng.normal(size=(3, 2))
        plain = _spec(filters)
        biased = FeaturizerSpec(
            n_filters=2, kernel_size=3, filters=filters,
            filter_bias=np.array([1.0, -2.0]),
        )
        diff = conv1d_same(x, biased) - conv1d_same(x, plain)
        assert diff[:, :, 0] == pytest.approx(np.ones((2, 6)))
        assert diff[:, :, 1] == pytest.approx(-2 * np.ones((2, 6)))


class TestPool:
    def test_hand_examples(self):
        spec = init_featurizer(0, 8)
        x = np.array([1.0, 3.0, 5.0, 7.0])[None, :, None]
        assert avg_pool1d_valid(x, spec)[0, :, 0].tolist() == [2.0, 6.0]
        # odd length: the trailing element does not form a full window
        x = np.array([1.0, 3.0, 5.0])[None, :, None]
        assert avg_pool1d_valid(x, spec)[0, :, 0].tolist() == [2.0]

    def test_channels_pooled_independently(self, rng):
        spec = init_featurizer(0, 8)
        x = rng.normal(size=(3, 6, 2))
        out = avg_pool1d_valid(x, spec)
        for c in range(2):
            assert out[:, :, c] == pytest.approx(
                avg_pool1d_valid(x[:, :, c:c + 1], spec)[:, :, 0])

    def test_overlapping_windows(self):
        spec = init_featurizer(0, 8, pool_size=3, pool_stride=1)
        x = np.array([0.0, 3.0, 6.0, 9.0])[None, :, None]
        assert avg_pool1d_valid(x, spec)[0, :, 0].tolist() == [3.0, 6.0]


class TestFlatten:
    def test_position_major_filter_minor(self):
        # row layout: (pos0,f0), (pos0,f1), (pos1,f0), ...
        x = np.array([[[1.0, 10.0], [2.0, 20.0], [3.0, 30.0]]])
        assert batch_flatten(x)[0].tolist() == [1.0, 10.0, 2.0, 20.0, 3.0, 30.0]

    def test_bijective(self, rng):
        x = rng.normal(size=(4, 5, 3))
        flat = batch_flatten(x)
        assert flat.shape == (4, 15)
        assert (flat.reshape(4, 5, 3) == x).all()


class TestInit:
    def test_deterministic_in_seed(self):
        a = init_featurizer(7, 50)
        b = init_featurizer(7, 50)
        assert (a.filters == b.filters).all()
        assert not (init_featurizer(8, 50).filters == a.filters).all()

    def test_filter_scale_bound(self):
        # |w| < sqrt(6 / (fan_in + fan_out)) = sqrt(6/5) for 3x2 filters
        limit = 1.0954451150103322
        spec = init_featurizer(0, 100)
        assert spec.filters.shape == (3, 2)
        assert np.abs(spec.filters).max() < limit
        assert (spec.filter_bias == 0.0).all()

    def test_draws_fill_the_range(self):
        # over many seeds the draws should approach the bound from below
        tops = [np.abs(init_featurizer(s, 100).filters).max() for s in range(200)]
        assert max(tops) > 1.0954451150103322 * 0.95

    def test_even_kernel_rejected(self):
        with pytest.raises(ValueError, match="odd"):
            init_featurizer(0, 50, kernel_size=4)

    def test_kernel_wider_than_input_rejected(self):
        with pytest.raises(ValueError):
            init_featurizer(0, 3, kernel_size=5)

    def test_unknown_override_rejected(self):
        with pytest.raises(TypeError):
            init_featurizer(0, 50, stride=3)

    def test_spec_round_trip(self):
        spec = init_featurizer(4, 30, n_filters=3)
        back = spec_from_dict(spec_to_dict(spec))
        assert (back.filters == spec.filters).all()
        assert (back.filter_bias == spec.filter_bias).all()
        assert back.pool_size == spec.pool_size
        assert back.n_aps == spec.n_aps


class TestWidthAndComposition:
    @pytest.mark.parametrize("name", sorted(registry_names()))
    def test_feature_width_every_registered_set(self, name):
        d = registry_lookup(name)
        spec = init_featurizer(0, d.n_aps)
        assert feature_width(d.n_aps, spec) == (d.n_aps // 2) * 2
        x = np.zeros((2, d.n_aps))
        assert featurize(x, spec).shape == (2, feature_width(d.n_aps, spec))

    @given(n=st.integers(min_value=4, max_value=64),
           pool=st.integers(min_value=1, max_value=4),
           stride=st.integers(min_value=1, max_value=4),
           f=st.integers(min_value=1, max_value=3))
    @settings(max_examples=40, deadline=None)
    def test_feature_width_law(self, n, pool, stride, f):
        if pool > n:
            return
        spec = init_featurizer(0, n, pool_size=pool, pool_stride=stride, n_filters=f)
        x = np.zeros((1, n))
        expected = ((n - pool) // stride + 1) * f
        assert feature_width(n, spec) == expected
        assert featurize(x, spec).shape == (1, expected)

    def test_featurize_is_the_stage_composition(self, rng):
        spec = init_featurizer(2, 12)
        x = rng.normal(size=(3, 12))
        staged = batch_flatten(
            avg_pool1d_valid(abs_activation(conv1d_same(x, spec)), spec))
        assert (featurize(x, spec) == staged).all()

    def test_abs_activation(self):
        assert abs_activation(np.array([-2.0, 0.0, 3.0])).tolist() == [2.0, 0.0, 3.0]

    def test_mismatched_input_width_rejected(self):
        spec = init_featurizer(0, 10)
        with pytest.raises(ValueError):
            featurize(np.zeros((2, 11)), spec)
