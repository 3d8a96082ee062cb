import numpy as np
import pytest

from deshadow_oct.error.exceptions import PlacementError, ValidationError
from deshadow_oct.imaging.bscan import BScan, Layer, MaskKind, ShadowMask
from deshadow_oct.phantom import (
    PhantomSpec,
    ShadowSettings,
    ShadowSpec,
    StartMode,
    apply_shadows,
    attenuation,
    auto_rois,
    generate_phantom,
    inject_shadow,
    jitter_spec,
    make_validation_pair,
    place_shadows,
)


class TestGeneratePhantom:
    def test_deterministic_per_seed(self):
        a, map_a = generate_phantom(PhantomSpec(rng_seed=7))
        b, map_b = generate_phantom(PhantomSpec(rng_seed=7))
        c, _ = generate_phantom(PhantomSpec(rng_seed=8))
        np.testing.assert_array_equal(a.pixels, b.pixels)
        np.testing.assert_array_equal(map_a, map_b)
        assert not np.array_equal(a.pixels, c.pixels)

    def test_layers_are_ordered_top_to_bottom(self):
        spec = PhantomSpec()
        img, layer_map = generate_phantom(spec)
        assert img.shape == (256, 256)
        assert layer_map.min() == 0 and layer_map.max() == spec.n_layers - 1
        assert np.all(np.diff(layer_map, axis=0) >= 0)

    def test_noise_free_layer_means(self):
        spec = PhantomSpec(speckle_std=0.0, boundary_wobble_amplitude=0.0)
        img, layer_map = generate_phantom(spec)
        for k, mean in enumerate(spec.layer_mean_intensities):
            assert np.allclose(img.pixels[layer_map == k], mean)

    def test_surface_rows_match_layer_map(self):
        spec = PhantomSpec(rng_seed=4)
        _, layer_map = generate_phantom(spec)
        first_tissue_row = (layer_map >= 1).argmax(axis=0)
        np.testing.assert_array_equal(first_tissue_row, np.ceil(spec.surface_rows()))
        assert spec.surface_row() == first_tissue_row.max()

    def test_degenerate_geometry(self):
        spec = PhantomSpec(height=16, boundary_wobble_amplitude=3.0)
        with pytest.raises(ValidationError, match="Degenerate"):
            generate_phantom(spec)

    def test_boundaries_must_increase(self):
        with pytest.raises(ValueError):
            PhantomSpec(layer_boundaries=(0.5, 0.4, 0.6, 0.7, 0.8))

    def test_jitter_keeps_spec_valid(self):
        spec = PhantomSpec()
        jittered = jitter_spec(spec, seed=3, mean_jitter=0.05, boundary_jitter=0.01)
        assert jittered.rng_seed == 3
        assert jittered.layer_mean_intensities != spec.layer_mean_intensities
        assert all(0.0 <= m <= 1.0 for m in jittered.layer_mean_intensities)
        assert list(jittered.layer_boundaries) == sorted(jittered.layer_boundaries)

    def test_zero_jitter_only_reseeds(self):
        spec = PhantomSpec()
        jittered = jitter_spec(spec, seed=11)
        assert jittered.layer_mean_intensities == spec.layer_mean_intensities
        assert jittered.layer_boundaries == spec.layer_boundaries


class TestShadows:
    def test_attenuation_formula(self):
        offsets = np.array([0.0, 100.0, 200.0])
        np.testing.assert_allclose(attenuation(offsets, 100.0), np.exp([0.0, -1.0, -2.0]))

    def test_inject_shadow_on_flat_image(self):
        img = BScan(pixels=np.full((40, 30), 0.8))
        spec = ShadowSpec(col_start=5, width=4, alpha=100.0, start_row=10)
        shadowed, mask = inject_shadow(img, spec)

        assert mask.kind is MaskKind.GROUND_TRUTH_BINARY
        assert mask.values.sum() == 30 * 4
        assert mask.values[10:, 5:9].min() == 1.0
        outside = mask.values == 0.0
        np.testing.assert_array_equal(shadowed.pixels[outside], img.pixels[outside])
        expected = 0.8 * np.exp(-np.arange(30) / 100.0)
        np.testing.assert_allclose(shadowed.pixels[10:, 6], expected)

    def test_inject_shadow_outside_image(self):
        img = BScan(pixels=np.zeros((10, 10)))
        with pytest.raises(ValidationError):
            inject_shadow(img, ShadowSpec(col_start=8, width=4, alpha=150.0))
        with pytest.raises(ValidationError):
            inject_shadow(img, ShadowSpec(col_start=0, width=4, alpha=150.0, start_row=10))

    @pytest.mark.parametrize("width,alpha", [(0, 150.0), (101, 150.0), (10, 99.0), (10, 301.0)])
    def test_spec_ranges(self, width, alpha):
        with pytest.raises(ValidationError):
            ShadowSpec(col_start=0, width=width, alpha=alpha)

    def test_place_shadows_do_not_overlap(self):
        settings = ShadowSettings(n_shadows=3, width_min=5, width_max=20)
        specs = place_shadows((64, 128), settings, np.random.default_rng(0), surface=12)
        assert len(specs) == 3
        for left, right in zip(specs, specs[1:]):
            assert left.col_end + settings.min_gap <= right.col_start
        assert all(s.start_row == 12 for s in specs)

    def test_top_start_mode(self):
        settings = ShadowSettings(n_shadows=1, start_mode=StartMode.TOP)
        (spec,) = place_shadows((64, 128), settings, np.random.default_rng(0), surface=12)
        assert spec.start_row == 0

    def test_placement_failure(self):
        settings = ShadowSettings(n_shadows=3, width_min=40, width_max=40, max_attempts=20)
        with pytest.raises(PlacementError):
            place_shadows((32, 64), settings, np.random.default_rng(0))

    def test_apply_shadows_mask_is_union(self):
        img = BScan(pixels=np.full((20, 40), 0.5))
        specs = [
            ShadowSpec(col_start=2, width=3, alpha=120.0),
            ShadowSpec(col_start=20, width=5, alpha=250.0),
        ]
        _, mask = apply_shadows(img, specs)
        assert mask.values.sum() == 20 * 8

    def test_validation_pair(self):
        clean, _ = generate_phantom(PhantomSpec(rng_seed=1))
        shadowed, mask, truth = make_validation_pair(clean, n_shadows=2, rng_seed=5)
        assert truth is clean
        assert mask.values.sum() > 0
        inside = mask.values == 1.0
        assert np.all(shadowed.pixels[inside] <= clean.pixels[inside])
        np.testing.assert_array_equal(shadowed.pixels[~inside], clean.pixels[~inside])

    def test_start_row_follows_per_column_surface(self):
        surface = 5.0 + 0.1 * np.arange(128)
        settings = ShadowSettings(n_shadows=3, width_min=5, width_max=20)
        for spec in place_shadows((64, 128), settings, np.random.default_rng(0), surface=surface):
            assert spec.start_row == int(np.ceil(surface[spec.col_start : spec.col_end].max()))

    def test_shadows_start_at_wobbled_surface(self):
        spec = PhantomSpec(rng_seed=3, boundary_wobble_amplitude=3.0, boundary_wobble_period=40.0)
        clean, layer_map = generate_phantom(spec)
        _, mask, _ = make_validation_pair(
            clean, n_shadows=2, rng_seed=1, surface=spec.surface_rows()
        )
        inside = mask.values == 1.0
        assert layer_map[inside].min() >= 1
        cols = np.flatnonzero(inside.any(axis=0))
        first_rows = inside[:, cols].argmax(axis=0)
        assert np.any(layer_map[first_rows - 1, cols] == 0)

    def test_narrow_image_fails_early(self):
        img = BScan(pixels=np.full((32, 40), 0.5))
        settings = ShadowSettings(width_min=5, width_max=20)
        with pytest.raises(ValidationError, match="no room"):
            make_validation_pair(img, n_shadows=1, settings=settings)


class TestAutoRois:
    @pytest.fixture
    def phantom(self):
        spec = PhantomSpec(rng_seed=2)
        _, layer_map = generate_phantom(spec)
        values = np.zeros(layer_map.shape)
        values[spec.surface_row() :, 100:131] = 1.0
        mask = ShadowMask(values=values)
        labels = [spec.label_of(k) for k in range(spec.n_layers)]
        return layer_map, mask, labels

    def test_five_clear_and_five_shadowed_per_layer(self, phantom):
        layer_map, mask, labels = phantom
        rois = auto_rois(layer_map, mask, labels)
        assert len(rois) == 4 * 10
        for layer in Layer:
            mine = [r for r in rois if r.layer_label is layer]
            assert sum(r.shadowed for r in mine) == 5
            assert sum(not r.shadowed for r in mine) == 5

    def test_windows_lie_in_their_layer_and_mask(self, phantom):
        layer_map, mask, labels = phantom
        index_of = {label: k for k, label in enumerate(labels) if label is not None}
        for roi in auto_rois(layer_map, mask, labels):
            assert np.all(roi.window(layer_map) == index_of[roi.layer_label])
            window = roi.window(mask.values)
            if roi.shadowed:
                assert window.min() == 1.0
            else:
                assert mask.values[:, roi.col : roi.col + roi.size].max() == 0.0

    def test_layer_without_shadow_room_is_skipped(self, phantom):
        layer_map, _, labels = phantom
        values = np.zeros(layer_map.shape)
        values[:, 100:102] = 1.0
        assert auto_rois(layer_map, ShadowMask(values=values), labels) == []
