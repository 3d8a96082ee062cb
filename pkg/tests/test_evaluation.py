import json

import numpy as np
import pandas as pd
import pytest

from deshadow_oct.const.column import Method
from deshadow_oct.error.exceptions import UndefinedContrastError, ValidationError
from deshadow_oct.evaluation import (
    PSNR_CAP_DB,
    EvalReport,
    EvalSample,
    build_report,
    compensate,
    cumulative_energy,
    intralayer_contrast,
    lateral_profile,
    layer_profile,
    outside_mask_error,
    read_rois,
    relative_improvement,
    restoration_error,
    split_by_layer,
    write_rois,
)
from deshadow_oct.evaluation.report import (
    AGGREGATES_CSV,
    BOXPLOT_PNG,
    CONTRAST_CSV,
    PROFILES_CSV,
    REPORT_JSON,
    RESTORATION_CSV,
    SCHEMA_JSON,
    paired_wilcoxon,
)
from deshadow_oct.imaging.bscan import BScan, Layer, RegionOfInterest, ShadowMask
from deshadow_oct.phantom import ShadowSpec, inject_shadow


def two_tone(clear: float, shadow: float) -> BScan:
    """20x60 image: columns [0, 30) at ``clear``, [30, 60) at ``shadow``."""
    pixels = np.full((20, 60), clear)
    pixels[:, 30:] = shadow
    return BScan(pixels=pixels, source_id="two_tone")


def rois_for(layer: Layer = Layer.RNFL) -> list[RegionOfInterest]:
    clear = [RegionOfInterest(5, c, layer, shadowed=False) for c in range(0, 25, 5)]
    shadowed = [RegionOfInterest(5, c, layer, shadowed=True) for c in range(30, 55, 5)]
    return clear + shadowed


def split(rois):
    return [r for r in rois if not r.shadowed], [r for r in rois if r.shadowed]


class TestIntralayerContrast:
    def test_no_shadow(self):
        assert intralayer_contrast(two_tone(0.6, 0.6), *split(rois_for())) == 0.0

    def test_total_shadow(self):
        assert intralayer_contrast(two_tone(0.6, 0.0), *split(rois_for())) == 1.0

    def test_hand_example(self):
        value = intralayer_contrast(two_tone(0.8, 0.4), *split(rois_for()))
        assert value == pytest.approx(1.0 / 3.0, abs=1e-5)

    def test_undefined(self):
        with pytest.raises(UndefinedContrastError):
            intralayer_contrast(two_tone(0.0, 0.0), *split(rois_for()))

    def test_rejects_mixed_layers(self):
        clear, shadowed = split(rois_for())
        shadowed[0] = RegionOfInterest(5, 30, Layer.IPL, shadowed=True)
        with pytest.raises(ValidationError, match="mix layers"):
            intralayer_contrast(two_tone(0.8, 0.4), clear, shadowed)

    def test_rejects_wrong_size(self):
        clear, shadowed = split(rois_for())
        clear[0] = RegionOfInterest(5, 0, Layer.RNFL, shadowed=False, size=3)
        with pytest.raises(ValidationError, match="not 5x5"):
            intralayer_contrast(two_tone(0.8, 0.4), clear, shadowed)


class TestProfiles:
    def test_constant_image(self):
        img = BScan(pixels=np.full((10, 12), 0.3))
        profile = lateral_profile(img, (2, 6))
        assert profile.shape == (12,)
        np.testing.assert_allclose(profile, 0.3)

    def test_column_subset(self):
        profile = lateral_profile(two_tone(0.8, 0.4), (0, 20), range(25, 35))
        assert len(profile) == 10

    def test_dip_over_shadow(self):
        img = BScan(pixels=np.full((40, 50), 0.7))
        shadowed, _ = inject_shadow(img, ShadowSpec(col_start=20, width=6, alpha=100.0))
        profile = lateral_profile(shadowed, (10, 30))
        assert 20 <= int(np.argmin(profile)) < 26

    def test_empty_band(self):
        with pytest.raises(ValidationError):
            lateral_profile(two_tone(0.8, 0.4), (5, 5))

    def test_layer_profile(self):
        img = two_tone(0.8, 0.4)
        layer_map = np.zeros((20, 60), dtype=int)
        layer_map[10:] = 1
        profile = layer_profile(img, layer_map, 1)
        np.testing.assert_allclose(profile[:30], 0.8)
        np.testing.assert_allclose(profile[30:], 0.4)


class TestCompensation:
    def test_energy_is_non_increasing_with_depth(self):
        rng = np.random.default_rng(0)
        energy = cumulative_energy(rng.uniform(size=(30, 8)))
        assert np.all(np.diff(energy, axis=0) <= 0.0)

    def test_brightens_shadow(self):
        img = BScan(pixels=np.full((64, 32), 0.5))
        shadowed, mask = inject_shadow(img, ShadowSpec(col_start=10, width=6, alpha=100.0))
        inside = mask.values == 1.0
        compensated = compensate(shadowed)
        assert compensated.pixels[inside].mean() > shadowed.pixels[inside].mean()
        assert 0.0 <= compensated.pixels.min() and compensated.pixels.max() <= 1.0

    def test_zero_columns_unmodified(self):
        pixels = np.full((16, 8), 0.5)
        pixels[:, 3] = 0.0
        out = compensate(BScan(pixels=pixels))
        np.testing.assert_array_equal(out.pixels[:, 3], 0.0)


class TestRestoration:
    @pytest.fixture
    def shadow_case(self):
        rng = np.random.default_rng(4)
        truth = BScan(pixels=rng.uniform(0.2, 0.9, size=(16, 16)))
        spec = ShadowSpec(col_start=4, width=5, alpha=150.0, start_row=3)
        shadowed, mask = inject_shadow(truth, spec)
        return truth, shadowed, mask, spec

    def test_perfect_restoration(self, shadow_case):
        truth, _, mask, _ = shadow_case
        assert restoration_error(truth, truth, mask) == (0.0, PSNR_CAP_DB)
        assert outside_mask_error(truth, truth, mask) == 0.0

    def test_shadowed_input_closed_form(self, shadow_case):
        truth, shadowed, mask, spec = shadow_case
        offsets = np.arange(16)[:, None] - spec.start_row
        expected = (truth.pixels * (1.0 - np.exp(-offsets / spec.alpha)))[mask.values == 1.0]
        mae, psnr_db = restoration_error(shadowed, truth, mask)
        assert mae == pytest.approx(expected.mean(), abs=1e-9)
        assert psnr_db < PSNR_CAP_DB

    def test_mae_against_loop_oracle(self, shadow_case):
        truth, shadowed, mask, _ = shadow_case
        total, count = 0.0, 0
        for i in range(16):
            for j in range(16):
                if mask.values[i, j] == 1.0:
                    total += abs(shadowed.pixels[i, j] - truth.pixels[i, j])
                    count += 1
        mae, _ = restoration_error(shadowed, truth, mask)
        assert mae == pytest.approx(total / count, abs=1e-9)

    def test_outside_error_ignores_mask(self, shadow_case):
        truth, shadowed, mask, _ = shadow_case
        assert outside_mask_error(shadowed, truth, mask) == 0.0

    def test_empty_mask(self, shadow_case):
        truth, shadowed, _, _ = shadow_case
        with pytest.raises(ValidationError):
            restoration_error(shadowed, truth, ShadowMask(values=np.zeros((16, 16))))

    def test_relative_improvement(self):
        assert relative_improvement(0.4, 0.3) == pytest.approx(25.0)
        assert np.isnan(relative_improvement(0.0, 0.3))


class TestRoisIO:
    def test_write_read(self, tmp_path):
        table = {"b": rois_for(Layer.PR), "a": rois_for(Layer.RNFL)}
        write_rois(table, tmp_path / "rois.tsv")
        loaded = read_rois(tmp_path / "rois.tsv")
        assert loaded == table
        header = (tmp_path / "rois.tsv").read_text().splitlines()[0]
        assert header.split("\t") == ["stem", "layer", "shadowed", "row", "col"]

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            read_rois(tmp_path / "missing.tsv")

    def test_reports_every_bad_line(self, tmp_path):
        path = tmp_path / "rois.tsv"
        path.write_text(
            "stem\tlayer\tshadowed\trow\tcol\n"
            "a\tRNFL\t0\t1\t1\n"
            "a\tGCL\t0\t1\t1\n"
            "a\tIPL\t2\t1\t1\n"
            "a\tIPL\t1\t-1\t1\n"
        )
        with pytest.raises(ValidationError) as excinfo:
            read_rois(path)
        message = str(excinfo.value)
        assert "line 3" in message and "line 4" in message and "line 5" in message

    def test_missing_column(self, tmp_path):
        path = tmp_path / "rois.tsv"
        path.write_text("stem\tlayer\trow\tcol\na\tRNFL\t1\t1\n")
        with pytest.raises(ValidationError, match="missing columns"):
            read_rois(path)

    def test_split_by_layer(self):
        grouped = split_by_layer(rois_for(Layer.RNFL) + rois_for(Layer.RPE))
        assert set(grouped) == {Layer.RNFL, Layer.RPE}
        clear, shadowed = grouped[Layer.RPE]
        assert len(clear) == 5 and len(shadowed) == 5


class TestBuildReport:
    @pytest.fixture
    def samples(self):
        truth = two_tone(0.8, 0.8)
        shadowed = two_tone(0.8, 0.4)
        mask_values = np.zeros((20, 60))
        mask_values[:, 30:] = 1.0
        mask = ShadowMask(values=mask_values)
        return [
            EvalSample(stem=stem, image=shadowed, mask=mask, ground_truth=truth)
            for stem in ("a", "b")
        ]

    @staticmethod
    def restore(imgs):
        return [img.with_pixels(np.full(img.shape, 0.8)) for img in imgs]

    def test_identical_images_have_zero_std(self, samples):
        rois = {"a": rois_for(), "b": rois_for()}
        report = build_report(samples, self.restore, rois)
        assert report.n_evaluated == 2
        by_method = {a.method: a for a in report.aggregates}
        assert by_method[Method.BASELINE].contrast_std == 0.0
        assert by_method[Method.BASELINE].contrast_mean == pytest.approx(1.0 / 3.0, abs=1e-5)
        assert by_method[Method.DESHADOWED].contrast_mean == 0.0
        assert by_method[Method.DESHADOWED].improvement_mean == pytest.approx(100.0)
        assert by_method[Method.DESHADOWED].wilcoxon_p is not None
        assert by_method[Method.BASELINE].wilcoxon_p is None

    def test_restoration_section(self, samples):
        report = build_report(samples, self.restore, {"a": rois_for(), "b": rois_for()})
        restoration = {a.method: a for a in report.restoration_aggregates}
        assert restoration[Method.DESHADOWED].mae_mean == 0.0
        assert restoration[Method.BASELINE].mae_mean == pytest.approx(0.4)
        assert restoration[Method.DESHADOWED].mae_improvement_pct == pytest.approx(100.0)

    def test_images_without_rois_are_skipped(self, samples):
        report = build_report(samples, self.restore, {"a": rois_for()})
        assert report.skipped == ["b"]
        assert report.n_evaluated == 1

    def test_compensation_adds_method(self, samples):
        report = build_report(
            samples, self.restore, {"a": rois_for(), "b": rois_for()}, with_compensation=True
        )
        assert Method.COMPENSATED in report.methods()
        assert report.compensation is not None

    def test_artifacts(self, samples, tmp_path):
        report = build_report(
            samples, self.restore, {"a": rois_for(), "b": rois_for()}, out_dir=tmp_path
        )
        for name in (
            REPORT_JSON,
            SCHEMA_JSON,
            CONTRAST_CSV,
            AGGREGATES_CSV,
            PROFILES_CSV,
            RESTORATION_CSV,
            BOXPLOT_PNG,
        ):
            assert (tmp_path / name).exists(), name
        assert EvalReport.load(tmp_path / REPORT_JSON) == report
        schema = json.loads((tmp_path / SCHEMA_JSON).read_text())
        assert "contrast" in schema["properties"]
        contrast = pd.read_csv(tmp_path / CONTRAST_CSV)
        assert contrast["contrast"].between(0.0, 1.0).all()


class TestPairedWilcoxon:
    def test_identical_samples(self):
        series = pd.Series([0.3, 0.4, 0.5])
        assert paired_wilcoxon(series, series.copy()) is None

    def test_too_few_pairs(self):
        assert paired_wilcoxon(pd.Series([0.3]), pd.Series([0.1])) is None

    def test_consistent_drop(self):
        baseline = pd.Series(np.linspace(0.3, 0.6, 10))
        p_value = paired_wilcoxon(baseline, baseline - np.linspace(0.1, 0.2, 10))
        assert p_value is not None and p_value < 0.01
