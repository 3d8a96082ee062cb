import numpy as np
from PIL import Image
import pytest

from deshadow_oct.error.exceptions import ImageFormatError, ShapeError, ValidationError
from deshadow_oct.imaging.bscan import BScan, Layer, MaskKind, RegionOfInterest, ShadowMask
from deshadow_oct.imaging.io import load_image, load_mask, save_image, save_mask
from deshadow_oct.imaging.resize import resize


class TestBScan:
    def test_pixels_are_read_only_copies(self):
        source = np.full((4, 4), 0.25)
        img = BScan(pixels=source)
        source[0, 0] = 0.9
        assert img.pixels[0, 0] == 0.25
        with pytest.raises(ValueError):
            img.pixels[0, 0] = 0.5

    def test_rejects_non_2d(self):
        with pytest.raises(ShapeError):
            BScan(pixels=np.zeros((2, 2, 2)))

    def test_collects_every_problem(self):
        pixels = np.full((1, 4), 2.0)
        with pytest.raises(ValidationError) as excinfo:
            BScan(pixels=pixels)
        message = str(excinfo.value)
        assert "at least 2x2" in message
        assert "outside [0, 1]" in message

    def test_unnormalized_allows_large_values(self):
        img = BScan(pixels=np.full((3, 3), 40.0), is_normalized=False)
        assert img.shape == (3, 3)

    def test_rejects_nan(self):
        pixels = np.zeros((3, 3))
        pixels[1, 1] = np.nan
        with pytest.raises(ValidationError, match="non-finite"):
            BScan(pixels=pixels)


class TestShadowMask:
    def test_ground_truth_must_be_binary(self):
        with pytest.raises(ValidationError, match="non-binary"):
            ShadowMask(values=np.full((3, 3), 0.5))

    def test_predicted_mask_may_be_soft(self):
        mask = ShadowMask(values=np.full((3, 3), 0.5), kind=MaskKind.PREDICTED_SOFT)
        assert not mask.is_binary

    def test_pairing_checks_shape(self):
        mask = ShadowMask(values=np.zeros((3, 3)))
        with pytest.raises(ShapeError):
            mask.check_pairs_with(BScan(pixels=np.zeros((3, 4))))


class TestRegionOfInterest:
    def test_window(self):
        pixels = np.arange(100, dtype=float).reshape(10, 10)
        roi = RegionOfInterest(row=2, col=3, layer_label=Layer.RNFL, shadowed=False)
        window = roi.window(pixels)
        assert window.shape == (5, 5)
        assert window[0, 0] == 23.0

    def test_window_out_of_bounds(self):
        roi = RegionOfInterest(row=6, col=0, layer_label=Layer.IPL, shadowed=True)
        assert not roi.fits((10, 10))
        with pytest.raises(ValidationError):
            roi.window(np.zeros((10, 10)))

    @pytest.mark.parametrize("row,col,size", [(-1, 0, 5), (0, -2, 5), (0, 0, 0)])
    def test_invalid(self, row, col, size):
        with pytest.raises(ValidationError):
            RegionOfInterest(row=row, col=col, layer_label=Layer.PR, shadowed=False, size=size)


class TestImageIO:
    def test_16bit_save_load_quantization(self, tmp_path):
        pixels = np.linspace(0.0, 1.0, 64).reshape(8, 8)
        save_image(BScan(pixels=pixels, source_id="x"), tmp_path / "x.png", bit_depth=16)
        loaded = load_image(tmp_path / "x.png")
        assert loaded.source_id == "x"
        assert np.max(np.abs(loaded.pixels - pixels)) <= 0.5 / 65535 + 1e-12

    def test_8bit_tiff(self, tmp_path):
        pixels = np.linspace(0.0, 1.0, 16).reshape(4, 4)
        save_image(BScan(pixels=pixels), tmp_path / "x.tif", bit_depth=8)
        loaded = load_image(tmp_path / "x.tif")
        assert np.max(np.abs(loaded.pixels - pixels)) <= 0.5 / 255 + 1e-12

    @pytest.mark.parametrize("bit_depth", [8, 16])
    @pytest.mark.parametrize("suffix", [".png", ".tif"])
    def test_random_round_trip_within_one_level(self, tmp_path, bit_depth, suffix):
        rng = np.random.default_rng(bit_depth)
        for k in range(5):
            pixels = rng.uniform(size=(17, 23))
            path = tmp_path / f"r{k}{suffix}"
            save_image(BScan(pixels=pixels), path, bit_depth=bit_depth)
            error = np.abs(load_image(path).pixels - pixels)
            assert error.max() <= 1.0 / (2**bit_depth - 1)

    def test_rejects_lossy_suffix(self, tmp_path):
        with pytest.raises(ImageFormatError):
            load_image(tmp_path / "x.jpg")

    def test_rejects_rgb(self, tmp_path):
        Image.new("RGB", (4, 4)).save(tmp_path / "rgb.png")
        with pytest.raises(ImageFormatError, match="single channel"):
            load_image(tmp_path / "rgb.png")

    def test_unreadable_file(self, tmp_path):
        (tmp_path / "broken.png").write_bytes(b"not a png")
        with pytest.raises(ImageFormatError):
            load_image(tmp_path / "broken.png")

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_image(tmp_path / "missing.png")

    def test_invalid_bit_depth(self, tmp_path, flat_image):
        with pytest.raises(ValidationError):
            save_image(flat_image, tmp_path / "x.png", bit_depth=12)

    def test_mask_round_trip(self, tmp_path, band_mask):
        save_mask(band_mask, tmp_path / "m.png")
        loaded = load_mask(tmp_path / "m.png")
        assert loaded.is_binary
        np.testing.assert_array_equal(loaded.values, band_mask.values)

    def test_mask_with_gray_values(self, tmp_path):
        array = np.zeros((4, 4), dtype=np.uint8)
        array[0, 0] = 128
        Image.fromarray(array).save(tmp_path / "gray.png")
        with pytest.raises(ValidationError, match="neither 0 nor 255"):
            load_mask(tmp_path / "gray.png")


class TestResize:
    def test_same_size_is_identity(self, flat_image):
        assert resize(flat_image, (32, 32)).pixels.tolist() == flat_image.pixels.tolist()

    def test_image_resize_stays_in_range(self):
        rng = np.random.default_rng(0)
        img = BScan(pixels=rng.uniform(size=(20, 30)))
        out = resize(img, (64, 48))
        assert out.shape == (64, 48)
        assert out.pixels.min() >= 0.0 and out.pixels.max() <= 1.0

    def test_binary_mask_stays_binary(self, band_mask):
        out = resize(band_mask, (50, 70))
        assert out.shape == (50, 70)
        assert out.is_binary
        assert set(np.unique(out.values)) <= {0.0, 1.0}
