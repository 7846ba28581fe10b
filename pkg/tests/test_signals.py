import numpy as np
import pytest
from PIL import Image

from kronfit import (
    ParameterError,
    grid_split,
    load_grid_tensor,
    load_image,
    load_image_stack,
    make_grid_signal,
    psnr,
    random_split,
    save_grid_tensor,
    save_image,
)
from kronfit import tensorfile
from kronfit.signals import GridSignal, SampleSet


class TestImageIO:
    def test_two_by_two_scaling(self, tmp_path):
        path = tmp_path / "tiny.png"
        Image.fromarray(np.array([[0, 255], [255, 0]], dtype=np.uint8), mode="L").save(path)
        sig = load_image(path)
        np.testing.assert_array_equal(sig.values[:, :, 0], [[0.0, 1.0], [1.0, 0.0]])
        assert sig.channels == 1

    def test_eight_bit_round_trip_is_bit_identical(self, tmp_path, rng):
        raw = rng.integers(0, 256, size=(9, 7), dtype=np.uint8)
        first = tmp_path / "a.png"
        second = tmp_path / "b.png"
        Image.fromarray(raw, mode="L").save(first)
        sig = load_image(first)
        save_image(sig.values, second)
        again = load_image(second)
        assert np.array_equal(sig.values, again.values)

    def test_sixteen_bit_max_scales_to_one(self, tmp_path):
        path = tmp_path / "deep.png"
        arr = np.array([[0, 65535], [32768, 1]], dtype=np.uint16)
        Image.fromarray(arr).save(path)
        sig = load_image(path)
        assert sig.values.max() == 1.0
        assert sig.values[0, 0, 0] == 0.0

    def test_rgb_image(self, tmp_path, rng):
        path = tmp_path / "rgb.png"
        Image.fromarray(rng.integers(0, 256, size=(5, 6, 3), dtype=np.uint8), mode="RGB").save(path)
        sig = load_image(path)
        assert sig.values.shape == (5, 6, 3)

    def test_unreadable_file_rejected(self, tmp_path):
        path = tmp_path / "junk.png"
        path.write_bytes(b"not a png at all")
        with pytest.raises(ParameterError):
            load_image(path)

    def test_coordinates_span_unit_interval(self, tmp_path):
        path = tmp_path / "img.png"
        Image.fromarray(np.zeros((4, 8), dtype=np.uint8), mode="L").save(path)
        sig = load_image(path)
        assert sig.axes[0][0] == 0.0 and sig.axes[0][-1] == 1.0
        assert sig.axes[1][2] == pytest.approx(2 / 7)

    def test_image_stack(self, tmp_path, rng):
        for i in range(3):
            data = rng.integers(0, 256, size=(4, 5), dtype=np.uint8)
            Image.fromarray(data, mode="L").save(tmp_path / f"frame{i}.png")
        sig = load_image_stack(tmp_path)
        assert sig.grid_shape == (3, 4, 5)
        assert sig.channels == 1


class TestTensorFiles:
    def test_round_trip(self, tmp_path, rng):
        arr = rng.uniform(0, 1, size=(3, 4, 5))
        path = tmp_path / "t.kft"
        tensorfile.write_tensor(path, arr)
        np.testing.assert_array_equal(tensorfile.read_tensor(path), arr)

    def test_multi_record(self, tmp_path, rng):
        a, b = rng.standard_normal((2, 3)), rng.standard_normal(4)
        path = tmp_path / "two.kft"
        tensorfile.write_tensors(path, [a, b])
        got = tensorfile.read_tensors(path)
        assert len(got) == 2
        np.testing.assert_array_equal(got[0], a)
        np.testing.assert_array_equal(got[1], b)

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "bad.kft"
        path.write_bytes(b"XXXX" + bytes(28))
        with pytest.raises(ValueError):
            tensorfile.read_tensor(path)

    def test_truncated_payload_rejected(self, tmp_path, rng):
        path = tmp_path / "trunc.kft"
        tensorfile.write_tensor(path, rng.uniform(0, 1, 16))
        data = path.read_bytes()
        path.write_bytes(data[:-8])
        with pytest.raises(ValueError):
            tensorfile.read_tensor(path)

    def test_grid_tensor_round_trip(self, tmp_path, rng):
        values = rng.uniform(0, 1, size=(6, 7))
        path = tmp_path / "sig.kft"
        save_grid_tensor(values, path)
        sig = load_grid_tensor(path)
        np.testing.assert_array_equal(sig.values[..., 0], values)


class TestGridSignalValidation:
    def test_value_range_enforced(self):
        with pytest.raises(ParameterError):
            GridSignal(values=np.full((4, 1), 1.5), axes=(np.linspace(0, 1, 4),))

    def test_coordinates_monotone(self):
        with pytest.raises(ParameterError):
            GridSignal(values=np.zeros((3, 1)), axes=(np.array([0.0, 0.5, 0.5]),))

    def test_sampleset_coordinate_range(self, rng):
        with pytest.raises(ParameterError):
            SampleSet(coords=np.array([[1.4, 0.2]]), values=np.array([[0.5]]))


class TestSplits:
    def test_grid_split_shapes(self):
        sig = make_grid_signal(np.random.default_rng(0).uniform(0, 1, (16, 16)))
        train, test = grid_split(sig, 2)
        assert train.grid_shape == (8, 8)
        assert len(test) == 256 - 64

    def test_grid_split_partition(self):
        sig = make_grid_signal(np.random.default_rng(1).uniform(0, 1, (8, 8)))
        train, test = grid_split(sig, 2)
        train_pts = {
            (round(float(a), 12), round(float(b), 12))
            for a in train.axes[0]
            for b in train.axes[1]
        }
        test_pts = {(round(float(a), 12), round(float(b), 12)) for a, b in test.coords}
        assert not train_pts & test_pts
        assert len(train_pts) + len(test_pts) == 64

    def test_grid_split_keeps_parent_coordinates(self):
        sig = make_grid_signal(np.random.default_rng(2).uniform(0, 1, (12,)))
        train, _ = grid_split(sig, 3)
        np.testing.assert_array_equal(train.axes[0], sig.axes[0][::3])

    def test_grid_split_stride_errors(self):
        sig = make_grid_signal(np.zeros((8, 8)))
        with pytest.raises(ParameterError):
            grid_split(sig, 8)  # stride equal to axis size
        with pytest.raises(ParameterError):
            grid_split(sig, 3)  # does not divide evenly
        with pytest.raises(ParameterError):
            grid_split(sig, 1)

    def test_random_split_counts_and_determinism(self):
        sig = make_grid_signal(np.random.default_rng(3).uniform(0, 1, (64, 64)))
        train, test = random_split(sig, 0.25, seed=9)
        assert len(train) == 1024
        assert len(train) + len(test) == 64 * 64
        train2, _ = random_split(sig, 0.25, seed=9)
        assert np.array_equal(train.coords, train2.coords)
        assert np.array_equal(train.values, train2.values)

    def test_random_split_disjoint(self):
        sig = make_grid_signal(np.random.default_rng(4).uniform(0, 1, (10, 10)))
        train, test = random_split(sig, 0.3, seed=0)
        train_set = {tuple(np.round(c, 12)) for c in train.coords}
        test_set = {tuple(np.round(c, 12)) for c in test.coords}
        assert not train_set & test_set

    def test_random_split_fraction_bounds(self):
        sig = make_grid_signal(np.zeros((4, 4)))
        for bad in (0.0, 1.0, -0.2):
            with pytest.raises(ParameterError):
                random_split(sig, bad, seed=0)


class TestPsnr:
    def test_identical_signals_hit_cap(self, rng):
        x = rng.uniform(0, 1, (8, 8))
        assert psnr(x, x) == 99.0

    def test_constant_offset_twenty_db(self):
        x = np.full((32, 32), 0.4)
        assert psnr(x + 0.1, x) == pytest.approx(20.0, abs=1e-9)

    def test_monotone_in_noise_amplitude(self, rng):
        x = rng.uniform(0.3, 0.7, (64,))
        noise = rng.uniform(-1, 1, 64)
        values = [psnr(x + a * noise, x) for a in (0.01, 0.05, 0.1, 0.2)]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_symmetric_and_channel_invariant(self, rng):
        a = rng.uniform(0, 1, (6, 6, 3))
        b = rng.uniform(0, 1, (6, 6, 3))
        assert psnr(a, b) == psnr(b, a)
        perm = a[:, :, [2, 0, 1]], b[:, :, [2, 0, 1]]
        assert psnr(*perm) == pytest.approx(psnr(a, b), rel=1e-12)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ParameterError):
            psnr(np.zeros((3, 3)), np.zeros((3, 4)))
