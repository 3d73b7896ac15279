import numpy as np
import pytest

from msreg import fileio


class TestPfm:
    def test_roundtrip_float32_exact(self, tmp_path, rng):
        data = (rng.random((13, 21)) * 100).astype(np.float32).astype(np.float64)
        path = tmp_path / "d.pfm"
        fileio.write_pfm(path, data)
        back = fileio.read_pfm(path)
        assert back.dtype == np.float64
        assert np.array_equal(back, data)

    def test_header_and_row_order(self, tmp_path):
        # 2x2 map; PFM stores rows bottom-up with a negative scale for
        # little-endian data
        data = np.array([[1.0, 2.0], [3.0, 4.0]])
        path = tmp_path / "d.pfm"
        fileio.write_pfm(path, data)
        raw = path.read_bytes()
        header, dims, scale, rest = raw.split(b"\n", 3)
        assert header == b"Pf"
        assert dims == b"2 2"
        assert float(scale) == -1.0
        floats = np.frombuffer(rest, dtype="<f4")
        assert floats.tolist() == [3.0, 4.0, 1.0, 2.0]

    def test_reads_big_endian_when_scale_positive(self, tmp_path):
        payload = np.array([[5.0, 6.0]], dtype=">f4").tobytes()
        path = tmp_path / "be.pfm"
        path.write_bytes(b"Pf\n2 1\n1.0\n" + payload)
        assert fileio.read_pfm(path).tolist() == [[5.0, 6.0]]

    def test_color_pfm_reads_first_channel(self, tmp_path):
        payload = np.array([7.0, 8.0, 9.0], dtype="<f4").tobytes()
        path = tmp_path / "c.pfm"
        path.write_bytes(b"PF\n1 1\n-1.0\n" + payload)
        assert fileio.read_pfm(path).tolist() == [[7.0]]

    def test_truncated_payload_rejected(self, tmp_path):
        path = tmp_path / "short.pfm"
        path.write_bytes(b"Pf\n4 4\n-1.0\n" + b"\x00" * 8)
        with pytest.raises(ValueError):
            fileio.read_pfm(path)

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "x.pfm"
        path.write_bytes(b"P5\n1 1\n-1.0\n\x00\x00\x00\x00")
        with pytest.raises(ValueError):
            fileio.read_pfm(path)


class TestGray16:
    def test_roundtrip_of_quantized_values(self, tmp_path, rng):
        data = rng.integers(0, 65536, size=(9, 7)) / 65535.0
        path = tmp_path / "img.png"
        fileio.write_gray16(path, data)
        back = fileio.read_gray16(path)
        assert np.array_equal(back, data)

    def test_quantize16_rounds_to_nearest_level(self):
        q = fileio.quantize16(np.array([[0.0, 1.0, 0.5]]))
        assert q.dtype == np.uint16
        assert q.tolist() == [[0, 65535, 32768]]

    def test_quantizer_saturates_out_of_range(self):
        # epsilon overshoot from float arithmetic must not wrap around
        q = fileio.quantize16(np.array([[-0.1, 1.1]]))
        assert q.tolist() == [[0, 65535]]


class TestMask:
    def test_roundtrip(self, tmp_path, rng):
        mask = rng.random((11, 8)) < 0.4
        path = tmp_path / "m.png"
        fileio.write_mask(path, mask)
        assert np.array_equal(fileio.read_mask(path), mask)

    def test_threshold_at_half(self, tmp_path):
        from PIL import Image

        arr = np.array([[0, 127, 128, 255]], dtype=np.uint8)
        path = tmp_path / "t.png"
        Image.fromarray(arr, mode="L").save(path)
        assert fileio.read_mask(path).tolist() == [[False, False, True, True]]


class TestJson:
    def test_roundtrip_and_formatting(self, tmp_path):
        path = tmp_path / "cfg.json"
        fileio.write_json(path, {"b": 1, "a": [1, 2]})
        text = path.read_text()
        assert text.endswith("\n")
        assert text.index('"a"') < text.index('"b"')  # keys sorted
        assert fileio.read_json(path) == {"b": 1, "a": [1, 2]}
