import numpy as np
import pytest

from sirdskit import DataError, SpectrumSpec, generate_patch
from sirdskit import storage


class TestGrayPng:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        img = rng.integers(0, 256, size=(32, 48), dtype=np.uint8)
        path = tmp_path / "img.png"
        storage.save_gray_png(path, img)
        assert np.array_equal(storage.load_gray_png(path), img)

    def test_rejects_non_uint8(self, tmp_path):
        with pytest.raises(DataError):
            storage.save_gray_png(tmp_path / "bad.png", np.zeros((8, 8), dtype=np.float64))

    def test_deterministic_bytes(self, tmp_path):
        rng = np.random.default_rng(1)
        img = rng.integers(0, 256, size=(64, 64), dtype=np.uint8)
        storage.save_gray_png(tmp_path / "a.png", img)
        storage.save_gray_png(tmp_path / "b.png", img)
        assert (tmp_path / "a.png").read_bytes() == (tmp_path / "b.png").read_bytes()


class TestDepthPng:
    def test_round_trip_accuracy(self, tmp_path):
        rng = np.random.default_rng(2)
        phi = rng.random((32, 48))
        path = tmp_path / "depth.png"
        storage.save_depth_png(path, phi)
        loaded = storage.load_depth_png(path)
        assert loaded.shape == phi.shape
        assert np.abs(loaded - phi).max() <= 0.5 / 65535.0 + 1e-12

    def test_endpoints_exact(self, tmp_path):
        phi = np.array([[0.0, 1.0]])
        path = tmp_path / "depth.png"
        storage.save_depth_png(path, phi)
        assert storage.load_depth_png(path).tolist() == [[0.0, 1.0]]


class TestJson:
    def test_round_trip_and_version_injection(self, tmp_path):
        path = tmp_path / "x.json"
        storage.save_json(path, {"a": 1})
        loaded = storage.load_json(path)
        assert loaded["a"] == 1
        assert loaded["schema_version"] == storage.SCHEMA_VERSION

    def test_version_mismatch_rejected(self, tmp_path):
        path = tmp_path / "x.json"
        storage.save_json(path, {"a": 1, "schema_version": 99})
        with pytest.raises(DataError):
            storage.load_json(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            storage.load_json(tmp_path / "nope.json")

    def test_garbage_content(self, tmp_path):
        path = tmp_path / "x.json"
        path.write_text("{not json")
        with pytest.raises(DataError):
            storage.load_json(path)


class TestLinks:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(3)
        links = []
        for n in (0, 5, 1280):
            xl = rng.integers(0, 1200, size=n)
            pairs = np.stack([xl, xl + 256], axis=1).astype(np.int32)
            links.append(pairs)
        path = tmp_path / "x.links"
        storage.save_links(path, links)
        loaded = storage.load_links(path)
        assert len(loaded) == len(links)
        for a, b in zip(loaded, links):
            assert np.array_equal(a, b)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "x.links"
        path.write_bytes(b"XXXX" + b"\x00" * 16)
        with pytest.raises(DataError):
            storage.load_links(path)

    def test_truncated(self, tmp_path):
        path = tmp_path / "x.links"
        storage.save_links(path, [np.array([[1, 257]], dtype=np.int32)])
        data = path.read_bytes()
        path.write_bytes(data[:-4])
        with pytest.raises(DataError):
            storage.load_links(path)


class TestJsonl:
    def test_append_and_read(self, tmp_path):
        path = tmp_path / "log.jsonl"
        storage.append_jsonl(path, {"n": 1})
        storage.append_jsonl(path, {"n": 2})
        records = storage.read_jsonl(path)
        assert [r["n"] for r in records] == [1, 2]
        assert all(r["schema_version"] == storage.SCHEMA_VERSION for r in records)

    def test_bad_line_rejected(self, tmp_path):
        path = tmp_path / "log.jsonl"
        storage.append_jsonl(path, {"n": 1})
        with open(path, "a") as fh:
            fh.write("not json\n")
        with pytest.raises(DataError):
            storage.read_jsonl(path)

    def test_version_mismatch_line(self, tmp_path):
        path = tmp_path / "log.jsonl"
        with open(path, "w") as fh:
            fh.write('{"n": 1, "schema_version": 2}\n')
        with pytest.raises(DataError):
            storage.read_jsonl(path)

    def test_blank_lines_skipped(self, tmp_path):
        path = tmp_path / "log.jsonl"
        storage.append_jsonl(path, {"n": 1})
        with open(path, "a") as fh:
            fh.write("\n")
        storage.append_jsonl(path, {"n": 2})
        assert len(storage.read_jsonl(path)) == 2

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            storage.read_jsonl(tmp_path / "nope.jsonl")


class TestCsv:
    def test_write(self, tmp_path):
        path = tmp_path / "t.csv"
        storage.write_csv(path, ["a", "b"], [[1, "x"], [2, "y"]])
        lines = path.read_text().strip().splitlines()
        assert lines == ["a,b", "1,x", "2,y"]


class TestPatchArtifacts:
    def test_raw_round_trip(self, tmp_path):
        patch = generate_patch(SpectrumSpec(beta=1.0, size=64, seed=4))
        paths = storage.save_patch_artifacts(tmp_path / "patch", patch)
        spec = storage.load_json(paths["json"])
        raw = np.fromfile(paths["raw"], dtype=spec["raw_dtype"]).reshape(spec["raw_shape"])
        assert np.array_equal(raw, patch.values)
        assert spec["beta"] == 1.0
        assert spec["seed"] == 4
        img = storage.load_gray_png(paths["png"])
        assert img.shape == (64, 64)
