import numpy as np
import pytest

from muotomo.rawio import (
    read_raw,
    read_records,
    read_sidecar,
    write_png16,
    write_raw,
    write_records,
)


def test_volume_round_trip_and_byte_order(tmp_path):
    vol = np.arange(24, dtype=np.float32).reshape(2, 3, 4)
    path = str(tmp_path / "vol.raw")
    write_raw(path, vol, voxel_mm=2.0)
    back, fields = read_raw(path)
    assert np.array_equal(back, vol)
    assert fields["voxel_mm"] == "2.0"
    assert fields["order"] == "x-fastest"
    # x-fastest on disk: first two values differ in x only
    data = np.fromfile(path, dtype="<f4")
    assert data[0] == vol[0, 0, 0]
    assert data[1] == vol[1, 0, 0]


def test_uint8_labels_round_trip(tmp_path):
    labels = (np.arange(60) % 5).astype(np.uint8).reshape(3, 4, 5)
    path = str(tmp_path / "labels.raw")
    write_raw(path, labels, class_map="0 concrete 1 rebar")
    back, fields = read_raw(path)
    assert back.dtype == np.uint8
    assert np.array_equal(back, labels)
    assert fields["class_map"] == "0 concrete 1 rebar"


def test_unsupported_dtype(tmp_path):
    with pytest.raises(ValueError):
        write_raw(str(tmp_path / "x.raw"), np.zeros(3, dtype=np.int32))


def test_truncated_file_detected(tmp_path):
    path = str(tmp_path / "vol.raw")
    write_raw(path, np.zeros((4, 4), dtype=np.float32))
    with open(path, "r+b") as fh:
        fh.truncate(10)
    with pytest.raises(ValueError):
        read_raw(path)


def test_records_round_trip(tmp_path):
    table = np.random.default_rng(0).normal(size=(17, 4)).astype(np.float32)
    path = str(tmp_path / "muons.raw")
    write_records(path, table, ["x", "y", "z", "p"], block="7")
    back, columns, fields = read_records(path)
    assert columns == ["x", "y", "z", "p"]
    assert np.array_equal(back, table)
    assert fields["block"] == "7"
    with pytest.raises(ValueError):
        write_records(path, table, ["only", "three", "names"])


def test_sidecar_parsing_tolerates_blank_lines(tmp_path):
    p = tmp_path / "x.txt"
    p.write_text("a: 1\n\nb: two words\n")
    fields = read_sidecar(str(p))
    assert fields == {"a": "1", "b": "two words"}


def test_png16_windowing(tmp_path):
    from PIL import Image

    img = np.zeros((32, 16), dtype=np.float32)
    img[4, 2] = 10.0   # hot voxel beyond the 99th percentile
    img[8:24, 4:12] = 1.0
    path = str(tmp_path / "slice.png")
    write_png16(path, img)
    with Image.open(path) as handle:
        assert handle.mode.startswith("I;16") or handle.mode == "I"
        data = np.asarray(handle)
    assert data.shape == (16, 32)  # [y, x] in the file
    assert data.max() == 65535
    assert data.dtype in (np.uint16, np.int32)
    # constant image does not divide by zero
    write_png16(str(tmp_path / "flat.png"), np.ones((8, 8)))
    with Image.open(str(tmp_path / "flat.png")) as handle:
        assert np.asarray(handle).max() == 0
