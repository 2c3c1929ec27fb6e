import json

import numpy as np
import pytest

from phaseless_fm.forward import FarFieldMatrix, Obstacle, ScatteringScene, simulate_farfield, simulate_phaseless
from phaseless_fm.geometry import BoundaryCurve, SamplingGrid
from phaseless_fm.inversion import IndicatorField
from phaseless_fm.io import (
    DataFormatError,
    format_dataset,
    format_pgm,
    read_dataset,
    read_indicator,
    write_dataset,
    write_indicator,
    write_manifest,
)

KITE = ScatteringScene(3.0, [Obstacle(BoundaryCurve("kite"))])


def test_phaseless_round_trip_is_exact(tmp_path):
    data = simulate_phaseless(KITE, 6.0, 16, delta=0.1, seed=7)
    back = read_dataset(write_dataset(tmp_path / "d.csv", data))
    np.testing.assert_array_equal(back.values, data.values)
    assert (back.k, back.R, back.noise_delta, back.noise_seed) == (3.0, 6.0, 0.1, 7)


def test_farfield_round_trip_is_exact(tmp_path):
    F = simulate_farfield(KITE, 16)
    back = read_dataset(write_dataset(tmp_path / "f.csv", F))
    assert isinstance(back, FarFieldMatrix)
    np.testing.assert_array_equal(back.values, F.values)


def test_header_layout():
    text = format_dataset(simulate_phaseless(ScatteringScene(3.0), 5.0, 4))
    lines = text.splitlines()
    assert lines[0] == "# version: 1" and lines[1] == "# kind: phaseless"
    assert lines[8:] == ["1,1,1,1"] * 4


@pytest.mark.parametrize(
    "mutate, message",
    [
        (lambda ls: ls[:8] + ls[8:11], "expected 4 data rows"),
        (lambda ls: ls[:9] + ["1,2,x,4"] + ls[10:], ":10:"),
        (lambda ls: ls[:9] + ["1,2"] + ls[10:], "expected 4 values"),
        (lambda ls: ls[1:], "missing header keys version"),
        (lambda ls: ["# version: 9"] + ls[1:], "unsupported format version"),
    ],
)
def test_malformed_dataset_diagnostics(tmp_path, mutate, message):
    lines = format_dataset(simulate_phaseless(ScatteringScene(3.0), 5.0, 4)).splitlines()
    path = tmp_path / "bad.csv"
    path.write_text("\n".join(mutate(lines)) + "\n")
    with pytest.raises(DataFormatError, match=message) as info:
        read_dataset(path)
    assert "bad.csv" in str(info.value)


def test_missing_file(tmp_path):
    with pytest.raises(DataFormatError):
        read_dataset(tmp_path / "nope.csv")


def test_indicator_round_trip(tmp_path):
    grid = SamplingGrid(-1, 2, -3, 0, 4, 3)
    values = np.random.default_rng(0).uniform(0, 5, (3, 4))
    f = IndicatorField(grid, values, 5.0, 1e-12)
    back = read_indicator(write_indicator(tmp_path / "w.csv", f))
    np.testing.assert_array_equal(back.values, values)
    assert back.grid == grid and back.raw_max == 5.0 and not back.normalized


def test_pgm_levels_and_orientation():
    text = format_pgm(np.array([[0.0, 1.0], [2.0, 4.0]]))
    assert text.splitlines() == ["P2", "2 2", "65535", "32767 65535", "0 16383"]
    assert format_pgm(np.zeros((1, 2))).splitlines()[-1] == "0 0"


def test_manifest_json(tmp_path):
    path = write_manifest(tmp_path / "m.json", {"rho": 5 + 5j, "L": np.int64(8), "out": tmp_path})
    record = json.loads(path.read_text())
    assert record == {"rho": [5.0, 5.0], "L": 8, "out": str(tmp_path)}
