import numpy as np
import pytest

from nmrqcels.hamiltonian import ppm_to_angular
from nmrqcels.peaks import PeakEstimate, PeakSet


def _build(sulfanol, amps, ppms, normalization="raw"):
    centers = [ppm_to_angular(p, sulfanol) for p in ppms]
    return PeakSet.build(amps, centers, sulfanol, normalization)


def test_sorted_by_center(sulfanol):
    peaks = _build(sulfanol, [0.1, 0.2], [7.0, 3.0])
    assert list(peaks.centers_ppm) == [3.0, 7.0]
    assert list(peaks.amplitudes) == [0.2, 0.1]


def test_unit_sum_normalization(sulfanol):
    peaks = _build(sulfanol, [1.0, 3.0], [1.0, 2.0], "unit_sum")
    assert peaks.amplitudes.sum() == pytest.approx(1.0, abs=1e-10)
    assert np.allclose(peaks.amplitudes, [0.25, 0.75])


def test_unit_norm_normalization(sulfanol):
    peaks = _build(sulfanol, [3.0, 4.0], [1.0, 2.0], "unit_norm")
    assert np.linalg.norm(peaks.amplitudes) == pytest.approx(1.0, abs=1e-10)
    assert np.allclose(peaks.amplitudes, [0.6, 0.8])


def test_renormalization_only_from_raw(sulfanol):
    peaks = _build(sulfanol, [1.0, 1.0], [1.0, 2.0], "unit_sum")
    with pytest.raises(ValueError):
        peaks.normalized("unit_norm")
    assert peaks.normalized("unit_sum") is peaks


def test_negative_amplitude_rejected():
    with pytest.raises(ValueError):
        PeakEstimate(-0.1, 1.0, 1.0)


def test_merge_close_peaks(sulfanol):
    peaks = _build(sulfanol, [0.4, 0.2, 0.4], [1.0, 1.0004, 5.0])
    merged = peaks.merged(1e-3)
    assert len(merged) == 2
    assert merged.amplitudes[0] == pytest.approx(0.6)
    # amplitude-weighted center
    assert merged.centers_ppm[0] == pytest.approx((0.4 * 1.0 + 0.2 * 1.0004) / 0.6)


def test_csv_round_trip(tmp_path, sulfanol):
    peaks = _build(sulfanol, [0.25, 0.75], [2.0, 8.0], "unit_sum")
    path = tmp_path / "peaks.csv"
    peaks.to_csv(path)
    loaded = PeakSet.from_csv(path)
    assert loaded.normalization == "unit_sum"
    assert np.allclose(loaded.amplitudes, peaks.amplitudes)
    assert np.allclose(loaded.centers_ppm, peaks.centers_ppm)
    assert np.allclose(loaded.centers, peaks.centers)
