# python/tests/test_smoke.py

# Copyright 2026  The ust Authors

# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#  http://www.apache.org/licenses/LICENSE-2.0
#
# THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
# KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
# WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
# MERCHANTABLITY OR NON-INFRINGEMENT.
# See the Apache 2 License for the specific language governing permissions and
# limitations under the License.

"""Smoke tests for the ustcpp python module."""

import math
import sys

import ustcpp


def test_log_mel_geometry():
    sr = 44100
    samples = [0.4 * math.sin(2 * math.pi * 1000 * t / sr) for t in range(sr)]
    spec = ustcpp.log_mel(samples, sr)
    assert len(spec) == 1 + len(samples) // 1103, len(spec)
    assert len(spec[0]) == 64

    # the production geometry: 10 s -> 400 frames (sanity on a shorter clip
    # keeps this test quick; the C++ acceptance suite covers 10 s exactly)
    assert all(all(math.isfinite(v) for v in row) for row in spec)


def test_mel_scale_pins():
    assert abs(ustcpp.hz_to_mel(1000.0) - 15.0) < 1e-12
    assert abs(ustcpp.mel_to_hz(15.0) - 1000.0) < 1e-9
    bank = ustcpp.mel_filterbank()
    assert len(bank) == 64
    assert len(bank[0]) == 2822 // 2 + 1
    assert all(v >= 0.0 for row in bank for v in row)


def test_resample_doubles_count():
    out = ustcpp.resample([0.25] * 100, 22050, 44100)
    assert len(out) == 200
    assert all(abs(v - 0.25) < 1e-9 for v in out)


def test_mish_values():
    out = ustcpp.mish([0.0, 1.0, 20.0])
    assert out[0] == 0.0
    assert abs(out[1] - 0.8650983882673103) < 1e-12
    assert abs(out[2] - 20.0) < 1e-8


def test_metrics_hand_cases():
    ap = ustcpp.average_precision([0.9, 0.8, 0.7], [1, 0, 1])
    assert abs(ap - 5.0 / 6.0) < 1e-12

    scores = [[0.9, 0.1], [0.2, 0.8]]
    labels = [[1, 0], [0, 1]]
    assert abs(ustcpp.auprc_macro(scores, labels) - 1.0) < 1e-12
    assert abs(ustcpp.auprc_micro(scores, labels) - 1.0) < 1e-12
    assert abs(ustcpp.f1_micro(scores, labels) - 1.0) < 1e-12
    assert abs(ustcpp.accuracy(scores, labels) - 1.0) < 1e-12

    # the 11-point and step-sum definitions diverge on this crafted case
    d_scores = [[0.9], [0.8], [0.7], [0.6]]
    d_labels = [[1], [0], [1], [0]]
    m11 = ustcpp.map_11point(d_scores, d_labels)
    ap = ustcpp.auprc_macro(d_scores, d_labels)
    assert abs(m11 - 28.0 / 33.0) < 1e-12
    assert abs(ap - 5.0 / 6.0) < 1e-12
    assert abs(m11 - ap) > 0.01


def test_centralize_gradient():
    out = ustcpp.centralize_gradient([1.0, 2.0, 3.0], [1, 3])
    assert out == [-1.0, 0.0, 1.0]
    # idempotent
    assert ustcpp.centralize_gradient(out, [1, 3]) == out


def test_mixup():
    x, y, lam = ustcpp.mixup([1.0, 2.0], [1.0], [3.0, 4.0], [0.0], 1.0, seed=5)
    assert 0.0 <= lam <= 1.0
    assert abs(x[0] - (lam * 1.0 + (1 - lam) * 3.0)) < 1e-12
    assert abs(y[0] - lam) < 1e-12
    # self-mix is the identity
    x2, y2, _ = ustcpp.mixup([1.0, 2.0], [1.0], [1.0, 2.0], [1.0], 1.0, seed=6)
    assert x2 == [1.0, 2.0] and y2 == [1.0]


def main():
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_")]
    failures = 0
    for test in tests:
        try:
            test()
            print(f"PASS {test.__name__}")
        except AssertionError as e:
            failures += 1
            print(f"FAIL {test.__name__}: {e}")
    if failures:
        print(f"{failures} of {len(tests)} smoke tests failed")
        return 1
    print(f"all {len(tests)} smoke tests passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
