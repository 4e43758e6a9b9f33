"""Smoke tests for the _crew python module: the main operations round trip
and agree with each other on small layers."""

import os
import sys
import tempfile

import crew


def make_float_layer():
    layer = crew.FloatLayer()
    layer.n_inputs = 4
    layer.n_outputs = 8
    layer.weights = [((j % 3) - 1) * 0.5 + i * 0.125 for i in range(4) for j in range(8)]
    layer.bias = [0.25] * 8
    return layer


def test_quantize_encode_execute():
    q = crew.quantize_layer(make_float_layer(), 8)
    assert q.q == 8
    assert q.scale > 0

    enc = crew.encode(q)
    assert list(enc.uw_counts) == [3, 3, 3, 3]

    x = [3, -1, 2, 0]
    dense = crew.dense_forward(q, x)
    memoized = crew.crew_forward(enc, x)
    grouped = crew.ucnn_forward(q, x)
    assert list(dense.outputs) == list(memoized.outputs) == list(grouped.outputs)
    assert memoized.multiplications == sum(enc.uw_counts)
    assert dense.multiplications == 4 * 8


def test_pack_roundtrip():
    q = crew.quantize_layer(make_float_layer(), 8)
    enc = crew.encode(q)
    blob = crew.pack_bytes(enc, 2, 4)
    assert blob[:4] == b"CREW"
    back = crew.unpack_bytes(blob)
    assert list(back.index_matrix) == list(enc.index_matrix)
    assert list(back.uw_counts) == list(enc.uw_counts)

    dense = crew.decode_to_dense(back)
    assert list(dense.weights) == list(q.weights)


def test_file_roundtrip():
    layer = make_float_layer()
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "layer.fcl")
        crew.save_layer(layer, path)
        loaded = crew.load_layer(path)
        assert isinstance(loaded, crew.FloatLayer)
        assert list(loaded.weights) == list(layer.weights)


def test_synth_and_analysis():
    profile = crew.UniqueWeightProfile.constant(5, 16, 64)
    layer = crew.synth_layer(profile, 7)
    analysis = crew.analyze_rows(layer)
    assert list(analysis.uw_counts) == [5] * 16
    assert abs(analysis.mean_uw - 5.0) < 1e-12

    report = crew.storage_report(crew.encode(layer))
    assert report.saved_muls_fraction > 0.9


def test_ppa_identity_at_zero():
    layer = crew.synth_layer(crew.UniqueWeightProfile.constant(6, 8, 64), 3)
    cfg = crew.PpaConfig()
    cfg.threshold = 0.0
    res = crew.apply_ppa(layer, cfg)
    assert list(res.layer.weights) == list(layer.weights)
    assert res.rows_reduced_fraction() == 0.0


def test_simulation_ordering():
    preset = crew.reference_suite()[0]
    profile = preset.profile
    profile.n_inputs = 64  # trimmed for smoke-test runtime
    layer = crew.synth_layer(profile, 11)
    rep = crew.compare(layer)
    assert rep["crew"]["speedup_vs_baseline"] > rep["ucnn"]["speedup_vs_baseline"] >= 1.0
    assert rep["crew"]["multiplications"] == sum(crew.encode(layer).uw_counts)


def test_errors_surface_as_python_exceptions():
    try:
        crew.load_layer("/no/such/file.fcl")
    except crew.IoError:
        pass
    else:
        raise AssertionError("expected IoError")

    try:
        crew.synth_layer(crew.UniqueWeightProfile.constant(9, 2, 8), 1)
    except crew.ConfigError:
        pass
    else:
        raise AssertionError("expected ConfigError")


def main():
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_")]
    for test in tests:
        test()
        print(f"ok {test.__name__}")
    print(f"{len(tests)} smoke tests passed")


if __name__ == "__main__":
    sys.exit(main())
