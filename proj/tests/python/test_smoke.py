"""Smoke tests for the python bindings: a few numeric checks against numpy
and one tiny end-to-end pipeline run."""

import numpy as np
import pytest

import cascnn


def conv2d_same_numpy(x, w, b):
    c_out, c_in, k, _ = w.shape
    _, h, width = x.shape
    pad = (k - 1) // 2
    padded = np.pad(x, ((0, 0), (pad, pad), (pad, pad)))
    out = np.zeros((c_out, h, width))
    for c in range(c_out):
        out[c] = b[c]
        for m in range(c_in):
            for p in range(k):
                for q in range(k):
                    out[c] += w[c, m, p, q] * padded[m, p:p + h, q:q + width]
    return out


def test_conv2d_matches_numpy():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(2, 5, 4))
    w = rng.normal(size=(3, 2, 3, 3))
    b = rng.normal(size=3)
    got = cascnn.conv2d_same(cascnn.Tensor(x), cascnn.Tensor(w), cascnn.Tensor(b)).numpy()
    np.testing.assert_allclose(got, conv2d_same_numpy(x, w, b), rtol=1e-12, atol=1e-12)


def test_backward_of_square_sum():
    x = cascnn.Tensor(np.array([1.0, -2.0, 0.5]))
    loss = cascnn.sum(cascnn.mul(x, x))
    loss.backward()
    np.testing.assert_allclose(x.grad(), [2.0, -4.0, 1.0])


def test_masked_cells_receive_no_gradient():
    rng = np.random.default_rng(5)
    pred = cascnn.Tensor(rng.normal(size=(3, 3)))
    target = cascnn.Tensor(rng.normal(size=(3, 3)))
    mask = np.ones((3, 3))
    mask[0, 1] = 0.0
    mask[2, 2] = 0.0
    loss = cascnn.masked_mse(pred, target, cascnn.Tensor(mask))
    loss.backward()
    grad = pred.grad()
    assert grad[0, 1] == 0.0
    assert grad[2, 2] == 0.0
    assert np.any(grad != 0.0)


def test_shape_mismatch_raises():
    with pytest.raises(ValueError):
        cascnn.add(cascnn.Tensor(np.zeros((2, 2))), cascnn.Tensor(np.zeros((3,))))


def test_metrics_worked_example(tmp_path):
    # End-to-end on a tiny deterministic dataset.
    data_dir = tmp_path / "data"
    cascnn.generate(str(data_dir), n=8, days=8, seed=9)
    prepared = cascnn.prepare(str(data_dir), seed=9)
    assert prepared.n == 8
    assert prepared.train_size > 0
    assert prepared.test_size > 0

    config = cascnn.model_config_for(prepared)
    config.filters_layer1 = 4
    model = cascnn.build_model("cascnn", config, seed=1)
    state = cascnn.fit(model, prepared, max_epochs=3, patience=3, seed=1)
    assert state["epochs_run"] == 3
    assert np.isfinite(state["train_loss"]).all()

    result = cascnn.evaluate(model, prepared)
    metrics = result["metrics"]
    assert metrics["rmse"] >= metrics["mae"]
    assert np.isfinite(metrics["rmse"])
    assert result["historical_average"]["cells"] == metrics["cells"]


def test_checkpoint_round_trip(tmp_path):
    config = cascnn.ModelConfig()
    config.n = 5
    config.filters_layer1 = 3
    model = cascnn.build_model("cascnn", config, seed=4)
    manifest = tmp_path / "checkpoint.json"
    data = tmp_path / "checkpoint.f64"
    cascnn.save_checkpoint(model, str(manifest), str(data))
    loaded = cascnn.load_checkpoint(str(manifest))
    assert loaded.kind == "cascnn"

    rng = np.random.default_rng(11)
    history = rng.uniform(size=(config.history_days, 5, 5))
    inflow = rng.uniform(size=(config.flow_steps, 5))
    outflow = rng.uniform(size=(config.flow_steps, 5))
    np.testing.assert_array_equal(
        model.forward(history, inflow, outflow), loaded.forward(history, inflow, outflow)
    )
