import numpy as np
import pytest

from anmt import autodiff as ad
from anmt import params as ckpt
from anmt.optim import AdamState, DivergenceError, adam_step
from anmt.params import CheckpointError, Initializer, ParameterStore


def store(dtype=np.float32, seed=0):
    init = Initializer(seed, dtype)
    p = ParameterStore()
    p.add("b.w", init.glorot(3, 4))
    p.add("a.bias", init.zeros(4))
    p.add("c.gain", init.ones(2))
    return p


def test_store_is_sorted_and_rejects_duplicates():
    p = store()
    assert p.names() == ["a.bias", "b.w", "c.gain"]
    with pytest.raises(KeyError):
        p.add("b.w", np.zeros(1))


def test_grads_default_to_zeros():
    p = store()
    g = p.grads()
    assert all(np.array_equal(g[k], np.zeros_like(p[k].data)) for k in p)


def test_glorot_bounds_and_seed():
    a = Initializer(3).glorot(20, 30)
    assert np.abs(a).max() <= np.sqrt(6 / 50)
    assert np.array_equal(a, Initializer(3).glorot(20, 30))


@pytest.mark.parametrize("dtype", [np.float32, np.float64])
def test_checkpoint_round_trip(tmp_path, dtype):
    p = store(dtype)
    path = tmp_path / "m.ckpt"
    ckpt.save(str(path), p.arrays(), {"seed": 4})
    header, arrays = ckpt.load(str(path))
    assert header == {"seed": 4}
    assert list(arrays) == p.names()
    for k in p:
        assert arrays[k].dtype == dtype and np.array_equal(arrays[k], p[k].data)
    again = tmp_path / "again.ckpt"
    ckpt.save(str(again), arrays, header)
    assert path.read_bytes() == again.read_bytes()
    assert not (tmp_path / "m.ckpt.tmp").exists()


def test_checkpoint_layout_prefix():
    blob = ckpt.dumps({"x": np.ones((2,), dtype=np.float64)})
    assert blob[:8] == b"ANMTCKPT"
    assert int.from_bytes(blob[8:12], "little") == 1 and blob[12] == 8


def test_checkpoint_errors():
    blob = ckpt.dumps({"x": np.ones(3, dtype=np.float32)})
    with pytest.raises(CheckpointError):
        ckpt.loads(b"NOTACKPT" + blob[8:])
    with pytest.raises(CheckpointError):
        ckpt.loads(blob[:-2])
    with pytest.raises(CheckpointError):
        ckpt.loads(blob + b"\0")
    with pytest.raises(CheckpointError):
        ckpt.dumps({"x": np.ones(1, np.float32), "y": np.ones(1, np.float64)})


# ---------------------------------------------------------------- Adam

def one_param(value):
    p = ParameterStore()
    p.add("w", np.array(value, dtype=np.float64))
    return p


def test_adam_zero_gradient_fixed_point():
    p = one_param([1.0, -2.0])
    s = AdamState()
    adam_step(p, {"w": np.zeros(2)}, s)
    assert np.array_equal(p["w"].data, [1.0, -2.0])
    assert np.array_equal(s.m["w"], np.zeros(2)) and np.array_equal(s.v["w"], np.zeros(2))


def test_adam_moments_decay_under_zero_gradient():
    p = one_param([1.0, -2.0])
    s = AdamState()
    adam_step(p, {"w": np.array([0.5, 0.5])}, s)
    m0, v0 = s.m["w"].copy(), s.v["w"].copy()
    adam_step(p, {"w": np.zeros(2)}, s)
    assert np.allclose(s.m["w"], 0.9 * m0) and np.allclose(s.v["w"], 0.999 * v0)


@pytest.mark.parametrize("g", [1e-3, 0.7, -5.0, 1e4])
def test_adam_first_step_magnitude_is_lr(g):
    p = one_param([0.0])
    adam_step(p, {"w": np.array([g])}, AdamState(lr=1e-3))
    # m_hat = g, v_hat = g^2, so the step is lr * |g| / (|g| + eps)
    assert abs(p["w"].data[0]) == pytest.approx(1e-3 * abs(g) / (abs(g) + 1e-8), rel=1e-12)
    assert np.sign(p["w"].data[0]) == -np.sign(g)


def test_adam_two_steps_hand_unrolled():
    g, lr, b1, b2, eps = 0.3, 1e-3, 0.9, 0.999, 1e-8
    p = one_param([1.0])
    s = AdamState(lr=lr)
    adam_step(p, {"w": np.array([g])}, s)
    adam_step(p, {"w": np.array([g])}, s)
    x = 1.0
    m = v = 0.0
    for t in (1, 2):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        x -= lr * (m / (1 - b1 ** t)) / ((v / (1 - b2 ** t)) ** 0.5 + eps)
    assert p["w"].data[0] == pytest.approx(x, abs=1e-15)
    assert s.t == 2


def test_adam_divergence_names_parameter_and_leaves_params():
    p = store(np.float64)
    before = {k: p[k].data.copy() for k in p}
    g = p.grads()
    g["c.gain"] = np.array([1.0, np.nan])
    with pytest.raises(DivergenceError, match="c.gain"):
        adam_step(p, g, AdamState())
    assert all(np.array_equal(before[k], p[k].data) for k in p)


def test_adam_keeps_dtype():
    p = store(np.float32)
    g = {k: np.ones_like(t.data) for k, t in p.items()}
    adam_step(p, g, AdamState())
    assert all(t.data.dtype == np.float32 for _, t in p.items())


def test_adam_shape_mismatch():
    p = one_param([1.0, 2.0])
    with pytest.raises(ValueError):
        adam_step(p, {"w": np.zeros(3)}, AdamState())
