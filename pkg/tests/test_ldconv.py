import numpy as np
import pytest

from dualedge.ldconv import (LdconvConfig, base_grid, bilinear_sample, conv3x3_as_projection,
                             init_ldconv_weights, ldconv_forward, ldconv_param_count, ldconv_weight_shapes)
from dualedge.rng import SplitMix64
from dualedge.tensor import ConvSpec, Padding, conv2d

from conftest import rand_tensor


def test_base_grid_examples():
    assert base_grid(9) == [(i, j) for i in (-1, 0, 1) for j in (-1, 0, 1)]
    assert base_grid(1) == [(0, 0)]
    assert base_grid(5) == [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 0)]
    assert len(base_grid(13)) == 13
    with pytest.raises(ValueError):
        base_grid(0)


def test_bilinear_sample_examples():
    p = np.array([[1.0, 3.0], [5.0, 7.0]])
    assert bilinear_sample(p, 1, 0) == 5.0
    assert bilinear_sample(p, 0, 0.5) == 2.0
    assert bilinear_sample(p, 0.5, 0.5) == 4.0
    assert bilinear_sample(p, -0.5, -0.5) == pytest.approx(0.25)
    assert bilinear_sample(p, 10, 10) == 0.0


def _zero_offsets(weights, prefix="ldconv"):
    weights[prefix + ".offset.weight"][:] = 0
    weights[prefix + ".offset.bias"][:] = 0
    return weights


def test_zero_offset_reduces_to_conv():
    g = SplitMix64(7)
    x = rand_tensor(g, (1, 3, 12, 12))
    kernel = rand_tensor(g, (5, 3, 3, 3))
    bias = rand_tensor(g, (5,))
    cfg = LdconvConfig(num_points=9, out_channels=5)
    w = _zero_offsets(init_ldconv_weights(3, cfg))
    w["ldconv.proj.weight"] = conv3x3_as_projection(kernel)
    w["ldconv.proj.bias"] = bias
    ref = conv2d(x, ConvSpec(kernel, bias, padding=Padding.uniform(1)))
    np.testing.assert_allclose(ldconv_forward(x, cfg, w), ref, atol=1e-5)


def test_p1_identity():
    x = rand_tensor(SplitMix64(8), (2, 4, 6, 7))
    cfg = LdconvConfig(num_points=1)
    w = _zero_offsets(init_ldconv_weights(4, cfg))
    w["ldconv.proj.weight"] = np.eye(4, dtype=np.float32)[:, :, None, None]
    w["ldconv.proj.bias"][:] = 0
    np.testing.assert_array_equal(ldconv_forward(x, cfg, w), x)


def test_constant_input_interior_constant():
    cfg = LdconvConfig(num_points=9, out_channels=2)
    w = init_ldconv_weights(2, cfg)
    w["ldconv.offset.weight"] *= 0.1  # offsets stay under a pixel so interior samples stay inside
    y = ldconv_forward(np.full((1, 2, 10, 10), 3.0, np.float32), cfg, w)
    interior = y[:, :, 2:-2, 2:-2]
    assert np.ptp(interior, axis=(2, 3)).max() < 1e-5


def test_stride_shapes():
    cfg = LdconvConfig(num_points=5, out_channels=6, stride=2)
    y = ldconv_forward(rand_tensor(SplitMix64(9), (1, 3, 9, 8)), cfg)
    assert y.shape == (1, 6, 5, 4)


def test_param_count_affine_in_points():
    for c_in, c_out in ((3, 5), (16, 16)):
        counts = [ldconv_param_count(c_in, c_out, P) for P in range(1, 14)]
        assert np.all(np.diff(counts, 2) == 0)
        for P in (1, 5, 9):
            shapes = ldconv_weight_shapes(c_in, LdconvConfig(num_points=P, out_channels=c_out))
            assert sum(int(np.prod(s)) for s in shapes.values()) == ldconv_param_count(c_in, c_out, P)


def test_config_validation():
    with pytest.raises(ValueError):
        LdconvConfig(num_points=0)
    with pytest.raises(ValueError):
        LdconvConfig(stride=0)
