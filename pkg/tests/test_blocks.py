"""Tests for the composite blocks: ConvBlock, SE, channel attention."""

import numpy as np
import pytest

from swisenet import ops
from swisenet.blocks import (ChannelAttention, ChannelAttentionCfg, ConvBlock,
                             ConvBlockCfg, ConvSEBlock, ConvSEBlockCfg,
                             SEBlock, SEBlockCfg)
from swisenet.tensor import Tensor


def _rng():
    return np.random.default_rng(0)


class TestConvBlock:
    def test_stem_shape_and_count(self):
        cfg = ConvBlockCfg(64, kernel=7, stride=2, use_batchnorm=True)
        block = ConvBlock("stem", 3, cfg, _rng())
        x = Tensor(np.zeros((1, 300, 300, 3), dtype=np.float32))
        assert block.forward(x).shape == (1, 150, 150, 64)
        total, trainable = block.structural_param_count()
        assert total == 7 * 7 * 3 * 64 + 64 + 4 * 64 == 9728
        assert trainable == total - 2 * 64  # running stats are frozen

    def test_zero_weights_zero_output(self):
        cfg = ConvBlockCfg(4, kernel=3, stride=1, use_batchnorm=False)
        block = ConvBlock("b", 2, cfg, _rng())
        block.kernel.tensor.data[:] = 0.0
        block.bias.tensor.data[:] = 0.0
        y = block.forward(Tensor(np.random.default_rng(1).random((1, 5, 5, 2),
                                                                 dtype=np.float32)))
        assert np.all(y.data == 0.0)

    def test_even_kernel_rejected(self):
        with pytest.raises(ValueError):
            ConvBlockCfg(8, kernel=4)

    def test_alpha_rejected(self):
        with pytest.raises(ValueError):
            ConvBlockCfg(8, alpha=2.0)


class TestSEBlock:
    def test_zero_excitation_gates_half(self):
        block = SEBlock("se", SEBlockCfg(8, reduction=4), _rng())
        block.fc2_w.tensor.data[:] = 0.0
        block.fc2_b.tensor.data[:] = 0.0
        x = Tensor(np.random.default_rng(2).random((2, 4, 4, 8),
                                                    dtype=np.float32))
        gates = block.gates(x)
        assert np.all(gates.data == 0.5)
        y = block.forward(x)
        assert np.allclose(y.data, 0.5 * x.data)

    def test_spatial_permutation_invariance(self):
        rng = np.random.default_rng(3)
        block = SEBlock("se", SEBlockCfg(8, reduction=4), _rng(),
                        dtype=np.float64)
        x = rng.random((1, 5, 5, 8))
        g1 = block.gates(Tensor(x)).data
        perm = rng.permutation(25)
        xp = x.reshape(1, 25, 8)[:, perm, :].reshape(1, 5, 5, 8)
        g2 = block.gates(Tensor(xp)).data
        assert np.abs(g1 - g2).max() <= 1e-12

    def test_composed_oracle(self):
        rng = np.random.default_rng(4)
        block = SEBlock("se", SEBlockCfg(8, reduction=4), _rng(),
                        dtype=np.float64)
        x = Tensor(rng.random((2, 4, 4, 8)))
        got = block.forward(x).data
        # rebuild from the primitive ops
        h = ops.global_avg_pool(x)
        h = ops.dense(h, block.fc1_w.tensor, block.fc1_b.tensor)
        h = ops.swish_relu(h, 0.5, block.act_beta.tensor)
        h = ops.dense(h, block.fc2_w.tensor, block.fc2_b.tensor)
        gates = ops.sigmoid(h)
        want = x.data * gates.data[:, None, None, :]
        assert np.abs(got - want).max() <= 1e-6

    def test_gates_strictly_inside_unit_interval(self):
        rng = np.random.default_rng(5)
        block = SEBlock("se", SEBlockCfg(8, reduction=4), _rng())
        g = block.gates(Tensor(rng.random((2, 4, 4, 8), dtype=np.float32))).data
        assert np.all(g > 0.0) and np.all(g < 1.0)

    def test_channel_mismatch(self):
        block = SEBlock("se", SEBlockCfg(8, reduction=4), _rng())
        with pytest.raises(ValueError):
            block.forward(Tensor(np.zeros((1, 4, 4, 6), dtype=np.float32)))

    def test_reduction_must_divide(self):
        with pytest.raises(ValueError):
            SEBlockCfg(8, reduction=3)


class TestChannelAttention:
    def test_zero_mlp_gates_half(self):
        block = ChannelAttention("ca", ChannelAttentionCfg(8, reduction=4),
                                 _rng())
        block.w1.tensor.data[:] = 0.0
        block.b1.tensor.data[:] = 0.0
        x = Tensor(np.random.default_rng(6).random((1, 4, 4, 8),
                                                    dtype=np.float32))
        assert np.all(block.gates(x).data == 0.5)

    def test_constant_input_descriptor_coincidence(self):
        # spatially constant x means F_avg == F_max, so the gate equals
        # sigmoid(2 * mlp(F_avg))
        block = ChannelAttention("ca", ChannelAttentionCfg(8, reduction=4),
                                 _rng(), dtype=np.float64)
        c = np.arange(8, dtype=np.float64)
        x = Tensor(np.broadcast_to(c, (1, 4, 4, 8)).copy())
        got = block.gates(x).data
        f = ops.global_avg_pool(x)
        m = ops.dense(f, block.w0.tensor, block.b0.tensor)
        m = ops.swish_relu(m, 0.5, block.act_beta.tensor)
        m = ops.dense(m, block.w1.tensor, block.b1.tensor)
        want = ops.sigmoid(Tensor(2.0 * m.data)).data
        assert np.abs(got - want).max() <= 1e-12

    def test_spatial_permutation_invariance(self):
        rng = np.random.default_rng(7)
        block = ChannelAttention("ca", ChannelAttentionCfg(8, reduction=4),
                                 _rng(), dtype=np.float64)
        x = rng.random((1, 6, 6, 8))
        g1 = block.gates(Tensor(x)).data
        perm = rng.permutation(36)
        xp = x.reshape(1, 36, 8)[:, perm, :].reshape(1, 6, 6, 8)
        g2 = block.gates(Tensor(xp)).data
        assert np.abs(g1 - g2).max() <= 1e-12

    def test_two_descriptor_oracle(self):
        rng = np.random.default_rng(8)
        block = ChannelAttention("ca", ChannelAttentionCfg(8, reduction=4),
                                 _rng(), dtype=np.float64)
        x = Tensor(rng.random((2, 5, 5, 8)))
        got = block.forward(x).data

        def mlp(d):
            h = ops.dense(d, block.w0.tensor, block.b0.tensor)
            h = ops.swish_relu(h, 0.5, block.act_beta.tensor)
            return ops.dense(h, block.w1.tensor, block.b1.tensor)

        f_avg = ops.global_avg_pool(x)
        f_max = ops.global_max_pool(x)
        gates = ops.sigmoid(Tensor(mlp(f_avg).data + mlp(f_max).data))
        want = x.data * gates.data[:, None, None, :]
        assert np.abs(got - want).max() <= 1e-6


class TestConvSEBlock:
    def _cfg(self, in_ch, out_ch):
        return ConvSEBlockCfg(
            conv=ConvBlockCfg(out_ch, kernel=3, stride=1),
            se=SEBlockCfg(out_ch, reduction=4),
            ca=ChannelAttentionCfg(out_ch, reduction=4),
        )

    def test_shape_preserved_same_channels(self):
        block = ConvSEBlock("b", 8, self._cfg(8, 8), _rng())
        x = Tensor(np.random.default_rng(9).random((1, 10, 10, 8),
                                                    dtype=np.float32))
        assert block.forward(x).shape == (1, 10, 10, 8)

    def test_shape_channel_expansion(self):
        block = ConvSEBlock("b", 8, self._cfg(8, 16), _rng())
        x = Tensor(np.zeros((1, 10, 10, 8), dtype=np.float32))
        assert block.forward(x).shape == (1, 10, 10, 16)

    def test_zero_input_zero_output(self):
        block = ConvSEBlock("b", 4, self._cfg(4, 8), _rng())
        x = Tensor(np.zeros((1, 8, 8, 4), dtype=np.float32))
        # BN in inference mode keeps zero mean/unit variance, beta 0 at init
        assert np.abs(block.forward(x).data).max() <= 1e-6

    def test_gating_never_amplifies(self):
        rng = np.random.default_rng(10)
        block = ConvSEBlock("b", 4, self._cfg(4, 8), _rng())
        x = Tensor(rng.random((1, 8, 8, 4), dtype=np.float32))
        conv_out = block.conv.forward(x)
        gated = block.ca.forward(block.se.forward(conv_out))
        assert np.all(np.abs(gated.data) <= np.abs(conv_out.data) + 1e-7)

    def test_channel_agreement_enforced(self):
        with pytest.raises(ValueError):
            ConvSEBlockCfg(conv=ConvBlockCfg(8), se=SEBlockCfg(4, reduction=4),
                           ca=ChannelAttentionCfg(8, reduction=4))
