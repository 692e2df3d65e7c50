"""Acceptance suite. One test per criterion; each prints a PASS line
with the measured value so a log shows exactly what was verified."""

import time

import numpy as np

from swisenet import cli, ops
from swisenet.blocks import (ChannelAttention, ChannelAttentionCfg, SEBlock,
                             SEBlockCfg)
from swisenet.data import SplitConfig, split
from swisenet.metrics import confusion_matrix, metrics_from_confusion
from swisenet.model import ModelCfg, SwiSENet, reduced_config
from swisenet.preprocess import (PreprocessConfig, equalize_channel,
                                 gaussian_kernel, normalize,
                                 preprocess_pipeline, smooth)
from swisenet.tensor import Tensor
from swisenet.train import TrainConfig, evaluate, train
from swisenet.verify import TOLERANCE, gradcheck_suite

from test_preprocess import smooth_oracle
from test_tensor_ops import conv2d_oracle
from test_train_eval import synthetic_images, synthetic_index

EXPECTED_SHAPES = [
    "(None,150,150,64)", "(None,74,74,64)", "(None,74,74,64)",
    "(None,74,74,64)", "(None,74,74,128)", "(None,74,74,128)",
    "(None,74,74,128)", "(None,74,74,256)", "(None,74,74,256)",
    "(None,256)", "(None,4)",
]


def report(name, detail):
    print(f"[PASS] {name}: {detail}")


def test_shape_conformance(capsys):
    t0 = time.time()
    assert cli.main(["summary"]) == 0
    out = capsys.readouterr().out
    shapes = [tok for line in out.splitlines() for tok in line.split()
              if tok.startswith("(None")]
    elapsed = time.time() - t0
    assert shapes == EXPECTED_SHAPES
    assert elapsed < 1.0
    with capsys.disabled():
        report("shape conformance",
               f"all {len(EXPECTED_SHAPES)} summary rows exact, "
               f"{elapsed:.2f}s")


def test_parameter_anchors():
    rows, totals = SwiSENet(ModelCfg()).summarize()
    by_name = {r.name: r.param_total for r in rows}
    assert by_name["Dense"] == 1028
    assert by_name["MaxPooling_1"] == 0
    assert by_name["GlobalAveragePooling_1"] == 0
    assert by_name["ConvBlock_1"] == 9728
    assert totals["structural_total"] == 1_392_260  # regression lock
    assert totals["grand_total"] == 1_392_289
    assert totals["published_reference_total"] == 3_349_380
    report("parameter anchors",
           "Dense 1028, pool rows 0, stem 9728, total locked at "
           f"{totals['grand_total']:,} (published reference 3,349,380)")


def test_gradient_suite():
    t0 = time.time()
    results = gradcheck_suite(seed=0)
    elapsed = time.time() - t0
    worst = max(err for _, err in results)
    assert worst <= TOLERANCE
    assert elapsed <= 60.0
    report("gradient suite",
           f"{len(results)} checks, max rel err {worst:.2e} "
           f"(tolerance {TOLERANCE:g}), {elapsed:.1f}s")


def test_equation_oracles():
    rng = np.random.default_rng(0)
    # conv2d against the nested-loop reference
    for _ in range(100):
        h, w = int(rng.integers(2, 7)), int(rng.integers(2, 7))
        cin, cout = int(rng.integers(1, 3)), int(rng.integers(1, 3))
        stride = int(rng.integers(1, 3))
        x = rng.standard_normal((1, h, w, cin))
        k = rng.standard_normal((3, 3, cin, cout))
        b = rng.standard_normal(cout)
        got = ops.conv2d(Tensor(x), Tensor(k), Tensor(b), stride=stride,
                         padding="same").data
        assert np.abs(got - conv2d_oracle(x, k, b, stride, "same")).max() <= 1e-6
    # smooth against brute-force correlation
    for _ in range(100):
        grid = rng.standard_normal((int(rng.integers(3, 7)),
                                    int(rng.integers(3, 7))))
        kr = gaussian_kernel(float(rng.uniform(0.5, 2.5)), 1)
        assert np.abs(smooth(grid, kr) - smooth_oracle(grid, kr)).max() <= 1e-9
    # equalize against a direct LUT recount (exact integer path)
    for _ in range(100):
        img = rng.integers(0, 256, size=(6, 6))
        hist = np.bincount(img.ravel(), minlength=256)
        cdf = np.cumsum(hist) / hist.sum()
        cdf_min = cdf[hist > 0].min()
        lut = np.clip(np.floor((cdf - cdf_min) / (1 - cdf_min) * 255 + 0.5),
                      0, 255).astype(img.dtype)
        assert np.array_equal(equalize_channel(img), lut[img])
    # normalize against the direct formula
    for _ in range(100):
        grid = rng.standard_normal((4, 4, 3)) * float(rng.uniform(0.5, 50))
        want = (grid - grid.min()) / (grid.max() - grid.min())
        assert np.abs(normalize(grid) - want).max() <= 1e-12
    # gaussian_kernel against elementwise evaluation
    for _ in range(100):
        sigma = float(rng.uniform(0.3, 4.0))
        radius = int(rng.integers(1, 4))
        kr = gaussian_kernel(sigma, radius)
        c = np.arange(-radius, radius + 1, dtype=np.float64)
        want = np.exp(-(c[:, None] ** 2 + c[None, :] ** 2) / (2 * sigma**2))
        want /= want.sum()
        assert np.abs(kr.weights - want).max() <= 1e-12
    report("equation oracles",
           "conv2d/smooth/equalize/normalize/gaussian_kernel each match "
           "their brute-force oracle on 100 random cases")


def test_preprocessing_invariants():
    rng = np.random.default_rng(1)
    for _ in range(25):
        k = gaussian_kernel(float(rng.uniform(0.3, 4.0)),
                            int(rng.integers(1, 4)))
        assert abs(k.weights.sum() - 1.0) <= 1e-12
    for _ in range(25):
        img = rng.integers(0, 256, size=(10, 10)).astype(np.uint8)
        once = equalize_channel(img)
        twice = equalize_channel(once)
        assert np.abs(twice.astype(int) - once.astype(int)).max() <= 1
        vals = np.unique(img)
        mapped = [once[img == v][0] for v in vals]
        assert all(a <= b for a, b in zip(mapped, mapped[1:]))
    for _ in range(25):
        grid = rng.standard_normal((5, 5, 3))
        out = normalize(grid)
        assert out.min() == 0.0 and out.max() == 1.0
    img = rng.integers(0, 256, size=(33, 47, 3)).astype(np.uint8)
    assert preprocess_pipeline(img, PreprocessConfig()).shape == (300, 300, 3)
    report("preprocessing invariants",
           "kernel sum 1+-1e-12, equalize monotone and idempotent to 1 "
           "level, normalize range [0,1], pipeline shape (300,300,3)")


def test_attention_invariants():
    rng = np.random.default_rng(2)
    se = SEBlock("se", SEBlockCfg(8, reduction=4),
                 np.random.default_rng(0), dtype=np.float64)
    ca = ChannelAttention("ca", ChannelAttentionCfg(8, reduction=4),
                          np.random.default_rng(0), dtype=np.float64)
    # zero excitation / zero MLP output layer means every gate is 0.5
    se.fc2_w.tensor.data[:] = 0.0
    se.fc2_b.tensor.data[:] = 0.0
    ca.w1.tensor.data[:] = 0.0
    ca.b1.tensor.data[:] = 0.0
    x = Tensor(rng.random((2, 5, 5, 8)))
    assert np.all(se.gates(x).data == 0.5)
    assert np.all(ca.gates(x).data == 0.5)
    # restore random gating weights for the structural checks
    se = SEBlock("se", SEBlockCfg(8, reduction=4),
                 np.random.default_rng(3), dtype=np.float64)
    ca = ChannelAttention("ca", ChannelAttentionCfg(8, reduction=4),
                          np.random.default_rng(3), dtype=np.float64)
    xd = rng.random((1, 5, 5, 8))
    perm = rng.permutation(25)
    xp = xd.reshape(1, 25, 8)[:, perm, :].reshape(1, 5, 5, 8)
    assert np.abs(se.gates(Tensor(xd)).data
                  - se.gates(Tensor(xp)).data).max() <= 1e-12
    assert np.abs(ca.gates(Tensor(xd)).data
                  - ca.gates(Tensor(xp)).data).max() <= 1e-12
    # spatially constant input: F_avg == F_max forces M_c = sigmoid(2*mlp)
    const = Tensor(np.broadcast_to(np.arange(8.0), (1, 4, 4, 8)).copy())
    f_avg = ops.global_avg_pool(const)
    f_max = ops.global_max_pool(const)
    assert np.array_equal(f_avg.data, f_max.data)
    h = ops.dense(f_avg, ca.w0.tensor, ca.b0.tensor)
    h = ops.swish_relu(h, 0.5, ca.act_beta.tensor)
    h = ops.dense(h, ca.w1.tensor, ca.b1.tensor)
    want = ops.sigmoid(Tensor(2.0 * h.data)).data
    assert np.abs(ca.gates(const).data - want).max() <= 1e-12
    report("attention invariants",
           "zero-weight gates exactly 0.5, spatial permutation invariance "
           "<=1e-12, constant-input descriptor coincidence holds")


def test_overfit_sanity(tmp_path):
    t0 = time.time()
    x, y = synthetic_images(n_per_class=4, size=64, seed=0)
    model = SwiSENet(reduced_config(seed=3, input_size=64))
    reached = None
    for chunk in range(20):  # 20 x 10 = 200 epochs maximum
        cfg = TrainConfig(learning_rate=1e-3, epochs=10, batch_size=16,
                          image_size=64, seed=3)
        train(model, (x, y), (x, y), cfg, out_dir=str(tmp_path),
              start_epoch=chunk * 10)
        metrics, _ = evaluate(model, x, y, 16)
        if metrics["accuracy"] == 1.0:
            reached = (chunk + 1) * 10
            break
    elapsed = time.time() - t0
    assert reached is not None, "did not reach 100% within 200 epochs"
    assert elapsed <= 600.0
    report("overfit sanity",
           f"100% train accuracy by epoch {reached} "
           f"(budget 200), {elapsed:.0f}s (budget 600s)")


def test_determinism(tmp_path):
    x, y = synthetic_images(n_per_class=2, size=32, seed=1)
    cfg = TrainConfig(learning_rate=1e-3, epochs=2, batch_size=8,
                      image_size=32, seed=5)
    outs = []
    for run in ("a", "b"):
        model = SwiSENet(reduced_config(seed=5, input_size=32))
        out = tmp_path / run
        train(model, (x, y), (x, y), cfg, out_dir=str(out))
        outs.append(out)
    ckpt_a = (outs[0] / "last.ckpt").read_bytes()
    ckpt_b = (outs[1] / "last.ckpt").read_bytes()
    assert ckpt_a == ckpt_b
    metrics_a = (outs[0] / "metrics.tsv").read_bytes()
    metrics_b = (outs[1] / "metrics.tsv").read_bytes()
    assert metrics_a == metrics_b
    report("determinism",
           f"two identical runs: checkpoints bit-identical "
           f"({len(ckpt_a)} bytes), metrics files bit-identical")


def test_split_arithmetic():
    index = synthetic_index()
    assert len(index) == 5932
    tr75, va75 = split(index, SplitConfig(train_fraction=0.75, seed=0))
    assert (len(tr75), len(va75)) == (4449, 1483)
    tr70, va70 = split(index, SplitConfig(train_fraction=0.70, seed=0))
    assert (len(tr70), len(va70)) == (4153, 1779)
    report("split arithmetic",
           "5932 samples: 0.75 -> 4449/1483, 0.70 -> 4153/1779, exact")


def test_metrics_oracle():
    rng = np.random.default_rng(4)
    worst_row_err = 0.0
    for _ in range(1000):
        k = int(rng.integers(2, 6))
        n = int(rng.integers(1, 30))
        y_true = rng.integers(0, k, size=n)
        y_pred = rng.integers(0, k, size=n)
        cm = confusion_matrix(y_true, y_pred, k)
        m = metrics_from_confusion(cm, average="macro")
        acc = float((y_true == y_pred).sum()) / n
        precs, recs, f1s = [], [], []
        for c in range(k):
            tp = int(((y_true == c) & (y_pred == c)).sum())
            fp = int(((y_true != c) & (y_pred == c)).sum())
            fn = int(((y_true == c) & (y_pred != c)).sum())
            p = tp / (tp + fp) if tp + fp else 0.0
            r = tp / (tp + fn) if tp + fn else 0.0
            precs.append(p)
            recs.append(r)
            f1s.append(2 * p * r / (p + r) if p + r else 0.0)
        assert abs(m["accuracy"] - acc) <= 1e-12
        assert abs(m["precision"] - sum(precs) / k) <= 1e-12
        assert abs(m["recall"] - sum(recs) / k) <= 1e-12
        assert abs(m["f1"] - sum(f1s) / k) <= 1e-12
        rows = cm.counts.sum(axis=1)
        sums = cm.normalized.sum(axis=1)
        if np.any(rows > 0):
            worst_row_err = max(worst_row_err,
                                float(np.abs(sums[rows > 0] - 1.0).max()))
    assert worst_row_err <= 1e-9
    report("metrics oracle",
           f"1000 random cases recounted by hand, all equal; worst "
           f"normalized-row-sum error {worst_row_err:.1e}")
