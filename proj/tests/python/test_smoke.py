import numpy as np
import pytest

import mcmklr


def circulant_dense(col, dims):
    n = int(np.prod(dims))
    idx = np.array(np.unravel_index(np.arange(n), dims)).T
    out = np.empty((n, n))
    for i in range(n):
        diff = (idx[i] - idx) % np.array(dims)
        out[i] = col[np.ravel_multi_index(diff.T, dims)]
    return out


def symmetric_column(rng, dims):
    col = rng.standard_normal(dims)
    flipped = col[tuple(np.s_[::-1] for _ in dims)]
    flipped = np.roll(flipped, 1, axis=tuple(range(len(dims))))
    return (0.5 * (col + flipped)).ravel()


def test_level_orders():
    assert mcmklr.LevelOrder.for_size(1000, 3).dims == [10, 10, 10]
    assert mcmklr.LevelOrder.smooth_for_size(16384, 3).dims == [32, 32, 16]
    assert mcmklr.LevelOrder([3, 4]).n == 12


def test_mfft_matches_kronecker_dft():
    dims = [3, 4]
    order = mcmklr.LevelOrder(dims)
    rng = np.random.default_rng(0)
    x = rng.standard_normal(12) + 1j * rng.standard_normal(12)
    f = [np.exp(2j * np.pi * np.outer(np.arange(m), np.arange(m)) / m) for m in dims]
    want = np.kron(f[0], f[1]) @ x
    np.testing.assert_allclose(mcmklr.mfft(x, order), want, atol=1e-10)
    np.testing.assert_allclose(mcmklr.mfft_adjoint(want, order), 12 * x, atol=1e-9)


def test_matvec_and_solve_against_dense():
    dims = [4, 3, 5]
    order = mcmklr.LevelOrder(dims)
    rng = np.random.default_rng(1)
    col = symmetric_column(rng, dims)
    k = mcmklr.MultilevelCirculant.from_first_column(col, order)
    dense = circulant_dense(col, dims)
    np.testing.assert_allclose(k.to_dense(), dense, atol=1e-12)
    x = rng.standard_normal(order.n)
    np.testing.assert_allclose(k.matvec(x), dense @ x, atol=1e-10)
    shift = np.abs(k.eigenvalues).max() + 1.0
    sol = k.solve_shifted(shift, x)
    np.testing.assert_allclose((dense + shift * np.eye(order.n)) @ sol.x, x, atol=1e-9)
    np.testing.assert_allclose((2.0 * k + k).matvec(x), 3.0 * (dense @ x), atol=1e-9)


def test_construct_column_is_symmetric():
    order = mcmklr.LevelOrder([6, 5])
    col = mcmklr.construct_column(0.3, order)
    assert col[0] == pytest.approx(1.0)
    k = mcmklr.MultilevelCirculant.from_first_column(col, order)
    assert not k.asymmetric


def test_train_and_predict_binary():
    tr = mcmklr.generate_checkerboard(4000, 11)
    te = mcmklr.generate_checkerboard(2000, 12)
    cfg = mcmklr.TrainConfig(sigma=256.0)
    model = mcmklr.train(tr, cfg)
    assert model.solver == "mcm"
    assert model.n_train == 4000
    diag = model.diagnostics
    assert all(b < a for a, b in zip(diag["objective_trace"], diag["objective_trace"][1:]))
    proba = model.predict_proba(te.x)
    assert proba.shape == (2000,)
    assert ((proba > 0) & (proba < 1)).all()
    assert mcmklr.accuracy(te.y, model.predict(te.x)) > 0.9
    assert mcmklr.roc_auc(te.y, proba) > 0.95


def test_exact_solver_and_cap():
    tr, te = mcmklr.generate_fig1_synthetic(300, 100)
    cfg = mcmklr.TrainConfig(sigma=256.0)
    exact = mcmklr.train(tr, cfg, solver="exact")
    fast = mcmklr.train(tr, cfg)
    agree = np.mean(exact.predict(te.x) == fast.predict(te.x))
    assert agree > 0.9
    with pytest.raises(mcmklr.CapExceededError):
        mcmklr.train(tr, cfg, solver="exact", dense_cap=100)


def test_multiclass_and_model_file(tmp_path):
    data = mcmklr.generate_blobs(300, 3, 7)
    model = mcmklr.train_ova(data, mcmklr.TrainConfig(sigma=40.0), jobs=2)
    pred = model.predict(data.x)
    assert mcmklr.accuracy(data.y, pred) >= 0.99
    assert mcmklr.macro_f1(data.y, pred) >= 0.99
    assert mcmklr.confusion_matrix(data.y, pred).sum() == 300
    path = str(tmp_path / "m.bin")
    mcmklr.save_model(model, path)
    back, scaler = mcmklr.load_model(path)
    assert scaler is None
    np.testing.assert_array_equal(back.predict(data.x), pred)


def test_dataset_from_arrays_and_errors():
    x = np.array([[0.0, 0.0], [1.0, 1.0], [0.1, 0.0], [0.9, 1.0]])
    d = mcmklr.Dataset(x, np.array([-1.0, 1.0, -1.0, 1.0]))
    assert d.label_values == [-1.0, 1.0]
    assert list(d.y) == [0, 1, 0, 1]
    with pytest.raises(mcmklr.DimensionError):
        mcmklr.Dataset(x, np.array([1.0]))
    with pytest.raises(mcmklr.ValidationError):
        mcmklr.TrainConfig(lam=0.0)
    with pytest.raises(mcmklr.Error):
        mcmklr.load_sparse_text("/nonexistent.txt")
