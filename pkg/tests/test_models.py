"""Tests for the field/direct models: forwards, exact gradients, training."""

import numpy as np
import pytest

from jidm.data import generate_selfplay, split
from jidm.kinematics import default_chain, fit_camera
from jidm.models import (
    DirectBatch,
    FieldBatch,
    KIND_DIDM_FLOW,
    KIND_JIDM,
    KIND_UNIPI,
    TrainConfig,
    eval_action_mse,
    eval_flow_epe,
    evaluate_field,
    extract_patches,
    load_checkpoint,
    loss_direct,
    loss_jidm,
    make_model,
    param_count,
    pooling_grid,
    predict_direct,
    sample_direct_batch,
    sample_field_batch,
    save_checkpoint,
    train,
)
from jidm.render import default_style


def tiny_dataset(n=2, size=(32, 32), episodes=2, steps=6, seed=0):
    cfg = default_chain(n)
    cam = fit_camera(cfg, size)
    return generate_selfplay(cfg, cam, default_style(n), episodes, steps, seed=seed)


def small_model(kind=KIND_JIDM, n=2, patch=5, hidden=(16, 16), seed=0):
    return make_model(kind, n, patch_size=patch, hidden=hidden, seed=seed)


class TestEvaluateField:
    def test_zero_params_zero_field(self):
        model = small_model()
        model = model.with_params(np.zeros_like(model.params))
        img = np.random.default_rng(0).random((32, 32, 1))
        out = evaluate_field(model, img, np.array([[3, 4], [10, 20]]))
        np.testing.assert_array_equal(out, 0.0)

    def test_batched_equals_single_bitwise(self):
        model = small_model(seed=3)
        img = np.random.default_rng(1).random((32, 32, 1))
        pixels = np.array([[1, 2], [30, 31], [15, 7], [0, 0]])
        batched = evaluate_field(model, img, pixels)
        for i, p in enumerate(pixels):
            single = evaluate_field(model, img, p[None])
            np.testing.assert_array_equal(batched[i], single[0])

    def test_out_of_bounds_rejected(self):
        model = small_model()
        img = np.zeros((32, 32, 1))
        with pytest.raises(ValueError):
            evaluate_field(model, img, np.array([[32, 0]]))
        with pytest.raises(ValueError):
            evaluate_field(model, img, np.array([[0, -1]]))

    def test_field_application_linear_in_action(self):
        model = small_model(seed=5)
        img = np.random.default_rng(2).random((32, 32, 1))
        jac = evaluate_field(model, img, np.array([[8, 9]]))[0]
        a = np.array([0.04, -0.02])
        np.testing.assert_allclose(jac @ (3.0 * a), 3.0 * (jac @ a), atol=0)

    def test_patch_extraction_zero_padding(self):
        img = np.ones((8, 8, 1))
        patches = extract_patches(img, np.array([[0, 0]]), 5)
        patch = patches.reshape(5, 5)
        assert patch[:2].sum() == 0 and patch[:, :2].sum() == 0
        assert np.all(patch[2:, 2:] == 1.0)

    def test_patch_bilinear_half_pixel(self):
        rng = np.random.default_rng(4)
        img = rng.random((8, 8, 1))
        left = extract_patches(img, np.array([[3.0, 4.0]]), 3)
        right = extract_patches(img, np.array([[4.0, 4.0]]), 3)
        mid = extract_patches(img, np.array([[3.5, 4.0]]), 3)
        np.testing.assert_allclose(mid, 0.5 * (left + right), atol=1e-12)


class TestParameterParity:
    @pytest.mark.parametrize("kind", [KIND_UNIPI, KIND_DIDM_FLOW])
    @pytest.mark.parametrize("n", [2, 5, 16])
    def test_within_two_percent(self, kind, n):
        ref = make_model(KIND_JIDM, n)
        other = make_model(kind, n)
        a, b = param_count(ref.sizes), param_count(other.sizes)
        assert abs(a - b) / a <= 0.02
        assert other.params.size == b

    def test_exact_reported_count(self):
        model = small_model()
        assert model.params.size == param_count(model.sizes)


def random_field_batch(model, rng, pixels=40):
    d = model.input_dim
    return FieldBatch(
        inputs=rng.normal(size=(pixels, d)),
        actions=rng.uniform(-0.1, 0.1, size=(pixels, model.n_joints)),
        targets=rng.normal(scale=2.0, size=(pixels, 2)),
    )


def random_direct_batch(model, rng, records=3, grid=12):
    return DirectBatch(
        inputs=rng.normal(size=(records * grid, model.input_dim)),
        actions=rng.uniform(-0.1, 0.1, size=(records, model.n_joints)),
        grid_size=grid,
    )


def finite_difference_check(loss_fn, params, rng, n_coords=20, h=1e-6, tol=1e-4):
    base_params = params.copy()
    _, grad = loss_fn(base_params)
    coords = rng.choice(params.size, size=min(n_coords, params.size), replace=False)
    for c in coords:
        p = base_params.copy()
        p[c] += h
        up, _ = loss_fn(p)
        p[c] -= 2 * h
        dn, _ = loss_fn(p)
        fd = (up - dn) / (2 * h)
        denom = max(abs(fd), abs(grad[c]), 1e-8)
        assert abs(fd - grad[c]) / denom < tol, f"coord {c}: fd={fd:.3e} grad={grad[c]:.3e}"


class TestGradients:
    def test_jidm_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(101)
        model = small_model(seed=9)
        # non-degenerate parameters everywhere, including the zero-initialized head
        model = model.with_params(rng.normal(scale=0.3, size=model.params.size))
        batch = random_field_batch(model, rng)
        cfg = TrainConfig(w_a=0.3, ridge_lambda=1e-3, steps=1)
        finite_difference_check(
            lambda p: loss_jidm(model.with_params(p), batch, cfg), model.params, rng
        )

    def test_jidm_inverse_term_gradient_alone(self):
        # w_a large isolates the pseudoinverse path
        rng = np.random.default_rng(55)
        model = small_model(seed=2)
        model = model.with_params(rng.normal(scale=0.3, size=model.params.size))
        batch = random_field_batch(model, rng)
        cfg = TrainConfig(w_a=10.0, ridge_lambda=1e-2, steps=1)
        finite_difference_check(
            lambda p: loss_jidm(model.with_params(p), batch, cfg), model.params, rng
        )

    @pytest.mark.parametrize("kind", [KIND_UNIPI, KIND_DIDM_FLOW])
    def test_direct_gradient_matches_finite_differences(self, kind):
        rng = np.random.default_rng(77)
        model = make_model(kind, 2, patch_size=5, hidden=(12, 12), seed=4)
        model = model.with_params(rng.normal(scale=0.3, size=model.params.size))
        batch = random_direct_batch(model, rng)
        finite_difference_check(
            lambda p: loss_direct(model.with_params(p), batch), model.params, rng
        )


class TestLossValues:
    def test_charbonnier_floor_at_exact_fit(self):
        # If J da == v exactly, each forward summand equals eps.
        rng = np.random.default_rng(6)
        model = small_model(seed=1)
        model = model.with_params(rng.normal(scale=0.3, size=model.params.size))
        batch = random_field_batch(model, rng, pixels=10)
        img_inputs = batch.inputs
        out = model.mlp().evaluate_chunked(img_inputs).reshape(-1, 2, model.n_joints)
        batch.targets = np.einsum("pij,pj->pi", out, batch.actions)
        cfg = TrainConfig(w_a=0.0, charbonnier_eps=1e-3, ridge_lambda=1e-3, steps=1)
        loss, _ = loss_jidm(model, batch, cfg)
        assert abs(loss - 1e-3) < 1e-12

    def test_w_a_zero_is_pure_flow_loss(self):
        rng = np.random.default_rng(16)
        model = small_model(seed=8)
        model = model.with_params(rng.normal(scale=0.3, size=model.params.size))
        batch = random_field_batch(model, rng)
        cfg0 = TrainConfig(w_a=0.0, ridge_lambda=1e-3, steps=1)
        loss0, _ = loss_jidm(model, batch, cfg0)
        out = model.mlp().evaluate_chunked(batch.inputs).reshape(-1, 2, model.n_joints)
        r = np.einsum("pij,pj->pi", out, batch.actions) - batch.targets
        expected = np.mean(np.sqrt(np.einsum("pi,pi->p", r, r) + 1e-6))
        assert abs(loss0 - expected) < 1e-12

    def test_direct_zero_error(self):
        rng = np.random.default_rng(3)
        model = make_model(KIND_UNIPI, 2, patch_size=5, hidden=(12, 12), seed=0)
        batch = random_direct_batch(model, rng)
        out_head_zero = model  # zero head -> prediction 0
        batch.actions = np.zeros_like(batch.actions)
        loss, _ = loss_direct(out_head_zero, batch)
        assert loss == 0.0

    def test_zero_predictor_mse_is_uniform_second_moment(self):
        # constant-zero predictor on uniform(-dmax, dmax): MSE = dmax^2 / 3
        ds = tiny_dataset(episodes=25, steps=40, seed=12)
        model = make_model(KIND_UNIPI, 2, patch_size=5, hidden=(12, 12), seed=0)  # zero head
        mse = eval_action_mse(model, ds)
        # normalized per coordinate to unit cap: expect 1/3
        assert abs(mse - 1.0 / 3.0) < 0.02


class TestTraining:
    def test_zero_steps_leaves_parameters(self):
        ds = tiny_dataset()
        model = small_model(seed=2)
        trained, curve = train(model, ds, TrainConfig(steps=0, seed=0))
        np.testing.assert_array_equal(trained.params, model.params)
        assert curve == []

    def test_seeded_determinism(self):
        ds = tiny_dataset()
        model = small_model(seed=2)
        cfg = TrainConfig(steps=12, batch_records=2, pixels_per_record=32, seed=5)
        t1, c1 = train(model, ds, cfg)
        t2, c2 = train(model, ds, cfg)
        np.testing.assert_array_equal(t1.params, t2.params)
        assert c1 == c2

    def test_training_reduces_flow_epe(self):
        ds = tiny_dataset(episodes=4, steps=10, seed=3)
        train_ds, val_ds = split(ds, 0.5, seed=0)
        model = small_model(seed=7)
        before = eval_flow_epe(model, val_ds)
        cfg = TrainConfig(steps=150, batch_records=4, pixels_per_record=64, seed=1)
        trained, curve = train(model, ds, cfg)
        after = eval_flow_epe(trained, val_ds)
        assert after < before
        assert curve[0][0] == 0 and curve[-1][0] == 149

    def test_divergence_aborts_with_diagnostic(self):
        ds = tiny_dataset()
        model = small_model(seed=2)
        model = model.with_params(np.full_like(model.params, np.nan))
        cfg = TrainConfig(steps=5, batch_records=2, pixels_per_record=16, seed=0)
        with pytest.raises(RuntimeError, match="step"):
            train(model, ds, cfg)

    @pytest.mark.parametrize("kind", [KIND_UNIPI, KIND_DIDM_FLOW])
    def test_direct_models_train(self, kind):
        ds = tiny_dataset(episodes=4, steps=10, seed=3)
        model = make_model(kind, 2, patch_size=5, hidden=(12, 12), seed=1)
        zero_mse = eval_action_mse(model, ds)
        cfg = TrainConfig(steps=200, batch_records=4, seed=2)
        trained, _ = train(model, ds, cfg)
        assert eval_action_mse(trained, ds) < zero_mse


class TestCheckpoints:
    @pytest.mark.parametrize("kind", [KIND_JIDM, KIND_UNIPI, KIND_DIDM_FLOW])
    def test_round_trip_bitwise(self, tmp_path, kind):
        model = make_model(kind, 3, patch_size=5, hidden=(10, 10), seed=6)
        path = str(tmp_path / "m.ckpt")
        save_checkpoint(path, model)
        back = load_checkpoint(path)
        assert back.kind == model.kind
        assert back.hidden == model.hidden
        np.testing.assert_array_equal(back.params, model.params)
        save_checkpoint(str(tmp_path / "m2.ckpt"), back)
        assert open(path, "rb").read() == open(str(tmp_path / "m2.ckpt"), "rb").read()

    def test_bad_magic_rejected(self, tmp_path):
        path = str(tmp_path / "x.ckpt")
        open(path, "wb").write(b"WHAT" + b"\0" * 32)
        with pytest.raises(ValueError):
            load_checkpoint(path)
