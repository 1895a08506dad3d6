import numpy as np
import pytest

from conftest import make_dataset
from credence.data import Dataset, TermSpec
from credence.errors import (
    IdentityLinkOutOfRange,
    MissingColumn,
    RangeError,
)
from credence.numerics import sigmoid
from credence.predict import batch_posterior_mean
from credence.priors import PackagedModel, fit_flat
from credence.projection import (
    kl_bernoulli,
    mean_kl,
    pseudo_true_fit,
    self_project,
)


class TestKlBernoulli:
    def test_identity_is_zero(self):
        assert kl_bernoulli(0.3, 0.3) == 0.0

    def test_closed_form(self):
        expected = 0.5 * np.log(2.0) + 0.5 * np.log(2.0 / 3.0)
        assert kl_bernoulli(0.5, 0.25) == pytest.approx(expected, abs=1e-12)
        assert kl_bernoulli(0.5, 0.25) == pytest.approx(0.14384, abs=1e-5)

    def test_asymmetric(self):
        # note kl(0.1, 0.9) == kl(0.9, 0.1) by the complement identity
        # kl(p, q) == kl(1-p, 1-q); asymmetry needs a non-complementary pair
        assert kl_bernoulli(0.1, 0.5) != kl_bernoulli(0.5, 0.1)
        assert kl_bernoulli(0.1, 0.9) == pytest.approx(
            kl_bernoulli(0.9, 0.1), abs=1e-12
        )

    def test_nonnegative_and_zero_iff_equal(self, rng):
        for _ in range(200):
            p, q = rng.random(), rng.uniform(0.01, 0.99)
            value = kl_bernoulli(p, q)
            assert value >= 0.0
            if p != q:
                assert value > 0.0

    def test_boundary_p_handled(self):
        assert kl_bernoulli(0.0, 0.5) == pytest.approx(np.log(2.0))
        assert kl_bernoulli(1.0, 0.5) == pytest.approx(np.log(2.0))

    def test_infinite_divergence_is_error(self):
        with pytest.raises(RangeError):
            kl_bernoulli(0.5, 0.0)
        with pytest.raises(RangeError):
            kl_bernoulli(0.5, 1.0)

    def test_boundary_q_equal_p_allowed(self):
        assert kl_bernoulli(1.0, 1.0) == 0.0


def zero_sigma_copy(model):
    return PackagedModel(
        terms=model.terms,
        beta=model.beta,
        sigma=np.zeros_like(model.sigma),
        prior=dict(model.prior),
    )


class TestSelfProject:
    def test_zero_sigma_recovers_source(self):
        ds = make_dataset(n=200, p=4, seed=31)
        model = zero_sigma_copy(fit_flat(ds))
        projected = self_project(model, ds)
        assert np.max(np.abs(projected.beta - model.beta)) < 1e-6
        assert projected.mean_residual_kl <= 1e-10

    def test_full_term_projection_beats_plug_in(self):
        ds = make_dataset(n=150, p=4, seed=32, prevalence_intercept=-1.2)
        model = fit_flat(ds)
        projected = self_project(model, ds)
        mu = ds.X @ model.beta
        var = np.einsum("ij,jk,ik->i", ds.X, model.sigma, ds.X)
        pbar = batch_posterior_mean(mu, np.sqrt(var), model.quadrature_k)
        plug_in = sigmoid(mu)
        assert projected.mean_residual_kl <= mean_kl(pbar, plug_in)

    def test_subset_no_better_than_full(self):
        ds = make_dataset(n=150, p=4, seed=33)
        model = fit_flat(ds)
        full = self_project(model, ds)
        subset = self_project(model, ds, terms=["x1", "x2", "x3"])
        assert subset.mean_residual_kl >= full.mean_residual_kl

    def test_local_optimality(self):
        ds = make_dataset(n=120, p=3, seed=34)
        model = fit_flat(ds)
        projected = self_project(model, ds)
        mu = ds.X @ model.beta
        var = np.einsum("ij,jk,ik->i", ds.X, model.sigma, ds.X)
        pbar = batch_posterior_mean(mu, np.sqrt(var), model.quadrature_k)
        base = mean_kl(pbar, sigmoid(ds.X @ projected.beta))
        for j in range(len(projected.beta)):
            for delta in (-1e-3, 1e-3):
                bumped = np.array(projected.beta)
                bumped[j] += delta
                assert mean_kl(pbar, sigmoid(ds.X @ bumped)) >= base - 1e-12

    def test_shrinkage_capture(self):
        # projected slopes sit closer to zero than source slopes for most
        # coordinates on small-EPV flat fits
        closer = total = 0
        for rep in range(100):
            ds = make_dataset(n=100, p=5, seed=4000 + rep,
                              prevalence_intercept=-1.1)
            try:
                model = fit_flat(ds)
            except Exception:
                continue
            projected = self_project(model, ds)
            closer += int(np.sum(np.abs(projected.beta[1:]) <= np.abs(model.beta[1:])))
            total += 5
        assert total >= 400
        assert closer / total >= 0.8

    def test_deployment_single_evaluation_matches(self):
        ds = make_dataset(n=100, p=3, seed=35)
        model = fit_flat(ds)
        projected = self_project(model, ds)
        direct = sigmoid(ds.X @ projected.beta)
        via_rows = projected.predict_probs(ds.X[:, 1:])
        np.testing.assert_allclose(via_rows, direct, atol=1e-12)

    def test_unknown_terms_rejected(self):
        ds = make_dataset(n=100, p=3, seed=36)
        model = fit_flat(ds)
        with pytest.raises(MissingColumn):
            self_project(model, ds, terms=["nope"])

    def test_fingerprint_recorded(self):
        ds = make_dataset(n=100, p=3, seed=37)
        model = fit_flat(ds)
        projected = self_project(model, ds)
        assert projected.source_fingerprint == model.fingerprint()

    def test_identity_link_on_mild_case(self):
        ds = make_dataset(n=300, p=2, seed=38, prevalence_intercept=-1.0)
        model = fit_flat(ds)
        projected = self_project(model, ds, link="identity")
        fitted = ds.X @ projected.beta
        assert np.all(fitted > 0.0) and np.all(fitted < 1.0)
        assert projected.mean_residual_kl >= 0.0

    def test_identity_link_out_of_range(self, rng):
        # strong effects push a linear probability model outside (0, 1)
        X = rng.normal(size=(300, 1)) * 3.0
        eta = -0.5 + 2.5 * X[:, 0]
        y = (rng.random(300) < sigmoid(eta)).astype(float)
        ds = Dataset.from_features(X, y, (TermSpec("x"),))
        model = fit_flat(ds)
        with pytest.raises(IdentityLinkOutOfRange):
            self_project(model, ds, link="identity")


class TestPseudoTrueFit:
    def test_recovers_generating_coefficients(self, rng):
        n = 10_000
        X = rng.normal(size=(n, 3))
        beta = np.array([-1.0, 0.4, -0.3, 0.6])
        probs = sigmoid(beta[0] + X @ beta[1:])
        ds = Dataset.from_features(X, probs, tuple(TermSpec(f"x{j}") for j in range(3)))
        recovered = pseudo_true_fit(ds)
        assert np.max(np.abs(recovered - beta)) < 1e-3

    def test_intercept_only_matches_constant_score_equation(self, rng):
        probs = rng.uniform(0.05, 0.6, size=500)
        ds = Dataset(X=np.ones((500, 1)), y=probs, terms=())
        beta = pseudo_true_fit(ds)
        mean_p = float(np.mean(probs))
        assert beta[0] == pytest.approx(np.log(mean_p / (1 - mean_p)), abs=1e-8)

    def test_deterministic_for_fixed_population(self, rng):
        X = rng.normal(size=(2000, 4))
        probs = sigmoid(-1.0 + 0.5 * X[:, 0] - 0.2 * X[:, 1] + 0.1 * X[:, 2] ** 2)
        terms = tuple(TermSpec(f"x{j}") for j in range(4))
        ds = Dataset.from_features(X, probs, terms)
        a = pseudo_true_fit(ds, terms=["x0", "x1"])
        b = pseudo_true_fit(ds, terms=["x0", "x1"])
        np.testing.assert_array_equal(a, b)

    def test_requires_interior_probabilities(self):
        ds = Dataset(X=np.ones((3, 1)), y=[0.0, 0.5, 1.0], terms=())
        with pytest.raises(RangeError):
            pseudo_true_fit(ds)
