"""Test binary logit estimation and the likelihood-based fit measures."""

import numpy as np
import pytest

from civic.core import choice, geo
from civic.core.exceptions import CollinearDesignError, DesignMatrixError, QuasiSeparationError
from civic.core.models import (
    BlockGroupAttributes,
    CategoryLabel,
    FusedObservation,
    LogitSpec,
    SentimentLabel,
)


def design(y, *columns):
    y = np.asarray(y, dtype=float)
    X = np.column_stack([np.ones(len(y)), *columns]) if columns else np.ones((len(y), 1))
    names = ["Constant"] + [f"x{i}" for i in range(1, X.shape[1])]
    return choice.DesignData(y=y, X=X, feature_names=names)


@pytest.fixture(scope="module")
def synthetic_logit():
    """N=500 draws from a logit with beta = (-1, 0.8) on a standard normal regressor."""
    rng = np.random.default_rng(2024)
    x = rng.normal(size=500)
    y = (rng.random(500) < 1 / (1 + np.exp(-(-1 + 0.8 * x)))).astype(float)
    return design(y, x)


def test_null_log_likelihood_of_reported_sample():
    assert choice.null_log_likelihood(36098) == pytest.approx(-25021.22, abs=0.01)
    assert choice.null_log_likelihood(2) == pytest.approx(-1.3863, abs=1e-4)


@pytest.mark.parametrize(
    "ll, k, expected",
    [(-4659.241, 16, 0.813), (-4695.159, 15, 0.812), (-4418.215, 11, 0.823)],
)
def test_adjusted_rho_squared_of_reported_models(ll, k, expected):
    """Test the parameter-penalized fit index against the equal-shares null model."""
    ll_null = choice.null_log_likelihood(36098)

    assert choice.adjusted_rho_squared(ll, k, ll_null) == pytest.approx(expected, abs=5e-4)


def test_adjusted_rho_squared_rejects_zero_null():
    with pytest.raises(ValueError):
        choice.adjusted_rho_squared(-1.0, 1, 0.0)


def test_intercept_only_fit():
    """Test that the intercept recovers the log odds of the sample share."""
    data = design([1, 1, 1, 0, 0, 0, 0, 0, 0, 0])

    result = choice.fit(data)

    assert result.converged
    assert result.beta[0] == pytest.approx(np.log(3 / 7), abs=1e-6)
    assert choice.predict_prob(result.beta, [1.0]) == pytest.approx(0.3)
    assert result.ll == pytest.approx(-6.109, abs=1e-3)
    assert result.ll_intercept == pytest.approx(result.ll)


def test_single_binary_regressor_gives_log_odds_ratio():
    """Test cells (x=1: 20 ones, 10 zeros; x=0: 10 ones, 20 zeros) against ln(20*20 / (10*10))."""
    x = np.array([1] * 30 + [0] * 30, dtype=float)
    y = np.array([1] * 20 + [0] * 10 + [1] * 10 + [0] * 20, dtype=float)

    result = choice.fit(design(y, x))

    assert result.beta[1] == pytest.approx(np.log(4), abs=1e-6)
    assert result.beta[0] == pytest.approx(np.log(0.5), abs=1e-6)


def test_newton_matches_grid_search(synthetic_logit):
    """Test the Newton optimum against a brute-force 0.01-step grid maximizer of the same likelihood."""
    result = choice.fit(synthetic_logit)

    steps = np.round(np.arange(-0.4, 0.4001, 0.01), 2)
    b0, b1 = np.meshgrid(-1 + steps, 0.8 + steps, indexing="ij")
    grid = np.column_stack([b0.ravel(), b1.ravel()])
    eta = grid @ synthetic_logit.X.T
    y = synthetic_logit.y
    ll = (y * -np.logaddexp(0, -eta) + (1 - y) * -np.logaddexp(0, eta)).sum(axis=1)
    best = grid[np.argmax(ll)]

    np.testing.assert_allclose(result.beta, best, atol=0.02)
    assert abs(result.beta[0] + 1) < 3 * result.std_errors[0]
    assert abs(result.beta[1] - 0.8) < 3 * result.std_errors[1]


def test_fit_statistics_are_consistent(synthetic_logit):
    result = choice.fit(synthetic_logit)

    assert result.n_obs == 500
    assert result.n_params == 2
    assert result.ll_null == pytest.approx(-500 * np.log(2))
    assert result.ll_null <= result.ll_intercept <= result.ll <= 0
    assert result.rho_sq == pytest.approx(1 - result.ll / result.ll_null)
    np.testing.assert_allclose(
        result.t_stats, np.array(result.beta) / np.array(result.std_errors)
    )
    assert all(0 <= p <= 1 for p in result.p_values)


def test_gradient_matches_finite_differences(synthetic_logit):
    beta = np.array([-0.5, 0.3])
    eps = 1e-6
    numeric = np.array(
        [
            (
                choice.log_likelihood(synthetic_logit, beta + eps * unit)
                - choice.log_likelihood(synthetic_logit, beta - eps * unit)
            )
            / (2 * eps)
            for unit in np.eye(2)
        ]
    )

    np.testing.assert_allclose(choice.gradient(synthetic_logit, beta), numeric, rtol=1e-6)


def test_hessian_is_negative_semidefinite(synthetic_logit):
    eigenvalues = np.linalg.eigvalsh(choice.hessian(synthetic_logit, np.array([0.2, -0.4])))

    assert (eigenvalues <= 0).all()


def test_collinear_columns_are_rejected():
    rng = np.random.default_rng(0)
    x = rng.normal(size=20)
    y = (rng.random(20) < 0.5).astype(float)

    with pytest.raises(CollinearDesignError, match="collinear design"):
        choice.fit(design(y, x, 2 * x))


def test_separated_outcome_is_rejected():
    """Test that perfectly separated outcomes stop the iteration instead of diverging."""
    x = np.array([-0.2, -0.1, -0.05, 0.05, 0.1, 0.2])

    with pytest.raises(QuasiSeparationError, match="quasi-separation detected"):
        choice.fit(design([0, 0, 0, 1, 1, 1], x))


def test_iteration_limit_returns_unconverged_fit(synthetic_logit):
    result = choice.fit(synthetic_logit, max_iter=1)

    assert not result.converged
    assert result.iterations == 1


@pytest.mark.parametrize(
    "y, X",
    [
        ([0, 1, 2, 0], np.ones((4, 1))),
        ([0, 1, 1, 0], np.column_stack([np.zeros(4), np.arange(4)])),
        ([0, 1], np.ones((2, 2))),
        ([0, 1, 1, 0], np.array([[1, np.nan]] * 4)),
    ],
)
def test_invalid_design_data(y, X):
    names = ["Constant"] + [f"x{i}" for i in range(1, X.shape[1])]

    with pytest.raises(ValueError):
        choice.DesignData(y=np.asarray(y, dtype=float), X=X, feature_names=names)


def test_predict_prob_saturates():
    assert choice.predict_prob([800.0], [1.0]) == 1.0
    assert choice.predict_prob([-800.0], [1.0]) == 0.0
    assert choice.predict_prob([0.0, 1.0], [1.0, 0.0]) == 0.5


def test_predict_prob_rejects_mismatched_lengths():
    with pytest.raises(DesignMatrixError):
        choice.predict_prob([0.0, 1.0], [1.0])


def make_observations(n=200, seed=0):
    rng = np.random.default_rng(seed)
    observations = []
    for i in range(n):
        income = float(rng.choice([30000, 90000]))
        high = income > 50000
        accessibility = rng.random() < (0.6 if high else 0.3)
        observations.append(
            FusedObservation(
                post_id=str(i),
                category=CategoryLabel.ACCESSIBILITY if accessibility else CategoryLabel.OTHERS,
                sentiment=SentimentLabel.neutral,
                female=int(rng.random() < 0.4),
                geoid="360610001001",
                attributes=BlockGroupAttributes(
                    geoid="360610001001",
                    per_capita_income=income / 2,
                    median_income=income,
                    percent_unemployed=3.0,
                    poverty_rate=10.0,
                    mean_travel_time=30.0,
                    hs_completion=90.0,
                    pm25_pctile=50.0,
                    diesel_pctile=50.0,
                    traffic_pctile=float(rng.integers(0, 101)),
                    agri_loss_pctile=0.0,
                    building_loss_pctile=0.0,
                    energy_burden_pctile=0.0,
                    disadvantaged=False,
                    low_income_nonstudent=False,
                ),
            )
        )
    return observations


def test_build_design_and_fit_models():
    """Test that a recipe produces the intercept plus one column per feature, in recipe order."""
    spec = LogitSpec(
        name="access",
        outcome_name="Transport Accessibility",
        target_category=CategoryLabel.ACCESSIBILITY,
        features=[geo.FEMALE, geo.MEDIAN_INCOME, geo.TRAFFIC],
    )
    observations = make_observations()

    data = choice.build_design(observations, spec)
    fits = choice.fit_models(observations, [spec])

    assert data.X.shape == (200, 4)
    assert data.feature_names == spec.feature_names
    assert data.y.sum() == sum(o.category == CategoryLabel.ACCESSIBILITY for o in observations)
    assert list(fits) == ["access"]
    assert fits["access"].feature_names[0] == "Constant"
    assert fits["access"].beta[2] > 0


def test_build_design_rejects_constant_feature():
    spec = LogitSpec(
        name="access",
        outcome_name="Transport Accessibility",
        target_category=CategoryLabel.ACCESSIBILITY,
        features=[geo.PM25],
    )

    with pytest.raises(CollinearDesignError, match="access: collinear design"):
        choice.build_design(make_observations(), spec)
