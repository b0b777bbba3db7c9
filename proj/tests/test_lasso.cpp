#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "smrm/lasso.hpp"

using namespace smrm;

namespace {

struct Problem {
    Matrix X;
    Vector y;
};

Problem random_problem(Rng& rng, Index n, Index p) {
    Problem pr;
    pr.X = oracle::random_normal(n, p, rng);
    Vector beta = Vector::Zero(p);
    for (Index j = 0; j < p; j += 2) beta(j) = oracle::uniform(rng, -2, 2);
    pr.y = pr.X * beta + oracle::random_normal(n, 1, rng) + Vector::Constant(n, 0.7);
    return pr;
}

}  // namespace

TEST_CASE("penalty at lambda_max zeroes every coefficient") {
    Rng rng(1);
    const Problem pr = random_problem(rng, 40, 6);
    const double lmax = lasso_lambda_max(pr.X, pr.y);
    const LassoFit fit = lasso_fit(pr.X, pr.y, lmax);
    CHECK(fit.beta.cwiseAbs().maxCoeff() == 0.0);
    CHECK(fit.beta0 == doctest::Approx(pr.y.mean()));
    const LassoFit below = lasso_fit(pr.X, pr.y, 0.95 * lmax);
    CHECK(below.beta.cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("orthogonal design has the soft-threshold closed form") {
    // Columns of a centered Hadamard-like design with x^T x / n = 1.
    const Index n = 8;
    Matrix X(n, 3);
    for (Index i = 0; i < n; ++i) {
        X(i, 0) = (i & 1) ? 1.0 : -1.0;
        X(i, 1) = (i & 2) ? 1.0 : -1.0;
        X(i, 2) = (i & 4) ? 1.0 : -1.0;
    }
    Vector y(n);
    y << 3, -1, 2, 0.5, 1, 4, -2, 0;
    const double lambda = 0.6;
    const LassoFit fit = lasso_fit(X, y, lambda);
    for (Index j = 0; j < 3; ++j) {
        const double z = X.col(j).dot(y) / static_cast<double>(n);
        CHECK(fit.beta(j) == doctest::Approx(oracle::soft(z, lambda / 2)).epsilon(1e-9));
    }
    CHECK(fit.beta0 == doctest::Approx(y.mean()));
}

TEST_CASE("zero penalty matches least squares") {
    Rng rng(2);
    const Problem pr = random_problem(rng, 60, 5);
    LassoOptions opt;
    opt.tol = 1e-12;
    const LassoFit fit = lasso_fit(pr.X, pr.y, 0.0, opt);
    const Matrix ols = oracle::ols_stacked(pr.X, pr.y);
    CHECK(std::abs(fit.beta0 - ols(0, 0)) < 1e-8);
    CHECK((fit.beta - ols.col(0).tail(5)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("fits satisfy subgradient optimality and never increase the objective") {
    Rng rng(3);
    LassoOptions opt;
    opt.record_objective = true;
    for (int trial = 0; trial < 20; ++trial) {
        const Problem pr = random_problem(rng, 50, 10);
        const double lambda = oracle::uniform(rng, 0.01, 0.9) * lasso_lambda_max(pr.X, pr.y);
        const LassoFit fit = lasso_fit(pr.X, pr.y, lambda, opt);
        CHECK(fit.converged);
        CHECK(oracle::lasso_kkt(pr.X, pr.y, fit.beta0, fit.beta, lambda) < 1e-6);
        CHECK(lasso_kkt_violation(pr.X, pr.y, fit) < 1e-6);
        for (std::size_t k = 1; k < fit.objective_trace.size(); ++k) {
            CHECK(fit.objective_trace[k] <= fit.objective_trace[k - 1]);
        }
        CHECK(lasso_objective(pr.X, pr.y, fit.beta0, fit.beta, lambda) ==
              doctest::Approx(oracle::lasso_objective(pr.X, pr.y, fit.beta0, fit.beta, lambda)));
    }
}

TEST_CASE("no single coordinate move improves a returned fit") {
    Rng rng(4);
    const Problem pr = random_problem(rng, 30, 4);
    const double lambda = 0.2 * lasso_lambda_max(pr.X, pr.y);
    LassoOptions opt;
    opt.tol = 1e-10;
    const LassoFit fit = lasso_fit(pr.X, pr.y, lambda, opt);
    const double best = oracle::lasso_objective(pr.X, pr.y, fit.beta0, fit.beta, lambda);
    for (Index j = 0; j < 4; ++j) {
        for (double h : {-1e-3, 1e-3}) {
            Vector b = fit.beta;
            b(j) += h;
            CHECK(oracle::lasso_objective(pr.X, pr.y, fit.beta0, b, lambda) >= best - 1e-12);
        }
    }
}

TEST_CASE("warm-started path matches cold fits") {
    Rng rng(5);
    const Problem pr = random_problem(rng, 50, 8);
    const std::vector<double> grid = lasso_default_grid(pr.X, pr.y, 20, 1e-3);
    CHECK(grid.size() == 20);
    CHECK(grid.front() == doctest::Approx(lasso_lambda_max(pr.X, pr.y)));
    CHECK(grid.back() == doctest::Approx(1e-3 * grid.front()));
    const std::vector<LassoFit> path = lasso_path(pr.X, pr.y, grid);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const LassoFit cold = lasso_fit(pr.X, pr.y, grid[k]);
        CHECK((path[k].beta - cold.beta).cwiseAbs().maxCoeff() < 1e-5);
    }
}

TEST_CASE("constant predictor stays at zero") {
    Rng rng(6);
    Problem pr = random_problem(rng, 30, 3);
    pr.X.col(1).setConstant(2.0);
    const LassoFit fit = lasso_fit(pr.X, pr.y, 0.01);
    CHECK(fit.beta(1) == 0.0);
}

TEST_CASE("fold assignment is balanced and reproducible") {
    const std::vector<int> a = fold_assignment(23, 5, 9);
    CHECK(a == fold_assignment(23, 5, 9));
    CHECK(a != fold_assignment(23, 5, 10));
    std::vector<int> counts(5, 0);
    for (int f : a) ++counts[static_cast<std::size_t>(f)];
    for (int c : counts) CHECK((c == 4 || c == 5));
}

TEST_CASE("cross-validation picks the larger penalty on ties and is seeded") {
    Rng rng(7);
    const Problem pr = random_problem(rng, 40, 5);
    const std::vector<double> grid = lasso_default_grid(pr.X, pr.y, 30);
    const LassoCvResult cv = lasso_cv(pr.X, pr.y, grid, 5, 3);
    const LassoCvResult again = lasso_cv(pr.X, pr.y, grid, 5, 3);
    CHECK(cv.best_lambda == again.best_lambda);
    CHECK(cv.cv_errors == again.cv_errors);
    const auto best = *std::min_element(cv.cv_errors.begin(), cv.cv_errors.end());
    CHECK(cv.cv_errors[cv.best_index] == best);
    for (std::size_t k = 0; k < cv.best_index; ++k) CHECK(cv.cv_errors[k] > best);

    // A response unrelated to X: every penalty above lambda_max gives the same error.
    const std::vector<double> flat{4.0 * grid[0], 3.0 * grid[0], 2.0 * grid[0]};
    CHECK(lasso_cv(pr.X, pr.y, flat, 5, 3).best_index == 0);

    CHECK_THROWS_AS(lasso_cv(pr.X, pr.y, {0.1, 0.2}, 5, 3), Error);
    CHECK_THROWS_AS(lasso_cv(pr.X.topRows(3), pr.y.head(3), grid, 5, 3), Error);
}

TEST_CASE("noiseless linear response selects the smallest penalty") {
    Rng rng(8);
    const Matrix X = oracle::random_normal(40, 3, rng);
    Vector beta(3);
    beta << 1.5, -2.0, 0.5;
    const Vector y = X * beta + Vector::Constant(40, 1.0);
    std::vector<double> grid = lasso_default_grid(X, y, 30, 1e-6);
    const LassoCvResult cv = lasso_cv(X, y, grid, 5, 1);
    CHECK(cv.best_index == grid.size() - 1);
}

TEST_CASE("response unrelated to X selects penalties near the top, by majority over seeds") {
    int near_top = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Rng rng(seed);
        const Matrix X = oracle::random_normal(60, 5, rng);
        const Vector y = oracle::random_normal(60, 1, rng);
        const std::vector<double> grid = lasso_default_grid(X, y, 50);
        const LassoCvResult cv = lasso_cv(X, y, grid, 5, seed);
        near_top += cv.best_lambda >= 0.1 * grid.front();
    }
    CHECK(near_top > 10);
}

TEST_CASE("leave-one-out on five rows") {
    Rng rng(9);
    const Matrix X = oracle::random_normal(5, 2, rng);
    const Vector y = oracle::random_normal(5, 1, rng);
    const LassoCvResult cv = lasso_cv(X, y, lasso_default_grid(X, y, 10), 5, 1);
    for (double e : cv.cv_errors) CHECK(std::isfinite(e));
}

TEST_CASE("prediction arithmetic and input checks") {
    LassoFit fit;
    fit.beta0 = 3.0;
    fit.beta = Vector::Zero(2);
    CHECK(lasso_predict(fit, Matrix::Random(4, 2)).isApprox(Vector::Constant(4, 3.0)));
    fit.beta0 = 0.0;
    fit.beta << 1, -1;
    Matrix row(1, 2);
    row << 2, 5;
    CHECK(lasso_predict(fit, row)(0) == -3.0);
    CHECK_THROWS_AS(lasso_predict(fit, Matrix::Zero(1, 3)), Error);
    Matrix X = Matrix::Ones(3, 1);
    X(1, 0) = std::nan("");
    CHECK_THROWS_AS(lasso_fit(X, Vector::Ones(3), 0.1), Error);
    CHECK_THROWS_AS(lasso_fit(Matrix::Ones(3, 1), Vector::Ones(3), -1.0), Error);
}
