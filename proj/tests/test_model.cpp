#include <doctest.h>

#include "mlm/error.hpp"
#include "mlm/model.hpp"
#include "support.hpp"

using namespace mlm;
using namespace testing;

TEST_CASE("standardizer round trip and zero-variance flags") {
    std::mt19937_64 rng(1);
    Matrix codes = random_gaussian(6, 30, rng) * 3.0;
    codes.row(2).setConstant(4.25);
    const Standardizer s = Standardizer::fit(codes);
    CHECK(s.flagged[2]);
    CHECK(s.scale(2) == 1.0);
    CHECK(s.mean(2) == 4.25);
    for (Index i = 0; i < 6; ++i) CHECK(s.scale(i) > 0.0);
    const Matrix z = s.standardize(codes);
    for (Index i = 0; i < 6; ++i) {
        if (i == 2) continue;
        CHECK(std::abs(z.row(i).mean()) <= 1e-12);
        CHECK(std::abs(z.row(i).squaredNorm() / 30.0 - 1.0) <= 1e-12);
    }
    for (Index j = 0; j < 30; ++j) {
        const Vector y = codes.col(j);
        CHECK(relative_error(s.destandardize(s.standardize(y)), y) <= 1e-12);
    }
    CHECK_THROWS_AS(s.standardize(Vector(Vector::Zero(5))), DimensionError);
}

TEST_CASE("predict and predict_einsum agree") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 100; ++trial) {
        const TensorModel m = random_model(rng, 6 + trial % 5, 2 + trial % 4, 3 + trial % 3, 1 + trial % 2);
        const ParameterSet q = random_params(m, rng);
        const Vector a = predict(m, q), b = predict_einsum(m, q);
        CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("prediction is multilinear") {
    std::mt19937_64 rng(3);
    const TensorModel m = random_model(rng);
    const ParameterSet q = random_params(m, rng);
    for (Subspace k : kSubspaces) {
        ParameterSet a = q, b = q, sum = q, scaled = q;
        b[k] = random_vector(m.rank(k), rng);
        sum[k] = a[k] + b[k];
        scaled[k] = 2.5 * a[k];
        const Vector ya = predict_standardized(m, a), yb = predict_standardized(m, b);
        CHECK(relative_error(predict_standardized(m, sum), ya + yb) <= 1e-12);
        CHECK(relative_error(predict_standardized(m, scaled), 2.5 * ya) <= 1e-12);
        ParameterSet zero = q;
        zero[k].setZero();
        CHECK(predict_standardized(m, zero).cwiseAbs().maxCoeff() == 0.0);
        CHECK(predict(m, zero) == m.standardizer.mean);
    }
}

TEST_CASE("zero core gives zero standardized output") {
    std::mt19937_64 rng(4);
    TensorModel m = random_model(rng);
    for (double& c : m.core.data()) c = 0.0;
    CHECK(predict_einsum(m, random_params(m, rng)) == m.standardizer.mean);
}

TEST_CASE("parameter length mismatches are rejected") {
    std::mt19937_64 rng(5);
    const TensorModel m = random_model(rng);
    ParameterSet q = random_params(m, rng);
    q.expression = Vector::Zero(m.rank(Subspace::Expression) + 1);
    CHECK_THROWS_AS(predict(m, q), DimensionError);
    CHECK_THROWS_AS(predict_einsum(m, q), DimensionError);
}

TEST_CASE("noiseless synthetic data: full-rank fit reproduces every training code") {
    SyntheticSpec spec;
    spec.latent_dim = 24;
    spec.persons = 6;
    spec.expressions = 9;
    spec.core_ranks = RankSpec::of({10, 4, 5, 2});
    const SyntheticData data = generate_synthetic(spec);
    const TensorModel m = fit_vectorized(data.dataset);
    CHECK(m.factors[1].rows() == 6);
    CHECK(m.factors[2].rows() == 9);
    CHECK(m.factors[3].rows() == 2);
    for (Index p = 0; p < 6; ++p)
        for (Index e = 0; e < 9; ++e)
            for (Index r = 0; r < 2; ++r) {
                const Vector y = data.dataset.code(p, e, r);
                CHECK(relative_error(predict(m, m.canonical_parameters(p, e, r)), y) <= 1e-8);
                const Vector z = m.standardizer.standardize(y);
                CHECK(relative_error(predict_standardized(m, m.canonical_parameters(p, e, r)), z) <= 1e-8);
            }
    // Orthonormal U1 is what lets estimation project by U1^T.
    const Matrix& u1 = m.factors[0].u;
    CHECK((u1.transpose() * u1 - Matrix::Identity(u1.cols(), u1.cols())).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("identical codes: every coordinate flagged, zero core") {
    SyntheticSpec spec;
    spec.latent_dim = 5;
    spec.persons = 3;
    spec.expressions = 3;
    const LatentDataset src = generate_synthetic(spec).dataset;
    Matrix codes = src.codes();
    for (Index j = 0; j < codes.cols(); ++j) codes.col(j) = src.codes().col(0);
    const TensorModel m = fit_vectorized(LatentDataset(codes, src.manifest()));
    for (bool f : m.standardizer.flagged) CHECK(f);
    for (double c : m.core.data()) CHECK(c == 0.0);
}

TEST_CASE("stacked model") {
    SyntheticSpec spec;
    spec.styles = StyleLayout{3, 8};
    spec.persons = 5;
    spec.expressions = 6;
    spec.noise = 0.05;
    const LatentDataset ds = generate_synthetic(spec).dataset;

    SUBCASE("one submodel per style, per-style standardization") {
        const StackedModel sm = fit_stacked(ds);
        CHECK(sm.style_count() == 3);
        CHECK(sm.parameter_count() == 3 * (5 + 6 + 2));
        for (Index s = 0; s < 3; ++s) {
            const TensorModel solo = fit_vectorized(ds.style_slice(s));
            CHECK(sm.styles[static_cast<std::size_t>(s)].standardizer == solo.standardizer);
            CHECK(sm.styles[static_cast<std::size_t>(s)].core == solo.core);
        }
        std::vector<ParameterSet> q;
        for (const auto& m : sm.styles) q.push_back(m.canonical_parameters(2, 3, 1));
        const Vector y = predict_stacked(sm, q);
        CHECK(relative_error(y, ds.code(2, 3, 1)) <= 1e-8);
        q.pop_back();
        CHECK_THROWS_AS(predict_stacked(sm, q), DimensionError);
    }
    SUBCASE("S = 1 equals the vectorized fit bitwise") {
        const LatentDataset one(ds.codes(), ds.manifest(), StyleLayout{1, ds.latent_dim()});
        const StackedModel sm = fit_stacked(one);
        const TensorModel vm = fit_vectorized(ds);
        REQUIRE(sm.style_count() == 1);
        CHECK(sm.styles[0].core == vm.core);
        for (std::size_t k = 0; k < 4; ++k) CHECK(sm.styles[0].factors[k].u == vm.factors[k].u);
        CHECK(sm.styles[0].standardizer == vm.standardizer);
    }
    SUBCASE("reconstruction error over the training cells") {
        CHECK(reconstruction_error(fit_stacked(ds), ds) <= 1e-8);
        const double truncated = reconstruction_error(fit_stacked(ds, RankSpec::of({4, 2, 2, 1})), ds);
        CHECK(truncated > 1e-3);
        CHECK(truncated < 1.0);
        const auto& ids = ds.axes().persons;
        const std::vector<std::string> first(ids.begin(), ids.begin() + 3);
        CHECK_THROWS_AS(reconstruction_error(fit_stacked(ds.subset_persons(first)), ds), DataError);
        CHECK_THROWS_AS(reconstruction_error(fit_stacked(ds), ds.style_slice(0)), DimensionError);
    }
    SUBCASE("needs a style layout") {
        const LatentDataset plain(ds.codes(), ds.manifest());
        CHECK_THROWS_AS(fit_stacked(plain), DimensionError);
    }
}

TEST_CASE("full-scale stacked parameter count") {
    StackedModel sm;
    sm.width = 512;
    TensorModel m;
    m.core = DenseTensor({4, 100, 25, 2});
    sm.styles.assign(18, m);
    CHECK(sm.parameter_count() == 18 * (100 + 25 + 2));
}
