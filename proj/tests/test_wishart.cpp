#include <catch_amalgamated.hpp>

#include <filesystem>

#include "eigerr/graph.hpp"
#include "eigerr/stats.hpp"
#include "eigerr/wishart.hpp"
#include "support/oracles.hpp"

using namespace eigerr;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("sqrt_psd examples") {
    const auto id = PopulationMatrix::from_matrix(Matrix::Identity(4, 4));
    CHECK((sqrt_psd(id) - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-14);

    const auto d = PopulationMatrix::from_matrix(Eigen::Vector2d(4, 9).asDiagonal());
    const Matrix r = sqrt_psd(d);
    CHECK_THAT(r(0, 0), WithinAbs(2.0, 1e-14));
    CHECK_THAT(r(1, 1), WithinAbs(3.0, 1e-14));
    CHECK_THAT(r(0, 1), WithinAbs(0.0, 1e-14));

    const auto k4 = laplacian(sample_regular_graph(4, 3, 1));
    const Matrix s = sqrt_psd(k4);
    CHECK((s * s - k4.matrix).norm() <= 1e-8 * k4.matrix.norm());

    Vector neg(2);
    neg << -1.0, 1.0;
    CHECK_THROWS_AS(sqrt_psd(neg, Matrix::Identity(2, 2)), config_error);
    neg << -1e-12, 1.0;
    CHECK(sqrt_psd(neg, Matrix::Identity(2, 2))(0, 0) == 0.0);
}

TEST_CASE("gamma and chi-squared sampler moments") {
    Engine eng = make_engine(42);
    for (double shape : {0.3, 1.0, 2.5, 50.0, 5e9}) {
        const int draws = 20000;
        double s = 0, ss = 0;
        for (int i = 0; i < draws; ++i) {
            const double g = sample_gamma(shape, eng);
            REQUIRE(g > 0.0);
            s += g;
            ss += g * g;
        }
        const double mean = s / draws, var = ss / draws - mean * mean;
        // mean within 4 standard errors; variance within 10%
        CHECK(std::abs(mean - shape) < 4.0 * std::sqrt(shape / draws));
        CHECK_THAT(var, WithinRel(shape, 0.1));
    }
}

TEST_CASE("p = 1 Wishart draws are scaled chi-squared") {
    Matrix root(1, 1);
    const double c = 2.5;
    root(0, 0) = std::sqrt(c);
    const std::uint64_t n = 40;
    const int draws = 10000;
    double s = 0, ss = 0;
    for (int i = 0; i < draws; ++i) {
        const double v = sample_wishart_scaled(root, n, child_seed(3, {static_cast<std::uint64_t>(i)})).matrix(0, 0);
        s += v;
        ss += v * v;
    }
    const double mean = s / draws, var = (ss - draws * mean * mean) / (draws - 1);
    const double exact_var = 2.0 * c * c / static_cast<double>(n);
    CHECK(std::abs(mean - c) <= 3.0 * std::sqrt(exact_var / draws));
    CHECK_THAT(var, WithinRel(exact_var, 0.1));
}

TEST_CASE("large n concentrates on the population matrix") {
    const auto c = laplacian(sample_regular_graph(6, 3, 4));
    const auto draw = sample_wishart_scaled(sqrt_psd(c), 100'000'000, 9);
    CHECK((draw.matrix - c.matrix).norm() / c.matrix.norm() <= 1e-3);
    CHECK(draw.n == 100'000'000);
    CHECK(draw.parent_seed == 9);
}

TEST_CASE("draws are symmetric PSD, deterministic, and keep the Laplacian kernel") {
    const auto c = laplacian(sample_regular_graph(30, 4, 2));
    const Matrix root = sqrt_psd(c);
    const auto a = sample_wishart_scaled(root, 50, 17);
    const auto b = sample_wishart_scaled(root, 50, 17);
    CHECK(a.matrix == b.matrix);
    CHECK(a.matrix == a.matrix.transpose());
    const auto e = eig_sym(a.matrix);
    CHECK(e.values(0) > -1e-10 * e.values.maxCoeff());
    // C~ 1 = 0 because C^(1/2) annihilates the constant vector
    const Vector ones = Vector::Ones(30);
    CHECK((a.matrix * ones).norm() < 1e-10 * a.matrix.norm());
    CHECK_THROWS_AS(sample_wishart_scaled(root, 29, 1), config_error);
}

TEST_CASE("elementwise mean matches C on a small ensemble") {
    const auto c = laplacian(sample_regular_graph(8, 3, 5));
    const Matrix root = sqrt_psd(c);
    const std::uint64_t n = 20;
    const int draws = 2000;
    Matrix sum = Matrix::Zero(8, 8);
    for (int r = 0; r < draws; ++r) sum += sample_wishart_scaled(root, n, child_seed(21, {static_cast<std::uint64_t>(r)})).matrix;
    const Matrix mean = sum / draws;
    int outside = 0;
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j <= i; ++j) {
            const double var = (c.matrix(i, j) * c.matrix(i, j) + c.matrix(i, i) * c.matrix(j, j)) / n;
            if (std::abs(mean(i, j) - c.matrix(i, j)) > 4.0 * std::sqrt(var / draws)) ++outside;
        }
    CHECK(outside == 0);
}

TEST_CASE("Bartlett and direct simulation agree in distribution at p = 2") {
    Matrix c(2, 2);
    c << 2.0, 0.6, 0.6, 1.0;
    const auto pop = PopulationMatrix::from_matrix(c);
    const Matrix root = sqrt_psd(pop);
    Engine eng = make_engine(8);
    const int draws = 4000;
    std::vector<double> b00, b01, b11, d00, d01, d11;
    for (int r = 0; r < draws; ++r) {
        const Matrix b = sample_wishart_scaled(root, 5, child_seed(31, {static_cast<std::uint64_t>(r)})).matrix;
        const Matrix d = oracle::direct_wishart(root, 5, eng);
        b00.push_back(b(0, 0));
        b01.push_back(b(0, 1));
        b11.push_back(b(1, 1));
        d00.push_back(d(0, 0));
        d01.push_back(d(0, 1));
        d11.push_back(d(1, 1));
    }
    CHECK(ks_two_sample_pvalue(b00, d00) > 0.001);
    CHECK(ks_two_sample_pvalue(b01, d01) > 0.001);
    CHECK(ks_two_sample_pvalue(b11, d11) > 0.001);
}

TEST_CASE("binary dump round trip") {
    const auto c = laplacian(sample_regular_graph(10, 3, 6));
    const auto s = sample_wishart_scaled(sqrt_psd(c), 1000, 12);
    const auto path = std::filesystem::temp_directory_path() / "eigerr_wishart_test.bin";
    write_sample_binary(path.string(), s);
    CHECK(std::filesystem::file_size(path) == 16 + 8 * 100);
    const auto back = read_sample_binary(path.string());
    CHECK(back.n == s.n);
    CHECK(back.matrix == s.matrix);
    std::filesystem::remove(path);
}
