#include "doctest.h"

#include <cmath>

#include "hzsl/graph.hpp"
#include "support/jacobi.hpp"
#include "support/random_fixtures.hpp"

using namespace hzsl;
using testing::jacobi_eigenvalues;
using testing::random_matrix;

TEST_CASE("two identical rows are mutual unit-weight neighbours") {
    Matrix f{{0.6, 0.8}, {0.6, 0.8}};
    const SimilarityGraph g = build_similarity(f, 1);
    CHECK(g.weights(0, 1) == doctest::Approx(1.0));
    CHECK(g.weights(1, 0) == doctest::Approx(1.0));
    CHECK(g.weights(0, 0) == 0.0);
    CHECK(g.degrees[0] == doctest::Approx(1.0));
}

TEST_CASE("orthogonal rows leave isolated vertices, which is an error") {
    Matrix f{{1.0, 0.0}, {0.0, 1.0}};
    CHECK_THROWS_WITH_AS(static_cast<void>(build_similarity(f, 1)),
                         doctest::Contains("isolated vertex"), validation_error);
}

TEST_CASE("input validation") {
    Matrix one(1, 2, 1.0);
    CHECK_THROWS_AS(static_cast<void>(build_similarity(one, 1)), validation_error);
    Rng rng(3);
    Matrix f = random_matrix(rng, 5, 3, 0.1, 1.0);
    CHECK_THROWS_AS(static_cast<void>(build_similarity(f, 0)), validation_error);
    CHECK_THROWS_AS(static_cast<void>(build_similarity(f, 5)), validation_error);
    Matrix zrow = f;
    for (std::size_t j = 0; j < 3; ++j) zrow(2, j) = 0.0;
    CHECK_THROWS_WITH_AS(static_cast<void>(build_similarity(zrow, 2)),
                         doctest::Contains("zero-norm"), validation_error);
}

TEST_CASE("kNN structure on 50 random positive rows") {
    Rng rng(11);
    const Matrix f = random_matrix(rng, 50, 8, 0.05, 1.0);  // positive orthant
    const SimilarityGraph g = build_similarity(f, 5);
    for (std::size_t u = 0; u < 50; ++u) {
        std::size_t nz = 0;
        for (std::size_t v = 0; v < 50; ++v) {
            CHECK(g.weights(u, v) == g.weights(v, u));
            CHECK(g.weights(u, v) >= 0.0);
            CHECK(g.weights(u, v) <= 1.0);
            if (g.weights(u, v) > 0.0) ++nz;
        }
        CHECK(nz >= 5);
        CHECK(nz <= 49);
    }
}

TEST_CASE("laplacian of a single edge") {
    const SimilarityGraph g = similarity_graph_from_weights(Matrix{{0.0, 1.0}, {1.0, 0.0}});
    const Laplacian l = normalized_laplacian(g);
    CHECK(l.matrix(0, 0) == doctest::Approx(1.0));
    CHECK(l.matrix(0, 1) == doctest::Approx(-1.0));
    CHECK(l.matrix(1, 0) == doctest::Approx(-1.0));
    CHECK(l.matrix(1, 1) == doctest::Approx(1.0));
}

TEST_CASE("normalisation cancels uniform weight scaling") {
    const auto l1 = normalized_laplacian(
        similarity_graph_from_weights(Matrix{{0.0, 2.0}, {2.0, 0.0}}));
    CHECK(l1.matrix(0, 1) == doctest::Approx(-1.0));
    CHECK(l1.matrix(0, 0) == doctest::Approx(1.0));
}

namespace {

SimilarityGraph random_graph(Rng& rng, std::size_t n, std::size_t k) {
    const Matrix f = testing::random_matrix(rng, n, 6, 0.05, 1.0);
    return build_similarity(f, k);
}

}  // namespace

TEST_CASE("laplacian spectrum lies in [0, 2] with a zero eigenvalue") {
    Rng rng(21);
    const SimilarityGraph g = random_graph(rng, 10, 3);
    const Laplacian l = normalized_laplacian(g);
    const auto ev = jacobi_eigenvalues(l.matrix);
    CHECK(ev.front() >= -1e-10);
    CHECK(ev.back() <= 2.0 + 1e-10);
    CHECK(std::abs(ev.front()) <= 1e-10);
}

TEST_CASE("laplacian is exactly symmetric and scale invariant") {
    Rng rng(33);
    const SimilarityGraph g = random_graph(rng, 20, 4);
    const Laplacian l = normalized_laplacian(g);
    for (std::size_t u = 0; u < g.n; ++u)
        for (std::size_t v = 0; v < g.n; ++v) CHECK(l.matrix(u, v) == l.matrix(v, u));

    for (double c : {0.5, 3.0, 1e4}) {
        Matrix scaled = g.weights;
        scaled *= c;
        const Laplacian lc = normalized_laplacian(similarity_graph_from_weights(scaled));
        CHECK(max_abs_diff(lc.matrix, l.matrix) <= 1e-12);
    }
}

TEST_CASE("laplacian annihilates D^{1/2}*ones and has nonnegative quadratic form") {
    Rng rng(55);
    const SimilarityGraph g = random_graph(rng, 15, 4);
    const Laplacian l = normalized_laplacian(g);

    Matrix v(g.n, 1);
    for (std::size_t u = 0; u < g.n; ++u) v(u, 0) = std::sqrt(g.degrees[u]);
    const Matrix lv = l.matrix * v;
    CHECK(max_abs(lv) <= 1e-10 * std::max(1.0, max_abs(v)));

    for (int trial = 0; trial < 20; ++trial) {
        Matrix x = random_matrix(rng, g.n, 1, -1.0, 1.0);
        const double quad = (matmul_tn(x, l.matrix * x))(0, 0);
        CHECK(quad >= -1e-10);
    }
}

TEST_CASE("zero eigenvalue multiplicity counts connected components") {
    // two orthogonal pairs -> 2 components
    Matrix f2{{1.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 1.0, 0.0}};
    const auto l2 = normalized_laplacian(build_similarity(f2, 1));
    auto ev2 = jacobi_eigenvalues(l2.matrix);
    CHECK(std::count_if(ev2.begin(), ev2.end(), [](double e) { return std::abs(e) < 1e-8; }) == 2);

    // three orthogonal pairs -> 3 components
    Matrix f3(6, 3);
    for (std::size_t i = 0; i < 6; ++i) f3(i, i / 2) = 1.0;
    const auto l3 = normalized_laplacian(build_similarity(f3, 1));
    auto ev3 = jacobi_eigenvalues(l3.matrix);
    CHECK(std::count_if(ev3.begin(), ev3.end(), [](double e) { return std::abs(e) < 1e-8; }) == 3);
}

TEST_CASE("hand-built weight matrices are validated") {
    CHECK_THROWS_AS(similarity_graph_from_weights(Matrix{{0.0, -1.0}, {-1.0, 0.0}}),
                    validation_error);
    CHECK_THROWS_AS(similarity_graph_from_weights(Matrix{{0.0, 1.0}, {2.0, 0.0}}),
                    validation_error);
    CHECK_THROWS_AS(similarity_graph_from_weights(Matrix{{1.0, 1.0}, {1.0, 1.0}}),
                    validation_error);
}
