#include <doctest.h>

#include <cmath>
#include <random>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "ncofdm/numerics.hpp"

using namespace ncofdm;

namespace {

ComplexVector random_vector(int n, std::mt19937_64& rng)
{
    std::normal_distribution<double> g;
    ComplexVector v(n);
    for (int i = 0; i < n; ++i) v[i] = cplx(g(rng), g(rng));
    return v;
}

ComplexMatrix random_matrix(int r, int c, std::mt19937_64& rng)
{
    std::normal_distribution<double> g;
    ComplexMatrix A(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) A(i, j) = cplx(g(rng), g(rng));
    return A;
}

}  // namespace

TEST_CASE("dft of an impulse is flat with 1/size scaling")
{
    ComplexVector x = ComplexVector::Zero(8);
    x[0] = 1.0;
    const ComplexVector X = dft(x, 8);
    for (int k = 0; k < 8; ++k) CHECK(std::abs(X[k] - cplx(1.0 / 8)) < 1e-15);
}

TEST_CASE("dft of a tone lands in one bin")
{
    ComplexVector x(8);
    for (int m = 0; m < 8; ++m) x[m] = std::polar(1.0, 2 * kPi * 3 * m / 8.0);
    const ComplexVector X = dft(x, 8);
    for (int k = 0; k < 8; ++k) CHECK(std::abs(X[k] - cplx(k == 3 ? 1.0 : 0.0)) < 1e-14);
}

TEST_CASE("dft matches the direct summation")
{
    std::mt19937_64 rng(1);
    const ComplexVector x = random_vector(64, rng);
    const ComplexVector X = dft(x, 64);
    double err = 0, ref = 0;
    for (int k = 0; k < 64; ++k) {
        cplx s = 0;
        for (int m = 0; m < 64; ++m) s += x[m] * std::polar(1.0, -2 * kPi * k * m / 64.0);
        s /= 64.0;
        err += std::norm(X[k] - s);
        ref += std::norm(s);
    }
    CHECK(std::sqrt(err / ref) < 1e-12);
    // Parseval under the 1/size forward scaling
    CHECK(X.squaredNorm() == doctest::Approx(x.squaredNorm() / 64).epsilon(1e-12));
}

TEST_CASE("dft round trip up to 8192")
{
    std::mt19937_64 rng(2);
    for (int n : {1, 7, 64, 1000, 2048, 8192}) {
        const ComplexVector x = random_vector(n, rng);
        const ComplexVector y = idft(dft(x, n), n);
        CHECK((y - x).norm() / x.norm() < 1e-12);
    }
    CHECK_THROWS_AS(dft(ComplexVector::Zero(5), 8), DimensionError);
}

TEST_CASE("solve: identity, diagonal and residual")
{
    std::mt19937_64 rng(3);
    const ComplexMatrix B = random_matrix(3, 2, rng);
    CHECK((solve(ComplexMatrix::Identity(3, 3), B).X - B).norm() < 1e-15);

    ComplexMatrix D = ComplexMatrix::Zero(2, 2);
    D(0, 0) = 2;
    D(1, 1) = 4;
    const ComplexMatrix X = solve(D, ComplexMatrix::Identity(2, 2)).X;
    CHECK(std::abs(X(0, 0) - 0.5) < 1e-15);
    CHECK(std::abs(X(1, 1) - 0.25) < 1e-15);
    CHECK(std::abs(X(0, 1)) < 1e-15);

    const ComplexMatrix A = random_matrix(5, 5, rng) + 5.0 * ComplexMatrix::Identity(5, 5);
    const ComplexMatrix R = random_matrix(5, 3, rng);
    const SolveResult s = solve(A, R);
    CHECK((A * s.X - R).norm() / R.norm() < 1e-9);
    CHECK(s.condition >= 1.0);
}

TEST_CASE("solve rejects singular matrices by name")
{
    ComplexMatrix S = ComplexMatrix::Ones(3, 3);
    try {
        solve(S, ComplexMatrix::Identity(3, 3), "widget");
        FAIL("expected a singular-matrix error");
    } catch (const SingularMatrixError& e) {
        CHECK(std::string(e.what()).find("widget") != std::string::npos);
    }
    CHECK_THROWS_AS(solve(ComplexMatrix::Ones(2, 3), ComplexMatrix::Ones(2, 1)), DimensionError);
}

TEST_CASE("normal equation pseudo-inverse")
{
    std::mt19937_64 rng(4);
    const ComplexVector w = random_vector(3, rng);
    const ComplexMatrix I = ComplexMatrix::Identity(3, 3);
    CHECK((normal_equation_pinv(ComplexMatrix::Zero(3, 3), I, w) - w).norm() < 1e-14);
    CHECK((normal_equation_pinv(I, I, w) - w / 2.0).norm() < 1e-14);

    const ComplexMatrix Q1 = random_matrix(4, 3, rng), Q2 = random_matrix(4, 3, rng);
    const ComplexVector w4 = random_vector(4, rng);
    ComplexMatrix S(8, 3);
    S << Q1, Q2;
    ComplexVector rhs = ComplexVector::Zero(8);
    rhs.tail(4) = w4;
    const ComplexVector ls = S.colPivHouseholderQr().solve(rhs);
    CHECK((normal_equation_pinv(Q1, Q2, w4) - ls).norm() / ls.norm() < 1e-9);
    CHECK_THROWS_AS(normal_equation_pinv(Q1, Q2, w), DimensionError);
}

TEST_CASE("gauss 2F1 series")
{
    CHECK(gauss_2f1(2, 1.5, 2.5, 0) == 1.0);
    CHECK(gauss_2f1(1, 1, 2, 0.5) == doctest::Approx(2 * std::log(2.0)).epsilon(1e-14));
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.1, 3.0), z(0, 0.9);
    for (int i = 0; i < 20; ++i) {
        const double a = u(rng), b = u(rng), c = u(rng), zz = z(rng);
        CHECK(gauss_2f1(a, b, c, zz) == doctest::Approx(gauss_2f1(b, a, c, zz)).epsilon(1e-13));
    }
    // Doubling the term budget does not move a converged value.
    Hyp2F1Options lo, hi;
    hi.quiet_terms = 6;
    hi.rel_tol = 1e-18;
    CHECK(gauss_2f1_ld(3.5, 2, 4.5, 0.99L, lo) ==
          doctest::Approx(static_cast<double>(gauss_2f1_ld(3.5, 2, 4.5, 0.99L, hi))).epsilon(1e-12));
    CHECK_THROWS_AS(gauss_2f1(1, 1, 2, 1.0), DomainError);
    CHECK_THROWS_AS(gauss_2f1(1, 1, -2, 0.5), DomainError);
    Hyp2F1Options tight;
    tight.max_terms = 100;
    CHECK_THROWS_AS(gauss_2f1(2, 2, 3, 0.999999, tight), ConvergenceError);
}

TEST_CASE("Q function")
{
    CHECK(q_function(0) == 0.5);
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-8, 8);
    for (int i = 0; i < 50; ++i) {
        const double x = u(rng);
        CHECK(q_function(x) + q_function(-x) == doctest::Approx(1.0).epsilon(1e-14));
    }
    boost::math::quadrature::exp_sinh<double> integrator;
    for (double x : {0.3, 1.0, 2.5, 3.0, 3.5, 5.0, 8.0}) {
        const double ref = integrator.integrate(
            [](double t) { return std::exp(-0.5 * t * t) / std::sqrt(2 * kPi); }, x,
            std::numeric_limits<double>::infinity());
        CHECK(std::fabs(q_function(x) - ref) / ref < 1e-12);
    }
    CHECK(q_function(1.0) == doctest::Approx(0.15865525).epsilon(1e-8));
    CHECK(std::fabs(erf_series(0.7) - std::erf(0.7)) < 1e-15);
}

TEST_CASE("blackman window values and derivatives")
{
    const double TL = 100;
    CHECK(std::fabs(blackman_window(0, TL)) < 1e-15);
    CHECK(blackman_window(TL, TL) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(blackman_d2(2 * TL, TL) == doctest::Approx(0.18 * std::pow(kPi / TL, 2)).epsilon(1e-12));
    CHECK_THROWS_AS(blackman_window(-1, TL), DomainError);
    CHECK_THROWS_AS(blackman_window(2 * TL + 1, TL), DomainError);

    const double h = TL / 1e6;
    for (double t = 3; t < 2 * TL - 3; t += 7.3) {
        const double fd1 = (blackman_window(t + h, TL) - blackman_window(t - h, TL)) / (2 * h);
        const double fd2 = (blackman_d1(t + h, TL) - blackman_d1(t - h, TL)) / (2 * h);
        CHECK(std::fabs(fd1 - blackman_d1(t, TL)) <= 1e-6 * std::fabs(blackman_d1(t, TL)) + 1e-9);
        CHECK(std::fabs(fd2 - blackman_d2(t, TL)) <= 1e-6 * std::fabs(blackman_d2(t, TL)) + 1e-9);
    }
}

TEST_CASE("sinc")
{
    CHECK(sinc(0) == 1.0);
    for (int n = 1; n < 6; ++n) CHECK(std::fabs(sinc(n)) < 1e-15);
    CHECK(sinc(0.5) == doctest::Approx(2 / kPi).epsilon(1e-15));
    CHECK(sinc(1e-7) == doctest::Approx(1.0).epsilon(1e-13));
}
