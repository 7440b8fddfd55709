// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ncofdm {

using cplx = std::complex<double>;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;

constexpr double kPi = 3.14159265358979323846;

struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct SingularMatrixError : std::runtime_error {
    SingularMatrixError(const std::string& what, double cond)
        : std::runtime_error(what), condition(cond) {}
    double condition;
};

struct ConvergenceError : std::runtime_error {
    ConvergenceError(const std::string& what, long terms)
        : std::runtime_error(what), terms_used(terms) {}
    long terms_used;
};

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// Forward transform scaled by 1/size; the inverse carries no scale.
ComplexVector dft(const ComplexVector& x, std::size_t size);
ComplexVector idft(const ComplexVector& X, std::size_t size);

struct SolveResult {
    ComplexMatrix X;
    double condition = 0.0;  // 1-norm condition estimate of A
};

// Partial-pivoted LU with one refinement step. Throws SingularMatrixError
// (message starts with `name`) when the condition estimate exceeds 1e14.
SolveResult solve(const ComplexMatrix& A, const ComplexMatrix& B,
                  const std::string& name = "matrix");

// (Q1^H Q1 + Q2^H Q2)^{-1} Q2^H w
ComplexVector normal_equation_pinv(const ComplexMatrix& Q1, const ComplexMatrix& Q2,
                                   const ComplexVector& w, double* condition = nullptr);

// The operator (Q1^H Q1 + Q2^H Q2)^{-1} Q2^H itself.
ComplexMatrix normal_equation_operator(const ComplexMatrix& Q1, const ComplexMatrix& Q2,
                                       double* condition = nullptr);

struct Hyp2F1Options {
    double rel_tol = 1e-15;
    int quiet_terms = 3;
    long max_terms = 1000000;
};

// Power series for 2F1(a,b;c;z), 0 <= z < 1.
double gauss_2f1(double a, double b, double c, double z, const Hyp2F1Options& opt = {});
long double gauss_2f1_ld(long double a, long double b, long double c, long double z,
                         const Hyp2F1Options& opt = {});

// erf via its Maclaurin series for |x| <= 3 and a continued fraction beyond.
double erf_series(double x);
double erfc_series(double x);
double q_function(double x);

double sinc(double x);

// Symmetric Blackman window on [0, 2 T_L] and its analytic derivatives.
double blackman_window(double t, double TL);
double blackman_d1(double t, double TL);
double blackman_d2(double t, double TL);
double blackman_derivative(double t, double TL, int order);

double binomial(int n, int k);

}  // namespace ncofdm
