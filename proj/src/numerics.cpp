// SPDX-License-Identifier: Apache-2.0
#include "ncofdm/numerics.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <mutex>

#include <fftw3.h>

namespace ncofdm {

namespace {

struct PlanPair {
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;
};

// FFTW planning is not thread safe; executing a finished plan on new arrays is.
const PlanPair& plans_for(std::size_t n)
{
    static std::mutex mu;
    static std::map<std::size_t, PlanPair> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it != cache.end())
        return it->second;
    // Out-of-place plans: run_plan always passes distinct in/out arrays.
    fftw_complex* in = fftw_alloc_complex(n);
    fftw_complex* out = fftw_alloc_complex(n);
    PlanPair p;
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    p.forward = fftw_plan_dft_1d(static_cast<int>(n), in, out, FFTW_FORWARD, flags);
    p.backward = fftw_plan_dft_1d(static_cast<int>(n), in, out, FFTW_BACKWARD, flags);
    fftw_free(in);
    fftw_free(out);
    return cache.emplace(n, p).first->second;
}

ComplexVector run_plan(const ComplexVector& x, std::size_t size, bool forward)
{
    if (size == 0 || static_cast<std::size_t>(x.size()) != size)
        throw DimensionError("dft: input has " + std::to_string(x.size()) +
                             " elements, expected " + std::to_string(size));
    const PlanPair& p = plans_for(size);
    ComplexVector in = x;
    ComplexVector out(static_cast<Eigen::Index>(size));
    fftw_execute_dft(forward ? p.forward : p.backward,
                     reinterpret_cast<fftw_complex*>(in.data()),
                     reinterpret_cast<fftw_complex*>(out.data()));
    return out;
}

}  // namespace

ComplexVector dft(const ComplexVector& x, std::size_t size)
{
    ComplexVector X = run_plan(x, size, true);
    X /= static_cast<double>(size);
    return X;
}

ComplexVector idft(const ComplexVector& X, std::size_t size)
{
    return run_plan(X, size, false);
}

SolveResult solve(const ComplexMatrix& A, const ComplexMatrix& B, const std::string& name)
{
    if (A.rows() != A.cols())
        throw DimensionError("solve: " + name + " is not square");
    if (B.rows() != A.rows())
        throw DimensionError("solve: right-hand side rows do not match " + name);

    Eigen::PartialPivLU<ComplexMatrix> lu(A);
    const double rc = lu.rcond();
    const double cond = rc > 0.0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
    if (!(cond <= 1e14))
        throw SingularMatrixError("solve: " + name + " is numerically singular (condition estimate " +
                                      std::to_string(cond) + ")",
                                  cond);

    SolveResult res;
    res.X = lu.solve(B);
    ComplexMatrix r = B - A * res.X;
    res.X += lu.solve(r);
    res.condition = cond;
    return res;
}

ComplexMatrix normal_equation_operator(const ComplexMatrix& Q1, const ComplexMatrix& Q2,
                                       double* condition)
{
    if (Q1.cols() != Q2.cols())
        throw DimensionError("normal_equation_pinv: Q1 and Q2 column counts differ");
    ComplexMatrix G = Q1.adjoint() * Q1 + Q2.adjoint() * Q2;
    SolveResult s = solve(G, Q2.adjoint(), "normal matrix Q1^H Q1 + Q2^H Q2");
    if (condition)
        *condition = s.condition;
    return s.X;
}

ComplexVector normal_equation_pinv(const ComplexMatrix& Q1, const ComplexMatrix& Q2,
                                   const ComplexVector& w, double* condition)
{
    if (w.size() != Q2.rows())
        throw DimensionError("normal_equation_pinv: w length does not match Q2 rows");
    return normal_equation_operator(Q1, Q2, condition) * w;
}

namespace {

template <typename T>
T hyp2f1_series(T a, T b, T c, T z, const Hyp2F1Options& opt)
{
    if (!(z >= 0 && z < 1))
        throw DomainError("gauss_2f1: z must lie in [0, 1)");
    if (c <= 0 && std::floor(c) == c)
        throw DomainError("gauss_2f1: c is a non-positive integer");
    T sum = 1, term = 1;
    int quiet = 0;
    for (long k = 0; k < opt.max_terms; ++k) {
        const T kk = static_cast<T>(k);
        term *= (a + kk) * (b + kk) / ((c + kk) * (kk + 1)) * z;
        sum += term;
        if (!std::isfinite(sum))
            throw ConvergenceError("gauss_2f1: partial sum overflowed", k + 1);
        if (std::fabs(term) < static_cast<T>(opt.rel_tol) * std::fabs(sum)) {
            if (++quiet >= opt.quiet_terms)
                return sum;
        } else {
            quiet = 0;
        }
    }
    throw ConvergenceError("gauss_2f1: no convergence within " + std::to_string(opt.max_terms) +
                               " terms (z too close to 1)",
                           opt.max_terms);
}

}  // namespace

double gauss_2f1(double a, double b, double c, double z, const Hyp2F1Options& opt)
{
    return hyp2f1_series<double>(a, b, c, z, opt);
}

long double gauss_2f1_ld(long double a, long double b, long double c, long double z,
                         const Hyp2F1Options& opt)
{
    return hyp2f1_series<long double>(a, b, c, z, opt);
}

namespace {

// erf(x) e^{x^2} = (2/sqrt(pi)) sum_n 2^n x^{2n+1} / (2n+1)!!, all terms positive.
long double erf_maclaurin(long double x)
{
    const long double x2 = x * x;
    long double term = x, sum = x;
    for (int n = 1; n < 500; ++n) {
        term *= 2.0L * x2 / (2.0L * n + 1.0L);
        sum += term;
        if (term < 1e-21L * sum)
            break;
    }
    return 2.0L / std::sqrt(static_cast<long double>(kPi)) * std::exp(-x2) * sum;
}

// erfc for x > 3 by the Laplace continued fraction (modified Lentz).
double erfc_cf(double x)
{
    const double tiny = 1e-300;
    double f = x, C = x, D = 0.0;
    for (int n = 1; n < 500; ++n) {
        const double an = 0.5 * n;
        D = x + an * D;
        if (std::fabs(D) < tiny) D = tiny;
        C = x + an / C;
        if (std::fabs(C) < tiny) C = tiny;
        D = 1.0 / D;
        const double delta = C * D;
        f *= delta;
        if (std::fabs(delta - 1.0) < 1e-16)
            break;
    }
    return std::exp(-x * x) / (std::sqrt(kPi) * f);
}

}  // namespace

double erf_series(double x)
{
    const double ax = std::fabs(x);
    const double v = ax <= 3.0 ? static_cast<double>(erf_maclaurin(ax)) : 1.0 - erfc_cf(ax);
    return x < 0 ? -v : v;
}

double erfc_series(double x)
{
    if (x < 0)
        return 2.0 - erfc_series(-x);
    if (x <= 3.0)
        return static_cast<double>(1.0L - erf_maclaurin(x));
    return erfc_cf(x);
}

double q_function(double x)
{
    return 0.5 * erfc_series(x / std::sqrt(2.0));
}

double sinc(double x)
{
    if (x == 0.0)
        return 1.0;
    const double px = kPi * x;
    if (std::fabs(px) < 1e-4)
        return 1.0 - px * px / 6.0 + px * px * px * px / 120.0;
    return std::sin(px) / px;
}

double blackman_derivative(double t, double TL, int order)
{
    if (!(TL > 0.0))
        throw DomainError("blackman_window: T_L must be positive");
    const double slack = 1e-12 * TL;
    if (t < -slack || t > 2.0 * TL + slack)
        throw DomainError("blackman_window: t outside [0, 2 T_L]");
    const double w1 = kPi / TL, w2 = 2.0 * kPi / TL;
    const double shift = order * kPi / 2.0;
    double v = -0.5 * std::pow(w1, order) * std::cos(w1 * t + shift) +
               0.08 * std::pow(w2, order) * std::cos(w2 * t + shift);
    if (order == 0)
        v += 0.42;
    return v;
}

double blackman_window(double t, double TL) { return blackman_derivative(t, TL, 0); }
double blackman_d1(double t, double TL) { return blackman_derivative(t, TL, 1); }
double blackman_d2(double t, double TL) { return blackman_derivative(t, TL, 2); }

double binomial(int n, int k)
{
    if (k < 0 || k > n)
        return 0.0;
    double r = 1.0;
    for (int i = 1; i <= k; ++i)
        r = r * (n - k + i) / i;
    return r;
}

}  // namespace ncofdm
