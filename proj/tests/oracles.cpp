#include "oracles.hpp"

#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Dense>
#include <boost/math/special_functions/binomial.hpp>
#include <boost/multiprecision/cpp_int.hpp>

namespace oracle {

using safesynth::RowMatrixXd;

std::optional<double> VertexEnumerationMin(const RowMatrixXd& A, const Eigen::VectorXd& b,
                                           const Eigen::VectorXd& c) {
  const int n = static_cast<int>(A.cols());
  const int m = static_cast<int>(A.rows());
  std::optional<double> best;
  std::vector<int> pick(n);
  for (int i = 0; i < n; ++i) pick[i] = i;
  while (true) {
    Eigen::MatrixXd M(n, n);
    Eigen::VectorXd r(n);
    for (int i = 0; i < n; ++i) {
      M.row(i) = A.row(pick[i]);
      r[i] = b[pick[i]];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    if (lu.rank() == n) {
      const Eigen::VectorXd x = lu.solve(r);
      const double slack = (A * x - b).maxCoeff();
      if (slack <= 1e-9 * (1.0 + x.cwiseAbs().maxCoeff())) {
        const double v = c.dot(x);
        if (!best || v < *best) best = v;
      }
    }
    int k = n - 1;
    while (k >= 0 && pick[k] == m - n + k) --k;
    if (k < 0) break;
    ++pick[k];
    for (int i = k + 1; i < n; ++i) pick[i] = pick[i - 1] + 1;
  }
  return best;
}

RandomLp MakeRandomLp(int vars, int rows, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform(0.5, 2.0);
  RandomLp lp;
  lp.A.resize(rows, vars);
  lp.b.resize(rows);
  const int box_rows = 2 * vars;
  for (int j = 0; j < vars; ++j) {
    lp.A.row(2 * j).setZero();
    lp.A(2 * j, j) = 1.0;
    lp.A.row(2 * j + 1).setZero();
    lp.A(2 * j + 1, j) = -1.0;
    lp.b[2 * j] = lp.b[2 * j + 1] = 10.0;
  }
  for (int i = box_rows; i < rows; ++i) {
    for (int j = 0; j < vars; ++j) lp.A(i, j) = normal(rng);
    lp.b[i] = uniform(rng);
  }
  lp.c.resize(vars);
  for (int j = 0; j < vars; ++j) lp.c[j] = normal(rng);
  return lp;
}

std::vector<double> ExactBinomTailRow(int N, double t) {
  using boost::multiprecision::cpp_int;
  using boost::multiprecision::cpp_rational;
  // t = a / 2^k exactly, so every term shares the denominator 2^(kN).
  int exp = 0;
  const double mant = std::frexp(t, &exp);
  const int k = 53 - exp;
  const cpp_int D = cpp_int(1) << k;
  const cpp_int a = cpp_int(static_cast<long long>(std::ldexp(mant, 53)));
  const cpp_int b = D - a;
  std::vector<cpp_int> apow(N + 1), bpow(N + 1);
  apow[0] = bpow[0] = 1;
  for (int i = 1; i <= N; ++i) {
    apow[i] = apow[i - 1] * a;
    bpow[i] = bpow[i - 1] * b;
  }
  const cpp_int denom = boost::multiprecision::pow(D, N);
  std::vector<double> out(N + 1);
  cpp_int sum = 0;
  cpp_int binom = 1;
  for (int i = 0; i <= N; ++i) {
    if (i > 0) binom = binom * (N - i + 1) / i;
    sum += binom * apow[i] * bpow[N - i];
    out[i] = static_cast<double>(cpp_rational(sum, denom));
  }
  return out;
}

double ExactBinomTail(int N, int m, double t) { return ExactBinomTailRow(N, t)[m]; }

namespace {

long double Choose(long n, long k) {
  return static_cast<long double>(boost::math::binomial_coefficient<double>(
      static_cast<unsigned>(n), static_cast<unsigned>(k)));
}

}  // namespace

long double DirectPosteriorG(double kappa, const safesynth::PosteriorInputs& in) {
  long double first = 0.0L;
  for (long i = in.Nstar; i <= in.N; ++i) {
    first += Choose(i, in.Nstar) * std::pow(static_cast<long double>(kappa), i - in.N);
  }
  first *= static_cast<long double>(in.beta) / static_cast<long double>(in.N + 1);
  long double tail = 0.0L;
  const long double t = 1.0L - kappa;
  for (long i = 0; i <= in.R; ++i) {
    tail += Choose(in.N0, i) * std::pow(t, i) * std::pow(1.0L - t, in.N0 - i);
  }
  return first - Choose(in.N, in.Nstar) * tail;
}

double DenseKappaScan(const safesynth::PosteriorInputs& in) {
  const int coarse = 100000;
  double lo = 0.0;
  double hi = 1.0;
  double prev_k = 1e-12;
  long double prev = DirectPosteriorG(prev_k, in);
  for (int i = 1; i <= coarse; ++i) {
    const double k = std::min(1.0 - 1e-12, static_cast<double>(i) / coarse);
    const long double v = DirectPosteriorG(k, in);
    if ((prev > 0) != (v > 0)) {
      lo = prev_k;
      hi = k;
      break;
    }
    prev_k = k;
    prev = v;
  }
  const int fine = 100000;
  const double step = (hi - lo) / fine;
  prev = DirectPosteriorG(lo, in);
  for (int i = 1; i <= fine; ++i) {
    const double k = lo + i * step;
    const long double v = DirectPosteriorG(k, in);
    if ((prev > 0) != (v > 0)) return k - 0.5 * step;
    prev = v;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double DirectPoly(const safesynth::PolyBasis& basis, const Eigen::VectorXd& coeffs,
                  const Eigen::VectorXd& x) {
  double sum = 0.0;
  for (int t = 0; t < basis.size(); ++t) {
    double m = 1.0;
    for (int i = 0; i < basis.nvars(); ++i) m *= std::pow(x[i], basis.exponents()(t, i));
    sum += coeffs[t] * m;
  }
  return sum;
}

double DirectG3(const safesynth::CbfTemplate& tmpl, const Eigen::VectorXd& d,
                const Eigen::VectorXd& x, const Eigen::VectorXd& u, const Eigen::VectorXd& x_next) {
  const auto layout = tmpl.layout();
  const Eigen::VectorXd q = d.segment(layout.q_offset(), layout.barrier_terms());
  double value = DirectPoly(tmpl.barrier_basis, q, x_next) - DirectPoly(tmpl.barrier_basis, q, x);
  for (int i = 0; i < layout.inputs(); ++i) {
    const Eigen::VectorXd p = d.segment(layout.p_offset(i), layout.controller_terms(i));
    value += u[i] - DirectPoly(tmpl.controller_bases[i], p, x);
  }
  return value - d[safesynth::DecisionLayout::kC] - d[safesynth::DecisionLayout::kK];
}

}  // namespace oracle
