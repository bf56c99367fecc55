#include "safesynth/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "safesynth/errors.hpp"

namespace safesynth {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(Σ exp(v)) over the range, skipping -inf.
template <typename It>
double LogSumExp(It begin, It end) {
  double hi = kNegInf;
  for (It it = begin; it != end; ++it) hi = std::max(hi, *it);
  if (hi == kNegInf) return kNegInf;
  double s = 0.0;
  for (It it = begin; it != end; ++it) s += std::exp(*it - hi);
  return hi + std::log(s);
}

int Compare(double a, double b) { return a > b ? 1 : (a < b ? -1 : 0); }

}  // namespace

void PosteriorInputs::Validate() const {
  if (N < 1) throw std::domain_error("N must be >= 1");
  if (N0 < 0) throw std::domain_error("N0 must be >= 0");
  if (Nstar < 0 || Nstar > N) throw std::domain_error("N* must lie in [0, N]");
  if (R < 0 || R > N0) throw std::domain_error("R must lie in [0, N0]");
  if (!(beta > 0.0 && beta < 1.0)) throw std::domain_error("beta must lie in (0, 1)");
}

void PriorInputs::Validate() const {
  if (!(eps > 0.0 && eps < 1.0)) throw std::domain_error("eps must lie in (0, 1)");
  if (!(beta > 0.0 && beta < 1.0)) throw std::domain_error("beta must lie in (0, 1)");
  if (dim < 0) throw std::domain_error("dim must be >= 0");
}

double LogBinomial(long n, long k) {
  if (k < 0 || k > n) return kNegInf;
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

double LogBinomTail(long N, long m, double t) {
  if (N < 0 || m < 0 || m > N) throw std::domain_error("binom_tail: need 0 <= m <= N");
  if (!(t >= 0.0 && t <= 1.0)) throw std::domain_error("binom_tail: t must lie in [0, 1]");
  if (m == N || t == 0.0) return 0.0;
  if (t == 1.0) return kNegInf;
  const double lt = std::log(t);
  const double l1t = std::log1p(-t);
  std::vector<double> terms(static_cast<std::size_t>(m) + 1);
  for (long i = 0; i <= m; ++i) {
    terms[static_cast<std::size_t>(i)] = LogBinomial(N, i) + i * lt + (N - i) * l1t;
  }
  return std::min(0.0, LogSumExp(terms.begin(), terms.end()));
}

double BinomTail(long N, long m, double t) { return std::exp(LogBinomTail(N, m, t)); }

bool PriorSatisfied(long N, const PriorInputs& in) {
  if (N <= in.dim) return false;  // the sum is complete, so it equals 1 > β
  return LogBinomTail(N, in.dim, in.eps) <= std::log(in.beta);
}

long PriorSampleSize(const PriorInputs& in) {
  in.Validate();
  long lo = in.dim;  // fails
  long hi = std::max<long>(in.dim + 1, 1);
  while (!PriorSatisfied(hi, in)) {
    lo = hi;
    if (hi > std::numeric_limits<long>::max() / 2) throw std::overflow_error("prior N overflows");
    hi *= 2;
  }
  while (hi - lo > 1) {
    const long mid = lo + (hi - lo) / 2;
    (PriorSatisfied(mid, in) ? hi : lo) = mid;
  }
  return hi;
}

double PosteriorValue::value() const { return std::exp(log_first) - std::exp(log_second); }

namespace {

// Posterior evaluation with the κ-independent log binomials cached.
class PosteriorEquation {
 public:
  explicit PosteriorEquation(const PosteriorInputs& in) : in_(in) {
    in.Validate();
    log_coeff_.reserve(static_cast<std::size_t>(in.N - in.Nstar + 1));
    for (long i = in.Nstar; i <= in.N; ++i) log_coeff_.push_back(LogBinomial(i, in.Nstar));
    log_scale_ = std::log(in.beta) - std::log(in.N + 1.0);
    log_choose_ = LogBinomial(in.N, in.Nstar);
    terms_.resize(log_coeff_.size());
  }

  PosteriorValue operator()(double kappa) {
    if (!(kappa > 0.0 && kappa < 1.0)) throw std::domain_error("kappa must lie in (0, 1)");
    const double log_inv = -std::log(kappa);
    for (std::size_t j = 0; j < log_coeff_.size(); ++j) {
      const long i = in_.Nstar + static_cast<long>(j);
      terms_[j] = log_coeff_[j] + (in_.N - i) * log_inv;
    }
    PosteriorValue v;
    v.log_first = log_scale_ + LogSumExp(terms_.begin(), terms_.end());
    v.log_second = log_choose_ + LogBinomTail(in_.N0, in_.R, 1.0 - kappa);
    v.sign = Compare(v.log_first, v.log_second);
    return v;
  }

 private:
  PosteriorInputs in_;
  std::vector<double> log_coeff_;
  std::vector<double> terms_;
  double log_scale_ = 0.0;
  double log_choose_ = 0.0;
};

}  // namespace

PosteriorValue PosteriorG(double kappa, const PosteriorInputs& in) {
  return PosteriorEquation(in)(kappa);
}

KappaSolution SolveKappa(const PosteriorInputs& in) {
  PosteriorEquation g(in);
  double lo = 1e-12;
  double hi = 1.0 - 1e-12;
  const int s_lo = g(lo).sign;
  const int s_hi = g(hi).sign;
  if (s_lo <= 0 || s_hi >= 0) throw VacuousBoundError(s_lo, s_hi);
  KappaSolution out;
  while (hi - lo > 1e-10 && out.iterations < 200) {
    const double mid = 0.5 * (lo + hi);
    const int s = g(mid).sign;
    if (s == 0) {
      lo = hi = mid;
      break;
    }
    (s > 0 ? lo : hi) = mid;
    ++out.iterations;
  }
  out.kappa = 0.5 * (lo + hi);
  out.bracket_width = hi - lo;
  return out;
}

long EstimateViolations(long N, long N0, long Nstar_hat, ViolationRounding rounding) {
  if (N < 1 || N0 < 0 || Nstar_hat < 0) throw std::domain_error("EstimateViolations: bad sizes");
  // Integer arithmetic: N0·N̂*/N = whole + frac/N.
  const long whole = N0 * Nstar_hat / N;
  const long frac = N0 * Nstar_hat % N;
  if (rounding == ViolationRounding::kFloor) return whole;
  return 2 * frac >= N ? whole + 1 : whole;
}

SampleSizePlan PlanSampleSizes(double K_hat, long Nstar_hat, double L, const SampleSpace& space,
                               double beta, long start_N, long start_N0,
                               const PlannerSettings& settings) {
  if (!(K_hat < 0.0)) throw PlannerError("estimated optimum not strictly negative (K = " +
                                         std::to_string(K_hat) + ")");
  if (!(L > 0.0)) throw PlannerError("Lipschitz bound L must be positive");
  if (start_N < 1 || start_N0 < 1) throw PlannerError("starting sizes must be >= 1");
  if (!(settings.growth > 1.0)) throw PlannerError("growth factor must exceed 1");

  const double threshold = 1.0 - UOfR(-K_hat / L, space);
  if (threshold >= 1.0 - 1e-12) {
    throw PlannerError("margin -K/L too small: required confidence level rounds to 1");
  }
  SampleSizePlan plan;
  long N = start_N;
  long N0 = start_N0;
  while (true) {
    PlanStep step;
    step.N = N;
    step.N0 = N0;
    step.R_hat = std::min(N0, EstimateViolations(N, N0, Nstar_hat, settings.rounding));
    step.kappa_threshold = threshold;
    if (threshold <= 0.0) {
      step.passed = true;
    } else {
      PosteriorInputs in{N, N0, std::min(Nstar_hat, N), step.R_hat, beta};
      step.passed = PosteriorG(threshold, in).sign >= 0;
    }
    plan.steps.push_back(step);
    if (step.passed) {
      plan.N = N;
      plan.N0 = N0;
      return plan;
    }
    const long next_N = static_cast<long>(std::ceil(N * settings.growth));
    if (next_N > settings.max_N) {
      throw PlannerError("no passing sample sizes up to N = " + std::to_string(settings.max_N));
    }
    N0 = static_cast<long>(std::ceil(N0 * settings.growth));
    N = next_N;
  }
}

}  // namespace safesynth
