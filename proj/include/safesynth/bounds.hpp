#pragma once

#include <vector>

#include "safesynth/geometry.hpp"

namespace safesynth {

struct PosteriorInputs {
  long N = 0;      // scenario samples
  long N0 = 0;     // validation samples
  long Nstar = 0;  // support-count upper bound
  long R = 0;      // violations among the validation samples
  double beta = 0.05;

  /// Throws std::domain_error.
  void Validate() const;
};

struct PriorInputs {
  double eps = 0.0;
  double beta = 0.05;
  int dim = 0;  // Q + P + 3

  void Validate() const;
};

/// log C(n, k) via lgamma.
double LogBinomial(long n, long k);

/// log B_N(t; m) = log Σ_{i=0}^{m} C(N,i) tⁱ (1-t)^{N-i}; -inf when the sum is 0.
double LogBinomTail(long N, long m, double t);
double BinomTail(long N, long m, double t);

/// B_N(eps; dim) <= beta.
bool PriorSatisfied(long N, const PriorInputs& in);

/// Smallest N with B_N(eps; dim) <= beta.
long PriorSampleSize(const PriorInputs& in);

/// The two terms of the posterior equation in log space,
///   first  = β/(N+1) Σ_{i=N*}^{N} C(i,N*) κ^{i-N}
///   second = C(N,N*) B_{N0}(1-κ; R)
/// and the sign of first - second.
struct PosteriorValue {
  int sign = 0;
  double log_first = 0.0;
  double log_second = 0.0;

  /// first - second in linear scale; may overflow to ±inf.
  double value() const;
};

PosteriorValue PosteriorG(double kappa, const PosteriorInputs& in);

struct KappaSolution {
  double kappa = 0.0;
  int iterations = 0;
  double bracket_width = 0.0;
};

/// Root of the posterior equation by bisection on [1e-12, 1-1e-12] down to
/// width 1e-10. Throws VacuousBoundError without a sign change.
KappaSolution SolveKappa(const PosteriorInputs& in);

enum class ViolationRounding { kNearestUp, kFloor };

/// R̂ = N0·N̂*/N rounded per `rounding`.
long EstimateViolations(long N, long N0, long Nstar_hat, ViolationRounding rounding);

struct PlannerSettings {
  double growth = 1.5;
  long max_N = 100000000;
  ViolationRounding rounding = ViolationRounding::kNearestUp;
};

struct PlanStep {
  long N = 0;
  long N0 = 0;
  long R_hat = 0;
  double kappa_threshold = 0.0;  // 1 - U(-K̂/L)
  bool passed = false;
};

struct SampleSizePlan {
  long N = 0;
  long N0 = 0;
  std::vector<PlanStep> steps;
};

/// Grows (N, N0) by `growth` until g(1 - U(-K̂/L), N̂*, R̂) >= 0. Throws
/// PlannerError when K̂ >= 0 or max_N is exceeded.
SampleSizePlan PlanSampleSizes(double K_hat, long Nstar_hat, double L, const SampleSpace& space,
                               double beta, long start_N, long start_N0,
                               const PlannerSettings& settings = {});

}  // namespace safesynth
