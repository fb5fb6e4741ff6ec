#pragma once

#include <array>
#include <limits>

namespace htppn {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Tolerance used for every probability-sum check.
inline constexpr double kProbabilityTolerance = 1e-9;

/// Quality tuple of a service or a composite.
///
/// Response time and cost are smaller-is-better; availability (a probability)
/// and throughput are larger-is-better. An unavailable service carries
/// R = C = +inf and A = 0.
struct QosVector {
  double response_time = 0.0;
  double cost = 0.0;
  double availability = 1.0;
  double throughput = kInf;

  /// Identity of seq_compose with zero delay: (0, 0, 1, +inf).
  static constexpr QosVector neutral() { return {}; }
  static constexpr QosVector unavailable(double throughput = 0.0) {
    return {kInf, kInf, 0.0, throughput};
  }

  bool is_unavailable() const;

  bool operator==(const QosVector&) const = default;
};

/// How the conditional pattern treats response time and cost.
///   Paper:    R = max over branches, C = sum over branches.
///   Expected: R and C are alpha-weighted expectations.
/// Availability and throughput are alpha-weighted in both modes.
enum class CondMode { Paper, Expected };

/// Smaller-is-better image of a QosVector: (R, C, -A, -T).
using NormalizedVector = std::array<double, 4>;

/// Nonnegative attribute weights, normalized to sum 1 on construction.
class Weights {
 public:
  /// Uniform 0.25 each.
  Weights();
  /// Throws std::invalid_argument on a negative or non-finite weight, or
  /// when every weight is zero.
  Weights(double response_time, double cost, double availability, double throughput);

  double response_time() const { return w_[0]; }
  double cost() const { return w_[1]; }
  double availability() const { return w_[2]; }
  double throughput() const { return w_[3]; }
  const std::array<double, 4>& values() const { return w_; }

  bool operator==(const Weights&) const = default;

 private:
  std::array<double, 4> w_;
};

QosVector seq_compose(const QosVector& first, const QosVector& second, double place_delay);

QosVector par_compose(const QosVector& a, const QosVector& b);

/// Throws ProbabilityError unless alpha_a, alpha_b >= 0 and sum to 1 within
/// kProbabilityTolerance. A branch with zero probability contributes nothing
/// to weighted terms, even when its attributes are infinite.
QosVector cond_compose(const QosVector& a, const QosVector& b, double alpha_a, double alpha_b,
                       double delay_a, double delay_b, CondMode mode);

/// k-iteration loop: R and C scale by k, A becomes A^k, T is unchanged.
/// Throws std::invalid_argument when k < 1.
QosVector loop_compose(const QosVector& body, double iterations);

NormalizedVector normalize(const QosVector& q);

/// Weighted sum of the normalized vector; smaller is better. Terms with zero
/// weight are skipped. A +inf term (an unavailable smaller-is-better
/// attribute) dominates any -inf term, so unavailability always scores +inf.
double scalarize(const QosVector& q, const Weights& w);

}  // namespace htppn
