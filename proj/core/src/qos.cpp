#include "htppn/qos.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <stdexcept>

#include "htppn/errors.hpp"

namespace htppn {

namespace {

// alpha_a * x + alpha_b * y, where a zero-probability term is dropped so that
// an infinite attribute on an impossible branch does not produce NaN.
double weighted(double alpha_a, double x, double alpha_b, double y) {
  double sum = 0.0;
  if (alpha_a != 0.0) sum += alpha_a * x;
  if (alpha_b != 0.0) sum += alpha_b * y;
  return sum;
}

}  // namespace

Weights::Weights() : w_{0.25, 0.25, 0.25, 0.25} {}

Weights::Weights(double response_time, double cost, double availability, double throughput)
    : w_{response_time, cost, availability, throughput} {
  double sum = 0.0;
  for (double w : w_) {
    if (!std::isfinite(w) || w < 0.0)
      throw std::invalid_argument("weights must be finite and nonnegative");
    sum += w;
  }
  if (sum <= 0.0) throw std::invalid_argument("at least one weight must be positive");
  for (double& w : w_) w /= sum;
}

QosVector seq_compose(const QosVector& first, const QosVector& second, double place_delay) {
  return {
      first.response_time + second.response_time + place_delay,
      first.cost + second.cost,
      first.availability * second.availability,
      std::min(first.throughput, second.throughput),
  };
}

QosVector par_compose(const QosVector& a, const QosVector& b) {
  return {
      std::max(a.response_time, b.response_time),
      a.cost + b.cost,
      a.availability * b.availability,
      std::min(a.throughput, b.throughput),
  };
}

QosVector cond_compose(const QosVector& a, const QosVector& b, double alpha_a, double alpha_b,
                       double delay_a, double delay_b, CondMode mode) {
  if (!(alpha_a >= 0.0) || !(alpha_b >= 0.0) ||
      std::abs(alpha_a + alpha_b - 1.0) > kProbabilityTolerance)
    throw ProbabilityError(
        fmt::format("conditional probabilities ({}, {}) must be nonnegative and sum to 1", alpha_a, alpha_b));
  const double ra = a.response_time + delay_a;
  const double rb = b.response_time + delay_b;
  QosVector out;
  if (mode == CondMode::Paper) {
    out.response_time = std::max(ra, rb);
    out.cost = a.cost + b.cost;
  } else {
    out.response_time = weighted(alpha_a, ra, alpha_b, rb);
    out.cost = weighted(alpha_a, a.cost, alpha_b, b.cost);
  }
  out.availability = weighted(alpha_a, a.availability, alpha_b, b.availability);
  out.throughput = weighted(alpha_a, a.throughput, alpha_b, b.throughput);
  return out;
}

QosVector loop_compose(const QosVector& body, double iterations) {
  if (!(iterations >= 1.0) || !std::isfinite(iterations))
    throw std::invalid_argument("loop iterations must be finite and at least 1");
  return {
      iterations * body.response_time,
      iterations * body.cost,
      std::pow(body.availability, iterations),
      body.throughput,
  };
}

NormalizedVector normalize(const QosVector& q) {
  return {q.response_time, q.cost, -q.availability, -q.throughput};
}

double scalarize(const QosVector& q, const Weights& w) {
  const NormalizedVector n = normalize(q);
  double sum = 0.0;
  bool positive_infinity = false;
  for (std::size_t i = 0; i < n.size(); ++i) {
    const double weight = w.values()[i];
    if (weight == 0.0) continue;
    if (n[i] == kInf) positive_infinity = true;
    sum += weight * n[i];
  }
  return positive_infinity ? kInf : sum;
}

}  // namespace htppn
