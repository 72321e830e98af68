#include "clg/efficiency.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace clg {

namespace {

void check_gamma(double gamma) {
  if (!(gamma >= 0.0)) {
    throw DomainError("SINR must be non-negative, got " + std::to_string(gamma));
  }
}

void check_packet(int packet_symbols) {
  if (packet_symbols < 1) {
    throw DomainError("packet length must be >= 1, got " + std::to_string(packet_symbols));
  }
}

}  // namespace

void EfficiencyParams::validate() const {
  if (packet_symbols < 2) {
    throw DomainError("packet length M must be >= 2 (no positive target SINR for M<2)");
  }
  if (info_symbols <= 0 || info_symbols > packet_symbols) {
    throw DomainError("information symbols L must satisfy 0 < L <= M");
  }
  if (!(rate_bps > 0.0)) {
    throw DomainError("rate R must be positive");
  }
}

double efficiency(double gamma, int packet_symbols) {
  check_gamma(gamma);
  check_packet(packet_symbols);
  // -expm1(-x) == 1 - e^{-x} without cancellation near zero.
  return std::pow(-std::expm1(-gamma), packet_symbols);
}

double efficiency_derivative(double gamma, int packet_symbols) {
  check_gamma(gamma);
  check_packet(packet_symbols);
  const double base = -std::expm1(-gamma);
  return packet_symbols * std::pow(base, packet_symbols - 1) * std::exp(-gamma);
}

double packet_success_probability(double gamma, int packet_symbols) {
  check_gamma(gamma);
  check_packet(packet_symbols);
  // 1 - Q(sqrt(2g)) = 1 - erfc(sqrt(g)) / 2
  const double per_symbol = 1.0 - 0.5 * std::erfc(std::sqrt(gamma));
  return std::pow(per_symbol, packet_symbols);
}

EfficiencyCurve sigmoid_efficiency(int packet_symbols) {
  check_packet(packet_symbols);
  return {
      [packet_symbols](double g) { return efficiency(g, packet_symbols); },
      [packet_symbols](double g) { return efficiency_derivative(g, packet_symbols); },
  };
}

double solve_target_sinr(const EfficiencyCurve& curve, double lo, double hi, double tol) {
  if (!(lo > 0.0) || !(hi > lo) || !(tol > 0.0)) {
    throw DomainError("invalid bracket for target SINR search");
  }
  auto excess = [&](double g) { return curve.value(g) - g * curve.derivative(g); };

  // Steep curves underflow to exactly zero near the origin, which hides the
  // sign of f - g f'. Walk the lower end up until the curve is representable.
  while (curve.value(lo) < std::numeric_limits<double>::min() && lo < hi) {
    lo *= 2.0;
  }
  double f_lo = excess(lo);
  const double f_hi = excess(hi);
  if (!(f_lo < 0.0 && f_hi > 0.0)) {
    throw DomainError("f(g) = g f'(g) has no positive root in the bracket");
  }

  double a = lo;
  double b = hi;
  for (int it = 0; it < 200 && (b - a) > 1e-3 * tol; ++it) {
    const double mid = 0.5 * (a + b);
    const double fm = excess(mid);
    if (fm < 0.0) {
      a = mid;
      f_lo = fm;
    } else {
      b = mid;
    }
  }
  double root = 0.5 * (a + b);

  // Newton polish; d/dg (f - g f') = -g f''. f'' by central differences of f'.
  for (int it = 0; it < 3; ++it) {
    const double h = 1e-5 * std::max(1.0, root);
    const double second = (curve.derivative(root + h) - curve.derivative(root - h)) / (2.0 * h);
    const double slope = -root * second;
    if (slope == 0.0 || !std::isfinite(slope)) break;
    const double next = root - excess(root) / slope;
    if (!(next > a - tol && next < b + tol)) break;
    if (std::abs(excess(next)) >= std::abs(excess(root))) break;
    root = next;
  }
  return root;
}

double solve_target_sinr(int packet_symbols) {
  if (packet_symbols < 2) {
    throw DomainError("no positive root for M<2");
  }
  return solve_target_sinr(sigmoid_efficiency(packet_symbols));
}

double utility(double power, double gamma, const EfficiencyParams& params) {
  if (!(power > 0.0)) {
    throw DomainError("utility is undefined for non-positive transmit power");
  }
  const double frame = static_cast<double>(params.info_symbols) / params.packet_symbols;
  return params.rate_bps * frame * efficiency(gamma, params.packet_symbols) / power;
}

}  // namespace clg
