#include "chainmatch/pricing.hpp"

#include <algorithm>
#include <cmath>

namespace chainmatch {

double normal_cdf(double x, double mu, double sigma) {
  if (!(sigma > 0.0)) throw Error(Errc::NonPositiveSigma, "sigma must be positive");
  const double z = (x - mu) / sigma;
  return 0.5 * std::erfc(-z * 0.7071067811865475244);
}

namespace {

// Acklam's rational approximation of the standard normal quantile
// (relative error ~1.15e-9), refined below by one Halley step.
double inverse_phi_approx(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;

  if (p < p_low) {
    double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p <= 1.0 - p_low) {
    double q = p - 0.5;
    double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  double q = std::sqrt(-2.0 * std::log(1.0 - p));
  return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
         ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
}

}  // namespace

double normal_quantile(double alpha, double mu, double sigma) {
  if (!(sigma > 0.0)) throw Error(Errc::NonPositiveSigma, "sigma must be positive");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw Error(Errc::AlphaOutOfOpenInterval, "alpha must lie in (0, 1)");

  double z = inverse_phi_approx(alpha);
  // One Halley refinement against the CDF; brings the central region to full
  // double precision and keeps the tails well under 1e-9 in probability.
  double e = 0.5 * std::erfc(-z * 0.7071067811865475244) - alpha;
  double u = e * std::sqrt(2.0 * 3.14159265358979323846) * std::exp(0.5 * z * z);
  z -= u / (1.0 + 0.5 * z * u);
  return mu + sigma * z;
}

OfferedPrice offered_price(const TripRequest& t, double alpha) {
  if (t.activity == Activity::Active) return {t.user_id, t.base_price, false};
  if (alpha == 1.0) {
    // Limit case of the risk grid: no incentive is offered, the member never
    // activates; the (1-alpha)^k weight downstream is what encodes that.
    return {t.user_id, t.base_price, false};
  }
  const auto& th = t.threshold.value();
  double q = normal_quantile(alpha, th.mu.dollars(), th.sigma.dollars());
  Money value = Money::from_dollars(q);
  bool clamped = false;
  if (value.cents < 0) {
    value = Money{0};
    clamped = true;
  } else if (value > t.base_price) {
    value = t.base_price;
    clamped = true;
  }
  return {t.user_id, value, clamped};
}

OfferedPrice offered_price_deterministic(const TripRequest& t, Money known_threshold) {
  if (t.activity == Activity::Active) return {t.user_id, t.base_price, false};
  if (known_threshold > t.base_price)
    throw Error(Errc::ThresholdAboveBase,
                "threshold " + to_string(known_threshold) + " exceeds base price " +
                    to_string(t.base_price));
  return {t.user_id, known_threshold, false};
}

Money apply_cost_factor(Money base_price, double cost_factor) {
  if (!(cost_factor > 0.0 && cost_factor <= 1.0))
    throw Error(Errc::CostFactorOutOfRange,
                "cost factor " + std::to_string(cost_factor) + " outside (0, 1]");
  return Money{static_cast<std::int64_t>(
      std::llround(static_cast<double>(base_price.cents) * cost_factor))};
}

void reprice_costs(Instance& inst, double cost_factor) {
  for (auto& t : inst.trips) t.travel_cost = apply_cost_factor(t.base_price, cost_factor);
  inst.config.cost_factor = cost_factor;
}

std::vector<Money> offered_prices_by_trip(const Instance& inst, double alpha) {
  std::vector<Money> out;
  out.reserve(inst.trips.size());
  for (const auto& t : inst.trips) out.push_back(offered_price(t, alpha).value);
  return out;
}

std::size_t count_clamped(const Instance& inst, double alpha) {
  std::size_t n = 0;
  for (const auto& t : inst.trips)
    if (offered_price(t, alpha).clamped) ++n;
  return n;
}

double chain_profit(const Instance& inst, const Chain& c,
                    std::span<const Money> offered_by_trip) {
  if (offered_by_trip.size() < inst.trips.size())
    throw Error(Errc::MissingPrice, "price vector does not cover all trips");
  std::int64_t cents = 0;
  for (std::uint32_t idx : c.trips)
    cents += offered_by_trip[idx].cents - inst.trips[idx].travel_cost.cents;
  return static_cast<double>(cents) / 100.0;
}

double activation_probability(const Chain& c, double alpha) {
  if (c.inactive_count == 0) return 1.0;
  return std::pow(1.0 - alpha, static_cast<double>(c.inactive_count));
}

double expected_chain_profit(const Instance& inst, const Chain& c,
                             std::span<const Money> offered_by_trip, double alpha) {
  return activation_probability(c, alpha) * chain_profit(inst, c, offered_by_trip);
}

}  // namespace chainmatch
