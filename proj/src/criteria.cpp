#include "nclight/criteria.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "nclight/errors.hpp"

namespace nclight::criteria {

namespace {

constexpr double kLn10 = 2.302585092994045684;
constexpr double kInf = std::numeric_limits<double>::infinity();

void require_detectors(int detectors) {
  if (detectors < 2) {
    throw std::invalid_argument("detector count must be at least 2");
  }
}

void require_domain(int detectors, double a) {
  require_detectors(detectors);
  // Closed at a = -1/M where both formulas have well-defined limits.
  if (!(a <= -1.0 / detectors)) {
    throw std::domain_error("threshold parameter a must satisfy a <= -1/M");
  }
}

/// log sum_i exp(values[i] + log weights[i]); single-component mixtures pass
/// through untouched so closed-form logs stay exact.
double log_mixture_pgf(const ClassicalMode& mode, double s) {
  if (mode.components.empty()) {
    throw std::invalid_argument("classical mode has no components");
  }
  auto component_log = [s](const ClassicalComponent& c) {
    switch (c.kind) {
      case ClassicalComponent::Kind::coherent:
        return -c.parameter * s;
      case ClassicalComponent::Kind::thermal:
        return -std::log1p(c.parameter * s);
    }
    return 0.0;
  };
  if (mode.components.size() == 1) return component_log(mode.components[0]);

  double best = -kInf;
  for (const auto& c : mode.components) {
    best = std::max(best, component_log(c));
  }
  double acc = 0.0;
  for (const auto& c : mode.components) {
    acc += c.weight * std::exp(component_log(c) - best);
  }
  return best + std::log(acc);
}

double mode_margin(const ClassicalMode& mode, double s_arm, double s_total,
                   int detectors) {
  if (mode.components.size() == 1 &&
      mode.components[0].kind == ClassicalComponent::Kind::coherent) {
    // Exact algebra: M*(-lam*s_arm) - (-lam*s_total). With s_total derived
    // as M*s_arm the difference is identically zero in floating point.
    return mode.components[0].parameter *
           (s_total - static_cast<double>(detectors) * s_arm);
  }
  return static_cast<double>(detectors) * log_mixture_pgf(mode, s_arm) -
         log_mixture_pgf(mode, s_total);
}

}  // namespace

double threshold_F(int detectors, double a) {
  require_domain(detectors, a);
  const double m = static_cast<double>(detectors);
  return a * (1.0 - m) * std::pow(-a * m, -m / (m - 1.0));
}

double optimal_classical_mean(int detectors, double a) {
  require_domain(detectors, a);
  const double m = static_cast<double>(detectors);
  return std::log(-a * m) / (m - 1.0);
}

CriterionResult evaluate_margin(double margin, double log_p0, double log_p0m,
                                int detectors, double tolerance) {
  require_detectors(detectors);
  if (tolerance < 0.0) throw std::invalid_argument("tolerance must be >= 0");
  if (std::isnan(log_p0) || std::isnan(log_p0m) || log_p0 > 0.0 ||
      log_p0m > 0.0) {
    throw std::invalid_argument("log-probabilities must be <= 0");
  }

  CriterionResult result;
  result.detectors = detectors;
  result.log_p0 = log_p0;
  result.log_p0m = log_p0m;

  if (std::isinf(log_p0) && std::isinf(log_p0m)) {
    // Both probabilities vanish; the test carries no information.
    result.margin = 0.0;
    return result;
  }
  result.margin = margin;
  result.violated = margin > tolerance;
  if (!result.violated) return result;

  const double m = static_cast<double>(detectors);
  if (std::isinf(margin)) {
    result.distance_unbounded = true;
    result.d0 = result.d0m = result.d = kInf;
    return result;
  }
  result.d0 = margin / (m * kLn10);
  result.d0m = m * result.d0;
  result.d = std::sqrt(m * m + 1.0) * result.d0;
  return result;
}

CriterionResult evaluate(double log_p0, double log_p0m, int detectors,
                         double tolerance) {
  double margin;
  if (std::isinf(log_p0m) && !std::isinf(log_p0)) {
    margin = kInf;
  } else if (std::isinf(log_p0) && std::isinf(log_p0m)) {
    margin = 0.0;
  } else {
    margin = static_cast<double>(detectors) * log_p0 - log_p0m;
  }
  return evaluate_margin(margin, log_p0, log_p0m, detectors, tolerance);
}

double distance_small_eta(double emitters, double eta, int detectors) {
  require_detectors(detectors);
  if (emitters < 0.0 || eta < 0.0 || eta > 1.0) {
    throw std::invalid_argument("need emitters >= 0 and eta in [0,1]");
  }
  const double m = static_cast<double>(detectors);
  return emitters * (m - 1.0) * std::sqrt(m * m + 1.0) * eta * eta /
         (2.0 * m * m * kLn10);
}

ClassicalMode ClassicalMode::coherent(double mean) {
  if (mean < 0.0) throw std::invalid_argument("mean must be non-negative");
  return ClassicalMode{{{ClassicalComponent::Kind::coherent, mean, 1.0}}};
}

ClassicalMode ClassicalMode::thermal(double nbar) {
  if (nbar < 0.0) throw std::invalid_argument("nbar must be non-negative");
  return ClassicalMode{{{ClassicalComponent::Kind::thermal, nbar, 1.0}}};
}

ClassicalMode ClassicalMode::mixture(
    std::vector<ClassicalComponent> components) {
  if (components.empty()) {
    throw std::invalid_argument("mixture needs at least one component");
  }
  double wsum = 0.0;
  for (const auto& c : components) {
    if (c.weight < 0.0 || c.parameter < 0.0) {
      throw std::invalid_argument("mixture weights/parameters must be >= 0");
    }
    wsum += c.weight;
  }
  if (std::abs(wsum - 1.0) > 1e-12) {
    throw std::invalid_argument("mixture weights must sum to 1");
  }
  return ClassicalMode{std::move(components)};
}

CriterionResult classical_bound_check(const ClassicalState& state,
                                      int detectors, double arm_collection) {
  require_detectors(detectors);
  const double s_arm = arm_collection;
  if (!(s_arm >= 0.0) || s_arm * detectors > 1.0 + 1e-12) {
    throw std::invalid_argument(
        "per-arm collection must be >= 0 with detectors*s <= 1");
  }
  if (state.dark_exponent < 0.0) {
    throw std::invalid_argument("dark exponent must be >= 0");
  }
  const double s_total =
      std::min(1.0, static_cast<double>(detectors) * s_arm);

  double log_p0 = -state.dark_exponent;
  double log_p0m = -static_cast<double>(detectors) * state.dark_exponent;
  double margin = 0.0;  // dark counts are margin-neutral by the same algebra
  for (const auto& mode : state.modes) {
    log_p0 += log_mixture_pgf(mode, s_arm);
    log_p0m += log_mixture_pgf(mode, s_total);
    margin += mode_margin(mode, s_arm, s_total, detectors);
  }
  return evaluate_margin(margin, log_p0, log_p0m, detectors);
}

CriterionResult classical_bound_check(const fock::PhotonNumberDistribution& d,
                                      int detectors, double arm_collection) {
  require_detectors(detectors);
  const double s_arm = arm_collection;
  if (!(s_arm >= 0.0) || s_arm * detectors > 1.0 + 1e-12) {
    throw std::invalid_argument(
        "per-arm collection must be >= 0 with detectors*s <= 1");
  }
  const double s_total =
      std::min(1.0, static_cast<double>(detectors) * s_arm);
  const double log_p0 = fock::log_pgf_one_minus(d, s_arm);
  const double log_p0m = fock::log_pgf_one_minus(d, s_total);
  return evaluate(log_p0, log_p0m, detectors);
}

}  // namespace nclight::criteria
