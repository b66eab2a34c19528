#include "nclight/detection.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "nclight/errors.hpp"

namespace nclight::detection {

DetectorNetwork DetectorNetwork::symmetric(int arms, double arm_efficiency) {
  if (arms < 1) throw std::invalid_argument("need at least one arm");
  DetectorNetwork net;
  net.arms = arms;
  net.split_fractions.assign(arms, 1.0 / arms);
  net.arm_efficiencies.assign(arms, arm_efficiency);
  net.validate();
  return net;
}

void DetectorNetwork::validate() const {
  if (arms < 1) throw std::invalid_argument("need at least one arm");
  if (static_cast<int>(split_fractions.size()) != arms ||
      static_cast<int>(arm_efficiencies.size()) != arms) {
    throw std::invalid_argument("per-arm vectors must match the arm count");
  }
  double total = 0.0;
  for (double f : split_fractions) {
    if (f < 0.0) throw std::invalid_argument("split fractions must be >= 0");
    total += f;
  }
  if (total > 1.0 + 1e-12) {
    throw std::invalid_argument("split fractions must sum to <= 1");
  }
  for (double e : arm_efficiencies) {
    if (!(e >= 0.0 && e <= 1.0)) {
      throw std::invalid_argument("arm efficiencies must lie in [0,1]");
    }
  }
  if (!(gate_length_s > 0.0)) {
    throw std::invalid_argument("gate length must be positive");
  }
  if (dark_rate_hz < 0.0 || dead_time_s < 0.0 || saturation_rate_hz <= 0.0) {
    throw std::invalid_argument("rates and dead time must be non-negative");
  }
}

double DetectorNetwork::effective_collection(int arm) const {
  if (arm < 0 || arm >= arms) throw std::invalid_argument("arm out of range");
  return split_fractions[static_cast<std::size_t>(arm)] *
         arm_efficiencies[static_cast<std::size_t>(arm)];
}

bool DetectorNetwork::symmetric_effective(double rel_tol) const {
  const double first = effective_collection(0);
  for (int i = 1; i < arms; ++i) {
    const double e = effective_collection(i);
    if (std::abs(e - first) > rel_tol * std::max(1.0, std::abs(first))) {
      return false;
    }
  }
  return true;
}

double arm_subset_silence(const DetectorNetwork& net,
                          const fock::SourceComposition& comp,
                          std::span<const int> subset) {
  net.validate();
  if (subset.empty()) throw std::invalid_argument("subset must be non-empty");
  double s = 0.0;
  for (int arm : subset) s += net.effective_collection(arm);
  s = std::min(s, 1.0);
  return fock::no_click_prob(comp, s) +
         static_cast<double>(subset.size()) * net.dark_silence_log();
}

criteria::CriterionResult criterion_from_network(
    const DetectorNetwork& net, const fock::SourceComposition& comp,
    double tolerance) {
  net.validate();
  if (net.arms < 2) {
    throw std::invalid_argument("criterion needs at least two arms");
  }
  if (!net.symmetric_effective()) {
    throw unsupported_error(
        "classical threshold is derived for symmetric effective splitting "
        "only; asymmetric networks yield probabilities but no verdict");
  }
  const double s_arm = net.effective_collection(0);
  const double s_total =
      std::min(1.0, static_cast<double>(net.arms) * s_arm);

  const double dark = net.dark_silence_log();
  const double log_p0 = fock::no_click_prob(comp, s_arm) + dark;
  const double log_p0m =
      fock::no_click_prob(comp, s_total) + net.arms * dark;
  const double margin =
      fock::composition_margin(comp, s_arm, s_total, net.arms);
  return criteria::evaluate_margin(margin, log_p0, log_p0m, net.arms,
                                   tolerance);
}

}  // namespace nclight::detection
