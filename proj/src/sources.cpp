#include "nclight/sources.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "nclight/errors.hpp"

namespace nclight::sources {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_probability(double value, const char* name) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw std::invalid_argument(std::string(name) + " must lie in [0,1]");
  }
}

void require_detectors(int detectors) {
  if (detectors < 2) {
    throw std::invalid_argument("detector count must be at least 2");
  }
}

double emitter_log_pgf(double eta1, double eta2, double s) {
  const double deficit = s * (eta1 + eta2 * (2.0 - s));
  if (deficit >= 1.0) return -kInf;
  return std::log1p(-deficit);
}

/// Margin and log pair for one emitter (plus optional per-emitter thermal
/// noise) at per-arm collection c_arm with c_total = detectors*c_arm.
struct PairMargin {
  double log_p0 = 0.0;
  double log_p0m = 0.0;
  double margin = 0.0;
};

/// Root of f on [lo, hi] with f(lo) <= 0 < f(hi), bisected to abs_tol.
double bisect(const std::function<double(double)>& f, double lo, double hi,
              double abs_tol, const char* what) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo > 0.0 || fhi <= 0.0) {
    throw numeric_error(std::string("bisection bracket failed for ") + what +
                        ": f(" + std::to_string(lo) + ")=" +
                        std::to_string(flo) + ", f(" + std::to_string(hi) +
                        ")=" + std::to_string(fhi));
  }
  for (int iter = 0; iter < 200 && hi - lo > abs_tol; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) > 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

NoiseModel NoiseModel::per_emitter(double nbar) {
  if (nbar < 0.0) throw std::invalid_argument("nbar must be non-negative");
  NoiseModel m;
  m.kind = Kind::per_emitter;
  m.nbar = nbar;
  return m;
}

NoiseModel NoiseModel::common(double nbar) {
  if (nbar < 0.0) throw std::invalid_argument("nbar must be non-negative");
  NoiseModel m;
  m.kind = Kind::common;
  m.nbar = nbar;
  return m;
}

NoiseModel NoiseModel::poissonian(double mean) {
  if (mean < 0.0) throw std::invalid_argument("mean must be non-negative");
  NoiseModel m;
  m.kind = Kind::poissonian;
  m.mean = mean;
  return m;
}

NumberStatistics NumberStatistics::point_mass(int n) {
  if (n < 0) throw std::invalid_argument("emitter count must be >= 0");
  std::vector<double> pmf(static_cast<std::size_t>(n) + 1, 0.0);
  pmf.back() = 1.0;
  return NumberStatistics(std::move(pmf));
}

NumberStatistics NumberStatistics::poissonian(double mean) {
  return NumberStatistics(
      fock::PhotonNumberDistribution::poissonian(mean).probs());
}

NumberStatistics NumberStatistics::binomial(int trials, double p) {
  return NumberStatistics(
      fock::PhotonNumberDistribution::binomial(trials, p).probs());
}

NumberStatistics NumberStatistics::geometric(double mean) {
  return NumberStatistics(
      fock::PhotonNumberDistribution::thermal(mean).probs());
}

NumberStatistics NumberStatistics::from_pmf(std::vector<double> pmf) {
  return NumberStatistics(
      fock::PhotonNumberDistribution::from_probs(std::move(pmf)).probs());
}

double NumberStatistics::mean() const {
  double acc = 0.0;
  for (std::size_t n = 1; n < pmf_.size(); ++n) {
    acc += static_cast<double>(n) * pmf_[n];
  }
  return acc;
}

double NumberStatistics::variance() const {
  const double m = mean();
  double acc = 0.0;
  for (std::size_t n = 1; n < pmf_.size(); ++n) {
    acc += static_cast<double>(n) * static_cast<double>(n) * pmf_[n];
  }
  return acc - m * m;
}

double NumberStatistics::expected_power(double g) const {
  require_probability(g, "g");
  if (g == 0.0) return pmf_[0];
  const double lg = std::log(g);
  double acc = 0.0;
  for (std::size_t n = 0; n < pmf_.size(); ++n) {
    if (pmf_[n] == 0.0) continue;
    acc += pmf_[n] * std::exp(static_cast<double>(n) * lg);
  }
  return std::min(acc, 1.0);
}

void SourceSpec::validate() const {
  if (emitters < 0) throw std::invalid_argument("emitter count must be >= 0");
  if (eta1 < 0.0 || eta2 < 0.0 || eta1 + eta2 > 1.0) {
    throw std::invalid_argument("need eta1, eta2 >= 0 and eta1+eta2 <= 1");
  }
  if (eta_fluctuation) {
    const auto& f = *eta_fluctuation;
    if (!(f.lo >= 0.0 && f.hi >= f.lo && f.hi + eta2 <= 1.0)) {
      throw std::invalid_argument("eta fluctuation range out of bounds");
    }
  }
  if (decay) {
    if (!(decay->storage_time_s > 0.0) || !(decay->duration_s > 0.0) ||
        decay->start_time_s < 0.0) {
      throw std::invalid_argument("decay needs positive storage/duration");
    }
    if (eta2 != 0.0 || noise.kind != NoiseModel::Kind::none ||
        number_stats || eta_fluctuation) {
      throw unsupported_error(
          "decay model covers plain single-photon ensembles only");
    }
  }
  if (number_stats && noise.kind == NoiseModel::Kind::per_emitter) {
    throw unsupported_error(
        "per-emitter noise with fluctuating emitter count is not modeled");
  }
}

double SourceSpec::effective_eta1() const {
  return eta_fluctuation ? eta_fluctuation->mean() : eta1;
}

namespace {

/// Shared assembly for vacuum_logprobs / criterion_margin. c_arm is the
/// per-photon probability of landing on the chosen arm; c_total is derived
/// as detectors*c_arm so Poisson margins cancel identically.
PairMargin assemble(const SourceSpec& spec, int detectors,
                    double detection_efficiency, double transmittance) {
  spec.validate();
  require_detectors(detectors);
  require_probability(detection_efficiency, "detection_efficiency");
  require_probability(transmittance, "transmittance");

  const double m = static_cast<double>(detectors);
  const double c_arm = transmittance * detection_efficiency / m;
  const double c_total = m * c_arm;
  const double eta = spec.effective_eta1();

  PairMargin out;

  if (spec.decay) {
    const auto& d = *spec.decay;
    const auto pair = averaged_vacuum(spec.emitters, eta * c_total,
                                      d.storage_time_s, d.start_time_s,
                                      d.duration_s, detectors);
    out.log_p0 = pair.log_p0;
    out.log_p0m = pair.log_p0m;
    out.margin = m * out.log_p0 - out.log_p0m;
    return out;
  }

  if (spec.number_stats) {
    const auto& stats = *spec.number_stats;
    const double g_arm = std::exp(emitter_log_pgf(eta, spec.eta2, c_arm));
    const double g_tot = std::exp(emitter_log_pgf(eta, spec.eta2, c_total));
    out.log_p0 = std::log(stats.expected_power(g_arm));
    out.log_p0m = std::log(stats.expected_power(g_tot));
    out.margin = m * out.log_p0 - out.log_p0m;
  } else {
    const double n = static_cast<double>(spec.emitters);
    const double la = emitter_log_pgf(eta, spec.eta2, c_arm);
    const double lt = emitter_log_pgf(eta, spec.eta2, c_total);
    out.log_p0 = n * la;
    out.log_p0m = n * lt;
    if (std::isinf(lt) && !std::isinf(la) && n > 0) {
      out.margin = kInf;
    } else {
      out.margin = n * (m * la - lt);
    }
  }

  switch (spec.noise.kind) {
    case NoiseModel::Kind::none:
      break;
    case NoiseModel::Kind::per_emitter: {
      const double n = static_cast<double>(spec.emitters);
      const double la = -std::log1p(spec.noise.nbar * c_arm);
      const double lt = -std::log1p(spec.noise.nbar * c_total);
      out.log_p0 += n * la;
      out.log_p0m += n * lt;
      out.margin += n * (m * la - lt);
      break;
    }
    case NoiseModel::Kind::common: {
      const double la = -std::log1p(spec.noise.nbar * c_arm);
      const double lt = -std::log1p(spec.noise.nbar * c_total);
      out.log_p0 += la;
      out.log_p0m += lt;
      out.margin += m * la - lt;
      break;
    }
    case NoiseModel::Kind::poissonian: {
      out.log_p0 += -spec.noise.mean * c_arm;
      out.log_p0m += -spec.noise.mean * c_total;
      // m*(-mean*c_arm) - (-mean*c_total) with c_total = m*c_arm: zero.
      out.margin += spec.noise.mean * (c_total - m * c_arm);
      break;
    }
  }
  return out;
}

}  // namespace

VacuumLogProbs vacuum_logprobs(const SourceSpec& spec, int detectors,
                               double detection_efficiency,
                               double transmittance) {
  const auto pm = assemble(spec, detectors, detection_efficiency,
                           transmittance);
  return {pm.log_p0, pm.log_p0m};
}

double criterion_margin(const SourceSpec& spec, int detectors,
                        double detection_efficiency, double transmittance) {
  return assemble(spec, detectors, detection_efficiency, transmittance).margin;
}

criteria::CriterionResult evaluate_source(const SourceSpec& spec,
                                          int detectors,
                                          double detection_efficiency,
                                          double transmittance,
                                          double tolerance) {
  const auto pm = assemble(spec, detectors, detection_efficiency,
                           transmittance);
  return criteria::evaluate_margin(pm.margin, pm.log_p0, pm.log_p0m,
                                   detectors, tolerance);
}

fock::SourceComposition to_composition(const SourceSpec& spec,
                                       double transmittance) {
  spec.validate();
  require_probability(transmittance, "transmittance");
  if (spec.decay || spec.number_stats) {
    throw unsupported_error(
        "decay and emitter-count statistics have no fixed-mode composition");
  }
  fock::SourceComposition comp;
  const double eta = spec.effective_eta1();
  if (spec.emitters > 0 && (eta > 0.0 || spec.eta2 > 0.0)) {
    comp.add(fock::Mode::emitter(eta, spec.eta2).attenuated(transmittance),
             spec.emitters);
  }
  switch (spec.noise.kind) {
    case NoiseModel::Kind::none:
      break;
    case NoiseModel::Kind::per_emitter:
      comp.add(fock::Mode::thermal(spec.noise.nbar * transmittance),
               spec.emitters);
      break;
    case NoiseModel::Kind::common:
      comp.add(fock::Mode::thermal(spec.noise.nbar * transmittance));
      break;
    case NoiseModel::Kind::poissonian:
      comp.add(fock::Mode::poissonian(spec.noise.mean * transmittance));
      break;
  }
  return comp;
}

double noise_threshold_per_emitter(double nbar) {
  if (nbar < 0.0) throw std::invalid_argument("nbar must be non-negative");
  return nbar / (1.0 + nbar);
}

double noise_threshold_per_emitter_numeric(double nbar, std::int64_t emitters,
                                           int detectors) {
  if (nbar < 0.0) throw std::invalid_argument("nbar must be non-negative");
  require_detectors(detectors);
  if (emitters < 1) throw std::invalid_argument("need at least one emitter");
  if (nbar == 0.0) return 0.0;
  auto margin_at = [&](double eta) {
    SourceSpec spec;
    spec.emitters = emitters;
    spec.eta1 = eta;
    spec.noise = NoiseModel::per_emitter(nbar);
    return criterion_margin(spec, detectors, 1.0, 1.0);
  };
  return bisect(margin_at, 0.0, 1.0, 1e-9, "per-emitter noise threshold");
}

double noise_threshold_common(double nbar, std::int64_t emitters,
                              int detectors) {
  if (nbar < 0.0) throw std::invalid_argument("nbar must be non-negative");
  require_detectors(detectors);
  if (emitters < 1) throw std::invalid_argument("need at least one emitter");
  if (nbar == 0.0) return 0.0;
  auto margin_at = [&](double eta) {
    SourceSpec spec;
    spec.emitters = emitters;
    spec.eta1 = eta;
    spec.noise = NoiseModel::common(nbar);
    return criterion_margin(spec, detectors, 1.0, 1.0);
  };
  return bisect(margin_at, 0.0, 1.0, 1e-9, "common noise threshold");
}

AttenuationRobustness attenuation_robustness(double eta, double nbar) {
  require_probability(eta, "eta");
  if (nbar < 0.0) throw std::invalid_argument("nbar must be non-negative");
  if (eta == 0.0) {
    throw std::invalid_argument("eta = 0 source has no robustness threshold");
  }
  AttenuationRobustness out;
  if (eta > nbar) {
    out.kind = AttenuationRobustness::Kind::absolute;
    out.t_min = 0.0;
    return out;
  }
  out.t_min = (nbar - eta) / (eta * nbar);
  out.kind = out.t_min > 1.0 ? AttenuationRobustness::Kind::never
                             : AttenuationRobustness::Kind::threshold;
  return out;
}

double attenuation_threshold_numeric(double eta, double nbar, int detectors) {
  require_probability(eta, "eta");
  if (eta == 0.0) throw std::invalid_argument("eta must be positive");
  if (nbar < 0.0) throw std::invalid_argument("nbar must be non-negative");
  require_detectors(detectors);
  auto margin_at = [&](double t) {
    SourceSpec spec;
    spec.emitters = 1;
    spec.eta1 = eta;
    spec.noise = NoiseModel::per_emitter(nbar);
    return criterion_margin(spec, detectors, 1.0, t);
  };
  return bisect(margin_at, 0.0, 1.0, 1e-9, "attenuation threshold");
}

criteria::CriterionResult fluctuating_N_criterion(
    const NumberStatistics& stats, double eta1, double eta2, int detectors) {
  require_detectors(detectors);
  if (eta1 < 0.0 || eta2 < 0.0 || eta1 + eta2 > 1.0) {
    throw std::invalid_argument("need eta1, eta2 >= 0 and eta1+eta2 <= 1");
  }
  const double m = static_cast<double>(detectors);
  const double g_arm = std::exp(emitter_log_pgf(eta1, eta2, 1.0 / m));
  const double g_tot = std::exp(emitter_log_pgf(eta1, eta2, 1.0));
  const double log_p0 = std::log(stats.expected_power(g_arm));
  const double log_p0m = std::log(stats.expected_power(g_tot));
  return criteria::evaluate(log_p0, log_p0m, detectors);
}

double subpoissonian_bound(double eta1, double eta2) {
  if (eta1 <= 0.0) {
    throw std::invalid_argument("eta1 must be positive for the bound");
  }
  if (eta2 < 0.0) throw std::invalid_argument("eta2 must be non-negative");
  return 1.0 - 2.0 * eta2 / (eta1 * eta1);
}

fock::PhotonNumberDistribution decay_distribution(int emitters, double eta,
                                                  double storage_time_s,
                                                  double t_s) {
  if (t_s < 0.0) throw std::invalid_argument("time must be non-negative");
  if (!(storage_time_s > 0.0)) {
    throw std::invalid_argument("storage time must be positive");
  }
  require_probability(eta, "eta");
  // Emitter loss acts as attenuation of the emitted light.
  const double eta_t = eta * std::exp(-t_s / storage_time_s);
  return fock::PhotonNumberDistribution::binomial(emitters, eta_t);
}

VacuumLogProbs averaged_vacuum(std::int64_t emitters, double eta,
                               double storage_time_s, double start_time_s,
                               double duration_s, int detectors) {
  require_detectors(detectors);
  require_probability(eta, "eta");
  if (emitters < 0) throw std::invalid_argument("emitter count must be >= 0");
  if (!(storage_time_s > 0.0) || !(duration_s > 0.0) || start_time_s < 0.0) {
    throw std::invalid_argument("need positive storage time and duration");
  }

  const double n = static_cast<double>(emitters);
  auto averaged_log = [&](double e) {
    if (e == 0.0 || n == 0.0) return 0.0;
    auto log_integrand = [&](double u) {
      const double t = start_time_s + u * duration_s;
      return n * std::log1p(-e * std::exp(-t / storage_time_s));
    };
    // Normalized window: the average is the integral over u in [0,1] with
    // the endpoint maximum factored out, so the quadrature works on an O(1)
    // quantity regardless of the window length.
    const double peak = log_integrand(1.0);
    if (std::isinf(peak)) return -kInf;  // e == 1 and the window ends at t=0
    auto f = [&](double u) { return std::exp(log_integrand(u) - peak); };
    double err = 0.0;
    const double integral =
        boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
            f, 0.0, 1.0, 15, 1e-13, &err);
    if (!(integral > 0.0) || err > 1e-10 * integral) {
      throw numeric_error("decay-average quadrature did not converge");
    }
    return peak + std::log(integral);
  };

  VacuumLogProbs out;
  out.log_p0 = averaged_log(eta / static_cast<double>(detectors));
  out.log_p0m = averaged_log(eta);
  return out;
}

double max_emitters_decay(double duration_s, double storage_time_s) {
  if (!(duration_s > 0.0) || !(storage_time_s > 0.0)) {
    throw std::invalid_argument("need positive duration and storage time");
  }
  const double x = duration_s / storage_time_s;
  if (x < 0.05) {
    // Direct evaluation loses the O(x^3) denominator to cancellation.
    return 12.0 / (x * x) / (1.0 - x * x / 10.0 + 17.0 * x * x * x * x / 1680.0);
  }
  return x / (x - 2.0 * std::tanh(0.5 * x));
}

double max_emitters_decay_small_time(double duration_s,
                                     double storage_time_s) {
  if (!(duration_s > 0.0) || !(storage_time_s > 0.0)) {
    throw std::invalid_argument("need positive duration and storage time");
  }
  const double r = storage_time_s / duration_s;
  return 12.0 * r * r;
}

VacuumLogProbs fluctuating_eta_vacuum(double mean_eta, std::int64_t emitters,
                                      int detectors) {
  require_detectors(detectors);
  require_probability(mean_eta, "mean_eta");
  if (emitters < 0) throw std::invalid_argument("emitter count must be >= 0");
  const double n = static_cast<double>(emitters);
  VacuumLogProbs out;
  out.log_p0 = n * std::log1p(-mean_eta / detectors);
  out.log_p0m = n * std::log1p(-mean_eta);
  return out;
}

McEstimate fluctuating_eta_mc(const EtaFluctuation& fluct, int emitters,
                              int detectors, std::int64_t draws,
                              std::uint64_t seed) {
  require_detectors(detectors);
  if (emitters < 0 || draws < 2) {
    throw std::invalid_argument("need emitters >= 0 and draws >= 2");
  }
  if (!(fluct.lo >= 0.0 && fluct.hi >= fluct.lo && fluct.hi <= 1.0)) {
    throw std::invalid_argument("eta fluctuation range out of bounds");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(fluct.lo, fluct.hi);

  double sum0 = 0.0, sum0_sq = 0.0, sum_m = 0.0, sum_m_sq = 0.0;
  const double m = static_cast<double>(detectors);
  for (std::int64_t i = 0; i < draws; ++i) {
    double lp0 = 0.0, lpm = 0.0;
    for (int k = 0; k < emitters; ++k) {
      const double eta = (fluct.hi > fluct.lo) ? u(rng) : fluct.lo;
      lp0 += std::log1p(-eta / m);
      lpm += std::log1p(-eta);
    }
    const double p0 = std::exp(lp0);
    const double pm = std::exp(lpm);
    sum0 += p0;
    sum0_sq += p0 * p0;
    sum_m += pm;
    sum_m_sq += pm * pm;
  }
  const double nd = static_cast<double>(draws);
  const double mean0 = sum0 / nd;
  const double mean_m = sum_m / nd;
  const double var0 = std::max(0.0, sum0_sq / nd - mean0 * mean0);
  const double var_m = std::max(0.0, sum_m_sq / nd - mean_m * mean_m);

  McEstimate est;
  est.draws = draws;
  est.log_p0 = std::log(mean0);
  est.log_p0m = std::log(mean_m);
  est.se_log_p0 = std::sqrt(var0 / nd) / mean0;
  est.se_log_p0m = std::sqrt(var_m / nd) / mean_m;
  return est;
}

}  // namespace nclight::sources
