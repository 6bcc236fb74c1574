#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "subgrad/absolute_probability.hpp"
#include "subgrad/error.hpp"

namespace subgrad {

enum class ScheduleRule {
  common_power,         // delta_i(t) = c (t+1)^alpha for every agent
  pi_scaled_power,      // delta_i(t) = c (t+1)^alpha / pi_i(t+1)
  pi_scaled_perturbed,  // delta_i(t) = c (t+1)^alpha / (pi_i(t+1) + eps0_i rho^t)
  per_agent_explicit,   // table lookup
  derived,              // closure installed by the engine (embeddings)
};

inline const char* to_string(ScheduleRule r) {
  switch (r) {
    case ScheduleRule::common_power: return "common_power";
    case ScheduleRule::pi_scaled_power: return "pi_scaled_power";
    case ScheduleRule::pi_scaled_perturbed: return "pi_scaled_perturbed";
    case ScheduleRule::per_agent_explicit: return "per_agent_explicit";
    case ScheduleRule::derived: return "derived";
  }
  return "unknown";
}

/// Per-agent step sizes delta_i(t) >= 0. Power laws are evaluated at t+1 so
/// that t = 0 is well defined for negative exponents.
class StepSchedule {
 public:
  static StepSchedule common_power(int n, double c, double alpha) {
    StepSchedule s(ScheduleRule::common_power, n);
    s.c_ = c;
    s.alpha_ = alpha;
    return s;
  }

  static StepSchedule pi_scaled_power(double c, double alpha,
                                      std::shared_ptr<const AbsProbSequence> pi) {
    if (!pi) throw Error(Errc::dimension_mismatch, "missing probability sequence");
    StepSchedule s(ScheduleRule::pi_scaled_power, pi->n());
    s.c_ = c;
    s.alpha_ = alpha;
    s.pi_ = std::move(pi);
    return s;
  }

  static StepSchedule pi_scaled_perturbed(double c, double alpha, std::vector<double> eps0,
                                          double rho,
                                          std::shared_ptr<const AbsProbSequence> pi) {
    if (!pi) throw Error(Errc::dimension_mismatch, "missing probability sequence");
    if (static_cast<int>(eps0.size()) != pi->n())
      throw Error(Errc::dimension_mismatch, "eps0 size");
    if (!(rho > 0.0) || !(rho < 1.0))
      throw Error(Errc::config_invalid, "perturbation decay must lie in (0, 1)");
    StepSchedule s(ScheduleRule::pi_scaled_perturbed, pi->n());
    s.c_ = c;
    s.alpha_ = alpha;
    s.eps0_ = std::move(eps0);
    s.rho_ = rho;
    s.pi_ = std::move(pi);
    return s;
  }

  static StepSchedule per_agent_explicit(std::vector<std::vector<double>> table) {
    if (table.empty()) throw Error(Errc::empty_sequence, "empty schedule table");
    const int n = static_cast<int>(table[0].size());
    for (const auto& row : table) {
      if (static_cast<int>(row.size()) != n) throw Error(Errc::dimension_mismatch, "ragged table");
      for (double d : row)
        if (!(d >= 0.0)) throw Error(Errc::negative_entry, "negative step in table");
    }
    StepSchedule s(ScheduleRule::per_agent_explicit, n);
    s.table_ = std::move(table);
    return s;
  }

  static StepSchedule derived(int n, std::function<void(long, std::span<double>)> fn) {
    StepSchedule s(ScheduleRule::derived, n);
    s.fn_ = std::move(fn);
    return s;
  }

  int agents() const { return n_; }
  ScheduleRule rule() const { return rule_; }
  bool agent_independent() const { return rule_ == ScheduleRule::common_power; }
  std::optional<double> power_c() const { return has_power() ? std::optional(c_) : std::nullopt; }
  std::optional<double> power_alpha() const {
    return has_power() ? std::optional(alpha_) : std::nullopt;
  }

  /// True when the rule guarantees pi_i(t+1) * delta_i(t) is the same for all
  /// agents by construction (exact cancellation, not merely to roundoff).
  bool exact_pi_cancellation() const {
    if (rule_ == ScheduleRule::pi_scaled_power) return true;
    if (rule_ == ScheduleRule::pi_scaled_perturbed)
      return std::all_of(eps0_.begin(), eps0_.end(), [](double e) { return e == 0.0; });
    return false;
  }

  void delta_at(long t, std::span<double> out) const {
    if (t < 0) throw Error(Errc::time_order, "negative time");
    if (static_cast<int>(out.size()) != n_) throw Error(Errc::dimension_mismatch, "output size");
    switch (rule_) {
      case ScheduleRule::common_power: {
        const double d = c_ * std::pow(static_cast<double>(t) + 1.0, alpha_);
        for (auto& o : out) o = d;
        break;
      }
      case ScheduleRule::pi_scaled_power:
      case ScheduleRule::pi_scaled_perturbed: {
        const double num = c_ * std::pow(static_cast<double>(t) + 1.0, alpha_);
        const auto& pi = pi_->at(t + 1);
        for (int i = 0; i < n_; ++i) {
          double den = pi[static_cast<std::size_t>(i)];
          if (rule_ == ScheduleRule::pi_scaled_perturbed)
            den += eps0_[static_cast<std::size_t>(i)] * std::pow(rho_, static_cast<double>(t));
          if (!(den > 0.0))
            throw Error(Errc::nonpositive_denominator,
                        "agent " + std::to_string(i) + " at t=" + std::to_string(t));
          out[static_cast<std::size_t>(i)] = num / den;
        }
        break;
      }
      case ScheduleRule::per_agent_explicit: {
        if (t >= static_cast<long>(table_.size()))
          throw Error(Errc::config_invalid, "schedule table ends at t=" +
                                                std::to_string(table_.size() - 1) +
                                                ", requested t=" + std::to_string(t));
        const auto& row = table_[static_cast<std::size_t>(t)];
        std::copy(row.begin(), row.end(), out.begin());
        break;
      }
      case ScheduleRule::derived:
        fn_(t, out);
        break;
    }
    for (double d : out)
      if (!(d >= 0.0)) throw Error(Errc::negative_entry, "negative step at t=" + std::to_string(t));
  }

  std::vector<double> delta_at(long t) const {
    std::vector<double> out(static_cast<std::size_t>(n_));
    delta_at(t, out);
    return out;
  }

  long table_length() const { return static_cast<long>(table_.size()); }

 private:
  StepSchedule(ScheduleRule rule, int n) : rule_(rule), n_(n) {
    if (n <= 0) throw Error(Errc::dimension_mismatch, "schedule with n <= 0");
  }

  bool has_power() const {
    return rule_ == ScheduleRule::common_power || rule_ == ScheduleRule::pi_scaled_power ||
           rule_ == ScheduleRule::pi_scaled_perturbed;
  }

  ScheduleRule rule_;
  int n_;
  double c_ = 0.0, alpha_ = 0.0, rho_ = 0.0;
  std::vector<double> eps0_;
  std::shared_ptr<const AbsProbSequence> pi_;
  std::vector<std::vector<double>> table_;
  std::function<void(long, std::span<double>)> fn_;
};

/// Perturbed scaled schedule; validates every denominator on the materialized
/// range of the probability sequence before handing the schedule out.
inline StepSchedule perturbed_schedule(double c, double alpha, std::vector<double> eps0, double rho,
                                       std::shared_ptr<const AbsProbSequence> pi,
                                       long validate_horizon = -1) {
  auto s = StepSchedule::pi_scaled_perturbed(c, alpha, std::move(eps0), rho, pi);
  const long last = validate_horizon >= 0
                        ? validate_horizon
                        : (pi->time_invariant() ? 100 : pi->horizon());
  std::vector<double> buf(static_cast<std::size_t>(pi->n()));
  for (long t = 0; t <= last; ++t) s.delta_at(t, buf);
  return s;
}

enum class AuditVerdict { analytic_pass, analytic_fail, numeric_only };

inline const char* to_string(AuditVerdict v) {
  switch (v) {
    case AuditVerdict::analytic_pass: return "analytic_pass";
    case AuditVerdict::analytic_fail: return "analytic_fail";
    case AuditVerdict::numeric_only: return "numeric_only";
  }
  return "unknown";
}

/// Numeric partial sums of the two step-size summability conditions, plus
/// closed-form verdicts where the rule is a power law. All matrix norms on
/// diagonal step matrices reduce to max_i delta_i(t); the divergence proxy
/// uses the 1-norm of the vector (delta_i(t) pi_i(t+1))_i.
struct AssumptionAudit {
  double a2_partial_sum = 0.0;        // sum_t ||D(t)|| sup_{l>=t} ||D(l)||
  AuditVerdict a2_verdict = AuditVerdict::numeric_only;
  double a3_divergence_proxy = 0.0;   // sum_t ||D(t) pi(t+1)||_1, must diverge
  double a3_sqrt_t_sum = 0.0;         // sum_t sqrt(t) max_{i,j} |pi_i d_i - pi_j d_j|
  AuditVerdict a3_verdict = AuditVerdict::numeric_only;
  std::string notes;
};

inline AssumptionAudit audit_assumptions(const StepSchedule& schedule,
                                         const AbsProbSequence& abs_prob, long horizon) {
  if (horizon < 10) throw Error(Errc::time_order, "audit horizon must be at least 10");
  if (schedule.agents() != abs_prob.n())
    throw Error(Errc::dimension_mismatch, "schedule and probability sequence disagree on n");
  const int n = schedule.agents();
  const long last = abs_prob.time_invariant()
                        ? horizon
                        : std::min(horizon, abs_prob.horizon());
  AssumptionAudit audit;
  std::ostringstream notes;
  if (last < horizon) notes << "horizon clipped to probability range " << last << "; ";

  std::vector<double> sup_norm(static_cast<std::size_t>(last) + 1);
  std::vector<double> buf(static_cast<std::size_t>(n));
  const bool exact_cancel = schedule.exact_pi_cancellation();
  double prev_sqrt_increment = 0.0;
  double ratio_acc = 0.0;
  long ratio_count = 0;
  for (long t = 0; t <= last; ++t) {
    schedule.delta_at(t, buf);
    double dinf = 0.0;
    for (double d : buf) dinf = std::max(dinf, d);
    sup_norm[static_cast<std::size_t>(t)] = dinf;

    const auto& pi = abs_prob.at(t + 1);
    double proxy = 0.0, lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (int i = 0; i < n; ++i) {
      const double w = pi[static_cast<std::size_t>(i)] * buf[static_cast<std::size_t>(i)];
      proxy += std::abs(w);
      lo = std::min(lo, w);
      hi = std::max(hi, w);
    }
    audit.a3_divergence_proxy += proxy;
    const double spread = exact_cancel ? 0.0 : hi - lo;
    const double inc = std::sqrt(static_cast<double>(t)) * spread;
    audit.a3_sqrt_t_sum += inc;
    if (t > last / 2 && prev_sqrt_increment > 0.0 && inc > 0.0) {
      ratio_acc += inc / prev_sqrt_increment;
      ++ratio_count;
    }
    prev_sqrt_increment = inc;
  }
  for (long t = last - 1; t >= 0; --t)
    sup_norm[static_cast<std::size_t>(t)] =
        std::max(sup_norm[static_cast<std::size_t>(t)], sup_norm[static_cast<std::size_t>(t) + 1]);
  for (long t = 0; t <= last; ++t) {
    schedule.delta_at(t, buf);
    double dinf = 0.0;
    for (double d : buf) dinf = std::max(dinf, d);
    audit.a2_partial_sum += dinf * sup_norm[static_cast<std::size_t>(t)];
  }

  if (auto alpha = schedule.power_alpha()) {
    audit.a2_verdict = (2.0 * *alpha < -1.0) ? AuditVerdict::analytic_pass : AuditVerdict::analytic_fail;
    audit.a3_verdict = (*alpha >= -1.0) ? AuditVerdict::analytic_pass : AuditVerdict::analytic_fail;
    notes << "power rule alpha=" << *alpha << ": square-summable iff 2*alpha < -1, divergent iff alpha >= -1; ";
  } else {
    notes << "no closed form for rule " << to_string(schedule.rule())
          << "; tail beyond the audited window unchecked; ";
  }
  if (exact_cancel) notes << "pi-weighted steps agent-independent by construction, sqrt-t term is exactly 0; ";
  if (ratio_count > 0) notes << "sqrt-t increment tail ratio ~" << ratio_acc / ratio_count << "; ";
  audit.notes = notes.str();
  return audit;
}

}  // namespace subgrad
