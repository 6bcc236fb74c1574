#include "subgrad/step_schedules.hpp"

#include <gtest/gtest.h>

#include "support/fixtures.hpp"

using namespace subgrad;

namespace {

std::shared_ptr<const AbsProbSequence> zero_diag_pi(long horizon) {
  const auto seq = MatrixSequence::constant(fixtures::zero_diagonal_primitive4());
  return std::make_shared<AbsProbSequence>(
      compute_abs_prob(seq, horizon, check_A1(seq, 16, 4)));
}

std::shared_ptr<const AbsProbSequence> uniform_pi(int n, long horizon) {
  const double q = 1.0 / n;
  const auto m = validate(std::vector<std::vector<double>>(static_cast<std::size_t>(n),
                                                           std::vector<double>(static_cast<std::size_t>(n), q)),
                          Stochasticity::doubly);
  const auto seq = MatrixSequence::constant(m);
  return std::make_shared<AbsProbSequence>(
      compute_abs_prob(seq, horizon, check_A1(seq, 4, 4)));
}

std::vector<double> deltas(const StepSchedule& s, long t) {
  std::vector<double> out(static_cast<std::size_t>(s.agents()));
  s.delta_at(t, out);
  return out;
}

}  // namespace

TEST(CommonPower, StartsAtCAndDecays) {
  const auto s = StepSchedule::common_power(3, 1.0, -0.75);
  EXPECT_TRUE(s.agent_independent());
  EXPECT_EQ(deltas(s, 0), (std::vector<double>{1.0, 1.0, 1.0}));
  const double expected = std::pow(4.0, -0.75);
  for (double d : deltas(s, 3)) EXPECT_DOUBLE_EQ(d, expected);
  EXPECT_EQ(s.power_c().value(), 1.0);
  EXPECT_EQ(s.power_alpha().value(), -0.75);
}

TEST(PiScaledPower, DividesByNextAbsoluteProbability) {
  const auto s = StepSchedule::pi_scaled_power(1.0, -1.0, zero_diag_pi(10));
  EXPECT_FALSE(s.agent_independent());
  const auto d3 = deltas(s, 3);
  EXPECT_NEAR(d3[0], 1.25, 1e-9);
  EXPECT_NEAR(d3[1], 1.25, 1e-9);
  EXPECT_NEAR(d3[2], 0.625, 1e-9);
  EXPECT_NEAR(d3[3], 1.25, 1e-9);
}

TEST(PiScaledPower, CancellationIsExactByConstruction) {
  const auto pi = zero_diag_pi(10);
  const auto s = StepSchedule::pi_scaled_power(0.5, -0.75, pi);
  EXPECT_TRUE(s.exact_pi_cancellation());
  std::vector<double> d(4);
  for (long t = 0; t < 8; ++t) {
    s.delta_at(t, d);
    const auto& p = pi->at(t + 1);
    const double w0 = p[0] * d[0];
    for (int i = 1; i < 4; ++i) {
      // Division then multiplication by the same double is not an exact
      // round trip, but the weighted products agree to one ulp.
      EXPECT_NEAR(p[static_cast<std::size_t>(i)] * d[static_cast<std::size_t>(i)], w0,
                  1e-15 * std::abs(w0));
    }
  }
}

TEST(PerAgentExplicit, ReadsTableAndRejectsOverrun) {
  const auto s = StepSchedule::per_agent_explicit({{0.1, 0.2}, {0.0, 0.0}});
  EXPECT_EQ(s.table_length(), 2);
  EXPECT_EQ(deltas(s, 0), (std::vector<double>{0.1, 0.2}));
  EXPECT_EQ(deltas(s, 1), (std::vector<double>{0.0, 0.0}));
  EXPECT_THROW(deltas(s, 2), Error);
}

TEST(PerAgentExplicit, RejectsNegativeAndRaggedEntries) {
  EXPECT_THROW(StepSchedule::per_agent_explicit({{0.1, -0.2}}), Error);
  EXPECT_THROW(StepSchedule::per_agent_explicit({{0.1, 0.2}, {0.1}}), Error);
  EXPECT_THROW(StepSchedule::per_agent_explicit({}), Error);
}

TEST(PiScaledPerturbed, ZeroPerturbationMatchesPiScaled) {
  const auto pi = zero_diag_pi(10);
  const auto a = StepSchedule::pi_scaled_power(1.0, -0.75, pi);
  const auto b = StepSchedule::pi_scaled_perturbed(1.0, -0.75, {0.0, 0.0, 0.0, 0.0}, 0.5, pi);
  EXPECT_TRUE(b.exact_pi_cancellation());
  for (long t = 0; t < 6; ++t) EXPECT_EQ(deltas(a, t), deltas(b, t));
}

TEST(PiScaledPerturbed, PerturbationDecaysGeometrically) {
  const auto pi = uniform_pi(2, 10);
  const auto s = StepSchedule::pi_scaled_perturbed(1.0, 0.0, {0.5, 0.0}, 0.5, pi);
  EXPECT_FALSE(s.exact_pi_cancellation());
  EXPECT_DOUBLE_EQ(deltas(s, 0)[0], 1.0);           // 1 / (0.5 + 0.5)
  EXPECT_DOUBLE_EQ(deltas(s, 0)[1], 2.0);           // 1 / 0.5
  EXPECT_DOUBLE_EQ(deltas(s, 1)[0], 1.0 / 0.75);    // 1 / (0.5 + 0.25)
  EXPECT_DOUBLE_EQ(deltas(s, 2)[0], 1.0 / 0.625);
}

TEST(PiScaledPerturbed, NegativeOffsetsStayValidWhenDominatedByPi) {
  const auto pi = zero_diag_pi(10);
  const double eps = -0.1;  // pi_min / 2 below zero, still positive denominators
  const auto s = StepSchedule::pi_scaled_perturbed(1.0, -0.75, {eps, eps, eps, eps}, 0.9, pi);
  for (long t = 0; t < 20; ++t)
    for (double d : deltas(s, t)) EXPECT_GT(d, 0.0);
}

TEST(PiScaledPerturbed, ReportsAgentAndTimeOnNonpositiveDenominator) {
  const auto pi = uniform_pi(2, 10);
  const auto s = StepSchedule::pi_scaled_perturbed(1.0, 0.0, {-0.5, 0.0}, 0.5, pi);
  try {
    deltas(s, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::nonpositive_denominator);
    EXPECT_NE(std::string(e.what()).find("agent 0"), std::string::npos);
  }
}

TEST(PiScaledPerturbed, RejectsDecayOutsideUnitInterval) {
  const auto pi = uniform_pi(2, 10);
  EXPECT_THROW(StepSchedule::pi_scaled_perturbed(1.0, 0.0, {0.0, 0.0}, 1.0, pi), Error);
  EXPECT_THROW(StepSchedule::pi_scaled_perturbed(1.0, 0.0, {0.0, 0.0}, 0.0, pi), Error);
}

TEST(Derived, EvaluatesCallback) {
  const auto s = StepSchedule::derived(2, [](long t, std::span<double> out) {
    out[0] = 1.0 / (1.0 + static_cast<double>(t));
    out[1] = 2.0 / (1.0 + static_cast<double>(t));
  });
  EXPECT_EQ(deltas(s, 1), (std::vector<double>{0.5, 1.0}));
  EXPECT_FALSE(s.power_alpha().has_value());
}

TEST(AuditAssumptions, PowerMinusThreeQuartersPassesBoth) {
  const auto pi = uniform_pi(4, 2000);
  const auto s = StepSchedule::common_power(4, 1.0, -0.75);
  const auto audit = audit_assumptions(s, *pi, 2000);
  EXPECT_EQ(audit.a2_verdict, AuditVerdict::analytic_pass);
  EXPECT_EQ(audit.a3_verdict, AuditVerdict::analytic_pass);
  EXPECT_GT(audit.a3_divergence_proxy, 10.0);
  EXPECT_EQ(audit.a3_sqrt_t_sum, 0.0);
  EXPECT_LT(audit.a2_partial_sum, 10.0);
}

TEST(AuditAssumptions, SlowDecayFailsSquareSummability) {
  const auto pi = uniform_pi(4, 100);
  const auto s = StepSchedule::common_power(4, 1.0, -0.4);
  const auto audit = audit_assumptions(s, *pi, 100);
  EXPECT_EQ(audit.a2_verdict, AuditVerdict::analytic_fail);
  EXPECT_EQ(audit.a3_verdict, AuditVerdict::analytic_pass);
}

TEST(AuditAssumptions, FastDecayFailsDivergence) {
  const auto pi = uniform_pi(4, 100);
  const auto s = StepSchedule::common_power(4, 1.0, -1.5);
  const auto audit = audit_assumptions(s, *pi, 100);
  EXPECT_EQ(audit.a2_verdict, AuditVerdict::analytic_pass);
  EXPECT_EQ(audit.a3_verdict, AuditVerdict::analytic_fail);
}

TEST(AuditAssumptions, PiScaledSqrtTermIsExactlyZero) {
  const auto pi = zero_diag_pi(300);
  const auto s = StepSchedule::pi_scaled_power(1.0, -0.75, pi);
  const auto audit = audit_assumptions(s, *pi, 300);
  EXPECT_EQ(audit.a3_sqrt_t_sum, 0.0);
  EXPECT_NE(audit.notes.find("agent-independent by construction"), std::string::npos);
}

TEST(AuditAssumptions, ExplicitTableGetsNumericVerdictOnly) {
  const auto pi = uniform_pi(2, 50);
  std::vector<std::vector<double>> table(51, {0.1, 0.1});
  const auto s = StepSchedule::per_agent_explicit(std::move(table));
  const auto audit = audit_assumptions(s, *pi, 50);
  EXPECT_EQ(audit.a2_verdict, AuditVerdict::numeric_only);
  EXPECT_EQ(audit.a3_verdict, AuditVerdict::numeric_only);
  EXPECT_GT(audit.a3_divergence_proxy, 0.0);
}

TEST(AuditAssumptions, RejectsShortHorizonAndSizeMismatch) {
  const auto pi = uniform_pi(2, 50);
  const auto s = StepSchedule::common_power(2, 1.0, -0.75);
  EXPECT_THROW(audit_assumptions(s, *pi, 5), Error);
  const auto wrong = StepSchedule::common_power(3, 1.0, -0.75);
  EXPECT_THROW(audit_assumptions(wrong, *pi, 50), Error);
}
