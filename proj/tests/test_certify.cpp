#include <cmath>

#include "doctest.h"
#include "riskcert/certify.hpp"
#include "riskcert/errors.hpp"

using namespace riskcert;

namespace {

const LossSpec kZeroOne = LossSpec::zero_one(2);

BoundResult fake_surrogate(double bound, double delta) {
    BoundResult res;
    res.risk_bound = bound;
    res.delta_spent = delta;
    res.terms = {{"empirical", bound / 2.0}};
    return res;
}

PredictionRecord stochastic_record(std::string id, int label, int disagreeing_samples,
                                   int v_samples) {
    PredictionRecord rec;
    rec.id = std::move(id);
    rec.split = 'L';
    rec.label = label;
    rec.f_logits = {2.0, 0.0};
    for (int j = 0; j < v_samples; ++j) {
        rec.h_logits.push_back(j < disagreeing_samples ? std::vector<double>{0.0, 2.0}
                                                       : std::vector<double>{2.0, 0.0});
    }
    return rec;
}

}  // namespace

TEST_CASE("delta budget accounting") {
    const auto even = DeltaBudget::even_split(Confidence(0.01), {"surrogate", "disagreement"});
    CHECK(even.total() == 0.01);
    CHECK(even.delta_for("surrogate") == 0.005);

    // Odd splits still conserve the total bit-exactly via the remainder.
    const auto thirds = DeltaBudget::even_split(Confidence(0.01), {"a", "b", "c"});
    CHECK(thirds.total() == 0.01);
    const auto sevenths =
        DeltaBudget::even_split(Confidence(0.013), {"a", "b", "c", "d", "e", "f", "g"});
    CHECK(sevenths.total() == 0.013);

    DeltaBudget bad;
    bad.allocation = {{"a", 0.5}, {"b", 0.75}};
    CHECK_THROWS_AS(bad.validate(), UsageError);
    DeltaBudget zero;
    zero.allocation = {{"a", 0.0}};
    CHECK_THROWS_AS(zero.validate(), UsageError);
    CHECK_THROWS_AS(even.delta_for("nope"), UsageError);
}

TEST_CASE("disagree_01") {
    CHECK(disagree_01(EmpiricalCount(0, 1000), Confidence(0.01)) ==
          doctest::Approx(0.0045945826484730376).epsilon(1e-10));
    CHECK(disagree_01(EmpiricalCount(250, 250), Confidence(0.01)) == 1.0);
    CHECK(disagree_01(EmpiricalCount(3, 100), Confidence(0.01)) ==
          doctest::Approx(0.096971045265344468).epsilon(1e-9));
}

TEST_CASE("disagree_lipschitz") {
    // Zero observed disagreement still pays the closed-form tail.
    const double closed = 2.0 * 0.2 * (1.0 - std::pow(0.01, 1.0 / 100.0));
    CHECK(disagree_lipschitz(0.0, 0.2, 100, Confidence(0.01)) ==
          doctest::Approx(closed).epsilon(1e-10));
    CHECK(disagree_lipschitz(0.1, 0.2, 10000, Confidence(0.01)) ==
          doctest::Approx(0.022756744059347858).epsilon(1e-10));

    const auto huber = LossSpec::huber(10, 0.2);
    CHECK(disagree_lipschitz(0.1, huber, 10000, Confidence(0.01)) ==
          doctest::Approx(0.022756744059347858).epsilon(1e-10));
    CHECK_THROWS_AS(disagree_lipschitz(0.1, kZeroOne, 100, Confidence(0.01)), UsageError);
    CHECK_THROWS_AS(disagree_lipschitz(2.5, 0.2, 100, Confidence(0.01)), DataError);
}

TEST_CASE("disagree_loss") {
    CHECK(disagree_loss(0.0, kZeroOne, 50, Confidence(0.05)) ==
          doctest::Approx(1.0 - std::pow(0.05, 0.02)).epsilon(1e-10));
    CHECK(disagree_loss(1.0, kZeroOne, 50, Confidence(0.05)) == 1.0);
    CHECK_THROWS_AS(disagree_loss(1.5, kZeroOne, 50, Confidence(0.05)), DataError);

    // Monotone in the statistic: the zero-one upper-bound path through d01
    // can only be looser than the direct loss-gap statistic.
    const double via_d01 = disagree_loss(0.21, kZeroOne, 300, Confidence(0.01));
    const double direct = disagree_loss(0.13, kZeroOne, 300, Confidence(0.01));
    CHECK(direct <= via_d01);
}

TEST_CASE("disagree_pacbayes_mc") {
    // All-zero statistics: nested closed-form structure.
    std::vector<double> zeros(20, 0.0);
    const double inner = kl_inverse(0.0, std::log(1.0 / 0.02) / 20.0);
    const double outer = kl_inverse(inner, std::log(1.0 / 0.03) / 500.0);
    CHECK(disagree_pacbayes_mc(zeros, kZeroOne, 500, Confidence(0.02), Confidence(0.03)) ==
          doctest::Approx(outer).epsilon(1e-12));

    // V = 1 reduces to the single-surrogate bound with an inner inflation.
    std::vector<double> one{0.05};
    const double inflated = kl_inverse(0.05, std::log(1.0 / 0.01));
    const double expected = kl_inverse(inflated, std::log(1.0 / 0.01) / 1000.0);
    CHECK(disagree_pacbayes_mc(one, kZeroOne, 1000, Confidence(0.01), Confidence(0.01)) ==
          doctest::Approx(expected).epsilon(1e-12));
    CHECK(disagree_pacbayes_mc(one, kZeroOne, 1000, Confidence(0.01), Confidence(0.01)) >=
          disagree_loss(0.05, kZeroOne, 1000, Confidence(0.01)));

    std::vector<double> bad{1.7};
    CHECK_THROWS_AS(disagree_pacbayes_mc(bad, kZeroOne, 10, Confidence(0.1), Confidence(0.1)),
                    DataError);
}

TEST_CASE("certify_target") {
    const auto surrogate = fake_surrogate(0.0138, 0.005);
    DeltaBudget budget;
    budget.allocation = {{"surrogate", 0.005}, {"disagreement", 0.005}};

    const double disagreement = disagree_01(EmpiricalCount(40, 12000), Confidence(0.005));
    const auto report = certify_target(surrogate, disagreement, budget, "digest123");
    CHECK(report.target_bound == surrogate.risk_bound + disagreement);
    CHECK(report.budget.total() == 0.01);
    CHECK(report.inputs_digest == "digest123");
    CHECK(report.use_case == UseCase::certify_target);
    CHECK_FALSE(report.vacuous);

    // Zero disagreement collapses to the surrogate bound.
    CHECK(certify_target(surrogate, 0.0, budget).target_bound == surrogate.risk_bound);

    // Vacuous surrogate flags the report.
    auto vac = fake_surrogate(1.0, 0.005);
    vac.vacuous = true;
    CHECK(certify_target(vac, 0.1, budget).vacuous);

    DeltaBudget mismatched;
    mismatched.allocation = {{"surrogate", 0.004}, {"disagreement", 0.005}};
    CHECK_THROWS_AS(certify_target(surrogate, disagreement, mismatched), UsageError);
}

TEST_CASE("certify_uniform") {
    const auto surrogate = fake_surrogate(0.05, 0.005);
    DeltaBudget budget;
    budget.allocation = {{"surrogate", 0.005}, {"disagreement", 0.005}};
    const EmpiricalCount count(12, 400);
    auto disagreement_at = [&](Confidence conf) { return disagree_01(count, conf); };

    SurrogatePrior singleton;
    singleton.masses = {{"h0", 1.0}};
    const auto uniform = certify_uniform("h0", singleton, surrogate, disagreement_at, budget);
    const auto target =
        certify_target(surrogate, disagree_01(count, Confidence(0.005)), budget);
    CHECK(uniform.target_bound == target.target_bound);  // bit-exact at mass one
    CHECK(uniform.disagreement_term == target.disagreement_term);
    CHECK(uniform.use_case == UseCase::certify_uniform);

    SurrogatePrior halves;
    halves.masses = {{"h0", 0.5}, {"h1", 0.5}};
    const auto halved = certify_uniform("h0", halves, surrogate, disagreement_at, budget);
    CHECK(halved.disagreement_term > uniform.disagreement_term);

    CHECK_THROWS_AS(certify_uniform("missing", halves, surrogate, disagreement_at, budget),
                    UsageError);
    SurrogatePrior overweight;
    overweight.masses = {{"h0", 0.9}, {"h1", 0.9}};
    CHECK_THROWS_AS(certify_uniform("h0", overweight, surrogate, disagreement_at, budget),
                    UsageError);
}

TEST_CASE("risk_gap") {
    DeltaBudget budget;
    budget.allocation = {{"disagreement", 0.01}};
    const auto zero = risk_gap(0.0, budget);
    CHECK(zero.target_bound == 0.0);
    CHECK_FALSE(zero.surrogate_bound.has_value());

    // Quantized-vs-full logs at a 2% disagreement rate.
    const double gap = disagree_01(EmpiricalCount(20, 1000), Confidence(0.01));
    const auto report = risk_gap(gap, budget);
    CHECK(report.target_bound == gap);
    CHECK(report.use_case == UseCase::risk_gap);
    CHECK(report.budget.total() == 0.01);
}

TEST_CASE("pacbayes_mc_certificate keeps its halves disjoint") {
    std::vector<PredictionRecord> train;
    std::vector<PredictionRecord> unlabeled;
    for (int i = 0; i < 40; ++i) {
        train.push_back(stochastic_record("t" + std::to_string(i), i % 2 == 0 ? 1 : 2, 2, 8));
        unlabeled.push_back(stochastic_record("u" + std::to_string(i), 1, 1, 8));
    }
    const auto report =
        pacbayes_mc_certificate(train, unlabeled, kZeroOne, 0.5, SampleRange{0, 4},
                                SampleRange{4, 8}, Confidence(0.0125), "d");
    CHECK(report.target_bound ==
          report.surrogate_bound->risk_bound + report.disagreement_term);
    CHECK(report.budget.total() == doctest::Approx(0.05).epsilon(1e-15));
    CHECK(report.budget.allocation.size() == 3);

    CHECK_THROWS_AS(pacbayes_mc_certificate(train, unlabeled, kZeroOne, 0.5, SampleRange{0, 5},
                                            SampleRange{4, 8}, Confidence(0.0125), "d"),
                    UsageError);
}
