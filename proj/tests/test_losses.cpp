#include <cmath>
#include <vector>

#include "doctest.h"
#include "riskcert/errors.hpp"
#include "riskcert/losses.hpp"
#include "riskcert/rng.hpp"

using namespace riskcert;

namespace {

PredictionRecord make_record(std::string id, char split, std::optional<int> label,
                             std::vector<double> f, std::vector<std::vector<double>> h) {
    PredictionRecord rec;
    rec.id = std::move(id);
    rec.split = split;
    rec.label = label;
    rec.f_logits = std::move(f);
    rec.h_logits = std::move(h);
    return rec;
}

std::vector<double> random_logits(RngStream& rng, int c, double scale) {
    std::vector<double> z(static_cast<std::size_t>(c));
    for (auto& v : z) v = scale * rng.normal();
    return z;
}

}  // namespace

TEST_CASE("loss spec ranges") {
    const auto clamped = LossSpec::xent_clamped(10, 1e-3);
    CHECK(clamped.b_lower == 0.0);
    CHECK(clamped.t_upper == doctest::Approx(9.2103403719761827).epsilon(1e-13));
    CHECK(clamped.lambda == clamped.t_upper);
    CHECK(*clamped.lipschitz == doctest::Approx(1e4).epsilon(1e-13));

    const auto smoothed = LossSpec::xent_smoothed(10, 1e-3);
    CHECK(smoothed.t_upper == doctest::Approx(9.2103403719761827).epsilon(1e-13));
    CHECK(smoothed.b_lower == doctest::Approx(0.00090040524316414319).epsilon(1e-12));
    CHECK(smoothed.lambda == smoothed.t_upper - smoothed.b_lower);
    // Closed form ln(1 + (1-a)C/a) of the range width.
    CHECK(smoothed.lambda == doctest::Approx(9.2094399667330186).epsilon(1e-13));

    const auto huber = LossSpec::huber(10, 0.2);
    CHECK(huber.b_lower == 0.0);
    CHECK(huber.t_upper == 0.18);  // exact in doubles
    CHECK(*huber.lipschitz == 0.2);

    const auto zero_one = LossSpec::zero_one(4);
    CHECK(zero_one.lambda == 1.0);
    CHECK_FALSE(zero_one.lipschitz.has_value());

    CHECK_THROWS_AS(LossSpec::zero_one(1), DataError);
    CHECK_THROWS_AS(LossSpec::xent_smoothed(10, 0.0), DataError);
    CHECK_THROWS_AS(LossSpec::huber(10, 0.0), DataError);
}

TEST_CASE("softmax basics") {
    const auto uniform = softmax(std::vector<double>{3.0, 3.0, 3.0, 3.0});
    for (double p : uniform) CHECK(p == doctest::Approx(0.25).epsilon(1e-13));

    const auto pair = softmax(std::vector<double>{0.0, std::log(3.0)});
    CHECK(pair[0] == doctest::Approx(0.25).epsilon(1e-13));
    CHECK(pair[1] == doctest::Approx(0.75).epsilon(1e-13));

    const auto shifted = softmax(std::vector<double>{1000.0, 1000.0 + std::log(3.0)});
    CHECK(shifted[0] == doctest::Approx(pair[0]).epsilon(1e-12));

    CHECK_THROWS_AS(softmax(std::vector<double>{1.0, std::nan("")}), DataError);
    double sum = 0.0;
    for (double p : softmax(std::vector<double>{1e4, -1e4, 0.0})) sum += p;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("clamped and smoothed label probabilities") {
    const std::vector<double> confident{20.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    CHECK(clamped_softmax(confident, 1, 1e-3) == doctest::Approx(1.0).epsilon(1e-6));
    // Probability far below the floor gets clamped to alpha / C.
    CHECK(clamped_softmax(confident, 2, 1e-3) == doctest::Approx(1e-4).epsilon(1e-12));
    CHECK(smoothed_softmax(confident, 2, 1e-3) == doctest::Approx(1e-4).epsilon(1e-3));
    CHECK(smoothed_softmax(confident, 1, 1e-3) == doctest::Approx(1.0 - 1e-3 + 1e-4).epsilon(1e-8));
}

TEST_CASE("eval_loss per kind") {
    const auto zero_one = LossSpec::zero_one(3);
    CHECK(eval_loss(zero_one, std::vector<double>{3.0, 1.0, 0.0}, 1) == 0.0);
    CHECK(eval_loss(zero_one, std::vector<double>{3.0, 1.0, 0.0}, 2) == 1.0);
    // Argmax ties break toward the lowest class index.
    CHECK(eval_loss(zero_one, std::vector<double>{2.0, 2.0, 0.0}, 1) == 0.0);
    CHECK(eval_loss(zero_one, std::vector<double>{2.0, 2.0, 0.0}, 2) == 1.0);

    const auto huber = LossSpec::huber(2, 0.2);
    CHECK(eval_loss(huber, std::vector<double>{60.0, -60.0}, 1) == doctest::Approx(0.0).epsilon(1e-12));
    // One-hot on the wrong class reaches the ceiling at C = 2.
    CHECK(eval_loss(huber, std::vector<double>{-60.0, 60.0}, 1) ==
          doctest::Approx(0.18).epsilon(1e-9));

    const auto xent = LossSpec::xent_smoothed(2, 1e-3);
    const double loss = eval_loss(xent, std::vector<double>{0.0, std::log(3.0)}, 2);
    CHECK(loss == doctest::Approx(-std::log((1.0 - 1e-3) * 0.75 + 5e-4)).epsilon(1e-12));

    CHECK_THROWS_AS(eval_loss(zero_one, std::vector<double>{1.0, 0.0}, 1), DataError);
    CHECK_THROWS_AS(eval_loss(zero_one, std::vector<double>{1.0, 0.0, 0.0}, 7), DataError);
}

TEST_CASE("eval_loss stays inside [B, T] under extreme logits") {
    RngStream rng(404);
    const std::vector<LossSpec> specs = {LossSpec::zero_one(5), LossSpec::xent_clamped(5, 1e-3),
                                         LossSpec::xent_smoothed(5, 1e-3), LossSpec::huber(5, 0.2)};
    for (int trial = 0; trial < 500; ++trial) {
        const auto logits = random_logits(rng, 5, 1e4);
        const int label = 1 + static_cast<int>(rng.next_u64() % 5);
        for (const auto& spec : specs) {
            const double loss = eval_loss(spec, logits, label);
            CHECK(loss >= spec.b_lower - 1e-12);
            CHECK(loss <= spec.t_upper + 1e-12);
        }
    }
}

TEST_CASE("eval_loss is shift invariant") {
    RngStream rng(405);
    const std::vector<LossSpec> specs = {LossSpec::zero_one(4), LossSpec::xent_clamped(4, 1e-3),
                                         LossSpec::xent_smoothed(4, 1e-2), LossSpec::huber(4, 0.5)};
    for (int trial = 0; trial < 200; ++trial) {
        auto logits = random_logits(rng, 4, 5.0);
        const int label = 1 + static_cast<int>(rng.next_u64() % 4);
        const double shift = 50.0 * (rng.next_unit() - 0.5);
        auto shifted = logits;
        for (auto& z : shifted) z += shift;
        for (const auto& spec : specs) {
            CHECK(eval_loss(spec, logits, label) ==
                  doctest::Approx(eval_loss(spec, shifted, label)).epsilon(0).scale(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("disagreement_01 counts argmax mismatches") {
    std::vector<PredictionRecord> records;
    for (int i = 0; i < 10; ++i) {
        const bool flip = i < 3;
        records.push_back(make_record("r" + std::to_string(i), 'U', std::nullopt, {2.0, 0.0},
                                      {{flip ? -1.0 : 3.0, flip ? 1.0 : 0.0}}));
    }
    const auto count = disagreement_01(records, 0);
    CHECK(count.k == 3);
    CHECK(count.m == 10);

    // Identical logits disagree nowhere; swapped argmaxes disagree everywhere.
    std::vector<PredictionRecord> same;
    std::vector<PredictionRecord> swapped;
    for (int i = 0; i < 5; ++i) {
        same.push_back(make_record("s" + std::to_string(i), 'U', std::nullopt, {1.0, 0.5},
                                   {{1.0, 0.5}}));
        swapped.push_back(make_record("w" + std::to_string(i), 'U', std::nullopt, {1.0, 0.5},
                                      {{0.5, 1.0}}));
    }
    CHECK(disagreement_01(same, 0).k == 0);
    CHECK(disagreement_01(swapped, 0).k == 5);
    CHECK_THROWS_AS(disagreement_01(std::vector<PredictionRecord>{}, 0), DataError);

    // Swapping the roles of f and h leaves the count unchanged.
    auto mirrored = records;
    for (auto& rec : mirrored) std::swap(rec.f_logits, rec.h_logits[0]);
    CHECK(disagreement_01(mirrored, 0).k == disagreement_01(records, 0).k);
}

TEST_CASE("disagreement_l1 matches hand values and is symmetric") {
    // softmax(log p) = p whenever p sums to one.
    auto rec = make_record("a", 'U', std::nullopt,
                           {std::log(0.8), std::log(0.2)}, {{std::log(0.6), std::log(0.4)}});
    std::vector<PredictionRecord> records{rec};
    CHECK(disagreement_l1(records, 0) == doctest::Approx(0.4).epsilon(1e-12));

    auto mirrored = make_record("b", 'U', std::nullopt, rec.h_logits[0], {rec.f_logits});
    std::vector<PredictionRecord> flipped{mirrored};
    CHECK(disagreement_l1(flipped, 0) == doctest::Approx(disagreement_l1(records, 0)).epsilon(1e-12));

    // Near-one-hot on disjoint classes approaches the ceiling of 2.
    std::vector<PredictionRecord> disjoint{
        make_record("c", 'U', std::nullopt, {50.0, 0.0}, {{0.0, 50.0}})};
    CHECK(disagreement_l1(disjoint, 0) == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("disagreement_loss basics") {
    const auto spec = LossSpec::xent_smoothed(2, 1e-3);
    std::vector<PredictionRecord> agree{
        make_record("a", 'L', 1, {1.0, 0.0}, {{1.0, 0.0}})};
    CHECK(disagreement_loss(agree, spec, 0) == 0.0);

    // f at the top of the range, h at the bottom: gap lambda.
    std::vector<PredictionRecord> extreme{
        make_record("b", 'L', 1, {-80.0, 80.0}, {{80.0, -80.0}})};
    CHECK(disagreement_loss(extreme, spec, 0) == doctest::Approx(spec.lambda).epsilon(1e-9));

    std::vector<PredictionRecord> unlabeled{
        make_record("c", 'U', std::nullopt, {1.0, 0.0}, {{1.0, 0.0}})};
    CHECK_THROWS_AS(disagreement_loss(unlabeled, spec, 0), DataError);
}

TEST_CASE("disagreement_label_prob basics") {
    const auto spec = LossSpec::xent_clamped(2, 1e-3);
    // Label probabilities 0.9 vs 0.7 on every record.
    std::vector<PredictionRecord> records{
        make_record("a", 'L', 1, {std::log(0.9), std::log(0.1)},
                    {{std::log(0.7), std::log(0.3)}}),
        make_record("b", 'L', 1, {std::log(0.9), std::log(0.1)},
                    {{std::log(0.7), std::log(0.3)}})};
    CHECK(disagreement_label_prob(records, spec, 0) == doctest::Approx(0.2).epsilon(1e-12));
    CHECK_THROWS_AS(disagreement_label_prob(records, LossSpec::zero_one(2), 0), UsageError);
}

TEST_CASE("zero-one loss gap never exceeds the argmax disagreement rate") {
    RngStream rng(406);
    const auto spec = LossSpec::zero_one(4);
    std::vector<PredictionRecord> records;
    records.reserve(10000);
    for (int i = 0; i < 10000; ++i) {
        records.push_back(make_record("r" + std::to_string(i), 'L',
                                      1 + static_cast<int>(rng.next_u64() % 4),
                                      random_logits(rng, 4, 2.0), {random_logits(rng, 4, 2.0)}));
    }
    const double dl = disagreement_loss(records, spec, 0);
    const double d01 = disagreement_01(records, 0).rate();
    CHECK(dl <= d01);
}

TEST_CASE("loss gap is bounded by the Lipschitz label-probability chain") {
    RngStream rng(407);
    for (const auto& spec : {LossSpec::xent_clamped(6, 1e-3), LossSpec::xent_smoothed(6, 1e-3)}) {
        std::vector<PredictionRecord> records;
        for (int i = 0; i < 2000; ++i) {
            records.push_back(make_record("r" + std::to_string(i), 'L',
                                          1 + static_cast<int>(rng.next_u64() % 6),
                                          random_logits(rng, 6, 4.0),
                                          {random_logits(rng, 6, 4.0)}));
        }
        const double dl = disagreement_loss(records, spec, 0);
        const double dhat = disagreement_label_prob(records, spec, 0);
        CHECK(dl <= *spec.lipschitz * dhat);
    }
}

TEST_CASE("empirical risk") {
    const auto spec = LossSpec::zero_one(2);
    std::vector<PredictionRecord> records;
    for (int i = 0; i < 4; ++i) {
        const bool wrong = i == 0;
        records.push_back(make_record("r" + std::to_string(i), 'L', 1,
                                      {wrong ? 0.0 : 2.0, wrong ? 2.0 : 0.0}, {{2.0, 0.0}}));
    }
    CHECK(empirical_risk_f(records, spec) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(empirical_risk_h(records, spec, 0) == 0.0);
}

TEST_CASE("sample averaging and ranges over stochastic surrogates") {
    const auto spec = LossSpec::zero_one(2);
    // Two surrogate samples: the first always agrees, the second never does.
    std::vector<PredictionRecord> records;
    for (int i = 0; i < 8; ++i) {
        records.push_back(make_record("r" + std::to_string(i), 'L', 1, {2.0, 0.0},
                                      {{2.0, 0.0}, {0.0, 2.0}}));
    }
    CHECK(empirical_risk_h(records, spec, 0) == 0.0);
    CHECK(empirical_risk_h(records, spec, 1) == 1.0);
    CHECK(empirical_risk_h(records, spec, kAllSamples) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(disagreement_loss(records, spec, kAllSamples) == doctest::Approx(0.5).epsilon(1e-14));

    const auto risks = per_sample_risk_h(records, spec, 0, 2);
    REQUIRE(risks.size() == 2);
    CHECK(risks[0] == 0.0);
    CHECK(risks[1] == 1.0);
    const auto dls = per_sample_loss_disagreement(records, spec, 1, 2);
    REQUIRE(dls.size() == 1);
    CHECK(dls[0] == 1.0);
    CHECK_THROWS_AS(empirical_risk_h(records, spec, 5), UsageError);
    CHECK_THROWS_AS(per_sample_risk_h(records, spec, 1, 1), UsageError);
}

TEST_CASE("stats aggregation and split selection") {
    const auto spec = LossSpec::xent_smoothed(2, 1e-3);
    std::vector<PredictionRecord> records{
        make_record("a", 'L', 1, {1.0, 0.0}, {{0.5, 0.5}}),
        make_record("b", 'L', 2, {0.0, 1.0}, {{0.0, 1.0}}),
        make_record("c", 'U', std::nullopt, {1.0, 0.0}, {{1.0, 0.0}})};
    const auto labeled = select_split(records, 'L');
    CHECK(labeled.size() == 2);
    const auto stats = compute_disagreement_stats(labeled, spec, 0);
    CHECK(stats.m == 2);
    CHECK(stats.d01.m == 2);
    CHECK(stats.dk_mean >= 0.0);
    CHECK(stats.dl_mean >= 0.0);
    CHECK(stats.dhat_mean >= 0.0);
    CHECK(stats.dk_mean <= 2.0);
}
