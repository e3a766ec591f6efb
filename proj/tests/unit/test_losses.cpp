#include "pqm/core.hpp"
#include "pqm/losses.hpp"
#include "pqm/model/assessor.hpp"
#include "support.hpp"

// libtorch's logging header defines its own CHECK.
#undef CHECK
#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace pqm;
using namespace pqm::losses;
using QC = QualityClass;

namespace {

const auto kDouble = torch::TensorOptions().dtype(torch::kFloat64);

double clampp(double p) { return std::min(std::max(p, kProbClamp), 1.0 - kProbClamp); }

// Plain-loop reference for the weighted cross-entropy on one (4, H, W) map.
double oracle_ce(const torch::Tensor& logits, const torch::Tensor& target, const ClassWeights& w) {
    const auto l = logits.accessor<double, 4>();
    const auto t = target.accessor<int64_t, 3>();
    const double wc[4] = {w.tp, w.fp, w.tn, w.fn};
    double sum = 0;
    long n = 0;
    for (int64_t b = 0; b < logits.size(0); ++b)
        for (int64_t y = 0; y < logits.size(2); ++y)
            for (int64_t x = 0; x < logits.size(3); ++x) {
                double mx = -1e300, z = 0;
                for (int c = 0; c < 4; ++c) mx = std::max(mx, l[b][c][y][x]);
                for (int c = 0; c < 4; ++c) z += std::exp(l[b][c][y][x] - mx);
                const int c = static_cast<int>(t[b][y][x]);
                sum += -wc[c] * std::log(clampp(std::exp(l[b][c][y][x] - mx) / z));
                ++n;
            }
    return sum / n;
}

struct EdgeOracle {
    double bce, dice;
};

// Reference for one image: balanced BCE mean plus global soft Dice.
EdgeOracle oracle_edge(const torch::Tensor& logits, const torch::Tensor& gt, double lambda, double eps) {
    const auto l = logits.accessor<double, 2>();
    const auto g = gt.accessor<double, 2>();
    const int64_t h = logits.size(0), w = logits.size(1);
    double pos = 0, neg = 0;
    for (int64_t y = 0; y < h; ++y)
        for (int64_t x = 0; x < w; ++x) (g[y][x] > 0.5 ? pos : neg) += 1;
    double bce = 0, inter = 0, se = 0, sg = 0;
    for (int64_t y = 0; y < h; ++y)
        for (int64_t x = 0; x < w; ++x) {
            const double e = 1.0 / (1.0 + std::exp(-l[y][x]));
            const double gg = g[y][x];
            const double gamma = gg > 0.5 ? neg / (pos + neg) : lambda * pos / (pos + neg);
            bce += -gamma * ((1 - gg) * std::log(clampp(1 - e)) + gg * std::log(clampp(e)));
            inter += e * gg;
            se += e;
            sg += gg;
        }
    return {bce / static_cast<double>(h * w), 1.0 - (2 * inter + eps) / (se + sg + eps)};
}

torch::Tensor random_edges(std::mt19937_64& rng, int b, int h, int w) {
    auto t = torch::zeros({b, h, w}, kDouble);
    for (int i = 0; i < b; ++i) {
        const auto e = extract_edges(test::random_mask(rng, h, w, 0.5));
        t[i] = model::edge_target(e).to(torch::kFloat64);
    }
    return t;
}

torch::Tensor onehot_probs(const torch::Tensor& target) {
    return torch::one_hot(target, 4).permute({0, 3, 1, 2}).to(torch::kFloat64);
}

// Relative error between two gradient tensors, measured in the L2 norm.
double rel_error(const torch::Tensor& a, const torch::Tensor& b) {
    const double denom = std::max({a.norm().item<double>(), b.norm().item<double>(), 1e-12});
    return (a - b).norm().item<double>() / denom;
}

torch::Tensor numeric_grad(const std::function<double(const torch::Tensor&)>& f, const torch::Tensor& x,
                           double h = 1e-4) {
    auto g = torch::zeros_like(x);
    auto xf = x.clone();
    auto flat = xf.view({-1});
    auto gf = g.view({-1});
    for (int64_t i = 0; i < flat.numel(); ++i) {
        const double orig = flat[i].item<double>();
        flat[i] = orig + h;
        const double up = f(xf);
        flat[i] = orig - h;
        const double down = f(xf);
        flat[i] = orig;
        gf[i] = (up - down) / (2 * h);
    }
    return g;
}

torch::Tensor analytic_grad(const std::function<torch::Tensor(const torch::Tensor&)>& f, const torch::Tensor& x) {
    auto v = x.clone().requires_grad_(true);
    f(v).backward();
    return v.grad();
}

}  // namespace

TEST_SUITE("losses") {

TEST_CASE("class weights") {
    ClassWeights w;
    CHECK(w.tp == 0.5);
    CHECK(w.fp == 5.0);
    CHECK(w.tn == 0.1);
    CHECK(w.fn == 5.0);
    CHECK(w.of(QC::TN) == 0.1);
    const auto t = w.tensor(torch::kFloat64);
    CHECK(t[channel_of(QC::TP)].item<double>() == 0.5);
    CHECK(t[channel_of(QC::FP)].item<double>() == 5.0);
    CHECK(t[channel_of(QC::TN)].item<double>() == 0.1);
    CHECK(t[channel_of(QC::FN)].item<double>() == 5.0);
    CHECK_NOTHROW(w.validate());
    CHECK_THROWS_AS((ClassWeights{-1, 1, 1, 1}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((ClassWeights{0, 0, 0, 0}.validate()), std::invalid_argument);
    LossConfig cfg;
    CHECK(cfg.edge_lambda == 1.1);
    CHECK(cfg.dice_eps == 1e-6);
}

TEST_CASE("weighted_ce examples") {
    const auto target = torch::full({1, 1, 1}, channel_of(QC::TN), torch::kInt64);
    const auto uniform = torch::zeros({1, 4, 1, 1}, kDouble);
    CHECK(weighted_ce(uniform, target, {}).item<double>() == doctest::Approx(0.1 * std::log(4.0)));
    CHECK(weighted_ce(uniform, target, {}).item<double>() == doctest::Approx(0.13863).epsilon(1e-4));

    std::mt19937_64 rng(1);
    const auto q = test::random_quality(rng, 5, 5);
    const auto t = model::quality_target(q).unsqueeze(0);
    const auto confident = onehot_probs(t) * 40.0 - 20.0;
    CHECK(weighted_ce(confident, t, {}).item<double>() < 1e-3);

    auto bad = uniform.clone();
    bad[0][0][0][0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(weighted_ce(bad, target, {}), std::invalid_argument);
}

TEST_CASE("weighted_ce agrees with the reference loop") {
    torch::manual_seed(2);
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const auto logits = torch::randn({2, 4, 5, 6}, kDouble) * 3;
        auto t = torch::stack({model::quality_target(test::random_quality(rng, 5, 6)),
                               model::quality_target(test::random_quality(rng, 5, 6))});
        ClassWeights w{0.5 + trial * 0.1, 5.0, 0.1, 2.0};
        REQUIRE(weighted_ce(logits, t, w).item<double>() == doctest::Approx(oracle_ce(logits, t, w)).epsilon(1e-10));
    }
}

TEST_CASE("weighted_ce falls as mass moves to the true class") {
    const auto target = torch::full({1, 1, 1}, 2, torch::kInt64);
    double prev = std::numeric_limits<double>::infinity();
    for (double p = 0.05; p < 0.99; p += 0.05) {
        auto probs = torch::full({1, 4, 1, 1}, (1 - p) / 3, kDouble);
        probs[0][2][0][0] = p;
        const double v = weighted_ce(probs.log(), target, {}).item<double>();
        REQUIRE(v >= 0.0);
        REQUIRE(v < prev);
        prev = v;
    }
}

TEST_CASE("gamma_weights") {
    BinaryMask m(10, 10);
    for (int x = 0; x < 10; ++x) m.set(0, x, true);
    const auto g = gamma_weights(EdgeMap(m), 1.1);
    CHECK(g(0, 3) == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(g(5, 5) == doctest::Approx(0.11).epsilon(1e-15));

    const auto tg = gamma_weights(model::edge_target(EdgeMap(m)).to(torch::kFloat64), 1.1);
    CHECK(tg[0][3].item<double>() == doctest::Approx(0.9));
    CHECK(tg[5][5].item<double>() == doctest::Approx(0.11));

    const auto empty = gamma_weights(EdgeMap(BinaryMask(6, 6)), 1.1);
    for (auto v : empty.values()) CHECK(v == 0.0);

    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        const double lambda = 0.5 + trial * 0.02;
        const auto r = gamma_weights(extract_edges(test::random_mask(rng, 7, 7)), lambda);
        for (auto v : r.values()) REQUIRE((v >= 0.0 && v <= std::max(1.0, lambda) + 1e-12));
    }
}

TEST_CASE("edge_loss examples") {
    std::mt19937_64 rng(4);
    const auto gt = random_edges(rng, 1, 8, 8);
    REQUIRE(gt.sum().item<double>() > 0);

    const auto saturated = (gt * 2 - 1) * 40.0;
    const auto perfect = edge_loss_parts(saturated.unsqueeze(1), gt);
    CHECK(perfect.dice.item<double>() < 1e-6);
    CHECK(perfect.bce.item<double>() < 1e-3);

    const double s = gt.sum().item<double>();
    const auto zero = edge_loss_parts(torch::full({1, 1, 8, 8}, -60.0, kDouble), gt, 1.1, 1e-6);
    CHECK(zero.dice.item<double>() == doctest::Approx(1 - 1e-6 / (s + 1e-6)).epsilon(1e-9));

    const auto none = torch::zeros({1, 8, 8}, kDouble);
    const auto empty = edge_loss_parts(torch::full({1, 1, 8, 8}, -60.0, kDouble), none);
    CHECK(empty.bce.item<double>() == 0.0);
    CHECK(empty.dice.item<double>() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(edge_loss(torch::full({1, 1, 8, 8}, -60.0, kDouble), none).item<double>() < 1e-9);

    auto bad = torch::zeros({1, 1, 8, 8}, kDouble);
    bad[0][0][1][1] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(edge_loss(bad, gt), std::invalid_argument);
}

TEST_CASE("edge_loss agrees with the reference and keeps Dice in [0, 1]") {
    torch::manual_seed(5);
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        const auto gt = random_edges(rng, 2, 6, 7);
        const auto logits = torch::randn({2, 1, 6, 7}, kDouble) * 4;
        const auto parts = edge_loss_parts(logits, gt, 1.1, 1e-6);
        double bce = 0, dice = 0;
        for (int b = 0; b < 2; ++b) {
            const auto o = oracle_edge(logits[b][0], gt[b], 1.1, 1e-6);
            bce += o.bce / 2;
            dice += o.dice / 2;
        }
        REQUIRE(parts.bce.item<double>() == doctest::Approx(bce).epsilon(1e-10));
        REQUIRE(parts.dice.item<double>() == doctest::Approx(dice).epsilon(1e-10));
        REQUIRE(parts.dice.item<double>() >= 0.0);
        REQUIRE(parts.dice.item<double>() <= 1.0);
    }
}

TEST_CASE("reconstruction losses") {
    std::mt19937_64 rng(6);
    const auto gt_mask = test::random_mask(rng, 6, 6);
    const auto un_mask = test::random_mask(rng, 6, 6);
    const auto q = derive_quality_map(gt_mask, un_mask);
    const auto gt = model::mask_tensor(gt_mask).to(torch::kFloat64);
    const auto un = model::mask_tensor(un_mask).to(torch::kFloat64);

    SUBCASE("one-hot ground truth gives zero") {
        const auto r = reconstruction_losses(onehot_probs(model::quality_target(q).unsqueeze(0)), un, gt);
        CHECK(r.pos.item<double>() == 0.0);
        CHECK(r.neg.item<double>() == 0.0);
        CHECK(r.seg.item<double>() == 0.0);
    }
    SUBCASE("uniform probabilities against full masks") {
        const auto ones = torch::ones({1, 6, 6}, kDouble);
        const auto r = reconstruction_losses(torch::full({1, 4, 6, 6}, 0.25, kDouble), ones, ones);
        CHECK(r.pos.item<double>() == doctest::Approx(0.25));
        CHECK(r.seg.item<double>() == doctest::Approx(0.0));
    }
    SUBCASE("unnormalised probabilities are rejected") {
        CHECK_THROWS_AS(reconstruction_losses(torch::full({1, 4, 6, 6}, 0.3, kDouble), un, gt),
                        std::invalid_argument);
    }
    SUBCASE("predicted-foreground base duplicates the positive term") {
        torch::manual_seed(6);
        const auto probs = torch::softmax(torch::randn({1, 4, 6, 6}, kDouble), 1);
        const auto r = reconstruction_losses(probs, un, gt, CorrectionBase::PredictedForeground);
        CHECK(r.seg.item<double>() == doctest::Approx(r.pos.item<double>()).epsilon(1e-12));
    }
}

TEST_CASE("reconstruction identities on random probabilities") {
    torch::manual_seed(7);
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const auto probs = torch::softmax(torch::randn({2, 4, 5, 5}, kDouble) * 2, 1);
        const auto gt = torch::stack({model::mask_tensor(test::random_mask(rng, 5, 5))[0],
                                      model::mask_tensor(test::random_mask(rng, 5, 5))[0]})
                            .to(torch::kFloat64);
        const auto un = torch::stack({model::mask_tensor(test::random_mask(rng, 5, 5))[0],
                                      model::mask_tensor(test::random_mask(rng, 5, 5))[0]})
                            .to(torch::kFloat64);
        const auto r = reconstruction_losses(probs, un, gt);
        REQUIRE(std::abs(r.pos.item<double>() - r.neg.item<double>()) < 1e-9);

        // Reference formulas, channels TP, FP, TN, FN.
        const auto tp = probs.select(1, 0), fp = probs.select(1, 1), tn = probs.select(1, 2), fn = probs.select(1, 3);
        REQUIRE(r.pos.item<double>() == doctest::Approx((tp + fn - gt).pow(2).mean().item<double>()));
        REQUIRE(r.neg.item<double>() == doctest::Approx((fp + tn - (1 - gt)).pow(2).mean().item<double>()));
        REQUIRE(r.seg.item<double>() == doctest::Approx((un + fn - fp - gt).pow(2).mean().item<double>()));

        // Moving mass between TP and FN leaves the positive term unchanged.
        auto swapped = probs.clone();
        swapped.select(1, 0).copy_(fn);
        swapped.select(1, 3).copy_(tp);
        REQUIRE(reconstruction_losses(swapped, un, gt).pos.item<double>() ==
                doctest::Approx(r.pos.item<double>()).epsilon(1e-12));
    }
}

TEST_CASE("total_loss") {
    const auto zero = total_loss(0, 0, 0, 0, 0);
    CHECK(zero.total == 0.0);
    const auto b = total_loss(1, 2, 3, 4, 5);
    CHECK(b.total == 15.0);
    CHECK(b.ce == 1.0);
    CHECK(b.seg == 5.0);
    CHECK_THROWS(total_loss(1, std::numeric_limits<double>::quiet_NaN(), 0, 0, 0));
}

TEST_CASE("compute_losses breakdown is non-negative and sums exactly") {
    torch::manual_seed(8);
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto gt_mask = test::random_mask(rng, 4, 4), un_mask = test::random_mask(rng, 4, 4);
        LossTargets t;
        t.quality = model::quality_target(derive_quality_map(gt_mask, un_mask)).unsqueeze(0);
        t.edges = model::edge_target(extract_edges(gt_mask)).unsqueeze(0).to(torch::kFloat64);
        t.gt = model::mask_tensor(gt_mask).to(torch::kFloat64);
        t.unchecked = model::mask_tensor(un_mask).to(torch::kFloat64);
        const auto terms = compute_losses(torch::randn({1, 4, 4, 4}, kDouble) * 3,
                                          torch::randn({1, 1, 4, 4}, kDouble) * 3, t, {});
        const auto b = terms.breakdown();
        REQUIRE(b.ce >= 0);
        REQUIRE(b.edge >= 0);
        REQUIRE(b.pos >= 0);
        REQUIRE(b.neg >= 0);
        REQUIRE(b.seg >= 0);
        REQUIRE(std::abs(b.total - (b.ce + b.edge + b.pos + b.neg + b.seg)) <= 1e-9 * std::max(1.0, b.total));
        REQUIRE(b.total == doctest::Approx(terms.total().item<double>()).epsilon(1e-12));
    }
}

TEST_CASE("every loss term matches central finite differences") {
    torch::manual_seed(9);
    std::mt19937_64 rng(9);
    const auto gt_mask = test::random_mask(rng, 6, 6), un_mask = test::random_mask(rng, 6, 6);
    const auto target = model::quality_target(derive_quality_map(gt_mask, un_mask)).unsqueeze(0);
    const auto gt = model::mask_tensor(gt_mask).to(torch::kFloat64);
    const auto un = model::mask_tensor(un_mask).to(torch::kFloat64);
    const auto edges = model::edge_target(extract_edges(gt_mask)).unsqueeze(0).to(torch::kFloat64);
    const auto logits = torch::randn({1, 4, 6, 6}, kDouble);
    const auto edge_logits = torch::randn({1, 1, 6, 6}, kDouble);

    const std::vector<std::pair<const char*, std::function<torch::Tensor(const torch::Tensor&)>>> terms = {
        {"ce", [&](const torch::Tensor& x) { return weighted_ce(x, target, {}); }},
        {"pos", [&](const torch::Tensor& x) { return reconstruction_losses(torch::softmax(x, 1), un, gt).pos; }},
        {"neg", [&](const torch::Tensor& x) { return reconstruction_losses(torch::softmax(x, 1), un, gt).neg; }},
        {"seg", [&](const torch::Tensor& x) { return reconstruction_losses(torch::softmax(x, 1), un, gt).seg; }},
    };
    for (const auto& [name, f] : terms) {
        CAPTURE(name);
        const auto a = analytic_grad(f, logits);
        const auto n = numeric_grad([&](const torch::Tensor& x) { return f(x).item<double>(); }, logits);
        CHECK(rel_error(a, n) < 1e-3);
    }
    const auto edge_f = [&](const torch::Tensor& x) { return edge_loss(x, edges); };
    const auto a = analytic_grad(edge_f, edge_logits);
    const auto n = numeric_grad([&](const torch::Tensor& x) { return edge_f(x).item<double>(); }, edge_logits);
    CHECK(rel_error(a, n) < 1e-3);
}

TEST_CASE("loss log format") {
    std::ostringstream os;
    write_loss_header(os);
    write_loss_row(os, 3, total_loss(1, 2, 3, 4, 5));
    CHECK(os.str() == "step\tce\tedge\tpos\tneg\tseg\ttotal\n3\t1\t2\t3\t4\t5\t15\n");
}

}
