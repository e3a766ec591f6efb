// Acceptance runner: one PASS/FAIL line per criterion. `--only N` runs a single one.

#include "pqm/cli.hpp"
#include "pqm/core.hpp"
#include "pqm/dataset.hpp"
#include "pqm/io/png.hpp"
#include "pqm/isometry.hpp"
#include "pqm/losses.hpp"
#include "pqm/metrics.hpp"
#include "pqm/model/assessor.hpp"
#include "pqm/synthetic.hpp"
#include "pqm/training/ams.hpp"
#include "pqm/training/trainer.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <unistd.h>

using namespace pqm;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

class Timer {
public:
    [[nodiscard]] double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(double v, int precision = 4) {
    std::ostringstream os;
    os << std::setprecision(precision) << v;
    return os.str();
}

BinaryMask random_mask(std::mt19937_64& rng, int h, int w, double p = 0.5) {
    std::bernoulli_distribution bit(p);
    BinaryMask m(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) m.set(y, x, bit(rng));
    return m;
}

QualityMap random_quality(std::mt19937_64& rng, int h, int w) {
    std::uniform_int_distribution<int> cls(0, 3);
    QualityMap q(h, w);
    for (auto& v : q.values()) v = static_cast<QualityClass>(cls(rng));
    return q;
}

BinaryMask square(int h, int w, int y0, int x0, int side) {
    BinaryMask m(h, w);
    for (int y = y0; y < std::min(h, y0 + side); ++y)
        for (int x = x0; x < std::min(w, x0 + side); ++x) m.set(y, x, true);
    return m;
}

// -- 1 ------------------------------------------------------------------------

Outcome round_trip() {
    Timer t;
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> side(1, 32);
    for (int trial = 0; trial < 1000; ++trial) {
        const int h = side(rng), w = side(rng);
        const auto gt = random_mask(rng, h, w), pred = random_mask(rng, h, w);
        const auto q = derive_quality_map(gt, pred);
        const auto back = reconstruct_masks(q);
        if (!(back.gt == gt && back.pred == pred)) return {false, "reconstruction mismatch at trial " + fmt(trial)};
        const auto counts = count_classes(q);
        if (counts.total() != static_cast<std::size_t>(h * w)) return {false, "partition broken"};
        std::size_t ones = 0;
        for (QualityClass c : kAllClasses) {
            const auto ind = class_indicator(q, c);
            ones += ind.count();
            if (ind.count() != counts.of(c)) return {false, "indicator count mismatch"};
        }
        if (ones != static_cast<std::size_t>(h * w)) return {false, "indicators do not partition the map"};
    }
    const double s = t.seconds();
    return {s < 5.0, "1000 pairs exact, " + fmt(s, 3) + " s"};
}

// -- 2 ------------------------------------------------------------------------

Outcome metrics_oracle() {
    std::mt19937_64 rng(2);
    double worst = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto a = random_quality(rng, 8, 8), b = random_quality(rng, 8, 8);
        for (QualityClass c : kAllClasses) {
            metrics::BinaryConfusion tally;
            for (std::size_t i = 0; i < 64; ++i) {
                const bool p = a.values()[i] == c, g = b.values()[i] == c;
                if (p && g) ++tally.tp;
                else if (p) ++tally.fp;
                else if (g) ++tally.fn;
                else ++tally.tn;
            }
            const auto cm = metrics::per_class_confusion(a, b, c);
            if (!(cm == tally)) return {false, "confusion mismatch at trial " + fmt(trial)};
            const auto s = metrics::scores_from_confusion(cm);
            if (tally.tp == 0) continue;
            const double tp = static_cast<double>(tally.tp);
            const double prec = tp / (tp + tally.fp), rec = tp / (tp + tally.fn);
            const double f1 = 100.0 * 2 * prec * rec / (prec + rec);
            const double iou = 100.0 * tp / (tp + tally.fp + tally.fn);
            worst = std::max({worst, std::abs(s.f1.value - f1) / f1, std::abs(s.iou.value - iou) / iou});
        }
    }
    return {worst <= 1e-12, "counts exact, worst relative score error " + fmt(worst, 3)};
}

// -- 3 ------------------------------------------------------------------------

Outcome table_arithmetic() {
    const double f1[] = {91.91, 42.92, 97.48, 38.36};
    const double iou[] = {85.08, 27.82, 95.10, 23.95};
    std::array<metrics::ClassScores, 4> scores{};
    for (int i = 0; i < 4; ++i) {
        scores[i].f1.value = f1[i];
        scores[i].iou.value = iou[i];
    }
    const auto r = metrics::report_from_scores(scores);
    const bool f1_ok = std::abs(r.mf1 - 67.68) <= 0.01;
    const bool iou_ok = std::abs(r.miou - 57.99) <= 0.01;
    return {f1_ok && iou_ok, "mF1 " + fmt(r.mf1, 6) + " vs 67.68 (" + (f1_ok ? "ok" : "off") + "), mIoU " +
                                 fmt(r.miou, 6) + " vs 57.99 (" + (iou_ok ? "ok" : "off") + ")"};
}

// -- 4 ------------------------------------------------------------------------

torch::Tensor numeric_grad(const std::function<double(const torch::Tensor&)>& f, const torch::Tensor& x) {
    constexpr double h = 1e-4;
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

Outcome gradient_checks() {
    Timer t;
    torch::manual_seed(4);
    std::mt19937_64 rng(4);
    const auto f64 = torch::kFloat64;
    double worst = 0;
    for (int trial = 0; trial < 3; ++trial) {
        const auto gt_mask = random_mask(rng, 6, 6), un_mask = random_mask(rng, 6, 6);
        const auto target = model::quality_target(derive_quality_map(gt_mask, un_mask)).unsqueeze(0);
        const auto gt = model::mask_tensor(gt_mask).to(f64);
        const auto un = model::mask_tensor(un_mask).to(f64);
        const auto edges = model::edge_target(extract_edges(gt_mask)).unsqueeze(0).to(f64);
        const auto logits = torch::randn({1, 4, 6, 6}, f64);
        const auto edge_logits = torch::randn({1, 1, 6, 6}, f64);

        using Term = std::function<torch::Tensor(const torch::Tensor&)>;
        const std::vector<std::pair<Term, torch::Tensor>> terms = {
            {[&](const torch::Tensor& x) { return losses::weighted_ce(x, target, {}); }, logits},
            {[&](const torch::Tensor& x) { return losses::edge_loss(x, edges); }, edge_logits},
            {[&](const torch::Tensor& x) { return losses::reconstruction_losses(torch::softmax(x, 1), un, gt).pos; },
             logits},
            {[&](const torch::Tensor& x) { return losses::reconstruction_losses(torch::softmax(x, 1), un, gt).neg; },
             logits},
            {[&](const torch::Tensor& x) { return losses::reconstruction_losses(torch::softmax(x, 1), un, gt).seg; },
             logits},
        };
        for (const auto& [f, x0] : terms) {
            auto v = x0.clone().requires_grad_(true);
            f(v).backward();
            const auto analytic = v.grad();
            const auto numeric = numeric_grad([&](const torch::Tensor& x) { return f(x).item<double>(); }, x0);
            const double denom = std::max({analytic.norm().item<double>(), numeric.norm().item<double>(), 1e-12});
            worst = std::max(worst, (analytic - numeric).norm().item<double>() / denom);
        }
    }
    const double s = t.seconds();
    return {worst < 1e-3 && s < 30.0, "worst relative error " + fmt(worst, 3) + ", " + fmt(s, 3) + " s"};
}

// -- 5 ------------------------------------------------------------------------

Outcome loss_fixed_points() {
    std::mt19937_64 rng(5);
    const auto gt_mask = square(12, 12, 2, 3, 6);
    const auto un_mask = square(12, 12, 3, 3, 6);
    const auto q = derive_quality_map(gt_mask, un_mask);
    const auto target = model::quality_target(q).unsqueeze(0);
    const auto edge_gt = model::edge_target(extract_edges(gt_mask)).unsqueeze(0).to(torch::kFloat64);

    const auto onehot = torch::one_hot(target, 4).permute({0, 3, 1, 2}).to(torch::kFloat64);
    const auto quality_logits = (onehot * 2 - 1) * 30.0;
    const auto edge_logits = ((edge_gt * 2 - 1) * 30.0).unsqueeze(1);
    losses::LossTargets targets{target, edge_gt, model::mask_tensor(un_mask).to(torch::kFloat64),
                                model::mask_tensor(gt_mask).to(torch::kFloat64)};
    const auto b = losses::compute_losses(quality_logits, edge_logits, targets, {}).breakdown();
    const double largest = std::max({b.ce, b.edge, b.pos, b.neg, b.seg});

    BinaryMask top_row(10, 10);
    for (int x = 0; x < 10; ++x) top_row.set(0, x, true);
    const EdgeMap ten(top_row);
    const auto gamma = losses::gamma_weights(ten, 1.1);
    const bool gamma_ok = gamma(0, 0) == 0.9 && std::abs(gamma(5, 5) - 0.11) < 1e-15;

    double identity = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto probs = torch::softmax(torch::randn({2, 4, 8, 8}, torch::kFloat64) * 3, 1);
        const auto un = model::mask_tensor(random_mask(rng, 8, 8)).to(torch::kFloat64).expand({2, 8, 8});
        const auto gt = model::mask_tensor(random_mask(rng, 8, 8)).to(torch::kFloat64).expand({2, 8, 8});
        const auto r = losses::reconstruction_losses(probs, un, gt);
        identity = std::max(identity, std::abs(r.pos.item<double>() - r.neg.item<double>()));
    }
    return {largest < 1e-3 && gamma_ok && identity <= 1e-9,
            "largest term " + fmt(largest, 3) + ", gamma (" + fmt(gamma(0, 0)) + ", " + fmt(gamma(5, 5)) +
                "), |pos-neg| " + fmt(identity, 3)};
}

// -- 6 ------------------------------------------------------------------------

Outcome correction_identity() {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto gt = random_mask(rng, 12, 12), unchecked = random_mask(rng, 12, 12);
        const auto q = derive_quality_map(gt, unchecked);
        const auto fn = class_indicator(q, QualityClass::FN), fp = class_indicator(q, QualityClass::FP);
        for (int y = 0; y < 12; ++y)
            for (int x = 0; x < 12; ++x) {
                const int corrected = int(unchecked(y, x)) + int(fn(y, x)) - int(fp(y, x));
                if (corrected != int(gt(y, x))) return {false, "mismatch at trial " + fmt(trial)};
            }
    }
    return {true, "1000 pairs exact"};
}

// -- 7 ------------------------------------------------------------------------

Outcome shape_contract() {
    Timer t;
    const auto cfg = model::ModelConfig::toy();
    auto m = model::make_assessor(cfg, 7);
    m->eval();
    torch::manual_seed(7);
    model::AttentionProbe probe;
    m->attach_probe(&probe);
    torch::NoGradGuard no_grad;
    const auto out = m->forward(torch::randn({1, 3, 64, 64}), (torch::rand({1, 1, 64, 64}) > 0.5).to(torch::kFloat32));
    m->attach_probe(nullptr);
    const bool shapes = out.assessment.sizes() == torch::IntArrayRef{1, 4, 64, 64} &&
                        out.edges.fused.sizes() == torch::IntArrayRef{1, 1, 64, 64};
    double row_err = 0;
    bool finite = torch::isfinite(out.assessment).all().item<bool>() && torch::isfinite(out.edges.fused).all().item<bool>();
    for (const auto& a : probe.maps) {
        finite = finite && torch::isfinite(a).all().item<bool>();
        row_err = std::max(row_err, (a.sum(-1) - 1).abs().max().item<double>());
    }
    const double s = t.seconds();
    return {shapes && finite && row_err <= 1e-6 && !probe.maps.empty() && s < 10.0,
            std::to_string(probe.maps.size()) + " attention maps, worst row error " + fmt(row_err, 3) + ", " +
                fmt(s, 3) + " s"};
}

// -- 8 ------------------------------------------------------------------------

Outcome reachability() {
    auto m = model::make_assessor(model::ModelConfig::toy(), 8);
    torch::manual_seed(8);
    m->forward(torch::randn({2, 3, 64, 64}), (torch::rand({2, 1, 64, 64}) > 0.5).to(torch::kFloat32))
        .assessment.sum()
        .backward();
    std::vector<std::string> blocks;
    for (int s = 1; s <= 4; ++s) {
        blocks.push_back("encoder.stage" + std::to_string(s) + ".");
        blocks.push_back("edge_branch.sideout" + std::to_string(s) + ".");
    }
    blocks.push_back("refiner.non_local.");
    std::string missing;
    int checked = 0;
    for (const auto& prefix : blocks) {
        int seen = 0;
        for (const auto& p : m->named_parameters()) {
            if (p.key().rfind(prefix, 0) != 0) continue;
            ++seen;
            ++checked;
            const auto& g = p.value().grad();
            if (!g.defined() || g.abs().sum().item<double>() == 0.0) missing += " " + p.key();
        }
        if (seen == 0) missing += " " + prefix + "(absent)";
    }
    return {missing.empty(), missing.empty() ? std::to_string(checked) + " parameter tensors reached"
                                             : "no gradient:" + missing};
}

// -- 9 ------------------------------------------------------------------------

std::string seeded_loss_log() {
    const auto train = data::synthetic_dataset(data::SceneSpec{}, 2, 91);
    const auto val = data::synthetic_dataset(data::SceneSpec{}, 1, 92);
    training::TrainerConfig cfg;
    cfg.seed = 9;
    cfg.max_epochs = 2;
    cfg.n_aug = 2;
    cfg.learning_rate = 1e-3;
    training::Trainer t(model::make_assessor(model::ModelConfig::toy(), 9), cfg);
    std::ostringstream log;
    training::TrainHooks hooks;
    hooks.loss_log = &log;
    training::train_loop(t, train, val, training::AugmentationPool{}, training::default_mask_sources(), hooks);
    return log.str();
}

Outcome isometry_ams() {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 100; ++trial) {
        const auto gt = random_mask(rng, 9 + trial % 5, 7 + trial % 4, 0.4);
        const auto pred = random_mask(rng, gt.height(), gt.width(), 0.4);
        const auto q = derive_quality_map(gt, pred);
        const auto e = extract_edges(gt);
        for (Transform t : kPoolTransforms) {
            const auto tg = apply_transform(t, gt);
            if (!(derive_quality_map(tg, apply_transform(t, pred)) == apply_transform(t, q)))
                return {false, "quality map does not commute with " + std::string(transform_name(t))};
            if (!(extract_edges(tg) == apply_transform(t, e)))
                return {false, "edges do not commute with " + std::string(transform_name(t))};
        }
    }
    const auto sources = training::default_mask_sources();
    for (int trial = 0; trial < 100; ++trial) {
        const auto sample = data::synthetic_scene(data::SceneSpec{}, 900 + trial);
        const auto batch = training::build_augmented_batch(sample, training::AugmentationPool{}, sources, 4, trial);
        for (const auto& it : batch.items) {
            if (!(it.gt == apply_transform(it.transform, sample.gt)) ||
                !(it.quality == derive_quality_map(it.gt, it.unchecked)) || !(it.edges == extract_edges(it.gt)))
                return {false, "batch invariant broken at trial " + fmt(trial)};
        }
    }
    const auto a = seeded_loss_log(), b = seeded_loss_log();
    const bool same = a == b && !a.empty();
    return {same, same ? "commutation, batch invariants and loss-log replay hold" : "loss logs differ"};
}

// -- 10 -----------------------------------------------------------------------

Outcome overfit() {
    Timer t;
    constexpr int kSteps = 500;
    const auto samples = data::synthetic_dataset(data::SceneSpec{}, 8, 7);
    const auto sources = training::default_mask_sources();
    training::AugmentedBatch batch;
    for (std::size_t i = 0; i < samples.size(); ++i)
        batch.append(training::build_augmented_batch(samples[i], training::AugmentationPool{}, sources, 4,
                                                     training::derive_seed(1, i)));
    training::TrainerConfig cfg;
    cfg.learning_rate = 2e-3;
    training::Trainer trainer(model::make_assessor(model::ModelConfig::toy(), 1), cfg);
    double first = 0, last = 0;
    for (int s = 0; s < kSteps; ++s) {
        last = trainer.train_step(batch).total;
        if (s == 0) first = last;
    }
    const auto report = training::evaluate(trainer.model(), batch.items);
    const double ratio = first / last;
    const double secs = t.seconds();
    return {report.miou >= 80.0 && ratio >= 10.0 && secs < 600.0,
            "mIoU " + fmt(report.miou, 4) + ", loss " + fmt(first) + " -> " + fmt(last) + " (" + fmt(ratio, 3) +
                "x), " + fmt(secs, 4) + " s"};
}

// -- 11 -----------------------------------------------------------------------

Outcome eib_fixtures() {
    const auto gt = square(8, 8, 2, 2, 4);
    const auto shifted = eib_at_k(derive_quality_map(gt, square(8, 8, 3, 3, 4)), extract_edges(gt), 3);

    const auto g = square(16, 16, 0, 0, 4);
    auto pred = g;
    for (int y = 12; y < 15; ++y)
        for (int x = 12; x < 15; ++x) pred.set(y, x, true);
    const auto far = eib_at_k(derive_quality_map(g, pred), extract_edges(g), 3);
    const auto none = eib_at_k(derive_quality_map(gt, gt), extract_edges(gt), 3);

    const bool ok = std::abs(shifted.value - 100.0) < 1e-9 && !shifted.undefined && far.value == 0.0 &&
                    !far.undefined && none.value == 0.0 && none.undefined;
    return {ok, "shifted " + fmt(shifted.value) + ", far " + fmt(far.value) + ", no-error " + fmt(none.value) +
                    (none.undefined ? " (undefined)" : "")};
}

// -- 12 -----------------------------------------------------------------------

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome cli_end_to_end() {
    const fs::path dir = fs::temp_directory_path() / ("pqm_accept_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);

    // All four classes present, so every per-class score is defined.
    const auto gt = square(16, 16, 2, 2, 8);
    const auto pred = square(16, 16, 4, 4, 8);
    io::write_mask(dir / "gt.png", gt);
    io::write_mask(dir / "pred.png", pred);
    std::ostringstream out, err;
    int rc = cli::run({"pqm-gt", "--gt", (dir / "gt.png").string(), "--pred", (dir / "pred.png").string(), "--out",
                       (dir / "q.png").string()},
                      out, err);
    if (rc == 0)
        rc = cli::run({"eval", "--pred", (dir / "q.png").string(), "--gt", (dir / "q.png").string()}, out, err);
    const bool printed = rc == 0 && out.str().find("mF1=100.00") != std::string::npos;

    std::mt19937_64 rng(12);
    const auto q = random_quality(rng, 23, 17);
    const auto rendered = data::render_quality_map(q);
    io::write_rgb_png(dir / "r1.png", rendered);
    const auto decoded = data::decode_rendered(io::read_rgb(dir / "r1.png"));
    io::write_rgb_png(dir / "r2.png", data::render_quality_map(decoded));
    const bool round_trip = decoded == q && slurp(dir / "r1.png") == slurp(dir / "r2.png");
    fs::remove_all(dir);
    return {printed && round_trip, std::string(printed ? "eval printed mF1=100.00" : "eval output wrong: " + out.str() + err.str()) +
                                       ", render/decode " + (round_trip ? "byte-identical" : "differs")};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria"};
    int only = 0;
    app.add_option("--only", only, "Run a single criterion")->check(CLI::Range(1, 12));
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"quality-map round trip", round_trip},
        {"metrics oracle equivalence", metrics_oracle},
        {"table arithmetic", table_arithmetic},
        {"loss gradient checks", gradient_checks},
        {"loss fixed points", loss_fixed_points},
        {"correction identity", correction_identity},
        {"shape and attention contract", shape_contract},
        {"edge and refinement reachability", reachability},
        {"isometry and augmentation suite", isometry_ams},
        {"overfit smoke test", overfit},
        {"EIB@3 fixtures", eib_fixtures},
        {"CLI end to end", cli_end_to_end},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int n = static_cast<int>(i) + 1;
        if (only && only != n) continue;
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::cout << "criterion " << n << " " << (o.pass ? "PASS" : "FAIL") << "  " << criteria[i].first << ": "
                  << o.detail << std::endl;
    }
    return failures ? 1 : 0;
}
