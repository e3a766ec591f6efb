#include "pqm/cli.hpp"

#include "pqm/core.hpp"
#include "pqm/dataset.hpp"
#include "pqm/io/png.hpp"
#include "pqm/metrics.hpp"
#include "pqm/training/checkpoint.hpp"
#include "pqm/training/run_config.hpp"
#include "pqm/training/trainer.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>

namespace pqm::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
    std::string manifest, config, gt, pred, image, out, checkpoint;
    int tile = 320;
    bool drop_empty = false;
    int k = 3;
    std::optional<std::uint64_t> seed;
};

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot read " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream os(p);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    return os;
}

void make_parent(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

fs::path edges_path_for(const fs::path& out) {
    return out.parent_path() / (out.stem().string() + "_edges" + out.extension().string());
}

void write_edges(const fs::path& path, const EdgeMap& edges) { io::write_mask(path, edges.mask()); }

void print_summary(std::ostream& out, const metrics::AssessmentReport& r) {
    const auto flags = out.flags();
    out << std::fixed << std::setprecision(2) << "mF1=" << r.mf1 << " mIoU=" << r.miou << '\n';
    out.flags(flags);
}

// -- subcommands ---------------------------------------------------------------

int cmd_pqm_gt(const Options& o, std::ostream& out) {
    if (!o.manifest.empty()) {
        const auto manifest = data::DatasetManifest::load(o.manifest);
        const fs::path dir = o.out;
        fs::create_directories(dir);
        for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
            const auto s = manifest.load_sample(i);
            if (!s.unchecked) throw std::invalid_argument("entry " + s.id + " has no unchecked mask");
            data::write_quality_map(dir / (s.id + ".png"), derive_quality_map(s.gt, *s.unchecked));
        }
        out << "wrote " << manifest.entries.size() << " quality maps to " << dir.string() << '\n';
        return 0;
    }
    if (o.gt.empty() || o.pred.empty()) throw std::invalid_argument("pqm-gt needs --gt and --pred, or --manifest");
    const auto q = derive_quality_map(io::read_mask(o.gt), io::read_mask(o.pred));
    make_parent(o.out);
    data::write_quality_map(o.out, q);
    return 0;
}

/// Pairs predicted and reference quality maps: two files, or two directories
/// matched by file name.
std::vector<std::pair<fs::path, fs::path>> eval_pairs(const fs::path& pred, const fs::path& gt) {
    if (!fs::is_directory(pred)) {
        if (fs::is_directory(gt)) throw std::invalid_argument("--pred is a file but --gt is a directory");
        return {{pred, gt}};
    }
    if (!fs::is_directory(gt)) throw std::invalid_argument("--pred is a directory but --gt is not");
    std::vector<std::pair<fs::path, fs::path>> pairs;
    for (const auto& e : fs::directory_iterator(pred)) {
        if (!e.is_regular_file() || e.path().extension() != ".png") continue;
        if (e.path().stem().string().ends_with("_edges")) continue;
        const fs::path ref = gt / e.path().filename();
        if (!fs::exists(ref)) throw std::invalid_argument("no reference map for " + e.path().filename().string());
        pairs.emplace_back(e.path(), ref);
    }
    if (pairs.empty()) throw std::invalid_argument("no quality maps in " + pred.string());
    std::sort(pairs.begin(), pairs.end());
    return pairs;
}

int cmd_eval(const Options& o, std::ostream& out) {
    if (o.gt.empty() || o.pred.empty()) throw std::invalid_argument("eval needs --pred and --gt");
    metrics::ReportAccumulator acc;
    metrics::write_report_header(out);
    for (const auto& [p, g] : eval_pairs(o.pred, o.gt)) {
        const auto pq = data::read_quality_map(p);
        const auto gq = data::read_quality_map(g);
        metrics::write_report_row(out, p.stem().string(), metrics::assessment_report(pq, gq));
        acc.add(pq, gq);
    }
    const auto total = acc.result();
    metrics::write_report_row(out, "all", total);
    print_summary(out, total);
    return 0;
}

int cmd_stats(const Options& o, std::ostream& out) {
    if (o.manifest.empty()) throw std::invalid_argument("stats needs --manifest");
    const auto report = data::dataset_stats(data::DatasetManifest::load(o.manifest), o.k);
    data::write_stats_table(out, report);
    const auto flags = out.flags();
    out << std::fixed << std::setprecision(2) << "EIB@" << o.k << '=' << report.aggregate.eib.value
        << " mIoU=" << report.aggregate.miou << '\n';
    out.flags(flags);
    return 0;
}

int cmd_tile(const Options& o, std::ostream& out) {
    if (o.manifest.empty() || o.out.empty()) throw std::invalid_argument("tile needs --manifest and --out");
    const auto manifest = data::DatasetManifest::load(o.manifest);
    const fs::path dir = o.out;
    for (const char* sub : {"images", "unchecked", "gt"}) fs::create_directories(dir / sub);
    data::DatasetManifest tiled;
    tiled.root = dir;
    for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
        for (const auto& t : data::tile_dataset(manifest.load_sample(i), o.tile, o.drop_empty)) {
            const std::string name = t.sample.id + ".png";
            data::ManifestEntry e{t.sample.id, dir / "images" / name, std::nullopt, dir / "gt" / name};
            io::write_rgb_png(e.image, t.sample.image);
            io::write_mask(e.gt, t.sample.gt);
            if (t.sample.unchecked) {
                e.unchecked = dir / "unchecked" / name;
                io::write_mask(*e.unchecked, *t.sample.unchecked);
            }
            tiled.entries.push_back(std::move(e));
        }
    }
    tiled.save(dir / "manifest.tsv");
    out << "wrote " << tiled.entries.size() << " tiles to " << (dir / "manifest.tsv").string() << '\n';
    return 0;
}

int cmd_assess(const Options& o, std::ostream& out) {
    if (o.checkpoint.empty() || o.out.empty()) throw std::invalid_argument("assess needs --checkpoint and --out");
    auto loaded = training::load_checkpoint(o.checkpoint);
    if (!o.manifest.empty()) {
        const auto manifest = data::DatasetManifest::load(o.manifest);
        const fs::path dir = o.out;
        fs::create_directories(dir);
        for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
            const auto s = manifest.load_sample(i);
            if (!s.unchecked) throw std::invalid_argument("entry " + s.id + " has no unchecked mask");
            const auto a = training::assess(loaded.model, s.image, *s.unchecked);
            data::write_quality_map(dir / (s.id + ".png"), a.quality);
            write_edges(dir / (s.id + "_edges.png"), a.edges);
        }
        out << "assessed " << manifest.entries.size() << " samples into " << dir.string() << '\n';
        return 0;
    }
    if (o.image.empty() || o.pred.empty()) throw std::invalid_argument("assess needs --image and --pred, or --manifest");
    const auto a = training::assess(loaded.model, io::read_rgb(o.image), io::read_mask(o.pred));
    const fs::path dest = o.out;
    make_parent(dest);
    data::write_quality_map(dest, a.quality);
    write_edges(edges_path_for(dest), a.edges);
    return 0;
}

/// Holds out the tail of the training manifest when no validation manifest is set.
std::pair<std::vector<data::SampleTriplet>, std::vector<data::SampleTriplet>> split_data(
    const training::RunConfig& cfg, const std::string& train_manifest) {
    auto train = data::DatasetManifest::load(train_manifest).load_all();
    std::vector<data::SampleTriplet> val;
    if (!cfg.data.val_manifest.empty()) {
        val = data::DatasetManifest::load(cfg.data.val_manifest).load_all();
    } else {
        const auto n = train.size();
        auto held = static_cast<std::size_t>(std::ceil(cfg.data.val_fraction * static_cast<double>(n)));
        held = std::min(std::max<std::size_t>(held, 1), n > 1 ? n - 1 : 0);
        if (held == 0) throw std::invalid_argument("need at least two samples to hold out a validation split");
        val.assign(train.end() - static_cast<std::ptrdiff_t>(held), train.end());
        train.resize(n - held);
    }
    return {std::move(train), std::move(val)};
}

int cmd_train(const Options& o, std::ostream& out) {
    if (o.out.empty()) throw std::invalid_argument("train needs --out");
    training::RunConfig cfg;
    if (!o.config.empty()) cfg = training::parse_run_config(read_text(o.config));
    if (o.seed) cfg.trainer.seed = *o.seed;
    const std::string train_manifest = o.manifest.empty() ? cfg.data.train_manifest : o.manifest;
    if (train_manifest.empty()) throw std::invalid_argument("train needs --manifest or data.train_manifest");
    cfg.validate();

    auto [train, val] = split_data(cfg, train_manifest);
    const auto sources = cfg.build_sources();
    const std::string snapshot = training::to_yaml(cfg);

    training::Trainer trainer(model::make_assessor(cfg.model, cfg.trainer.seed), cfg.trainer, cfg.loss);
    trainer.set_config_snapshot(snapshot);
    if (!o.checkpoint.empty()) training::restore_trainer(trainer, read_text(o.checkpoint));

    const fs::path dir = o.out;
    fs::create_directories(dir);
    open_out(dir / "config.yaml") << snapshot;
    auto loss_log = open_out(dir / "loss_log.tsv");
    auto epoch_log = open_out(dir / "epochs.tsv");
    training::TrainHooks hooks;
    hooks.loss_log = &loss_log;
    hooks.epoch_log = &epoch_log;
    const auto result = training::train_loop(trainer, train, val, cfg.pool, sources, hooks);

    training::save_checkpoint(dir / "last.ckpt", trainer);
    if (!result.best_checkpoint.empty()) {
        std::ofstream best(dir / "best.ckpt", std::ios::binary);
        best.write(result.best_checkpoint.data(), static_cast<std::streamsize>(result.best_checkpoint.size()));
    }
    const auto flags = out.flags();
    out << "steps=" << result.steps << " best_epoch=" << result.best_epoch << std::fixed << std::setprecision(2)
        << " best_score=" << result.best_score << (result.stopped_early ? " stopped_early" : "") << '\n';
    out.flags(flags);
    return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Per-pixel segmentation quality assessment", "pqm"};
    app.require_subcommand(1);
    Options o;

    auto* train = app.add_subcommand("train", "Train an assessor from a manifest and a YAML config");
    train->add_option("--manifest", o.manifest, "Training manifest");
    train->add_option("--config", o.config, "Run configuration (YAML)");
    train->add_option("--out", o.out, "Output directory")->required();
    train->add_option("--seed", o.seed, "Override the configured seed");
    train->add_option("--checkpoint", o.checkpoint, "Resume from this checkpoint");

    auto* assess = app.add_subcommand("assess", "Predict a quality map and an edge map");
    assess->add_option("--checkpoint", o.checkpoint, "Trained checkpoint")->required();
    assess->add_option("--image", o.image, "RGB image");
    assess->add_option("--pred", o.pred, "Mask under evaluation");
    assess->add_option("--manifest", o.manifest, "Assess every entry of a manifest");
    assess->add_option("--out", o.out, "Quality-map file, or directory with --manifest")->required();

    auto* eval = app.add_subcommand("eval", "Score predicted quality maps against reference ones");
    eval->add_option("--pred", o.pred, "Predicted quality map or directory")->required();
    eval->add_option("--gt", o.gt, "Reference quality map or directory")->required();

    auto* stats = app.add_subcommand("stats", "Class distribution, EIB and mIoU of a manifest");
    stats->add_option("--manifest", o.manifest, "Manifest with unchecked masks")->required();
    stats->add_option("--k", o.k, "EIB buffer radius")->check(CLI::NonNegativeNumber);

    auto* gt = app.add_subcommand("pqm-gt", "Derive reference quality maps from mask pairs");
    gt->add_option("--gt", o.gt, "Ground-truth mask");
    gt->add_option("--pred", o.pred, "Mask under evaluation");
    gt->add_option("--manifest", o.manifest, "Derive maps for every manifest entry");
    gt->add_option("--out", o.out, "Quality-map file, or directory with --manifest")->required();

    auto* tile = app.add_subcommand("tile", "Cut manifest rasters into non-overlapping tiles");
    tile->add_option("--manifest", o.manifest, "Source manifest")->required();
    tile->add_option("--tile", o.tile, "Tile edge in pixels")->check(CLI::PositiveNumber);
    tile->add_flag("--drop-empty", o.drop_empty, "Discard tiles without foreground");
    tile->add_option("--out", o.out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        err << app.help();
        return e.get_exit_code() != 0 ? e.get_exit_code() : 2;
    }

    try {
        if (*train) return cmd_train(o, out);
        if (*assess) return cmd_assess(o, out);
        if (*eval) return cmd_eval(o, out);
        if (*stats) return cmd_stats(o, out);
        if (*gt) return cmd_pqm_gt(o, out);
        if (*tile) return cmd_tile(o, out);
    } catch (const std::exception& e) {
        err << "pqm: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv{"pqm"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace pqm::cli
