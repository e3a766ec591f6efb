#include "pqm/training/run_config.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace pqm::training {

void RunConfig::validate() const {
    model.validate();
    trainer.validate();
    loss.weights.validate();
    pool.validate();
    if (!(data.val_fraction >= 0.0 && data.val_fraction < 1.0))
        throw std::invalid_argument("data.val_fraction must lie in [0, 1)");
    for (const auto& s : sources) {
        if (s.kind != "synthetic" && s.kind != "provided")
            throw std::invalid_argument("source " + s.name + ": unknown kind '" + s.kind + "'");
        if (s.kind == "synthetic") s.corruption.validate();
    }
    const std::size_t n_sources = sources.empty() ? default_mask_sources().size() : sources.size();
    if (static_cast<std::size_t>(trainer.n_aug) > pool.size() * n_sources)
        throw std::invalid_argument("trainer.n_aug exceeds pool size x source count");
}

std::vector<MaskSourcePtr> RunConfig::build_sources() const {
    if (sources.empty()) return default_mask_sources();
    std::vector<MaskSourcePtr> out;
    for (const auto& s : sources) {
        if (s.kind == "provided") out.push_back(std::make_shared<ProvidedMaskSource>());
        else out.push_back(synthetic_mask_source(s.name, s.corruption));
    }
    return out;
}

namespace {

void check_keys(const YAML::Node& node, const std::string& section, std::initializer_list<const char*> allowed) {
    if (!node.IsMap()) throw std::invalid_argument("config section '" + section + "' must be a mapping");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (!ok.contains(key)) throw std::invalid_argument("unknown key '" + key + "' in section '" + section + "'");
    }
}

template <typename T>
void read(const YAML::Node& node, const char* key, T& out) {
    if (node[key]) out = node[key].as<T>();
}

Monitor parse_monitor(const std::string& s) {
    if (s == "mf1") return Monitor::MeanF1;
    if (s == "miou") return Monitor::MeanIoU;
    throw std::invalid_argument("trainer.monitor must be mf1 or miou, got '" + s + "'");
}

losses::CorrectionBase parse_correction(const std::string& s) {
    if (s == "unchecked") return losses::CorrectionBase::UncheckedMask;
    if (s == "predicted") return losses::CorrectionBase::PredictedForeground;
    throw std::invalid_argument("loss.correction must be unchecked or predicted, got '" + s + "'");
}

void parse_model(const YAML::Node& n, model::ModelConfig& m) {
    check_keys(n, "model", {"preset", "image_size", "patch_size", "d_im", "d_pr", "stage_depths", "num_heads",
                            "encoder_heads", "mlp_ratio", "decoder_mlp_dim", "nonlocal_subsample", "pixel_mean",
                            "pixel_std"});
    if (n["preset"]) {
        const auto p = n["preset"].as<std::string>();
        if (p == "toy") m = model::ModelConfig::toy();
        else if (p == "base") m = model::ModelConfig::base_preset();
        else throw std::invalid_argument("model.preset must be toy or base, got '" + p + "'");
    }
    read(n, "image_size", m.image_size);
    read(n, "patch_size", m.patch_size);
    read(n, "d_im", m.d_im);
    read(n, "d_pr", m.d_pr);
    read(n, "num_heads", m.num_heads);
    read(n, "encoder_heads", m.encoder_heads);
    read(n, "mlp_ratio", m.mlp_ratio);
    read(n, "decoder_mlp_dim", m.decoder_mlp_dim);
    read(n, "nonlocal_subsample", m.nonlocal_subsample);
    const auto read3 = [&](const char* key, auto& arr) {
        if (!n[key]) return;
        const auto v = n[key].as<std::vector<typename std::decay_t<decltype(arr)>::value_type>>();
        if (v.size() != arr.size())
            throw std::invalid_argument(std::string("model.") + key + " needs " + std::to_string(arr.size()) + " entries");
        std::copy(v.begin(), v.end(), arr.begin());
    };
    read3("stage_depths", m.stage_depths);
    read3("pixel_mean", m.pixel_mean);
    read3("pixel_std", m.pixel_std);
}

void parse_trainer(const YAML::Node& n, TrainerConfig& t) {
    check_keys(n, "trainer", {"n_aug", "learning_rate", "patience", "max_epochs", "seed", "batch_size", "max_steps",
                              "fixed_augmentation", "monitor"});
    read(n, "n_aug", t.n_aug);
    read(n, "learning_rate", t.learning_rate);
    read(n, "patience", t.patience);
    read(n, "max_epochs", t.max_epochs);
    read(n, "seed", t.seed);
    read(n, "batch_size", t.batch_size);
    read(n, "max_steps", t.max_steps);
    read(n, "fixed_augmentation", t.fixed_augmentation);
    if (n["monitor"]) t.monitor = parse_monitor(n["monitor"].as<std::string>());
}

void parse_loss(const YAML::Node& n, losses::LossConfig& l) {
    check_keys(n, "loss", {"class_weights", "edge_lambda", "dice_eps", "correction"});
    if (const auto w = n["class_weights"]) {
        check_keys(w, "loss.class_weights", {"tp", "fp", "tn", "fn"});
        read(w, "tp", l.weights.tp);
        read(w, "fp", l.weights.fp);
        read(w, "tn", l.weights.tn);
        read(w, "fn", l.weights.fn);
    }
    read(n, "edge_lambda", l.edge_lambda);
    read(n, "dice_eps", l.dice_eps);
    if (n["correction"]) l.correction = parse_correction(n["correction"].as<std::string>());
}

SourceSpec parse_source(const YAML::Node& n) {
    check_keys(n, "sources[]", {"name", "kind", "dilation", "jitter", "jitter_cell", "drop_probability", "blob_rate",
                                "blob_min_radius", "blob_max_radius"});
    SourceSpec s;
    if (!n["name"]) throw std::invalid_argument("every source needs a name");
    s.name = n["name"].as<std::string>();
    read(n, "kind", s.kind);
    read(n, "dilation", s.corruption.dilation);
    read(n, "jitter", s.corruption.jitter);
    read(n, "jitter_cell", s.corruption.jitter_cell);
    read(n, "drop_probability", s.corruption.drop_probability);
    read(n, "blob_rate", s.corruption.blob_rate);
    read(n, "blob_min_radius", s.corruption.blob_min_radius);
    read(n, "blob_max_radius", s.corruption.blob_max_radius);
    return s;
}

}  // namespace

RunConfig parse_run_config(const std::string& yaml) {
    RunConfig cfg;
    YAML::Node root;
    try {
        root = YAML::Load(yaml);
        if (root.IsNull()) return cfg;
        check_keys(root, "<root>", {"model", "trainer", "loss", "pool", "sources", "data"});
        if (root["model"]) parse_model(root["model"], cfg.model);
        if (root["trainer"]) parse_trainer(root["trainer"], cfg.trainer);
        if (root["loss"]) parse_loss(root["loss"], cfg.loss);
        if (const auto p = root["pool"]) {
            cfg.pool.transforms.clear();
            for (const auto& t : p) cfg.pool.transforms.push_back(parse_transform(t.as<std::string>()));
        }
        if (const auto s = root["sources"]) {
            for (const auto& item : s) cfg.sources.push_back(parse_source(item));
        }
        if (const auto d = root["data"]) {
            check_keys(d, "data", {"train_manifest", "val_manifest", "val_fraction"});
            read(d, "train_manifest", cfg.data.train_manifest);
            read(d, "val_manifest", cfg.data.val_manifest);
            read(d, "val_fraction", cfg.data.val_fraction);
        }
    } catch (const YAML::Exception& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

std::string to_yaml(const RunConfig& cfg) {
    YAML::Emitter out;
    out << YAML::BeginMap;
    const auto& m = cfg.model;
    out << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "image_size" << YAML::Value << m.image_size;
    out << YAML::Key << "patch_size" << YAML::Value << m.patch_size;
    out << YAML::Key << "d_im" << YAML::Value << m.d_im;
    out << YAML::Key << "d_pr" << YAML::Value << m.d_pr;
    out << YAML::Key << "stage_depths" << YAML::Value << YAML::Flow
        << std::vector<int>(m.stage_depths.begin(), m.stage_depths.end());
    out << YAML::Key << "num_heads" << YAML::Value << m.num_heads;
    out << YAML::Key << "encoder_heads" << YAML::Value << m.encoder_heads;
    out << YAML::Key << "mlp_ratio" << YAML::Value << m.mlp_ratio;
    out << YAML::Key << "decoder_mlp_dim" << YAML::Value << m.decoder_mlp_dim;
    out << YAML::Key << "nonlocal_subsample" << YAML::Value << m.nonlocal_subsample;
    out << YAML::Key << "pixel_mean" << YAML::Value << YAML::Flow
        << std::vector<double>(m.pixel_mean.begin(), m.pixel_mean.end());
    out << YAML::Key << "pixel_std" << YAML::Value << YAML::Flow
        << std::vector<double>(m.pixel_std.begin(), m.pixel_std.end());
    out << YAML::EndMap;

    const auto& t = cfg.trainer;
    out << YAML::Key << "trainer" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "n_aug" << YAML::Value << t.n_aug;
    out << YAML::Key << "learning_rate" << YAML::Value << t.learning_rate;
    out << YAML::Key << "patience" << YAML::Value << t.patience;
    out << YAML::Key << "max_epochs" << YAML::Value << t.max_epochs;
    out << YAML::Key << "seed" << YAML::Value << t.seed;
    out << YAML::Key << "batch_size" << YAML::Value << t.batch_size;
    out << YAML::Key << "max_steps" << YAML::Value << t.max_steps;
    out << YAML::Key << "fixed_augmentation" << YAML::Value << t.fixed_augmentation;
    out << YAML::Key << "monitor" << YAML::Value << (t.monitor == Monitor::MeanF1 ? "mf1" : "miou");
    out << YAML::EndMap;

    const auto& l = cfg.loss;
    out << YAML::Key << "loss" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "class_weights" << YAML::Value << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "tp" << YAML::Value << l.weights.tp << YAML::Key << "fp" << YAML::Value << l.weights.fp;
    out << YAML::Key << "tn" << YAML::Value << l.weights.tn << YAML::Key << "fn" << YAML::Value << l.weights.fn;
    out << YAML::EndMap;
    out << YAML::Key << "edge_lambda" << YAML::Value << l.edge_lambda;
    out << YAML::Key << "dice_eps" << YAML::Value << l.dice_eps;
    out << YAML::Key << "correction" << YAML::Value
        << (l.correction == losses::CorrectionBase::UncheckedMask ? "unchecked" : "predicted");
    out << YAML::EndMap;

    out << YAML::Key << "pool" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (Transform tr : cfg.pool.transforms) out << std::string(transform_name(tr));
    out << YAML::EndSeq;

    if (!cfg.sources.empty()) {
        out << YAML::Key << "sources" << YAML::Value << YAML::BeginSeq;
        for (const auto& s : cfg.sources) {
            const auto& c = s.corruption;
            out << YAML::Flow << YAML::BeginMap;
            out << YAML::Key << "name" << YAML::Value << s.name << YAML::Key << "kind" << YAML::Value << s.kind;
            if (s.kind == "synthetic") {
                out << YAML::Key << "dilation" << YAML::Value << c.dilation;
                out << YAML::Key << "jitter" << YAML::Value << c.jitter;
                out << YAML::Key << "jitter_cell" << YAML::Value << c.jitter_cell;
                out << YAML::Key << "drop_probability" << YAML::Value << c.drop_probability;
                out << YAML::Key << "blob_rate" << YAML::Value << c.blob_rate;
                out << YAML::Key << "blob_min_radius" << YAML::Value << c.blob_min_radius;
                out << YAML::Key << "blob_max_radius" << YAML::Value << c.blob_max_radius;
            }
            out << YAML::EndMap;
        }
        out << YAML::EndSeq;
    }

    out << YAML::Key << "data" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "train_manifest" << YAML::Value << cfg.data.train_manifest;
    out << YAML::Key << "val_manifest" << YAML::Value << cfg.data.val_manifest;
    out << YAML::Key << "val_fraction" << YAML::Value << cfg.data.val_fraction;
    out << YAML::EndMap;
    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

}  // namespace pqm::training
