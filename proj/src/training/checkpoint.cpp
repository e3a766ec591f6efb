#include "pqm/training/checkpoint.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pqm::training {

namespace {

std::string default_snapshot(Trainer& trainer) {
    if (!trainer.config_snapshot().empty()) return trainer.config_snapshot();
    RunConfig cfg;
    cfg.model = trainer.model()->config();
    cfg.trainer = trainer.config();
    cfg.loss = trainer.loss_config();
    return to_yaml(cfg);
}

void write_tensors(torch::serialize::OutputArchive& archive, const torch::nn::Module& module) {
    torch::serialize::OutputArchive params(archive.compilation_unit());
    torch::serialize::OutputArchive buffers(archive.compilation_unit());
    for (const auto& p : module.named_parameters()) params.write(p.key(), p.value().detach(), false);
    for (const auto& b : module.named_buffers()) buffers.write(b.key(), b.value(), true);
    archive.write("params", params);
    archive.write("buffers", buffers);
}

void read_tensors(torch::serialize::InputArchive& archive, torch::nn::Module& module) {
    torch::NoGradGuard no_grad;
    torch::serialize::InputArchive params, buffers;
    archive.read("params", params);
    archive.read("buffers", buffers);
    for (auto& p : module.named_parameters()) {
        torch::Tensor t;
        if (!params.try_read(p.key(), t)) throw std::runtime_error("checkpoint lacks parameter " + p.key());
        if (t.sizes() != p.value().sizes())
            throw std::runtime_error("checkpoint parameter " + p.key() + " has a different shape");
        p.value().copy_(t);
    }
    for (auto& b : module.named_buffers()) {
        torch::Tensor t;
        if (!buffers.try_read(b.key(), t, true)) throw std::runtime_error("checkpoint lacks buffer " + b.key());
        b.value().copy_(t);
    }
}

std::string read_string(torch::serialize::InputArchive& archive, const char* key) {
    c10::IValue v;
    if (!archive.try_read(key, v) || !v.isString()) throw std::runtime_error(std::string("checkpoint lacks ") + key);
    return v.toStringRef();
}

torch::serialize::InputArchive open_bytes(const std::string& bytes) {
    torch::serialize::InputArchive archive;
    try {
        archive.load_from(bytes.data(), bytes.size());
    } catch (const c10::Error& e) {
        throw std::runtime_error(std::string("not a readable checkpoint: ") + e.what_without_backtrace());
    }
    return archive;
}

}  // namespace

std::string serialize_checkpoint(Trainer& trainer, const std::string& config_yaml) {
    torch::serialize::OutputArchive archive;
    archive.write("config", c10::IValue(config_yaml.empty() ? default_snapshot(trainer) : config_yaml));
    archive.write("step", c10::IValue(static_cast<int64_t>(trainer.step())));
    std::ostringstream rng;
    rng << trainer.rng();
    archive.write("rng", c10::IValue(rng.str()));
    write_tensors(archive, *trainer.model());
    torch::serialize::OutputArchive opt(archive.compilation_unit());
    trainer.optimizer().save(opt);
    archive.write("optimizer", opt);
    std::string bytes;
    archive.save_to([&bytes](const void* data, size_t n) {
        bytes.append(static_cast<const char*>(data), n);
        return n;
    });
    return bytes;
}

void save_checkpoint(const std::filesystem::path& path, Trainer& trainer, const std::string& config_yaml) {
    const std::string bytes = serialize_checkpoint(trainer, config_yaml);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

LoadedCheckpoint load_checkpoint_bytes(const std::string& bytes) {
    auto archive = open_bytes(bytes);
    LoadedCheckpoint out;
    out.config = parse_run_config(read_string(archive, "config"));
    out.rng_state = read_string(archive, "rng");
    c10::IValue step;
    if (archive.try_read("step", step)) out.step = step.toInt();
    out.model = model::QualityAssessor(out.config.model);
    read_tensors(archive, *out.model);
    out.model->eval();
    return out;
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return load_checkpoint_bytes(ss.str());
}

void restore_trainer(Trainer& trainer, const std::string& bytes) {
    auto archive = open_bytes(bytes);
    read_tensors(archive, *trainer.model());
    torch::serialize::InputArchive opt;
    archive.read("optimizer", opt);
    trainer.optimizer().load(opt);
    c10::IValue step;
    if (archive.try_read("step", step)) trainer.set_step(step.toInt());
    std::istringstream rng(read_string(archive, "rng"));
    rng >> trainer.rng();
}

}  // namespace pqm::training
