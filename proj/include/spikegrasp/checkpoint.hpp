#pragma once

// Versioned text checkpoints. Doubles are printed with %.17g so a
// save/load/save cycle reproduces the file byte for byte.

#include <filesystem>
#include <string>

#include "spikegrasp/snn.hpp"

namespace spikegrasp::snn {

enum class ModelKind { Snn, Ann };

const char* model_name(ModelKind kind);                    // "snn" | "ann"
bool parse_model(std::string_view name, ModelKind& out);

struct Checkpoint {
  ModelKind kind = ModelKind::Snn;
  SpikingNetwork net;
};

// Throws std::runtime_error on I/O failure; the network is written with its
// LIF parameters, log_std and both weight matrices.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);

// Throws std::runtime_error on I/O failure, unknown version, truncation or any
// malformed field.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace spikegrasp::snn
