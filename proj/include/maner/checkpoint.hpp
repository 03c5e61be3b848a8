#pragma once

#include <string>
#include <vector>

#include "maner/mlm.hpp"
#include "maner/model.hpp"
#include "maner/vocab.hpp"

namespace maner {

// Everything a downstream experiment needs: weights, vocab, the pretraining
// coverage set and full provenance. Round-trips bit-exactly through the
// versioned binary container (header JSON + named little-endian float32
// parameter blocks + trailing SHA-256).
struct Checkpoint {
  static constexpr uint32_t kFormatVersion = 1;

  ModelParams<float> params;
  Vocab vocab;
  std::vector<std::string> coverage;  // languages seen during pretraining
  MlmConfig mlm_config;
  uint64_t seed = 0;
  std::string config_text;    // canonical experiment config, one key=value per line
  std::string config_digest;  // sha256 of config_text
};

// Canonical serialization; the digest is the SHA-256 of these bytes.
std::string serialize_checkpoint(Checkpoint& ckpt);
std::string checkpoint_digest(Checkpoint& ckpt);

void save_checkpoint(const std::string& path, Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace maner
