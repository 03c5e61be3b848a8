#pragma once

#include <array>
#include <cstdint>
#include <cstddef>
#include <string>

namespace maner {

// Minimal incremental SHA-256; enough for checkpoint/config digests.
class Sha256 {
 public:
  Sha256() { reset(); }

  void reset();
  void update(const void* data, size_t len);
  std::array<uint8_t, 32> finish();

  static std::string hex_digest(const void* data, size_t len);
  static std::string to_hex(const std::array<uint8_t, 32>& digest);

 private:
  void process_block(const uint8_t* block);

  std::array<uint32_t, 8> state_{};
  std::array<uint8_t, 64> buffer_{};
  uint64_t total_len_ = 0;
  size_t buffer_len_ = 0;
};

}  // namespace maner
