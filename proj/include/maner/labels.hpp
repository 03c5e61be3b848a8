#pragma once

#include <array>
#include <string>
#include <string_view>

#include "maner/common.hpp"

namespace maner {

enum class EntityType : int {
  PER = 0,
  LOC = 1,
  ORG = 2,
};

inline constexpr int kNumEntityTypes = 3;

std::string_view entity_type_name(EntityType t);

// The fixed IOB2 label set: O, then adjacent B-/I- pairs per entity type.
class LabelSet {
 public:
  static constexpr int kO = 0;
  static constexpr int kCount = 1 + 2 * kNumEntityTypes;

  static int size() { return kCount; }

  static int begin_id(EntityType t) { return 1 + 2 * static_cast<int>(t); }
  static int inside_id(EntityType t) { return 2 + 2 * static_cast<int>(t); }

  static bool is_begin(int id) { return id >= 1 && id < kCount && (id - 1) % 2 == 0; }
  static bool is_inside(int id) { return id >= 2 && id < kCount && (id - 2) % 2 == 0; }

  static EntityType entity_type(int id);

  static std::string_view name(int id);
  // "O", "B-PER", "I-LOC", ... -> id. Throws on an unknown label string.
  static int id(std::string_view name);
};

}  // namespace maner
