#include "maner/labels.hpp"

namespace maner {

namespace {
constexpr std::array<std::string_view, LabelSet::kCount> kNames = {
    "O", "B-PER", "I-PER", "B-LOC", "I-LOC", "B-ORG", "I-ORG",
};
}

std::string_view entity_type_name(EntityType t) {
  switch (t) {
    case EntityType::PER:
      return "PER";
    case EntityType::LOC:
      return "LOC";
    case EntityType::ORG:
      return "ORG";
  }
  throw Error("unknown entity type");
}

EntityType LabelSet::entity_type(int id) {
  if (id < 1 || id >= kCount) {
    throw Error("label id " + std::to_string(id) + " carries no entity type");
  }
  return static_cast<EntityType>((id - 1) / 2);
}

std::string_view LabelSet::name(int id) {
  if (id < 0 || id >= kCount) {
    throw Error("label id " + std::to_string(id) + " out of range");
  }
  return kNames[static_cast<size_t>(id)];
}

int LabelSet::id(std::string_view name) {
  for (int i = 0; i < kCount; ++i) {
    if (kNames[static_cast<size_t>(i)] == name) {
      return i;
    }
  }
  throw Error("unknown IOB2 label '" + std::string(name) + "'");
}

}  // namespace maner
