#include "voxpan/taxonomy.hpp"

#include <algorithm>

namespace voxpan {

std::string_view to_string(ClassKind kind) {
  switch (kind) {
    case ClassKind::kThing: return "thing";
    case ClassKind::kStuff: return "stuff";
    case ClassKind::kFree: return "free";
    case ClassKind::kUnknown: return "unknown";
  }
  return "stuff";
}

ClassKind class_kind_from_string(std::string_view s) {
  if (s == "thing") return ClassKind::kThing;
  if (s == "stuff") return ClassKind::kStuff;
  if (s == "free") return ClassKind::kFree;
  if (s == "unknown") return ClassKind::kUnknown;
  throw InvalidInput("unknown class kind '" + std::string(s) + "'");
}

ClassTaxonomy::ClassTaxonomy(std::vector<ClassEntry> entries) : entries_(std::move(entries)) {
  std::sort(entries_.begin(), entries_.end(),
            [](const ClassEntry& a, const ClassEntry& b) { return a.id < b.id; });
  int free_count = 0;
  int unknown_count = 0;
  ClassId max_id = 0;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (i > 0 && entries_[i - 1].id == e.id) {
      throw InvalidInput("duplicate class id " + std::to_string(e.id));
    }
    max_id = std::max(max_id, e.id);
    switch (e.kind) {
      case ClassKind::kFree:
        ++free_count;
        free_id_ = e.id;
        break;
      case ClassKind::kUnknown:
        ++unknown_count;
        unknown_id_ = e.id;
        break;
      case ClassKind::kThing:
        thing_ids_.push_back(e.id);
        semantic_ids_.push_back(e.id);
        break;
      case ClassKind::kStuff:
        stuff_ids_.push_back(e.id);
        semantic_ids_.push_back(e.id);
        break;
    }
    if (e.kind != ClassKind::kUnknown) dense_ids_.push_back(e.id);
  }
  if (free_count != 1) {
    throw InvalidInput("taxonomy needs exactly one free class, found " + std::to_string(free_count));
  }
  if (unknown_count > 1) {
    throw InvalidInput("taxonomy allows at most one unknown class");
  }
  slot_.assign(static_cast<std::size_t>(max_id) + 1, -1);
  thing_lut_.assign(static_cast<std::size_t>(max_id) + 1, false);
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    slot_[entries_[i].id] = static_cast<int>(i);
    thing_lut_[entries_[i].id] = entries_[i].kind == ClassKind::kThing;
  }
}

ClassTaxonomy ClassTaxonomy::semantic_kitti() {
  using K = ClassKind;
  return ClassTaxonomy({
      {0, "empty", K::kFree},          {1, "car", K::kThing},
      {2, "bicycle", K::kThing},       {3, "motorcycle", K::kThing},
      {4, "truck", K::kThing},         {5, "other-vehicle", K::kThing},
      {6, "person", K::kThing},        {7, "bicyclist", K::kThing},
      {8, "motorcyclist", K::kThing},  {9, "road", K::kStuff},
      {10, "parking", K::kStuff},      {11, "sidewalk", K::kStuff},
      {12, "other-ground", K::kStuff}, {13, "building", K::kStuff},
      {14, "fence", K::kStuff},        {15, "vegetation", K::kStuff},
      {16, "trunk", K::kStuff},        {17, "terrain", K::kStuff},
      {18, "pole", K::kStuff},         {19, "traffic-sign", K::kStuff},
      {255, "unknown", K::kUnknown},
  });
}

bool ClassTaxonomy::contains(ClassId id) const {
  return id < slot_.size() && slot_[id] >= 0;
}

const ClassEntry& ClassTaxonomy::entry(ClassId id) const {
  if (!contains(id)) throw InvalidInput("class id " + std::to_string(id) + " not in taxonomy");
  return entries_[static_cast<std::size_t>(slot_[id])];
}

bool ClassTaxonomy::is_thing(ClassId id) const {
  return id < thing_lut_.size() && thing_lut_[id];
}

bool ClassTaxonomy::is_stuff(ClassId id) const {
  return contains(id) && entry(id).kind == ClassKind::kStuff;
}

ClassId ClassTaxonomy::id_of(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return e.id;
  }
  throw InvalidInput("class '" + std::string(name) + "' not in taxonomy");
}

std::size_t ClassTaxonomy::thing_index(ClassId id) const {
  auto it = std::lower_bound(thing_ids_.begin(), thing_ids_.end(), id);
  if (it == thing_ids_.end() || *it != id) {
    throw InvalidInput("class id " + std::to_string(id) + " is not a thing class");
  }
  return static_cast<std::size_t>(it - thing_ids_.begin());
}

std::size_t ClassTaxonomy::dense_index(ClassId id) const {
  auto it = std::lower_bound(dense_ids_.begin(), dense_ids_.end(), id);
  if (it == dense_ids_.end() || *it != id) {
    throw InvalidInput("class id " + std::to_string(id) + " has no dense score slot");
  }
  return static_cast<std::size_t>(it - dense_ids_.begin());
}

void validate_labels(const SemanticGrid& grid, const ClassTaxonomy& taxonomy) {
  std::vector<bool> seen(65536, false);
  for (ClassId label : grid.values()) seen[label] = true;
  for (std::size_t id = 0; id < seen.size(); ++id) {
    if (seen[id] && !taxonomy.contains(static_cast<ClassId>(id))) {
      throw InvalidInput("semantic grid holds label " + std::to_string(id) +
                         " which is not in the taxonomy");
    }
  }
}

}  // namespace voxpan
