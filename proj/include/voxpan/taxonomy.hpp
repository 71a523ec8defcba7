#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "voxpan/grid.hpp"

namespace voxpan {

enum class ClassKind { kThing, kStuff, kFree, kUnknown };

std::string_view to_string(ClassKind kind);
ClassKind class_kind_from_string(std::string_view s);

struct ClassEntry {
  ClassId id = 0;
  std::string name;
  ClassKind kind = ClassKind::kStuff;
};

// Class table. Exactly one free class, at most one unknown class, unique ids.
//
// Thing classes are ordered by ascending id; that order defines the layout of
// per-prediction class probability vectors. "Semantic" classes are the
// non-free, non-unknown ones (things and stuff).
class ClassTaxonomy {
 public:
  explicit ClassTaxonomy(std::vector<ClassEntry> entries);

  // The 19-class SemanticKITTI SSC table: 0 empty, 1..8 things, 9..19 stuff,
  // 255 unknown.
  static ClassTaxonomy semantic_kitti();

  const std::vector<ClassEntry>& entries() const { return entries_; }
  ClassId free_id() const { return free_id_; }
  std::optional<ClassId> unknown_id() const { return unknown_id_; }

  bool contains(ClassId id) const;
  // Throws InvalidInput for ids not in the table.
  const ClassEntry& entry(ClassId id) const;
  ClassKind kind(ClassId id) const { return entry(id).kind; }
  bool is_thing(ClassId id) const;
  bool is_stuff(ClassId id) const;
  bool is_unknown(ClassId id) const { return unknown_id_ && *unknown_id_ == id; }
  ClassId id_of(std::string_view name) const;

  const std::vector<ClassId>& thing_ids() const { return thing_ids_; }
  const std::vector<ClassId>& stuff_ids() const { return stuff_ids_; }
  // Things and stuff by ascending id.
  const std::vector<ClassId>& semantic_ids() const { return semantic_ids_; }
  // Free plus semantic classes by ascending id: the score-vector layout for
  // per-voxel classification.
  const std::vector<ClassId>& dense_ids() const { return dense_ids_; }

  // Position of a thing class in thing_ids(); throws for non-things.
  std::size_t thing_index(ClassId id) const;
  // Position in dense_ids(); throws for unknown or absent ids.
  std::size_t dense_index(ClassId id) const;

  // Lookup table indexed by raw class id; true for thing classes.
  const std::vector<bool>& thing_lut() const { return thing_lut_; }

 private:
  std::vector<ClassEntry> entries_;
  ClassId free_id_ = 0;
  std::optional<ClassId> unknown_id_;
  std::vector<ClassId> thing_ids_, stuff_ids_, semantic_ids_, dense_ids_;
  std::vector<int> slot_;  // raw id -> entry index, -1 when absent
  std::vector<bool> thing_lut_;
};

// Throws InvalidInput if a label is not in the taxonomy.
void validate_labels(const SemanticGrid& grid, const ClassTaxonomy& taxonomy);

}  // namespace voxpan
