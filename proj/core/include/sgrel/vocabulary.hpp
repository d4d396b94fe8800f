#pragma once

#include <string>
#include <vector>

namespace sgrel {

/// Ordered relation and object label sets. Index order is the file order.
/// The background class is never a vocabulary entry: it is index R in flat
/// heads and category index 3 (num_categories) in the hierarchical head.
struct RelationVocabulary {
  std::vector<std::string> relation_names;
  std::vector<std::string> object_names;

  int num_relations() const { return static_cast<int>(relation_names.size()); }
  int num_objects() const { return static_cast<int>(object_names.size()); }

  /// Index of a relation name, -1 if unknown.
  int relation_index(const std::string& name) const;
  /// Index of an object name, -1 if unknown.
  int object_index(const std::string& name) const;
};

/// Partition of the relation vocabulary into disjoint super-categories.
/// `assignment[r]` is the category of relation r; `within_category_order[c]`
/// lists the relations of category c in their canonical order, which also
/// fixes the column order of the per-category weight matrices.
struct RelationHierarchy {
  std::vector<std::string> super_category_names;
  std::vector<int> assignment;
  std::vector<std::vector<int>> within_category_order;

  int num_categories() const { return static_cast<int>(super_category_names.size()); }
  /// Implicit rejection class; one past the last real category.
  int background_category() const { return num_categories(); }
  int category_size(int category) const {
    return static_cast<int>(within_category_order[static_cast<std::size_t>(category)].size());
  }
  /// Position of `relation` inside its category's order list, -1 if absent.
  int position_in_category(int relation) const;

  /// Builds the order lists from an assignment vector; within-category order
  /// is ascending relation index.
  static RelationHierarchy from_assignment(std::vector<std::string> category_names,
                                           std::vector<int> assignment);
};

struct HierarchyError {
  enum class Kind { MissingRelation, DuplicateAssignment, EmptyCategory };
  Kind kind;
  int relation = -1;
  int category = -1;
  std::string message;
};

/// Empty result means the hierarchy is a total partition of the vocabulary
/// into non-empty disjoint categories.
std::vector<HierarchyError> validate_hierarchy(const RelationHierarchy& h,
                                               const RelationVocabulary& v);

}  // namespace sgrel
