#include "doctest.h"
#include "sgrel/vocabulary.hpp"

using sgrel::HierarchyError;
using sgrel::RelationHierarchy;
using sgrel::RelationVocabulary;

namespace {

RelationVocabulary small_vocab(int n) {
  RelationVocabulary v;
  for (int i = 0; i < n; ++i) v.relation_names.push_back("r" + std::to_string(i));
  return v;
}

}  // namespace

TEST_CASE("from_assignment orders categories by relation index") {
  const RelationHierarchy h =
      RelationHierarchy::from_assignment({"a", "b", "c"}, {2, 0, 1, 0, 2, 1});
  REQUIRE(h.num_categories() == 3);
  CHECK(h.within_category_order[0] == std::vector<int>{1, 3});
  CHECK(h.within_category_order[1] == std::vector<int>{2, 5});
  CHECK(h.within_category_order[2] == std::vector<int>{0, 4});
  CHECK(h.category_size(1) == 2);
  CHECK(h.background_category() == 3);
  CHECK(h.position_in_category(4) == 1);
  CHECK(h.position_in_category(1) == 0);
}

TEST_CASE("validate accepts a total partition") {
  const RelationHierarchy h =
      RelationHierarchy::from_assignment({"a", "b", "c"}, {0, 1, 2, 0, 1, 2});
  CHECK(sgrel::validate_hierarchy(h, small_vocab(6)).empty());
}

TEST_CASE("validate reports missing relations") {
  RelationHierarchy h = RelationHierarchy::from_assignment({"a", "b", "c"}, {0, 1, 2, 0, 1, 2});
  const auto errors = sgrel::validate_hierarchy(h, small_vocab(7));  // relation 6 unassigned
  REQUIRE_FALSE(errors.empty());
  CHECK(errors.front().kind == HierarchyError::Kind::MissingRelation);
  CHECK(errors.front().relation == 6);
}

TEST_CASE("validate reports empty categories") {
  const RelationHierarchy h = RelationHierarchy::from_assignment({"a", "b", "c"}, {0, 1, 0, 1});
  const auto errors = sgrel::validate_hierarchy(h, small_vocab(4));
  bool saw_empty = false;
  for (const auto& e : errors)
    if (e.kind == HierarchyError::Kind::EmptyCategory && e.category == 2) saw_empty = true;
  CHECK(saw_empty);
}

TEST_CASE("validate reports duplicate assignments") {
  RelationHierarchy h;
  h.super_category_names = {"a", "b", "c"};
  h.assignment = {0, 1, 2, 0};
  h.within_category_order = {{0, 3}, {1, 3}, {2}};  // relation 3 listed twice
  const auto errors = sgrel::validate_hierarchy(h, small_vocab(4));
  bool saw_dup = false;
  for (const auto& e : errors)
    if (e.kind == HierarchyError::Kind::DuplicateAssignment && e.relation == 3) saw_dup = true;
  CHECK(saw_dup);
}

TEST_CASE("name lookups") {
  RelationVocabulary v = small_vocab(3);
  v.object_names = {"cat", "mat"};
  CHECK(v.relation_index("r2") == 2);
  CHECK(v.relation_index("nope") == -1);
  CHECK(v.object_index("mat") == 1);
  CHECK(v.num_relations() == 3);
  CHECK(v.num_objects() == 2);
}
