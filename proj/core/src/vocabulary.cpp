#include "sgrel/vocabulary.hpp"

#include <algorithm>

namespace sgrel {

namespace {
int index_of(const std::vector<std::string>& names, const std::string& name) {
  auto it = std::find(names.begin(), names.end(), name);
  return it == names.end() ? -1 : static_cast<int>(it - names.begin());
}
}  // namespace

int RelationVocabulary::relation_index(const std::string& name) const {
  return index_of(relation_names, name);
}

int RelationVocabulary::object_index(const std::string& name) const {
  return index_of(object_names, name);
}

int RelationHierarchy::position_in_category(int relation) const {
  if (relation < 0 || relation >= static_cast<int>(assignment.size())) return -1;
  const int c = assignment[static_cast<std::size_t>(relation)];
  if (c < 0 || c >= num_categories()) return -1;
  const auto& order = within_category_order[static_cast<std::size_t>(c)];
  auto it = std::find(order.begin(), order.end(), relation);
  return it == order.end() ? -1 : static_cast<int>(it - order.begin());
}

RelationHierarchy RelationHierarchy::from_assignment(std::vector<std::string> category_names,
                                                     std::vector<int> assignment) {
  RelationHierarchy h;
  h.super_category_names = std::move(category_names);
  h.within_category_order.resize(h.super_category_names.size());
  h.assignment = std::move(assignment);
  for (int r = 0; r < static_cast<int>(h.assignment.size()); ++r) {
    const int c = h.assignment[static_cast<std::size_t>(r)];
    if (c >= 0 && c < h.num_categories()) {
      h.within_category_order[static_cast<std::size_t>(c)].push_back(r);
    }
  }
  return h;
}

std::vector<HierarchyError> validate_hierarchy(const RelationHierarchy& h,
                                               const RelationVocabulary& v) {
  std::vector<HierarchyError> errors;
  const int num_relations = v.num_relations();
  const int num_categories = h.num_categories();

  // Where does each relation appear across the order lists?
  std::vector<int> seen_in(static_cast<std::size_t>(num_relations), -1);
  for (int c = 0; c < num_categories; ++c) {
    for (int r : h.within_category_order[static_cast<std::size_t>(c)]) {
      if (r < 0 || r >= num_relations) {
        errors.push_back({HierarchyError::Kind::MissingRelation, r, c,
                          "relation index " + std::to_string(r) + " outside the vocabulary"});
        continue;
      }
      if (seen_in[static_cast<std::size_t>(r)] >= 0) {
        errors.push_back({HierarchyError::Kind::DuplicateAssignment, r, c,
                          "relation " + std::to_string(r) + " listed in more than one category"});
        continue;
      }
      seen_in[static_cast<std::size_t>(r)] = c;
    }
  }

  for (int r = 0; r < num_relations; ++r) {
    const int listed = seen_in[static_cast<std::size_t>(r)];
    const int assigned = (r < static_cast<int>(h.assignment.size()))
                             ? h.assignment[static_cast<std::size_t>(r)]
                             : -1;
    if (listed < 0) {
      errors.push_back({HierarchyError::Kind::MissingRelation, r, -1,
                        "relation " + std::to_string(r) + " is unassigned"});
    } else if (assigned != listed) {
      errors.push_back({HierarchyError::Kind::DuplicateAssignment, r, listed,
                        "relation " + std::to_string(r) + " assigned to category " +
                            std::to_string(assigned) + " but listed under " +
                            std::to_string(listed)});
    }
  }

  for (int c = 0; c < num_categories; ++c) {
    if (h.within_category_order[static_cast<std::size_t>(c)].empty()) {
      errors.push_back({HierarchyError::Kind::EmptyCategory, -1, c,
                        "category " + h.super_category_names[static_cast<std::size_t>(c)] +
                            " is empty"});
    }
  }

  return errors;
}

}  // namespace sgrel
