#include "sgrel/json_io.hpp"

#include <cstdio>

#include "nlohmann/json.hpp"
#include "sgrel/errors.hpp"
#include "sgrel/llm_client.hpp"

namespace sgrel {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

json parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

ordered_json parse_file_ordered(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    return ordered_json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
  if (!out) throw FormatError("write failed for " + path.string());
}

int relation_or_throw(const RelationVocabulary& v, const std::string& name,
                      const std::string& context) {
  const int idx = v.relation_index(name);
  if (idx < 0) throw FormatError(context + ": unknown relation '" + name + "'");
  return idx;
}

int object_or_throw(const RelationVocabulary& v, const std::string& name,
                    const std::string& context) {
  const int idx = v.object_index(name);
  if (idx < 0) throw FormatError(context + ": unknown object label '" + name + "'");
  return idx;
}

json triplet_to_json(const Triplet& t, const RelationVocabulary& v) {
  return json::array({v.object_names.at(static_cast<std::size_t>(t.subject_label)),
                      v.relation_names.at(static_cast<std::size_t>(t.relation)),
                      v.object_names.at(static_cast<std::size_t>(t.object_label))});
}

Triplet triplet_from_json(const json& j, const RelationVocabulary& v,
                          const std::string& context) {
  if (!j.is_array() || j.size() != 3)
    throw FormatError(context + ": triplet must be a [subject, relation, object] array");
  return {object_or_throw(v, j[0].get<std::string>(), context),
          relation_or_throw(v, j[1].get<std::string>(), context),
          object_or_throw(v, j[2].get<std::string>(), context)};
}

SceneGraph graph_from_json(const json& j, const RelationVocabulary& v,
                           const std::string& context) {
  SceneGraph g;
  g.image_id = j.value("image_id", "");
  g.width = j.value("width", 0.0);
  g.height = j.value("height", 0.0);
  if (j.contains("objects")) {
    for (const json& obj : j.at("objects")) {
      ObjectInstance inst;
      inst.label = object_or_throw(v, obj.at("label").get<std::string>(), context);
      const json& box = obj.at("box");
      if (!box.is_array() || box.size() != 4)
        throw FormatError(context + ": box must be [x, y, w, h]");
      inst.box = {box[0].get<double>(), box[1].get<double>(), box[2].get<double>(),
                  box[3].get<double>()};
      inst.score = obj.value("score", 1.0);
      g.objects.push_back(inst);
    }
  }
  const int num_objects = static_cast<int>(g.objects.size());
  auto check_idx = [&](int idx, const char* what) {
    if (idx < 0 || idx >= num_objects)
      throw FormatError(context + ": " + what + " index " + std::to_string(idx) +
                        " out of range (graph has " + std::to_string(num_objects) + " objects)");
  };
  if (j.contains("gt")) {
    for (const json& e : j.at("gt")) {
      GtPredicate gt;
      gt.subject_idx = e.at("subject").get<int>();
      gt.object_idx = e.at("object").get<int>();
      gt.relation = relation_or_throw(v, e.at("relation").get<std::string>(), context);
      check_idx(gt.subject_idx, "gt subject");
      check_idx(gt.object_idx, "gt object");
      g.gt_predicates.push_back(gt);
    }
  }
  if (j.contains("predictions")) {
    for (const json& e : j.at("predictions")) {
      PredicateCandidate c;
      c.subject_idx = e.at("subject").get<int>();
      c.object_idx = e.at("object").get<int>();
      c.relation = relation_or_throw(v, e.at("relation").get<std::string>(), context);
      c.super_category = e.value("super_category", 0);
      c.confidence = e.at("confidence").get<double>();
      check_idx(c.subject_idx, "prediction subject");
      check_idx(c.object_idx, "prediction object");
      g.pred_candidates.push_back(c);
    }
  }
  return g;
}

json graph_to_json(const SceneGraph& g, const RelationVocabulary& v) {
  json j;
  j["image_id"] = g.image_id;
  j["width"] = g.width;
  j["height"] = g.height;
  j["objects"] = json::array();
  for (const ObjectInstance& o : g.objects) {
    j["objects"].push_back({{"label", v.object_names.at(static_cast<std::size_t>(o.label))},
                            {"box", {o.box.x, o.box.y, o.box.w, o.box.h}},
                            {"score", o.score}});
  }
  j["gt"] = json::array();
  for (const GtPredicate& gt : g.gt_predicates) {
    j["gt"].push_back({{"subject", gt.subject_idx},
                       {"relation", v.relation_names.at(static_cast<std::size_t>(gt.relation))},
                       {"object", gt.object_idx}});
  }
  j["predictions"] = json::array();
  for (const PredicateCandidate& c : g.pred_candidates) {
    j["predictions"].push_back(
        {{"subject", c.subject_idx},
         {"relation", v.relation_names.at(static_cast<std::size_t>(c.relation))},
         {"object", c.object_idx},
         {"super_category", c.super_category},
         {"confidence", c.confidence}});
  }
  return j;
}

}  // namespace

RelationVocabulary load_vocabulary(const std::filesystem::path& path) {
  const json j = parse_file(path);
  RelationVocabulary v;
  if (!j.contains("relations") || !j.at("relations").is_array())
    throw FormatError(path.string() + ": missing 'relations' array");
  for (const json& name : j.at("relations")) v.relation_names.push_back(name.get<std::string>());
  if (j.contains("objects"))
    for (const json& name : j.at("objects")) v.object_names.push_back(name.get<std::string>());
  return v;
}

void save_vocabulary(const std::filesystem::path& path, const RelationVocabulary& v) {
  json j;
  j["relations"] = v.relation_names;
  j["objects"] = v.object_names;
  write_text(path, j.dump(2) + "\n");
}

RelationHierarchy load_hierarchy(const std::filesystem::path& path,
                                 const RelationVocabulary& v) {
  const ordered_json j = parse_file_ordered(path);
  if (!j.is_object()) throw FormatError(path.string() + ": hierarchy must be a JSON object");
  RelationHierarchy h;
  h.assignment.assign(v.relation_names.size(), -1);
  int category = 0;
  for (const auto& [name, members] : j.items()) {
    h.super_category_names.push_back(name);
    std::vector<int> order;
    if (!members.is_array())
      throw FormatError(path.string() + ": category '" + name + "' must be an array");
    for (const auto& rel : members) {
      const int idx = relation_or_throw(v, rel.get<std::string>(), path.string());
      if (h.assignment[static_cast<std::size_t>(idx)] != -1)
        throw FormatError(path.string() + ": relation '" + rel.get<std::string>() +
                          "' assigned twice");
      h.assignment[static_cast<std::size_t>(idx)] = category;
      order.push_back(idx);
    }
    h.within_category_order.push_back(std::move(order));
    ++category;
  }
  for (std::size_t r = 0; r < h.assignment.size(); ++r)
    if (h.assignment[r] == -1)
      throw FormatError(path.string() + ": relation '" + v.relation_names[r] +
                        "' missing from the hierarchy");
  return h;
}

void save_hierarchy(const std::filesystem::path& path, const RelationHierarchy& h,
                    const RelationVocabulary& v) {
  ordered_json j;
  for (int c = 0; c < h.num_categories(); ++c) {
    ordered_json members = ordered_json::array();
    for (int rel : h.within_category_order[static_cast<std::size_t>(c)])
      members.push_back(v.relation_names.at(static_cast<std::size_t>(rel)));
    j[h.super_category_names[static_cast<std::size_t>(c)]] = std::move(members);
  }
  write_text(path, j.dump(2) + "\n");
}

std::vector<SceneGraph> load_scene_graphs(const std::filesystem::path& path,
                                          const RelationVocabulary& v, int* deduped) {
  SceneGraphReader reader(path, v);
  std::vector<SceneGraph> graphs;
  while (auto g = reader.next()) graphs.push_back(std::move(*g));
  if (deduped) *deduped = reader.deduped();
  return graphs;
}

void save_scene_graphs(const std::filesystem::path& path, const std::vector<SceneGraph>& graphs,
                       const RelationVocabulary& v) {
  SceneGraphWriter writer(path, v);
  for (const SceneGraph& g : graphs) writer.write(g);
}

SceneGraphReader::SceneGraphReader(const std::filesystem::path& path,
                                   const RelationVocabulary& v)
    : in_(path), vocab_(v), path_(path.string()) {
  if (!in_) throw FormatError("cannot open " + path_);
}

std::optional<SceneGraph> SceneGraphReader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    const std::string context = path_ + ":" + std::to_string(line_);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw FormatError(context + ": " + e.what());
    }
    try {
      SceneGraph g = graph_from_json(j, vocab_, context);
      deduped_ += dedupe_gt(g);
      return g;
    } catch (const json::exception& e) {
      throw FormatError(context + ": " + e.what());
    }
  }
  return std::nullopt;
}

SceneGraphWriter::SceneGraphWriter(const std::filesystem::path& path,
                                   const RelationVocabulary& v)
    : out_(path), vocab_(v) {
  if (!out_) throw FormatError("cannot write " + path.string());
}

void SceneGraphWriter::write(const SceneGraph& g) {
  out_ << graph_to_json(g, vocab_).dump() << "\n";
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
  const ordered_json j = parse_file_ordered(path);
  if (!j.is_object()) throw FormatError(path.string() + ": embeddings must be a JSON object");
  EmbeddingTable table;
  Eigen::Index dim = -1;
  std::vector<std::vector<double>> rows;
  for (const auto& [name, vec] : j.items()) {
    if (!vec.is_array())
      throw FormatError(path.string() + ": embedding for '" + name + "' must be an array");
    std::vector<double> row;
    for (const auto& x : vec) row.push_back(x.get<double>());
    if (dim == -1) dim = static_cast<Eigen::Index>(row.size());
    if (static_cast<Eigen::Index>(row.size()) != dim || row.empty())
      throw FormatError(path.string() + ": embedding for '" + name +
                        "' has inconsistent dimension");
    table.names.push_back(name);
    rows.push_back(std::move(row));
  }
  table.vectors.resize(static_cast<Eigen::Index>(rows.size()), std::max<Eigen::Index>(dim, 0));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < rows[i].size(); ++k)
      table.vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  return table;
}

void save_embeddings(const std::filesystem::path& path, const EmbeddingTable& table) {
  ordered_json j;
  for (std::size_t i = 0; i < table.names.size(); ++i) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index k = 0; k < table.vectors.cols(); ++k)
      row.push_back(table.vectors(static_cast<Eigen::Index>(i), k));
    j[table.names[i]] = std::move(row);
  }
  write_text(path, j.dump(2) + "\n");
}

std::set<Triplet> load_triplet_set(const std::filesystem::path& path,
                                   const RelationVocabulary& v) {
  const json j = parse_file(path);
  if (!j.is_array()) throw FormatError(path.string() + ": triplet set must be a JSON array");
  std::set<Triplet> out;
  for (const json& t : j) out.insert(triplet_from_json(t, v, path.string()));
  return out;
}

void save_triplet_set(const std::filesystem::path& path, const std::set<Triplet>& triplets,
                      const RelationVocabulary& v) {
  json j = json::array();
  for (const Triplet& t : triplets) j.push_back(triplet_to_json(t, v));
  write_text(path, j.dump(2) + "\n");
}

AlignmentSets load_alignment_sets(const std::filesystem::path& path,
                                  const RelationVocabulary& v) {
  const json j = parse_file(path);
  AlignmentSets sets;
  if (j.contains("aligned"))
    for (const json& t : j.at("aligned"))
      sets.add_aligned(triplet_from_json(t, v, path.string()));
  if (j.contains("violated"))
    for (const json& t : j.at("violated"))
      sets.add_violated(triplet_from_json(t, v, path.string()));
  return sets;
}

void save_alignment_sets(const std::filesystem::path& path, const AlignmentSets& sets,
                         const RelationVocabulary& v) {
  json aligned = json::array();
  for (const Triplet& t : sets.aligned) aligned.push_back(triplet_to_json(t, v));
  json violated = json::array();
  for (const Triplet& t : sets.violated) violated.push_back(triplet_to_json(t, v));
  const json j = {{"aligned", std::move(aligned)}, {"violated", std::move(violated)}};
  write_text(path, j.dump(2) + "\n");
}

void load_verdict_cache(const std::filesystem::path& path, const RelationVocabulary& v,
                        VerdictCache& cache) {
  const json j = parse_file(path);
  if (!j.is_object()) throw FormatError(path.string() + ": cache must be a JSON object");
  for (const auto& [key, entry] : j.items()) {
    Verdict verdict;
    verdict.triplet = triplet_from_json(entry.at("triplet"), v, path.string() + " ('" + key + "')");
    verdict.aligned = entry.at("aligned").get<bool>();
    if (entry.contains("votes"))
      for (const json& vote : entry.at("votes")) verdict.raw_votes.push_back(vote.get<bool>());
    const std::string source = entry.value("source", "model");
    if (source == "model")
      verdict.source = VerdictSource::MODEL;
    else if (source == "cache")
      verdict.source = VerdictSource::CACHE;
    else if (source == "whitelist")
      verdict.source = VerdictSource::WHITELIST;
    else
      throw FormatError(path.string() + ": unknown verdict source '" + source + "'");
    cache.get_or_insert(verdict.triplet, std::move(verdict));
  }
}

void save_verdict_cache(const std::filesystem::path& path, const VerdictCache& cache,
                        const RelationVocabulary& v) {
  json j = json::object();
  for (const auto& [t, verdict] : cache.snapshot()) {
    json votes = json::array();
    for (bool vote : verdict.raw_votes) votes.push_back(vote);
    const char* source = verdict.source == VerdictSource::MODEL      ? "model"
                         : verdict.source == VerdictSource::CACHE    ? "cache"
                                                                     : "whitelist";
    j[render_triplet(t, v)] = {{"triplet", triplet_to_json(t, v)},
                               {"aligned", verdict.aligned},
                               {"votes", std::move(votes)},
                               {"source", source}};
  }
  write_text(path, j.dump(2) + "\n");
}

std::string metadata_json(std::uint64_t seed, const std::string& config_dump) {
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(fnv1a64(config_dump)));
  const json j = {{"version", kLibraryVersion},
                  {"seed", seed},
                  {"config_fnv1a64", hash},
                  {"config", json::parse(config_dump)}};
  return j.dump();
}

}  // namespace sgrel
