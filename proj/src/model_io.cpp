#include "imbens/model_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "imbens/error.hpp"

namespace imbens {

using nlohmann::json;

namespace {

json tree_to_json(const FittedTree& tree) {
  json nodes = json::array();
  for (const auto& n : tree.nodes()) {
    if (n.is_leaf()) {
      nodes.push_back({{"proba", n.proba}});
    } else {
      nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right}});
    }
  }
  return nodes;
}

FittedTree tree_from_json(const json& nodes, std::size_t n_classes, std::size_t n_features) {
  std::vector<TreeNode> out;
  for (const auto& n : nodes) {
    TreeNode node;
    if (n.contains("proba")) {
      node.proba = n.at("proba").get<std::vector<double>>();
    } else {
      node.feature = n.at("feature").get<int>();
      node.threshold = n.at("threshold").get<double>();
      node.left = n.at("left").get<int>();
      node.right = n.at("right").get<int>();
      if (node.feature < 0) fail("InvalidModelFile", ErrorKind::Data, "negative split feature");
    }
    out.push_back(std::move(node));
  }
  return FittedTree(std::move(out), n_classes, n_features);
}

json counts_to_json(const ClassCounts& counts) {
  json out = json::object();
  for (const auto& [label, n] : counts) out[std::to_string(label)] = n;
  return out;
}

ClassCounts counts_from_json(const json& j) {
  ClassCounts out;
  for (const auto& [key, value] : j.items()) out[std::stoi(key)] = value.get<std::size_t>();
  return out;
}

EnsembleModel from_json(const json& doc) {
  if (doc.value("format", "") != "imbens-model") {
    fail("InvalidModelFile", ErrorKind::Data, "not an imbens model document");
  }
  const int version = doc.at("format_version").get<int>();
  if (version != kModelFormatVersion) {
    fail("UnsupportedFormatVersion", ErrorKind::Data,
         "model format_version " + std::to_string(version) + " is not supported (expected " +
             std::to_string(kModelFormatVersion) + ")");
  }
  EnsembleModel model;
  const auto method = parse_method(doc.at("method").get<std::string>());
  if (!method) fail("InvalidModelFile", ErrorKind::Data, "unknown method id");
  model.method = *method;
  model.n_features = doc.at("n_features").get<std::size_t>();
  model.n_classes = doc.at("n_classes").get<std::size_t>();
  model.class_names = doc.at("class_names").get<std::vector<std::string>>();
  if (model.class_names.size() != model.n_classes) {
    fail("InvalidModelFile", ErrorKind::Data, "class_names length differs from n_classes");
  }
  model.config = doc.at("config").get<std::map<std::string, std::string>>();
  for (const auto& m : doc.at("members")) {
    Member member;
    member.vote_weight = m.at("vote_weight").get<double>();
    for (const auto& t : m.at("trees")) {
      member.tree_weights.push_back(t.at("weight").get<double>());
      member.trees.push_back(tree_from_json(t.at("nodes"), model.n_classes, model.n_features));
    }
    if (member.trees.empty()) fail("InvalidModelFile", ErrorKind::Data, "member without trees");
    model.members.push_back(std::move(member));
  }
  if (model.members.empty()) fail("InvalidModelFile", ErrorKind::Data, "model has no members");
  for (const auto& r : doc.at("training_log")) {
    LogRecord rec;
    rec.iteration = r.at("iteration").get<std::size_t>();
    rec.resampled_counts = counts_from_json(r.at("resampled_counts"));
    rec.metrics = r.at("metrics").get<std::map<std::string, std::map<std::string, double>>>();
    model.training_log.records.push_back(std::move(rec));
  }
  return model;
}

}  // namespace

std::string serialize_model(const EnsembleModel& model) {
  json doc;
  doc["format"] = "imbens-model";
  doc["format_version"] = kModelFormatVersion;
  doc["method"] = method_id(model.method);
  doc["n_features"] = model.n_features;
  doc["n_classes"] = model.n_classes;
  doc["class_names"] = model.class_names;
  doc["config"] = model.config;
  json members = json::array();
  for (const auto& m : model.members) {
    json trees = json::array();
    for (std::size_t t = 0; t < m.trees.size(); ++t) {
      trees.push_back({{"weight", m.tree_weights[t]}, {"nodes", tree_to_json(m.trees[t])}});
    }
    members.push_back({{"vote_weight", m.vote_weight}, {"trees", std::move(trees)}});
  }
  doc["members"] = std::move(members);
  json log = json::array();
  for (const auto& r : model.training_log.records) {
    log.push_back({{"iteration", r.iteration},
                   {"resampled_counts", counts_to_json(r.resampled_counts)},
                   {"metrics", r.metrics}});
  }
  doc["training_log"] = std::move(log);
  return doc.dump(1) + "\n";
}

EnsembleModel deserialize_model(const std::string& text) {
  try {
    return from_json(json::parse(text));
  } catch (const json::exception& e) {
    fail("InvalidModelFile", ErrorKind::Data, e.what());
  }
}

void save_model(const EnsembleModel& model, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_model(model));
}

EnsembleModel load_model(const std::filesystem::path& path) { return deserialize_model(read_file(path)); }

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail("IoError", ErrorKind::Data, "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) fail("IoError", ErrorKind::Data, "failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    fail("IoError", ErrorKind::Data, "cannot move output into place at " + path.string());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("IoError", ErrorKind::Data, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace imbens
