#include "ephemera/dataset.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ephemera/errors.hpp"
#include "ephemera/io.hpp"

namespace ephemera {

namespace fs = std::filesystem;
using nlohmann::json;

namespace layout {
fs::path manifest(const fs::path& root) { return root / "manifest.json"; }
fs::path poses(const fs::path& root) { return root / "poses.txt"; }
fs::path scan(const fs::path& root, const std::string& id) {
  return root / "scans" / (id + ".bin");
}
fs::path ground_truth(const fs::path& root) { return root / "ground_truth.jsonl"; }
fs::path ppf(const fs::path& root, const std::string& id) {
  return root / "pp" / (id + ".ppf");
}
fs::path pp_index(const fs::path& root) { return root / "pp" / "index.json"; }
}  // namespace layout

std::vector<Scan> Dataset::frames() const {
  std::vector<Scan> out;
  for (const Traversal& t : traversals) {
    out.insert(out.end(), t.scans.begin(), t.scans.end());
  }
  return out;
}

namespace {

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace

void save_dataset(const fs::path& root, const sim::SimOutput& sim) {
  fs::create_directories(root / "scans");
  std::vector<std::pair<std::string, Pose>> poses;
  for (const Traversal& t : sim.traversals) {
    for (const Scan& s : t.scans) {
      save_scan(layout::scan(root, s.scan_id), s.points);
      poses.emplace_back(s.scan_id, s.pose);
    }
  }
  save_poses(layout::poses(root), poses);
  write_labels(layout::ground_truth(root), sim.ground_truth);
  write_file_atomic(layout::manifest(root), sim.manifest + "\n");
}

Dataset load_dataset(const fs::path& root) {
  const json manifest = read_json(layout::manifest(root));
  const auto poses = load_poses(layout::poses(root));

  Dataset data;
  data.root = root;
  const std::string where = layout::manifest(root).string();
  if (!manifest.contains("traversals") || !manifest["traversals"].is_array()) {
    throw FormatError(where + ": missing required key 'traversals'");
  }
  std::set<std::string> seen;
  for (const json& jt : manifest["traversals"]) {
    if (!jt.contains("id") || !jt.contains("scans")) {
      throw FormatError(where + ": traversal entries need 'id' and 'scans'");
    }
    Traversal t;
    t.traversal_id = jt["id"].get<std::string>();
    for (const json& js : jt["scans"]) {
      const std::string id =
          js.is_string() ? js.get<std::string>() : js.at("scan_id").get<std::string>();
      if (!seen.insert(id).second) {
        throw ValidationError(where + ": scan '" + id + "' listed twice");
      }
      auto pose = poses.find(id);
      if (pose == poses.end()) {
        throw ValidationError("no pose for scan '" + id + "' in " +
                              layout::poses(root).string());
      }
      t.scans.push_back(load_scan(layout::scan(root, id), pose->second, id, t.traversal_id));
    }
    validate_traversal(t);
    data.traversals.push_back(std::move(t));
  }

  if (fs::exists(layout::ground_truth(root))) {
    data.ground_truth = read_labels(layout::ground_truth(root));
  }
  return data;
}

void save_pp_fields(const fs::path& root, const std::vector<PPField>& fields) {
  json index = json::object();
  for (const PPField& f : fields) {
    write_ppf(layout::ppf(root, f.scan_id), f);
    index[f.scan_id] = f.traversal_count;
  }
  write_file_atomic(layout::pp_index(root), index.dump(2) + "\n");
}

std::map<std::string, PPField> load_pp_fields(const Dataset& data) {
  // When an index is present it is authoritative: sidecars it does not list
  // are leftovers of an earlier run with different coverage.
  const bool indexed = fs::exists(layout::pp_index(data.root));
  json index = indexed ? read_json(layout::pp_index(data.root)) : json::object();

  std::map<std::string, PPField> out;
  for (const Traversal& t : data.traversals) {
    for (const Scan& s : t.scans) {
      const fs::path path = layout::ppf(data.root, s.scan_id);
      if (indexed && !index.contains(s.scan_id)) continue;
      if (!fs::exists(path)) continue;
      PPField field = read_ppf(path, s.scan_id);
      if (field.tau.size() != s.points.size()) {
        std::ostringstream msg;
        msg << path.string() << ": " << field.tau.size() << " scores for "
            << s.points.size() << " points";
        throw ValidationError(msg.str());
      }
      if (auto it = index.find(s.scan_id); it != index.end()) {
        field.traversal_count = it->get<std::size_t>();
      }
      out.emplace(s.scan_id, std::move(field));
    }
  }
  return out;
}

}  // namespace ephemera
