#include "sacmoe/hybrid.hpp"

#include <cmath>
#include <fstream>

namespace sacmoe {

bool region_matches(const Region& r, const ModeQuery& q) {
  switch (r.kind) {
    case Region::Kind::Box:
      return q.x >= r.box.x0 && q.x <= r.box.x1 && q.y >= r.box.y0 && q.y <= r.box.y1;
    case Region::Kind::Arc:
      if (r.arc.s0 <= r.arc.s1) return q.s >= r.arc.s0 && q.s < r.arc.s1;
      return q.s >= r.arc.s0 || q.s < r.arc.s1;  // wraps through 0
  }
  return false;
}

int active_mode(const SwitchingMap& map, const ModeQuery& q) {
  for (const Region& r : map.regions)
    if (region_matches(r, q)) return r.mode;
  throw NoRegionCovers("no region covers state (x=" + std::to_string(q.x) + ", y=" + std::to_string(q.y) +
                       ", s=" + std::to_string(q.s) + ")");
}

int raw_match_count(const SwitchingMap& map, const ModeQuery& q) {
  int n = 0;
  for (const Region& r : map.regions)
    if (region_matches(r, q)) ++n;
  return n;
}

void Context::validate() const {
  if (modes.empty()) throw ConfigError("context: empty mode set");
  for (const auto& m : modes)
    if (!m.mu.allFinite()) throw ConfigError("context: non-finite mode parameter");
  for (const Region& r : switching.regions)
    if (r.mode < 0 || r.mode >= static_cast<int>(modes.size()))
      throw ConfigError("context: region references mode " + std::to_string(r.mode) + " but only " +
                        std::to_string(modes.size()) + " modes exist");
}

nlohmann::json context_to_json(const Context& c) {
  nlohmann::json j;
  j["id"] = c.id;
  auto modes = nlohmann::json::array();
  for (const auto& m : c.modes) {
    std::vector<double> mu(m.mu.data(), m.mu.data() + m.mu.size());
    modes.push_back({{"mu", mu}});
  }
  j["modes"] = modes;
  auto regions = nlohmann::json::array();
  for (const Region& r : c.switching.regions) {
    nlohmann::json rj;
    rj["mode"] = r.mode;
    if (r.kind == Region::Kind::Box) {
      rj["kind"] = "box";
      rj["x0"] = r.box.x0;
      rj["x1"] = r.box.x1;
      rj["y0"] = r.box.y0;
      rj["y1"] = r.box.y1;
    } else {
      rj["kind"] = "arc";
      rj["s0"] = r.arc.s0;
      rj["s1"] = r.arc.s1;
    }
    regions.push_back(rj);
  }
  j["regions"] = regions;
  return j;
}

Context context_from_json(const nlohmann::json& j) {
  Context c;
  c.id = j.value("id", -1);
  for (const auto& mj : j.at("modes")) {
    auto mu = mj.at("mu").get<std::vector<double>>();
    LatentMode m;
    m.mu = Eigen::Map<const VecD>(mu.data(), static_cast<Eigen::Index>(mu.size()));
    c.modes.push_back(m);
  }
  for (const auto& rj : j.at("regions")) {
    Region r;
    r.mode = rj.at("mode").get<int>();
    const std::string kind = rj.at("kind").get<std::string>();
    if (kind == "box") {
      r.kind = Region::Kind::Box;
      r.box = {rj.at("x0").get<double>(), rj.at("x1").get<double>(), rj.at("y0").get<double>(),
               rj.at("y1").get<double>()};
    } else if (kind == "arc") {
      r.kind = Region::Kind::Arc;
      r.arc = {rj.at("s0").get<double>(), rj.at("s1").get<double>()};
    } else {
      throw ConfigError("context: unknown region kind " + kind);
    }
    c.switching.regions.push_back(r);
  }
  c.validate();
  return c;
}

void save_contexts(const std::string& path, const std::vector<Context>& cs) {
  nlohmann::json j;
  auto arr = nlohmann::json::array();
  for (const auto& c : cs) arr.push_back(context_to_json(c));
  j["contexts"] = arr;
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path);
  os << j.dump(2) << "\n";
}

std::vector<Context> load_contexts(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read " + path);
  nlohmann::json j = nlohmann::json::parse(is);
  std::vector<Context> out;
  for (const auto& cj : j.at("contexts")) out.push_back(context_from_json(cj));
  return out;
}

}  // namespace sacmoe
