#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "dnum/network.hpp"

namespace dnum {

using Json = nlohmann::ordered_json;

inline Json utility_to_json(const UtilitySpec& u) {
  if (u.family == UtilityFamily::Logarithmic) {
    return Json{{"family", "log"}, {"weight", u.weight}};
  }
  return Json{{"family", "quadratic"},
              {"linear", u.linear},
              {"curvature", u.quadratic}};
}

inline UtilitySpec utility_from_json(const Json& j) {
  std::string family = j.at("family").get<std::string>();
  if (family == "log") {
    return UtilitySpec::logarithmic(j.at("weight").get<double>());
  }
  if (family == "quadratic") {
    return UtilitySpec::quadratic_utility(j.at("linear").get<double>(),
                                          j.at("curvature").get<double>());
  }
  throw Error("unknown utility family '" + family + "'");
}

/**
 * Network document:
 *
 *   {"links": [c_0, ...],
 *    "sources": [{"route": [l, ...], "utility": {"family": "log", "weight": w}}]}
 *
 * Quadratic utilities use {"family": "quadratic", "linear": a, "curvature": q}.
 */
inline Json network_to_json(const Network& net) {
  Json links = Json::array();
  for (int l = 0; l < net.num_links(); ++l) {
    links.push_back(net.capacity(l));
  }
  Json sources = Json::array();
  for (int i = 0; i < net.num_sources(); ++i) {
    auto route = net.route(i);
    sources.push_back(Json{{"route", std::vector<int>(route.begin(), route.end())},
                           {"utility", utility_to_json(net.utility(i))}});
  }
  return Json{{"links", links}, {"sources", sources}};
}

inline Network network_from_json(const Json& j) {
  try {
    std::vector<double> caps = j.at("links").get<std::vector<double>>();
    std::vector<std::vector<int>> routes;
    std::vector<UtilitySpec> utilities;
    for (const Json& src : j.at("sources")) {
      routes.push_back(src.at("route").get<std::vector<int>>());
      utilities.push_back(utility_from_json(src.at("utility")));
    }
    Vector c = Eigen::Map<const Vector>(caps.data(),
                                        static_cast<Eigen::Index>(caps.size()));
    return make_network(std::move(routes), c, std::move(utilities));
  } catch (const Json::exception& e) {
    throw Error(std::string("malformed network document: ") + e.what());
  }
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open " + path);
  }
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(path + ": " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error("cannot write " + path);
  }
  out << text;
}

inline Network load_network(const std::string& path) {
  return network_from_json(read_json_file(path));
}

inline void save_network(const Network& net, const std::string& path) {
  write_text_file(path, network_to_json(net).dump(2) + "\n");
}

}  // namespace dnum
