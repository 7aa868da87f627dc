#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "dnum/aux_summation.hpp"
#include "dnum/baselines.hpp"
#include "dnum/network_io.hpp"
#include "dnum/solver.hpp"

namespace dnum {

/// Shortest round-trip decimal form; NaN and infinities spelled out.
inline std::string format_number(double value) {
  if (std::isnan(value)) {
    return "nan";
  }
  if (std::isinf(value)) {
    return value > 0 ? "inf" : "-inf";
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

/// JSON has no NaN or infinity: NaN becomes null, infinities become strings.
inline Json number_json(double value) {
  if (std::isnan(value)) {
    return nullptr;
  }
  if (std::isinf(value)) {
    return value > 0 ? "inf" : "-inf";
  }
  return value;
}

inline const char* trace_csv_header() {
  return "k,f,h,lambda_tilde,theta,stepsize,phase,dual_iters,consensus_rounds,"
         "min_slack,feas_residual\n";
}

inline std::string trace_to_csv(const std::vector<IterationRecord>& trace) {
  std::string out = trace_csv_header();
  for (const IterationRecord& r : trace) {
    out += std::to_string(r.k) + ',' + format_number(r.f) + ',' + format_number(r.h) +
           ',' + format_number(r.lambda_tilde) + ',' + format_number(r.theta) + ',' +
           format_number(r.stepsize) + ',' + phase_name(r.phase) + ',' +
           std::to_string(r.dual_iters) + ',' + std::to_string(r.consensus_rounds) +
           ',' + format_number(r.min_slack) + ',' + format_number(r.feas_residual) +
           '\n';
  }
  return out;
}

/// Same columns; f repeats h and the Newton-only fields stay empty.
inline std::string trace_to_csv(const FirstOrderResult& result, double stepsize) {
  std::string out = trace_csv_header();
  std::string step = format_number(stepsize);
  for (const FirstOrderRecord& r : result.trace) {
    std::string h = format_number(r.h);
    out += std::to_string(r.k) + ',' + h + ',' + h + ",,," + step +
           ",first-order,1,0," + format_number(r.min_slack) + ',' +
           format_number(r.feas_residual) + '\n';
  }
  return out;
}

inline Json certificate_to_json(const ErrorCertificate& c) {
  return Json{{"stage", c.stage},
              {"beta", number_json(c.beta)},
              {"h", number_json(c.h_threshold)},
              {"dual_iters", c.dual_iters},
              {"F", number_json(c.spectral_bound)},
              {"T", c.stage1_budget},
              {"consensus_rounds", c.consensus_rounds}};
}

inline Json spectral_to_json(const SpectralReport& s) {
  Json j{{"lambda1", number_json(s.lambda1)},
         {"lower", nullptr},
         {"upper", number_json(s.upper_bound)},
         {"max_cut", nullptr},
         {"max_out_degree", number_json(s.max_out_degree)}};
  if (s.lower_bound) {
    j["lower"] = number_json(*s.lower_bound);
  }
  if (s.max_cut) {
    j["max_cut"] = number_json(*s.max_cut);
  }
  if (s.rayleigh_lower_bound) {
    j["rayleigh_lower"] = number_json(*s.rayleigh_lower_bound);
  }
  return j;
}

inline Json metrics_to_json(const MessageMetrics& m) {
  return Json{{"source_pushes", m.source_pushes},
              {"route_feedbacks", m.route_feedbacks},
              {"dual_rounds", m.dual_rounds},
              {"consensus_rounds", m.consensus_rounds},
              {"summation_rounds", m.summation_rounds}};
}

inline Json record_to_json(const IterationRecord& r) {
  Json j{{"k", r.k},
         {"f", number_json(r.f)},
         {"h", number_json(r.h)},
         {"lambda_tilde", number_json(r.lambda_tilde)},
         {"theta", number_json(r.theta)},
         {"stepsize", number_json(r.stepsize)},
         {"phase", phase_name(r.phase)},
         {"dual_iters", r.dual_iters},
         {"consensus_rounds", r.consensus_rounds},
         {"summation_rounds", r.summation_rounds},
         {"min_slack", number_json(r.min_slack)},
         {"feas_residual", number_json(r.feas_residual)},
         {"lambda1", number_json(r.lambda1)},
         {"certificate", nullptr}};
  if (r.certificate) {
    j["certificate"] = certificate_to_json(*r.certificate);
  }
  if (!std::isnan(r.exact_decrement)) {
    j["exact_decrement"] = number_json(r.exact_decrement);
  }
  if (r.x.size() > 0) {
    Json x = Json::array();
    for (double v : r.x) {
      x.push_back(number_json(v));
    }
    j["x"] = std::move(x);
  }
  return j;
}

inline Json solve_to_json(const SolveResult& result) {
  Json trace = Json::array();
  for (const IterationRecord& r : result.trace) {
    trace.push_back(record_to_json(r));
  }
  Json x = Json::array();
  for (double v : result.x) {
    x.push_back(number_json(v));
  }
  Json j{{"converged", result.converged},
         {"mu", result.mu},
         {"scale", result.scale},
         {"primal_steps", result.primal_steps()},
         {"dual_iterations", result.dual_iterations()},
         {"counted_iterations", result.counted_iterations()},
         {"metrics", metrics_to_json(result.metrics)},
         {"dual_graph", nullptr},
         {"x", std::move(x)},
         {"trace", std::move(trace)}};
  if (result.dual_graph) {
    j["dual_graph"] = spectral_to_json(*result.dual_graph);
  }
  return j;
}

inline Json aux_graph_to_json(const AuxiliaryGraph& aux) {
  Json edges = Json::array();
  for (const AuxEdge& e : aux.edges) {
    edges.push_back(Json{{"a", e.a}, {"b", e.b}, {"link", e.link}});
  }
  Json theta = Json::array();
  for (const auto& members : aux.theta) {
    theta.push_back(members);
  }
  return Json{{"num_sources", aux.num_sources},
              {"construction_rounds", aux.construction_rounds},
              {"edges", std::move(edges)},
              {"theta", std::move(theta)},
              {"shared_links", aux.shared_links},
              {"shared_links_of", aux.shared_links_of}};
}

}  // namespace dnum
