#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "detopt/engine.hpp"
#include "detopt/parser.hpp"

namespace detopt {

namespace detail {

inline void append_number_array(std::string& out, const char* key, const Eigen::VectorXd& v, const char* indent) {
  out += indent;
  out += '"';
  out += key;
  out += "\": [";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += format_17g(v(i));
  }
  out += "]";
}

inline Eigen::VectorXd vector_from_json(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_array()) {
    throw std::runtime_error(std::string("certificate: missing array field '") + key + "'");
  }
  Eigen::VectorXd v(j[key].size());
  Eigen::Index i = 0;
  for (const auto& entry : j[key]) v(i++) = entry.get<double>();
  return v;
}

}  // namespace detail

/// Serializes a certificate to its JSON document: the network as text, the
/// numeric vectors in network order, and the verification diagnostics.
/// Numbers carry 17 significant digits so the document reloads bit-exactly.
inline std::string write_certificate(const Certificate& cert) {
  using detail::format_17g;
  std::string net_text = serialize_network(cert.network);
  std::string out = "{\n";
  out += "  \"network\": " + nlohmann::json(net_text).dump() + ",\n";
  detail::append_number_array(out, "rates", cert.rates.values, "  ");
  out += ",\n";
  detail::append_number_array(out, "xStar", cert.x_star, "  ");
  out += ",\n";
  detail::append_number_array(out, "xSharp", cert.x_sharp, "  ");
  out += ",\n";
  detail::append_number_array(out, "delta", cert.delta, "  ");
  out += ",\n";
  detail::append_number_array(out, "etaZero", cert.eta_zero.weights, "  ");
  out += ",\n";
  out += "  \"diagnostics\": {\n";
  out += "    \"residualStar\": " + format_17g(cert.diagnostics.residual_star) + ",\n";
  out += "    \"residualSharp\": " + format_17g(cert.diagnostics.residual_sharp) + ",\n";
  out += "    \"detStar\": " + format_17g(cert.diagnostics.det_star) + ",\n";
  out += "    \"detSharp\": " + format_17g(cert.diagnostics.det_sharp) + ",\n";
  out += std::string("    \"nondegenerateStar\": ") + (cert.diagnostics.nondegenerate_star ? "true" : "false") + ",\n";
  out += std::string("    \"nondegenerateSharp\": ") + (cert.diagnostics.nondegenerate_sharp ? "true" : "false") + "\n";
  out += "  }\n";
  out += "}\n";
  return out;
}

/// Parses a certificate document, re-parsing the embedded network text and
/// validating dimensions and positivity.
inline Certificate read_certificate(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("certificate: invalid JSON: ") + e.what());
  }
  if (!j.contains("network") || !j["network"].is_string()) {
    throw std::runtime_error("certificate: missing 'network' text field");
  }
  Certificate cert;
  cert.network = parse_network(j["network"].get<std::string>()).first;
  cert.rates = RateAssignment(detail::vector_from_json(j, "rates"));
  cert.x_star = detail::vector_from_json(j, "xStar");
  cert.x_sharp = detail::vector_from_json(j, "xSharp");
  cert.delta = detail::vector_from_json(j, "delta");
  cert.eta_zero = EtaVector(detail::vector_from_json(j, "etaZero"));

  const int n = cert.network.species_count;
  if (cert.rates.values.size() != cert.network.reaction_count() || cert.x_star.size() != n ||
      cert.x_sharp.size() != n || cert.delta.size() != n) {
    throw std::runtime_error("certificate: field dimensions do not match the embedded network");
  }
  if (j.contains("diagnostics")) {
    const nlohmann::json& d = j["diagnostics"];
    cert.diagnostics.residual_star = d.value("residualStar", 0.0);
    cert.diagnostics.residual_sharp = d.value("residualSharp", 0.0);
    cert.diagnostics.det_star = d.value("detStar", 0.0);
    cert.diagnostics.det_sharp = d.value("detSharp", 0.0);
    cert.diagnostics.nondegenerate_star = d.value("nondegenerateStar", false);
    cert.diagnostics.nondegenerate_sharp = d.value("nondegenerateSharp", false);
  }
  return cert;
}

}  // namespace detopt
