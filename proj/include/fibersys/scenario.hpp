#pragma once

// Scenario files: JSON documents with "schema": "fibersys/1". The builtin
// scenarios are embedded documents in the same format.

#include "fibersys/connection.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fibersys {

struct Tolerances {
  double transport_agreement = 1e-7;
  double curvature = 1e-5;
  double ad_pullback = 1e-5;
  double membership = 1e-6;
  double claim2 = 1e-4;
  double universal_transport = 1e-7;
  double relatedness = 1e-10;
  double cocycle = 1e-6;
  double escape_time = 1e-3;
  double small_loop = 1e-3;
  double holonomy_angle = 1e-6;
  double via_universal = 1e-6;
  double projection = 1e-6;
  double transition = 1e-7;
  double homomorphism = 1e-9;
  double jacobi = 1e-12;

  Tolerances scaled(double factor) const;
};

struct EscapeExpectation {
  std::string curve;
  Vec u0;
  double time = 0.0;
};

struct HolonomyExpectation {
  std::string curve;
  Vec u0;
  Vec log;  // coordinates of log(holonomy) in V
};

struct Expectations {
  bool complete = true;
  std::optional<EscapeExpectation> escape;
  std::optional<HolonomyExpectation> holonomy;
  // Builtin whose fiber is the unrestricted parent of this one.
  std::string parent;
};

struct Scenario {
  std::string name;
  std::string description;
  Connection conn;
  std::map<std::string, Curve> curves;
  Expectations expect;
  Tolerances tol;
  Vec x0;  // base point for holonomy and reconstruction

  const Curve& curve(const std::string& key) const;
};

std::vector<std::string> builtin_names();
bool is_builtin(const std::string& name);
const std::string& builtin_source(const std::string& name);

// Builtin name or path to a JSON file. Throws ParseError or ValidationError.
Scenario load_scenario(const std::string& name_or_path);
Scenario parse_scenario(const std::string& text, const std::string& origin = "<string>");

}  // namespace fibersys
