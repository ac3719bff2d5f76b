#include "churnlab/env/environment.hpp"
#include "churnlab/env/gridnav.hpp"
#include "churnlab/env/pointmass.hpp"

namespace churnlab::env {

bool is_known_environment(const std::string& name) { return name == "gridnav" || name == "pointmass"; }

std::unique_ptr<Environment> make_environment(const std::string& name, std::uint64_t seed) {
  if (name == "gridnav") return std::make_unique<GridNav>();
  if (name == "pointmass") return std::make_unique<PointMass>(seed);
  throw ConfigError("env: unknown environment name '" + name + "'");
}

}  // namespace churnlab::env
