#include "errors.hpp"
#include "hand_sim.hpp"

#include "embedded_config.hpp"

namespace thumbtrak::sim {

const SimConfig &default_sim_config() {
  static const SimConfig config = [] {
    if (kEmbeddedSimConfig[0] == '\0')
      throw Error(ErrorKind::Config, "this build has no embedded simulator config");
    return sim_config_from_json(kEmbeddedSimConfig);
  }();
  return config;
}

} // namespace thumbtrak::sim
