#include "wavesmooth/traffic_model.hpp"

#include <string>

namespace wavesmooth {

void validate(const HumanDriverParams& p) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("invalid human driver parameter: ") + what);
  };
  require(p.a_ftl > 0.0, "a_ftl > 0");
  require(p.b_ov > 0.0, "b_ov > 0");
  require(p.v_max > 0.0, "v_max > 0");
  require(p.d0 > 0.0, "d0 > 0");
  require(p.l_veh > 0.0, "l_veh > 0");
}

}  // namespace wavesmooth
