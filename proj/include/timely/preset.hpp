#pragma once

#include "timely/model.hpp"

namespace timely {

// Reference four-user wireless-downlink instance used by the experiment
// driver and the end-to-end tests: shared 4-state fading channel, logistic
// success curves parameterized by user distance, fine uniform resource grid.
SystemConfig four_user_downlink_preset();

}  // namespace timely
