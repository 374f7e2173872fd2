#pragma once

namespace eetsim {

/// Library version, "major.minor.patch".
const char* version_string();

}  // namespace eetsim
