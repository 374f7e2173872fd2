#include "eetsim/version.hpp"

#ifndef EETSIM_VERSION_STRING
#define EETSIM_VERSION_STRING "0.0.0"
#endif

namespace eetsim {

const char* version_string() { return EETSIM_VERSION_STRING; }

}  // namespace eetsim
