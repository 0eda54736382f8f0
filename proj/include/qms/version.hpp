// version.hpp — library version string stamped into every emitted artifact.
#pragma once

namespace qms {

#ifdef QMS_VERSION
inline constexpr const char* version = QMS_VERSION;
#else
inline constexpr const char* version = "0.1.0";
#endif

}  // namespace qms
