#pragma once

namespace datamarket {

// Library version, embedded in output-file headers and run manifests so that
// every artifact records which build produced it.
inline constexpr const char* kVersion = "0.1.0";

}  // namespace datamarket
