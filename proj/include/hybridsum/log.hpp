#pragma once

#include <memory>

#include <spdlog/spdlog.h>

namespace hybridsum {

/// Library logger; always writes to stderr so stdout stays data-only.
spdlog::logger& logger();

}  // namespace hybridsum
