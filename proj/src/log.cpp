#include "hybridsum/log.hpp"

#include <spdlog/sinks/stdout_sinks.h>

namespace hybridsum {

spdlog::logger& logger() {
  static const std::shared_ptr<spdlog::logger> instance = [] {
    auto existing = spdlog::get("hybridsum");
    if (existing) return existing;
    auto created = spdlog::stderr_logger_mt("hybridsum");
    created->set_pattern("[%l] %v");
    return created;
  }();
  return *instance;
}

}  // namespace hybridsum
