#pragma once

#include <spdlog/logger.h>

#include <memory>

namespace ridgeline {

/// Library logger writing to stderr. The level comes from RIDGELINE_LOG
/// (trace, debug, info, warn, error, critical, off); default is warn.
spdlog::logger& log();

}  // namespace ridgeline
