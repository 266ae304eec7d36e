#include "ridgeline/log.hpp"

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <string>

namespace ridgeline {

spdlog::logger& log() {
    static const std::shared_ptr<spdlog::logger> instance = [] {
        auto logger = std::make_shared<spdlog::logger>(
            "ridgeline", std::make_shared<spdlog::sinks::stderr_sink_mt>());
        logger->set_pattern("[%l] %v");
        auto level = spdlog::level::warn;
        if (const char* env = std::getenv("RIDGELINE_LOG")) {
            const auto parsed = spdlog::level::from_str(env);
            // from_str maps unknown names to off; only accept "off" when spelled out.
            if (parsed != spdlog::level::off || std::string(env) == "off") level = parsed;
        }
        logger->set_level(level);
        return logger;
    }();
    return *instance;
}

}  // namespace ridgeline
