#pragma once

#include <string_view>

// Line-oriented, timestamped logging with a module tag per line.
namespace sarlc::log {

enum class Level { Debug, Info, Warn, Error };

void set_level(Level level);
void write(Level level, std::string_view module, std::string_view message);

inline void debug(std::string_view module, std::string_view message) { write(Level::Debug, module, message); }
inline void info(std::string_view module, std::string_view message) { write(Level::Info, module, message); }
inline void warn(std::string_view module, std::string_view message) { write(Level::Warn, module, message); }
inline void error(std::string_view module, std::string_view message) { write(Level::Error, module, message); }

}  // namespace sarlc::log
