#include "owgp/log.h"

#include <cstdlib>
#include <cstring>
#include <iostream>

namespace owgp::log {

namespace {

Level g_level = [] {
  const char* env = std::getenv("OWGP_LOG");
  if (!env) return Level::Warn;
  if (std::strcmp(env, "quiet") == 0) return Level::Quiet;
  if (std::strcmp(env, "warn") == 0) return Level::Warn;
  if (std::strcmp(env, "info") == 0) return Level::Info;
  if (std::strcmp(env, "debug") == 0) return Level::Debug;
  return Level::Warn;
}();

const char* tag(Level lv) {
  switch (lv) {
    case Level::Warn: return "warn";
    case Level::Info: return "info";
    case Level::Debug: return "debug";
    default: return "";
  }
}

}  // namespace

Level level() { return g_level; }
void set_level(Level lv) { g_level = lv; }

void write(Level lv, const std::string& msg) {
  std::cerr << "[owgp:" << tag(lv) << "] " << msg << "\n";
}

}  // namespace owgp::log
