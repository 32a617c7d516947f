#include <iostream>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "raise_tools/cli.hpp"

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("raise"));
  if (const char* level = std::getenv("RAISE_LOG_LEVEL")) spdlog::set_level(spdlog::level::from_str(level));
  std::vector<std::string> args(argv + 1, argv + argc);
  return raisesql::cli::dispatch(args, std::cout, std::cerr);
}
