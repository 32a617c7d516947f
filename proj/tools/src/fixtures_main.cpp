// Writes the miniature benchmark (two databases, ten questions), a scripted
// tape answering it and a run configuration into the given directory.
#include <filesystem>
#include <iostream>
#include <string_view>

#include "raise_tools/fixtures.hpp"

int main(int argc, char** argv) {
  if (argc != 2 || std::string_view(argv[1]).starts_with("-")) {
    bool help = argc == 2 && (std::string_view(argv[1]) == "-h" || std::string_view(argv[1]) == "--help");
    (help ? std::cout : std::cerr) << "usage: raise-fixtures <output-dir>\n";
    return help ? 0 : 2;
  }
  try {
    auto cfg = raisesql::fixtures::write_mini_bird_demo(argv[1]);
    std::cout << cfg.string() << "\n";
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return 0;
}
