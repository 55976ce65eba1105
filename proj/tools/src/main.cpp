#include <csignal>
#include <iostream>

#include "wettingsim/cli/commands.hpp"

namespace {

extern "C" void on_signal(int) { wettingsim::cli::interrupt_flag().store(true); }

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  return wettingsim::cli::run_cli(argc, argv, std::cout, std::cerr);
}
