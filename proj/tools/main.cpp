#include <iostream>

#include "harness.hpp"

int main(int argc, char** argv) {
  using namespace warplab::harness;
  try {
    RunConfig config;
    if (!parse_args(argc, argv, config, std::cout)) return 0;
    const RunReport report = run(config);
    write_report(std::cout, report);
    return report.ok() ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "warplab: " << e.what() << "\n";
    return 2;
  }
}
