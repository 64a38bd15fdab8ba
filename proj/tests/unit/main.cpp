#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include "nsbi/core/log.hpp"

int main(int argc, char** argv) {
  nsbi::set_log_level(nsbi::LogLevel::kQuiet);
  doctest::Context context(argc, argv);
  return context.run();
}
