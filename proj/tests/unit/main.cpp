#define DOCTEST_CONFIG_IMPLEMENT
#include "doctest.h"
#include "regionsel/log.hpp"

int main(int argc, char** argv) {
  regionsel::log::set_quiet(true);
  doctest::Context ctx(argc, argv);
  return ctx.run();
}
