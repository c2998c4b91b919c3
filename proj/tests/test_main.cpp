#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <etl/context.hpp>

// keep test output readable; tests that care about notices install their
// own sink on the context under test
namespace {
const int silence_notices = [] {
  etl::default_notice_sink() = nullptr;
  return 0;
}();
}
