#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include "mvlab/dense.hpp"

int main(int argc, char** argv) {
  mvlab::dense::ensure_reliable_blas(argv);
  doctest::Context context;
  context.applyCommandLine(argc, argv);
  return context.run();
}
