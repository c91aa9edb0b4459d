// Single translation unit for the amalgamated Catch2 runner.
#include <catch2/catch_amalgamated.cpp>
