// Single compilation of the amalgamated Catch2 implementation (and its main).
#include <catch2/catch_amalgamated.cpp>
