// SPDX-License-Identifier: Apache-2.0
#include "graphdec/cli.hpp"

int main(int argc, char** argv) { return graphdec::cli::run(argc, argv); }
