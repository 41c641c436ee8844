// SPDX-License-Identifier: Apache-2.0

#include "romdb/cli.hpp"

int main(int argc, char** argv) { return romdb::cli::run(argc, argv); }
