#pragma once
#include <string>
#include <vector>

namespace detwave {

// parses argv, runs one subcommand; returns the process exit code
int dispatch(int argc, char** argv);
int dispatch(const std::vector<std::string>& args);

void init_logging();

}
