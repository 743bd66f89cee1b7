#include "detwave/cli.hpp"

int main(int argc, char** argv)
{
  return detwave::dispatch(argc, argv);
}
