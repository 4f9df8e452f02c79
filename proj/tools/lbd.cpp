#include "lbd/app.hpp"

int main(int argc, char** argv) { return lbd::app::run(argc, argv); }
