#include "metricconf/cli.hpp"

int main(int argc, char** argv) {
    return metricconf::cli::run(argc, argv);
}
